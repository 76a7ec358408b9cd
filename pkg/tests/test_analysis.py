import csv
import json

import numpy as np
import pytest

from schurrnn.analysis import (
    connectivity_report,
    run_comparison,
    write_profile_csv,
    write_report_json,
)
from schurrnn.schur import assemble_theta, init_params, t_lower_mask


def params_with_delay_line(n, weight=1.0, seed=0):
    p = init_params(n, rng_seed=seed)
    t = np.zeros((n, n))
    idx = np.arange(1, n)
    t[idx, idx - 1] = weight
    p.t_lower = np.where(t_lower_mask(n), t, 0.0)
    return p


def test_report_orthogonal_solution():
    p = init_params(8, rng_seed=0)
    rep = connectivity_report(p)
    assert rep.t_frobenius == 0.0
    assert rep.mean_gamma == 1.0
    assert rep.nonnormality_ratio == 0.0
    # V orthogonal at init: top singular value 1
    assert rep.top_singular_value == pytest.approx(1.0, abs=1e-12)
    # profile only sees the rotation-block sub-diagonal (sin theta terms)
    assert np.all(rep.subdiag_profile[1:] == 0.0)


def test_report_delay_line_dominates_profile():
    p = params_with_delay_line(8, weight=2.0)
    rep = connectivity_report(p)
    assert rep.subdiag_profile[0] == np.max(rep.subdiag_profile)
    assert rep.subdiag_profile[0] > 1.0


def test_report_mean_gamma_exact():
    p = init_params(8, rng_seed=1)
    p.gamma = np.full(4, 0.958)
    rep = connectivity_report(p)
    assert abs(rep.mean_gamma - 0.958) < 1e-15


def test_profile_matches_brute_force_scan():
    p = params_with_delay_line(10, weight=0.7, seed=2)
    rng = np.random.default_rng(3)
    extra = np.where(t_lower_mask(10), rng.normal(size=(10, 10)) * 0.3, 0.0)
    p.t_lower = np.where(t_lower_mask(10), p.t_lower + extra, 0.0)
    theta = assemble_theta(p)
    rep = connectivity_report(p)
    for k in range(1, 10):
        vals = [abs(theta[i + k, i]) for i in range(10 - k)]
        assert rep.subdiag_profile[k - 1] == pytest.approx(np.mean(vals), abs=1e-15)


def test_histograms_count_parameters():
    p = init_params(16, rng_seed=4)
    rep = connectivity_report(p)
    assert rep.theta_histogram.sum() == 8
    assert rep.gamma_histogram.sum() == 8


def test_run_comparison_zero_and_regimes():
    a = connectivity_report(init_params(8, rng_seed=5))
    diff = run_comparison(a, a)
    assert diff["delta_mean_gamma"] == 0.0
    assert diff["delta_t_frobenius"] == 0.0
    assert diff["regime_a"] == "normal"

    b = connectivity_report(params_with_delay_line(8, weight=1.5, seed=5))
    diff = run_comparison(a, b)
    assert diff["regime_b"] == "non-normal"
    assert diff["delta_t_frobenius"] > 0.0

    with pytest.raises(ValueError):
        run_comparison(a, connectivity_report(init_params(6, rng_seed=0)))


def test_regime_boundary_closed_at_low_threshold():
    from schurrnn.analysis import _regime
    assert _regime(0.05) == "normal"
    assert _regime(0.050001) == "intermediate"
    assert _regime(0.2) == "intermediate"
    assert _regime(0.21) == "non-normal"


def test_report_serialization(tmp_path):
    rep = connectivity_report(params_with_delay_line(8, weight=0.5, seed=6))
    jpath = tmp_path / "rep.json"
    write_report_json(rep, jpath)
    doc = json.loads(jpath.read_text())
    assert doc["n"] == 8
    assert len(doc["subdiag_profile"]) == 7
    assert len(doc["theta_histogram"]) == 64

    cpath = tmp_path / "profile.csv"
    write_profile_csv(rep, cpath)
    rows = list(csv.reader(cpath.open()))
    assert rows[0] == ["k", "mean_abs"]
    assert len(rows) == 8
    assert float(rows[1][1]) == pytest.approx(rep.subdiag_profile[0])
