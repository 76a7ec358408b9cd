"""Connectivity diagnostics: sub-diagonal magnitude profiles, angle and
modulus distributions, and a normal-vs-non-normal regime summary."""

import csv
import json
from dataclasses import dataclass

import numpy as np

from .linalg import singular_values
from .schur import assemble_theta, assemble_v

__all__ = [
    "ConnectivityReport",
    "connectivity_report",
    "run_comparison",
    "write_report_json",
    "write_profile_csv",
]

N_BINS = 64

# t_frobenius / ||Theta||_F below the first threshold reads as effectively
# normal connectivity, above the second as strongly non-normal.  Summary
# labels only; the raw profile carries the quantitative content.
NORMAL_RATIO = 0.05
NONNORMAL_RATIO = 0.20


@dataclass
class ConnectivityReport:
    n: int
    mean_gamma: float
    gamma_histogram: np.ndarray      # counts, 64 bins over [min, max]
    gamma_bin_edges: np.ndarray
    theta_histogram: np.ndarray      # counts, 64 uniform bins over [0, 2pi)
    subdiag_profile: np.ndarray      # m_k = mean_i |Theta_{i+k,i}|, k=1..n-1
    t_frobenius: float
    theta_frobenius: float
    top_singular_value: float

    @property
    def nonnormality_ratio(self):
        if self.theta_frobenius == 0.0:
            return 0.0
        return self.t_frobenius / self.theta_frobenius


def connectivity_report(p):
    """Diagnostics of the assembled connectivity.  The sub-diagonal profile
    and norms are measured on Theta (the Schur form); the top singular
    value on V itself."""
    theta = assemble_theta(p)
    v, _, _ = assemble_v(p)
    n = p.n

    angles = np.mod(p.theta, 2.0 * np.pi)
    theta_hist, _ = np.histogram(angles, bins=N_BINS, range=(0.0, 2.0 * np.pi))
    gamma_hist, gamma_edges = np.histogram(p.gamma, bins=N_BINS)

    profile = np.array(
        [np.mean(np.abs(np.diag(theta, -k))) for k in range(1, n)]
    )

    return ConnectivityReport(
        n=n,
        mean_gamma=float(np.mean(p.gamma)),
        gamma_histogram=gamma_hist,
        gamma_bin_edges=gamma_edges,
        theta_histogram=theta_hist,
        subdiag_profile=profile,
        t_frobenius=float(np.linalg.norm(p.t_lower)),
        theta_frobenius=float(np.linalg.norm(theta)),
        top_singular_value=float(singular_values(v)[0]),
    )


def _regime(ratio):
    if ratio <= NORMAL_RATIO:
        return "normal"
    if ratio > NONNORMAL_RATIO:
        return "non-normal"
    return "intermediate"


def run_comparison(report_a, report_b):
    """Per-field deltas (b minus a) plus a regime label for each report."""
    if report_a.n != report_b.n:
        raise ValueError("reports have different hidden sizes")
    return {
        "n": report_a.n,
        "delta_mean_gamma": report_b.mean_gamma - report_a.mean_gamma,
        "delta_t_frobenius": report_b.t_frobenius - report_a.t_frobenius,
        "delta_top_singular_value": (
            report_b.top_singular_value - report_a.top_singular_value
        ),
        "delta_subdiag_profile": (
            report_b.subdiag_profile - report_a.subdiag_profile
        ).tolist(),
        "ratio_a": report_a.nonnormality_ratio,
        "ratio_b": report_b.nonnormality_ratio,
        "regime_a": _regime(report_a.nonnormality_ratio),
        "regime_b": _regime(report_b.nonnormality_ratio),
    }


def write_report_json(report, path):
    doc = {
        "n": report.n,
        "mean_gamma": report.mean_gamma,
        "t_frobenius": report.t_frobenius,
        "theta_frobenius": report.theta_frobenius,
        "nonnormality_ratio": report.nonnormality_ratio,
        "regime": _regime(report.nonnormality_ratio),
        "top_singular_value": report.top_singular_value,
        "gamma_histogram": report.gamma_histogram.tolist(),
        "gamma_bin_edges": report.gamma_bin_edges.tolist(),
        "theta_histogram": report.theta_histogram.tolist(),
        "subdiag_profile": report.subdiag_profile.tolist(),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def write_profile_csv(report, path):
    """Sub-diagonal profile as (k, mean_abs) rows for plotting."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "mean_abs"])
        for k, m in enumerate(report.subdiag_profile, start=1):
            writer.writerow([k, repr(float(m))])
