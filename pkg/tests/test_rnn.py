import numpy as np
import pytest

from schurrnn._backend import get_kernels
from schurrnn.rnn import (
    SequenceBatch,
    bptt,
    forward,
    gradient_norm_trace,
    init_model,
    modrelu,
)
from schurrnn.schur import t_lower_mask


def random_batch(b, t, d_in, d_out, seed=0):
    rng = np.random.default_rng(seed)
    return SequenceBatch(
        inputs=rng.normal(size=(b, t, d_in)),
        targets=rng.integers(0, d_out, size=(b, t)),
        score_mask=np.ones((b, t), dtype=bool),
    )


def test_modrelu_cases():
    z = np.array([2.0, -2.0, 0.5, -0.5, 0.0])
    b = np.array([-1.0, -1.0, -1.0, -1.0, 1.0])
    # |z|+b: 1, 1, -0.5, -0.5, 1 -> outputs 1, -1, 0, 0, 0 (sign(0)=0)
    assert np.allclose(modrelu(z, b), [1.0, -1.0, 0.0, 0.0, 0.0])
    # zero bias: identity
    z = np.linspace(-2, 2, 9)
    assert np.allclose(modrelu(z, np.zeros(9)), z)


def test_forward_isometry_with_orthogonal_v():
    """Orthogonal V, zero input, zero bias: hidden norm is preserved."""
    model = init_model(8, 3, 2, seed=0)
    rng = np.random.default_rng(1)
    h0 = rng.normal(size=(4, 8))
    batch = SequenceBatch(
        inputs=np.zeros((4, 10, 3)),
        targets=np.zeros((4, 10), dtype=np.int64),
        score_mask=np.zeros((4, 10), dtype=bool),
        h0=h0,
    )
    fwd = forward(model, batch)
    norms = np.linalg.norm(fwd.hidden, axis=2)
    assert np.allclose(norms, norms[0], atol=1e-10)


def test_forward_nilpotent_collapse():
    """Strictly-lower-triangular V with linear activation zeroes the state
    after n steps."""
    model = init_model(6, 2, 2, cell_kind="vanilla", seed=0, linear_mode=True)
    model.v_dense = np.tril(np.ones((6, 6)), -1)
    rng = np.random.default_rng(2)
    batch = SequenceBatch(
        inputs=np.zeros((3, 8, 2)),
        targets=np.zeros((3, 8), dtype=np.int64),
        score_mask=np.zeros((3, 8), dtype=bool),
        h0=rng.normal(size=(3, 6)),
    )
    fwd = forward(model, batch)
    assert np.all(fwd.hidden[6:] == 0.0)
    assert np.any(fwd.hidden[5] != 0.0)


def test_loss_uniform_logits():
    model = init_model(8, 3, 5, seed=0)
    model.w_out[:] = 0.0
    batch = random_batch(4, 6, 3, 5, seed=3)
    fwd = forward(model, batch)
    assert abs(fwd.loss - np.log(5.0)) < 1e-12


def test_loss_masking():
    model = init_model(8, 3, 5, seed=0)
    batch = random_batch(4, 6, 3, 5, seed=4)
    batch.score_mask[:] = False
    batch.score_mask[:, -1] = True
    fwd = forward(model, batch)
    assert fwd.n_scored == 4
    # manual cross entropy on the last step
    logits = fwd.logits[:, -1]
    logp = logits - np.log(np.sum(np.exp(logits), axis=-1, keepdims=True))
    manual = -np.mean(logp[np.arange(4), batch.targets[:, -1]])
    assert abs(fwd.loss - manual) < 1e-12


@pytest.mark.parametrize("cell_kind", ["schur", "vanilla"])
def test_bptt_finite_differences(cell_kind):
    n, d_in, d_out, t_len, b = 6, 3, 4, 5, 2
    model = init_model(n, d_in, d_out, cell_kind=cell_kind, seed=5)
    rng = np.random.default_rng(6)
    model.b_hidden = rng.normal(size=n) * 0.1
    batch = random_batch(b, t_len, d_in, d_out, seed=7)
    grads = bptt(model, batch)
    eps = 1e-6

    def loss():
        return forward(model, batch).loss

    def check(arr, g, label, picks=6):
        flat, gf = arr.ravel(), g.ravel()
        idx = np.random.default_rng(8).choice(
            flat.size, size=min(picks, flat.size), replace=False)
        for i in idx:
            orig = flat[i]
            flat[i] = orig + eps
            lp = loss()
            flat[i] = orig - eps
            lm = loss()
            flat[i] = orig
            num = (lp - lm) / (2 * eps)
            assert abs(num - gf[i]) <= 1e-5 * max(1.0, abs(num)), label

    check(model.u_in, grads.u_in, "u_in")
    check(model.b_hidden, grads.b_hidden, "b_hidden")
    check(model.w_out, grads.w_out, "w_out")
    check(model.b_out, grads.b_out, "b_out")
    if cell_kind == "vanilla":
        check(model.v_dense, grads.v, "v_dense")
    else:
        p = model.schur
        check(p.gamma, grads.schur.gamma, "gamma")
        check(p.theta, grads.schur.theta, "theta")
        mask = t_lower_mask(n)
        for i, j in list(zip(*np.where(mask)))[:6]:
            orig = p.t_lower[i, j]
            p.t_lower[i, j] = orig + eps
            lp = loss()
            p.t_lower[i, j] = orig - eps
            lm = loss()
            p.t_lower[i, j] = orig
            num = (lp - lm) / (2 * eps)
            assert abs(num - grads.schur.t_lower[i, j]) <= 1e-5 * max(1.0, abs(num))
        for i, j in list(zip(*np.where(np.tril(np.ones((n, n), bool), -1))))[:6]:
            orig = p.b_skew[i, j]
            p.b_skew[i, j] = orig + eps
            p.b_skew[j, i] = -(orig + eps)
            lp = loss()
            p.b_skew[i, j] = orig - eps
            p.b_skew[j, i] = -(orig - eps)
            lm = loss()
            p.b_skew[i, j] = orig
            p.b_skew[j, i] = -orig
            num = (lp - lm) / (2 * eps)
            assert abs(num - grads.schur.b_skew[i, j]) <= 1e-5 * max(1.0, abs(num))


def test_backend_parity():
    """Compiled and python kernels agree on forward and backward."""
    try:
        kc = get_kernels("compiled")
    except ImportError:
        pytest.skip("compiled extension not built")
    kp = get_kernels("python")
    rng = np.random.default_rng(9)
    n, t, b = 16, 12, 5
    v = np.ascontiguousarray(rng.normal(0, 1 / np.sqrt(n), (n, n)))
    pre = np.ascontiguousarray(rng.normal(size=(t, b, n)))
    bias = np.ascontiguousarray(rng.normal(size=n) * 0.1)
    h0 = np.ascontiguousarray(rng.normal(size=(b, n)))
    gout = np.ascontiguousarray(rng.normal(size=(t, b, n)))
    for linear in (False, True):
        hp = kp.rnn_forward(v, pre, bias, h0, linear)
        hc = kc.rnn_forward(v, pre, bias, h0, linear)
        assert np.allclose(hp, hc, atol=1e-12)
        rp = kp.rnn_backward(v, hp, gout, linear)
        rc = kc.rnn_backward(v, hc, gout, linear)
        for a, c in zip(rp, rc):
            assert np.allclose(np.asarray(a), np.asarray(c), atol=1e-10)


def test_non_finite_hidden_raises():
    model = init_model(4, 2, 2, cell_kind="vanilla", seed=0, linear_mode=True)
    model.v_dense = np.eye(4) * 1e8
    batch = SequenceBatch(
        inputs=np.ones((1, 60, 2)),
        targets=np.zeros((1, 60), dtype=np.int64),
        score_mask=np.ones((1, 60), dtype=bool),
    )
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(FloatingPointError):
            forward(model, batch)


def _trace_model(v, t_len=12):
    n = v.shape[0]
    model = init_model(n, 2, 3, cell_kind="vanilla", seed=0, linear_mode=True)
    model.v_dense = v
    batch = SequenceBatch(
        inputs=np.random.default_rng(10).normal(size=(2, t_len, 2)),
        targets=np.zeros((2, t_len), dtype=np.int64),
        score_mask=np.zeros((2, t_len), dtype=bool),
    )
    batch.score_mask[:, -1] = True  # inject gradient only at the last step
    return gradient_norm_trace(model, batch)


def test_gradient_trace_orthogonal_constant():
    rng = np.random.default_rng(11)
    g = rng.normal(size=(6, 6))
    from schurrnn.linalg import expm
    q = expm(np.tril(g, -1) - np.tril(g, -1).T)
    trace = _trace_model(q)
    inner = trace[:-1]  # last entry is the h0 gap
    assert np.all(inner > 0)
    assert np.max(inner) / np.min(inner) < 1.0 + 1e-10


def test_gradient_trace_geometric_decay():
    trace = _trace_model(0.5 * np.eye(6))
    ratios = trace[1:-1] / trace[:-2]
    assert np.allclose(ratios, 0.5, atol=1e-12)


def test_gradient_trace_polynomial_with_unit_triangular():
    v = np.eye(6) + np.tril(np.ones((6, 6)), -1) * 0.5
    trace = _trace_model(v)
    # grows but far slower than a geometric with ratio ~ sigma_max(v)
    assert trace[-2] > trace[0]
    growth = trace[-2] / trace[0]
    t_len = 12
    from schurrnn.linalg import singular_values
    assert growth < singular_values(v)[0] ** t_len
