"""Pure-numpy recurrence kernels.

Fallback twin of the compiled extension in ``_kernels.pyx``; both expose the
same three functions and must stay numerically interchangeable (the test
suite checks parity).  Time-major layout throughout: ``pre`` and ``dpre``
are (T, B, n), the hidden trace ``h`` is (T+1, B, n) with ``h[0]`` the
initial state.
"""

import numpy as np

BACKEND = "python"


def modrelu(z, b):
    """Magnitude-thresholded identity: (|z| + b) * sign(z) where positive,
    else 0.  sign(0) is 0, so the kink and the dead region both output 0."""
    z = np.asarray(z, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    mag = np.abs(z) + b
    return np.where(mag > 0.0, mag * np.sign(z), 0.0)


def rnn_forward(v, pre, bias, h0, linear):
    """Run the recurrence h_t = phi(V h_{t-1} + pre_t) and return the full
    trace (T+1, B, n)."""
    t_len, batch, n = pre.shape
    h = np.empty((t_len + 1, batch, n))
    h[0] = h0
    vt = v.T
    for t in range(1, t_len + 1):
        z = h[t - 1] @ vt + pre[t - 1]
        h[t] = z if linear else modrelu(z, bias)
    return h


def rnn_backward(v, h, gout, linear):
    """Reverse sweep through the recurrence.

    ``gout[t-1]`` is the loss gradient injected at h_t by the output head.
    Returns (dv, dbias, dpre, dh0, hnorms) where hnorms[g] is the Frobenius
    norm of dL/dh_{T-g} (recorded in the order the sweep produces them,
    time gap ascending, including the initial state at gap T).
    """
    t_len = gout.shape[0]
    batch, n = h.shape[1], h.shape[2]
    dv = np.zeros((n, n))
    dbias = np.zeros(n)
    dpre = np.empty((t_len, batch, n))
    hnorms = np.empty(t_len + 1)

    dh = np.zeros((batch, n))
    for t in range(t_len, 0, -1):
        dh = dh + gout[t - 1]
        hnorms[t_len - t] = np.linalg.norm(dh)
        if linear:
            dz = dh
        else:
            active = h[t] != 0.0
            dz = np.where(active, dh, 0.0)
            dbias += np.sum(np.where(active, dh * np.sign(h[t]), 0.0), axis=0)
        dpre[t - 1] = dz
        dv += dz.T @ h[t - 1]
        dh = dz @ v
    hnorms[t_len] = np.linalg.norm(dh)
    return dv, dbias, dpre, dh.copy(), hnorms
