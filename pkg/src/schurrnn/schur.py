"""Connectivity parametrization in real Schur form.

The recurrent matrix is V = P (Lambda + T) P^T where P = exp(B) for a
skew-symmetric generator B, Lambda is block diagonal with 2x2 scaled
rotations R(gamma_i, theta_i), and T is strictly lower triangular.  The
spectrum of V is {gamma_i e^{+-i theta_i}} regardless of B and T, so
eigenvalue moduli and non-normal structure are controlled independently.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .linalg import expm, expm_frechet

__all__ = [
    "GammaMode",
    "SchurParams",
    "SchurParamGrads",
    "rotation_block",
    "assemble_theta",
    "assemble_v",
    "backward_v",
    "regularizer_loss_and_grads",
    "init_params",
    "t_lower_mask",
    "connectivity_param_count",
    "save_checkpoint",
    "load_checkpoint",
]


@dataclass(frozen=True)
class GammaMode:
    """How the rotation moduli gamma are treated during training.

    kind is one of "free", "regularized", "clamped".  ``delta`` is the L2
    penalty weight in regularized mode; ``value`` is the fixed modulus in
    clamped mode (clamping zeroes the gamma gradient rather than
    reprojecting).
    """

    kind: str = "regularized"
    delta: float = 0.0
    value: float = 1.0

    def __post_init__(self):
        if self.kind not in ("free", "regularized", "clamped"):
            raise ValueError(f"unknown gamma mode {self.kind!r}")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if self.kind == "clamped" and self.value <= 0:
            raise ValueError("clamped value must be > 0")

    @classmethod
    def free(cls):
        return cls("free")

    @classmethod
    def regularized(cls, delta):
        return cls("regularized", delta=float(delta))

    @classmethod
    def clamped(cls, value):
        return cls("clamped", value=float(value))


def t_lower_mask(n):
    """Boolean mask of the learnable strictly-lower-triangular positions.

    The sub-diagonal entries inside the 2x2 rotation blocks (rows 2k+1,
    columns 2k, 0-indexed) belong to the blocks and are excluded, keeping
    the block-diagonal and feed-forward parts disjoint.
    """
    mask = np.tril(np.ones((n, n), dtype=bool), k=-1)
    for k in range(n // 2):
        mask[2 * k + 1, 2 * k] = False
    return mask


@dataclass
class SchurParams:
    """Learnable parameters of the Schur-form connectivity.

    b_skew is stored as a full skew-symmetric matrix whose independent
    entries are the strict lower triangle (the upper half mirrors them with
    opposite sign).  t_lower holds the strictly-lower feed-forward weights,
    zero at the positions owned by the rotation blocks.
    """

    n: int
    b_skew: np.ndarray
    gamma: np.ndarray
    theta: np.ndarray
    t_lower: np.ndarray

    def __post_init__(self):
        n = self.n
        if n < 2 or n % 2:
            raise ValueError("hidden size must be even and >= 2")
        self.b_skew = np.asarray(self.b_skew, dtype=np.float64)
        self.gamma = np.asarray(self.gamma, dtype=np.float64)
        self.theta = np.asarray(self.theta, dtype=np.float64)
        self.t_lower = np.asarray(self.t_lower, dtype=np.float64)
        if self.b_skew.shape != (n, n) or self.t_lower.shape != (n, n):
            raise ValueError("matrix parameter shape mismatch")
        if self.gamma.shape != (n // 2,) or self.theta.shape != (n // 2,):
            raise ValueError("block parameter shape mismatch")
        if not np.array_equal(self.b_skew, -self.b_skew.T):
            raise ValueError("b_skew must be exactly skew-symmetric")
        if np.any(self.t_lower[~t_lower_mask(n)] != 0.0):
            raise ValueError("t_lower has entries outside its support")
        if np.any(self.gamma <= 0.0):
            raise ValueError("gamma entries must be > 0")

    def copy(self):
        return SchurParams(
            self.n,
            self.b_skew.copy(),
            self.gamma.copy(),
            self.theta.copy(),
            self.t_lower.copy(),
        )


@dataclass
class SchurParamGrads:
    b_skew: np.ndarray
    gamma: np.ndarray
    theta: np.ndarray
    t_lower: np.ndarray

    @classmethod
    def zeros(cls, n):
        return cls(
            np.zeros((n, n)),
            np.zeros(n // 2),
            np.zeros(n // 2),
            np.zeros((n, n)),
        )


def rotation_block(gamma, theta):
    """2x2 scaled rotation with eigenvalues gamma * e^{+-i theta}."""
    if gamma <= 0:
        raise ValueError("gamma must be > 0")
    c, s = np.cos(theta), np.sin(theta)
    return gamma * np.array([[c, -s], [s, c]])


def assemble_theta(p):
    """Block-diagonal rotations plus the strictly-lower feed-forward part."""
    n = p.n
    theta = p.t_lower.copy()
    for i in range(n // 2):
        theta[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] = rotation_block(
            p.gamma[i], p.theta[i]
        )
    return theta


def assemble_v(p):
    """Return (V, P, Theta) with V = P Theta P^T and P = exp(b_skew).

    P and Theta are the cache consumed by :func:`backward_v`.
    """
    big_p = expm(p.b_skew)
    theta = assemble_theta(p)
    v = big_p @ theta @ big_p.T
    return v, big_p, theta


def backward_v(p, grad_v, cache, gamma_mode=None):
    """Map a loss gradient on V back to gradients on the Schur parameters.

    ``cache`` is the (P, Theta) pair returned by :func:`assemble_v`.  The
    b_skew gradient is expressed on the independent lower-half entries and
    mirrored, so it is itself skew-symmetric.
    """
    big_p, theta = cache
    n = p.n
    grad_v = np.asarray(grad_v, dtype=np.float64)
    if grad_v.shape != (n, n):
        raise ValueError(f"grad_v shape {grad_v.shape} does not match n={n}")

    grads = SchurParamGrads.zeros(n)

    # dL/dTheta = P^T G P
    grad_theta = big_p.T @ grad_v @ big_p

    grads.t_lower = np.where(t_lower_mask(n), grad_theta, 0.0)

    for i in range(n // 2):
        g = grad_theta[2 * i : 2 * i + 2, 2 * i : 2 * i + 2]
        c, s = np.cos(p.theta[i]), np.sin(p.theta[i])
        d_gamma = np.array([[c, -s], [s, c]])
        d_theta = p.gamma[i] * np.array([[-s, -c], [c, -s]])
        grads.gamma[i] = np.sum(g * d_gamma)
        grads.theta[i] = np.sum(g * d_theta)
    if gamma_mode is not None and gamma_mode.kind == "clamped":
        grads.gamma[:] = 0.0

    # dL/dP, then pull back through the exponential map.  The adjoint of the
    # Frechet derivative of expm at B is E -> L(B^T, E).
    grad_p = grad_v @ big_p @ theta.T + grad_v.T @ big_p @ theta
    _, adj = expm_frechet(p.b_skew.T, grad_p)
    grads.b_skew = adj - adj.T
    return grads


def regularizer_loss_and_grads(p, mode, t_decay):
    """L2 pull of gamma toward 1 (regularized mode only) plus L2 decay on
    the strictly-lower part.  Returns (loss, gamma_grad, t_lower_grad)."""
    if t_decay < 0:
        raise ValueError("t_decay must be >= 0")
    loss = 0.0
    gamma_grad = np.zeros_like(p.gamma)
    if mode.kind == "regularized" and mode.delta > 0:
        resid = 1.0 - p.gamma
        loss += mode.delta * float(np.sum(resid**2))
        gamma_grad = -2.0 * mode.delta * resid
    t_grad = np.zeros_like(p.t_lower)
    if t_decay > 0:
        loss += t_decay * float(np.sum(p.t_lower**2))
        t_grad = 2.0 * t_decay * p.t_lower
    return loss, gamma_grad, t_grad


def _skew_from_lower(lower):
    return lower - lower.T


def init_params(n, scheme="henaff", rng_seed=0):
    """Initial parameters: gamma = 1, theta ~ U[0, 2pi), T = 0, and a
    scheme-dependent skew generator for P.

    Schemes: "henaff" (2x2 skew blocks with U[-pi, pi] entries), "cayley"
    (2x2 skew blocks with the heavy-tailed sqrt(u/(1-u)) law, capped at pi),
    "random_orth" (skew part of a Gaussian matrix scaled by 1/sqrt(n)).
    """
    if n < 2 or n % 2:
        raise ValueError("hidden size must be even and >= 2")
    rng = np.random.default_rng(rng_seed)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=n // 2)

    scheme = scheme.lower()
    b = np.zeros((n, n))
    if scheme == "henaff":
        s = rng.uniform(-np.pi, np.pi, size=n // 2)
        for i in range(n // 2):
            b[2 * i + 1, 2 * i] = s[i]
        b = _skew_from_lower(np.tril(b, -1))
    elif scheme == "cayley":
        u = rng.uniform(0.0, 0.5, size=n // 2)
        v = rng.uniform(-1.0, 1.0, size=n // 2)
        s = np.sqrt(u / (1.0 - u)) * np.sign(v)
        s = np.clip(s, -np.pi, np.pi)
        for i in range(n // 2):
            b[2 * i + 1, 2 * i] = s[i]
        b = _skew_from_lower(np.tril(b, -1))
    elif scheme == "random_orth":
        g = rng.normal(size=(n, n)) / np.sqrt(n)
        b = _skew_from_lower(np.tril(g, -1))
    else:
        raise ValueError(f"unknown init scheme {scheme!r}")

    return SchurParams(
        n=n,
        b_skew=b,
        gamma=np.ones(n // 2),
        theta=theta,
        t_lower=np.zeros((n, n)),
    )


def connectivity_param_count(n):
    """Number of independent parameters in the connectivity parametrization:
    lower half of b_skew, t_lower off the rotation blocks, gamma, theta."""
    b_count = n * (n - 1) // 2
    t_count = n * (n - 1) // 2 - n // 2
    return b_count + t_count + n // 2 + n // 2


# --- checkpoint serialization -------------------------------------------------

def _lower_rows(m):
    return [[float(m[i, j]) for j in range(i)] for i in range(m.shape[0])]


def save_checkpoint(p, path, scheme=None, seed=None):
    """Write the parameters as JSON.  Floats go through repr, so values
    round-trip exactly."""
    doc = {
        "n": p.n,
        "b_skew": _lower_rows(p.b_skew),
        "gamma": [float(x) for x in p.gamma],
        "theta": [float(x) for x in p.theta],
        "t_lower": _lower_rows(p.t_lower),
        "scheme": scheme,
        "seed": seed,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_checkpoint(path):
    with open(path) as fh:
        doc = json.load(fh)
    n = int(doc["n"])
    b = np.zeros((n, n))
    t = np.zeros((n, n))
    for i in range(n):
        for j, val in enumerate(doc["b_skew"][i]):
            b[i, j] = val
        for j, val in enumerate(doc["t_lower"][i]):
            t[i, j] = val
    b = _skew_from_lower(b)
    t[~t_lower_mask(n)] = 0.0
    params = SchurParams(
        n=n,
        b_skew=b,
        gamma=np.array(doc["gamma"], dtype=np.float64),
        theta=np.array(doc["theta"], dtype=np.float64),
        t_lower=t,
    )
    return params, doc.get("scheme"), doc.get("seed")
