"""Fisher memory analytics and transient-dynamics ensembles for
structured lower-triangular connectivity.

The matrix family has d on the diagonal, alpha on the first sub-diagonal
and beta everywhere below that.  The Fisher memory curve J(k) measures how
much information the hidden state retains about a scalar input injected k
steps earlier under i.i.d. Gaussian noise of variance eps:

    J(k) = u^T (Theta^k)^T C^{-1} Theta^k u,
    C    = eps * sum_k Theta^k (Theta^k)^T,   u = e_1.

C is never inverted explicitly: its triangular factor is obtained from a QR
factorization of the stacked powers, which keeps the solves usable even
when C itself is catastrophically ill-conditioned (condition numbers reach
1e23 for d = 0.2 with super-unit sub-diagonals).
"""

from dataclasses import dataclass, field

import numpy as np

from .linalg import gram_schmidt_triangular, singular_values

__all__ = [
    "FmcConfig",
    "FmcResult",
    "SeriesDivergenceError",
    "build_theta_family",
    "delay_line_theta",
    "noise_covariance",
    "fisher_memory_curve",
    "fmc_from_theta",
    "delay_line_fmc_closed_form",
    "prop1_bound_check",
    "Prop1Report",
    "transient_ensemble",
    "TransientStats",
]


class SeriesDivergenceError(RuntimeError):
    """The covariance series was still growing at the term cap."""


@dataclass(frozen=True)
class FmcConfig:
    n: int
    d: float = 0.0
    alpha: float = 1.0
    beta: float = 0.0
    eps: float = 1.0
    k_max: int = 0          # 0 means "until negligible", capped at 10n
    series_tol: float = 1e-12

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if self.eps <= 0:
            raise ValueError("eps must be > 0")
        if not 0.0 <= self.d < 1.0:
            raise ValueError("d must lie in [0, 1) for the series to converge")


@dataclass
class FmcResult:
    j_curve: np.ndarray
    j_tot: float
    truncation_terms: int


def build_theta_family(cfg):
    """Assemble the (d, alpha, beta) lower-triangular family."""
    n = cfg.n
    theta = np.zeros((n, n))
    for i in range(n):
        theta[i, i] = cfg.d
        if i >= 1:
            theta[i, i - 1] = cfg.alpha
        theta[i, : max(i - 1, 0)] = cfg.beta
    return theta


def delay_line_theta(n, alpha):
    """Feed-forward chain whose squared coupling is ``alpha`` (entries
    sqrt(alpha)), the configuration whose memory curve attains the closed
    form of :func:`delay_line_fmc_closed_form` exactly."""
    theta = np.zeros((n, n))
    for i in range(1, n):
        theta[i, i - 1] = np.sqrt(alpha)
    return theta


def _power_blocks(theta, tol, k_cap, n_floor):
    """Powers Theta^0 .. Theta^K, stopping once the running term
    Theta^k (Theta^k)^T is below ``tol`` in Frobenius norm (never before
    k = n: non-normal transients can grow before they decay)."""
    n = theta.shape[0]
    blocks = [np.eye(n)]
    m = np.eye(n)
    prev = np.inf
    growing = False
    for k in range(1, k_cap + 1):
        m = theta @ m
        blocks.append(m.copy())
        term = float(np.linalg.norm(m)) ** 2
        if k >= n_floor and term < tol:
            return blocks, False
        growing = term > prev
        prev = term
    return blocks, growing


def noise_covariance(theta, eps=1.0, tol=1e-12, k_cap=None):
    """C = eps * sum_k Theta^k (Theta^k)^T as an explicit matrix.

    Raises :class:`SeriesDivergenceError` if the term cap is reached while
    terms are still growing.
    """
    theta = np.asarray(theta, dtype=np.float64)
    n = theta.shape[0]
    k_cap = k_cap if k_cap is not None else 10 * n
    blocks, growing = _power_blocks(theta, tol, k_cap, n)
    if growing:
        raise SeriesDivergenceError(
            f"covariance series still growing after {k_cap} terms"
        )
    c = np.zeros((n, n))
    for m in blocks:
        c += m @ m.T
    return eps * c


def _covariance_factor(theta, eps, tol, k_cap):
    """Upper-triangular R with C = eps * R^T R, built by QR of the stacked
    powers so small eigendirections of C survive in floating point."""
    n = theta.shape[0]
    blocks, growing = _power_blocks(theta, tol, k_cap, n)
    if growing:
        raise SeriesDivergenceError(
            f"covariance series still growing after {k_cap} terms"
        )
    stacked = np.vstack([m.T for m in blocks])
    r = np.linalg.qr(stacked, mode="r")
    return r, len(blocks) - 1


def fmc_from_theta(theta, eps=1.0, k_max=0, series_tol=1e-12, k_cap=None):
    """Fisher memory curve for an explicit matrix.  ``k_max = 0`` sums
    until J(k) is negligible (past k = n), capped at 10n terms."""
    theta = np.asarray(theta, dtype=np.float64)
    n = theta.shape[0]
    k_cap = k_cap if k_cap is not None else 10 * n
    r, terms = _covariance_factor(theta, eps, series_tol, k_cap)

    limit = k_max if k_max else k_cap
    v = np.zeros(n)
    v[0] = 1.0
    curve = []
    for k in range(limit + 1):
        y = np.linalg.solve(r.T, v)
        curve.append(float(y @ y) / eps)
        if k_max == 0 and k >= n and curve[-1] < 1e-14:
            break
        v = theta @ v
    curve = np.array(curve)
    return FmcResult(j_curve=curve, j_tot=float(curve.sum()), truncation_terms=terms)


def fisher_memory_curve(cfg):
    """Fisher memory curve of the (d, alpha, beta) family."""
    theta = build_theta_family(cfg)
    return fmc_from_theta(
        theta,
        eps=cfg.eps,
        k_max=cfg.k_max,
        series_tol=cfg.series_tol,
        k_cap=10 * cfg.n,
    )


def delay_line_fmc_closed_form(alpha, k):
    """J(k) = alpha^k (alpha - 1) / (alpha^{k+1} - 1); the alpha = 1 limit
    is 1 / (k + 1)."""
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    if k < 0:
        raise ValueError("k must be >= 0")
    if abs(alpha - 1.0) < 1e-13:
        return 1.0 / (k + 1)
    return alpha**k * (alpha - 1.0) / (alpha ** (k + 1) - 1.0)


@dataclass
class Prop1Report:
    n: int
    alpha: float
    sigma_max: float
    j_curve: np.ndarray
    bound: np.ndarray
    margin: np.ndarray       # J(k) - bound(k), must be >= -slack
    holds: bool


def prop1_bound_check(theta, eps=1.0, slack=1e-9):
    """Verify the lower bound on the memory curve of a strictly
    lower-triangular matrix with sqrt(alpha) on its sub-diagonal:

        J(k) >= alpha^k (alpha-1) / (alpha^{k+1}-1) / sigma_max^{2(N-1)}

    where sigma_max is the top singular value of the unit-diagonal
    triangular factor from Gram-Schmidt on the columns.  A violation beyond
    ``slack`` signals an implementation bug, so it raises.
    """
    theta = np.asarray(theta, dtype=np.float64)
    n = theta.shape[0]
    if np.any(np.triu(theta) != 0.0):
        raise ValueError("theta must be strictly lower triangular")
    sub = np.diag(theta, -1)
    if not np.allclose(sub, sub[0]) or sub[0] <= 0:
        raise ValueError("sub-diagonal must be constant and positive")
    alpha = float(sub[0]) ** 2

    _, t_gram = gram_schmidt_triangular(theta)
    sigma_max = float(singular_values(t_gram)[0])

    res = fmc_from_theta(theta, eps=eps, k_max=n - 1)
    j = res.j_curve[:n]
    bound = np.array(
        [delay_line_fmc_closed_form(alpha, k) for k in range(n)]
    ) / (eps * sigma_max ** (2 * (n - 1)))
    margin = j - bound
    holds = bool(np.all(margin >= -slack))
    report = Prop1Report(
        n=n, alpha=alpha, sigma_max=sigma_max,
        j_curve=j, bound=bound, margin=margin, holds=holds,
    )
    if not holds:
        raise AssertionError(
            f"memory-curve bound violated by {-margin.min():.3e} (bug)"
        )
    return report


@dataclass
class TransientStats:
    t: np.ndarray
    unit_std_mean: np.ndarray
    unit_std_std: np.ndarray
    norm_mean: np.ndarray
    norm_std: np.ndarray


def transient_ensemble(cfg, n_samples=1000, t_max=None, rng_seed=0):
    """Iterate h_{t+1} = Theta h_t from initial conditions uniform on the
    unit hypersphere (normalized Gaussians) and return ensemble statistics
    of the per-unit standard deviation and the state norm at each t.

    Per-sample RNG streams derive from (seed, sample index), so results do
    not depend on evaluation order.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    theta = build_theta_family(cfg)
    n = cfg.n
    t_max = t_max if t_max is not None else 2 * n

    h = np.empty((n_samples, n))
    for s in range(n_samples):
        rng = np.random.default_rng(np.random.SeedSequence([rng_seed, s]))
        x = rng.normal(size=n)
        h[s] = x / np.linalg.norm(x)

    unit_std = np.empty((t_max + 1, n_samples))
    norms = np.empty((t_max + 1, n_samples))
    for t in range(t_max + 1):
        unit_std[t] = h.std(axis=1)
        norms[t] = np.linalg.norm(h, axis=1)
        if t < t_max:
            h = h @ theta.T
    return TransientStats(
        t=np.arange(t_max + 1),
        unit_std_mean=unit_std.mean(axis=1),
        unit_std_std=unit_std.std(axis=1),
        norm_mean=norms.mean(axis=1),
        norm_std=norms.std(axis=1),
    )
