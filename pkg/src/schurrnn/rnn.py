"""Recurrent cells, sequence forward pass, and full backpropagation
through time.

Two cell kinds share the machinery: the Schur-parametrized cell (V comes
from :func:`schurrnn.schur.assemble_v`) and an unconstrained vanilla RNN
baseline with a dense V.  The nonlinearity is modReLU; a linear mode
(identity activation, biases ignored) supports the theory experiments.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._backend import get_kernels
from . import schur as schur_mod
from .schur import SchurParamGrads, SchurParams

__all__ = [
    "RnnModel",
    "SequenceBatch",
    "ModelGrads",
    "ForwardResult",
    "modrelu",
    "init_model",
    "forward",
    "bptt",
    "gradient_norm_trace",
]


def modrelu(z, b):
    """modReLU on real inputs: (|z| + b) * sign(z) where |z| + b > 0,
    else 0; sign(0) = 0.  Identity when b = 0."""
    return get_kernels().modrelu(z, b)


@dataclass
class RnnModel:
    cell_kind: str  # "schur" or "vanilla"
    u_in: np.ndarray       # (n, d_in)
    b_hidden: np.ndarray   # (n,) modReLU bias
    w_out: np.ndarray      # (d_out, n)
    b_out: np.ndarray      # (d_out,)
    schur: Optional[SchurParams] = None
    v_dense: Optional[np.ndarray] = None
    linear_mode: bool = False

    def __post_init__(self):
        if self.cell_kind not in ("schur", "vanilla"):
            raise ValueError(f"unknown cell kind {self.cell_kind!r}")
        if self.cell_kind == "schur" and self.schur is None:
            raise ValueError("schur cell requires SchurParams")
        if self.cell_kind == "vanilla" and self.v_dense is None:
            raise ValueError("vanilla cell requires a dense V")

    @property
    def n(self):
        return self.u_in.shape[0]

    @property
    def d_in(self):
        return self.u_in.shape[1]

    @property
    def d_out(self):
        return self.w_out.shape[0]


@dataclass
class SequenceBatch:
    """Inputs (B, T, d_in), integer targets (B, T), and a boolean mask of
    scored steps.  ``h0`` optionally carries hidden state across windows."""

    inputs: np.ndarray
    targets: np.ndarray
    score_mask: np.ndarray
    h0: Optional[np.ndarray] = None

    def __post_init__(self):
        b, t, _ = self.inputs.shape
        if self.targets.shape != (b, t) or self.score_mask.shape != (b, t):
            raise ValueError("batch shapes are inconsistent")

    @property
    def batch_size(self):
        return self.inputs.shape[0]

    @property
    def seq_len(self):
        return self.inputs.shape[1]


@dataclass
class ModelGrads:
    u_in: np.ndarray
    b_hidden: np.ndarray
    w_out: np.ndarray
    b_out: np.ndarray
    v: np.ndarray
    schur: Optional[SchurParamGrads] = None


@dataclass
class ForwardResult:
    logits: np.ndarray          # (B, T, d_out)
    hidden: np.ndarray          # (T+1, B, n) time-major trace
    loss: float
    final_hidden: np.ndarray    # (B, n)
    v: np.ndarray
    schur_cache: Optional[tuple] = None
    n_scored: int = 0


def init_model(n, d_in, d_out, cell_kind="schur", scheme="henaff", seed=0,
               linear_mode=False):
    """Fresh model.  modReLU bias starts at zero so the activation is the
    identity at initialization; input/output maps use Glorot scaling."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    lim_in = np.sqrt(6.0 / (n + d_in))
    lim_out = np.sqrt(6.0 / (n + d_out))
    u_in = rng.uniform(-lim_in, lim_in, size=(n, d_in))
    w_out = rng.uniform(-lim_out, lim_out, size=(d_out, n))
    params = None
    v_dense = None
    if cell_kind == "schur":
        params = schur_mod.init_params(n, scheme=scheme, rng_seed=seed)
    else:
        v_dense = rng.normal(0.0, np.sqrt(2.0 / (2 * n)), size=(n, n))
    return RnnModel(
        cell_kind=cell_kind,
        u_in=u_in,
        b_hidden=np.zeros(n),
        w_out=w_out,
        b_out=np.zeros(d_out),
        schur=params,
        v_dense=v_dense,
        linear_mode=linear_mode,
    )


def _resolve_v(model, v=None):
    """(V, schur cache) for this step.  For the Schur cell V is assembled
    once per optimizer step and reused by forward and backward."""
    if v is not None:
        return np.ascontiguousarray(v), None
    if model.cell_kind == "vanilla":
        return np.ascontiguousarray(model.v_dense), None
    vv, p, theta = schur_mod.assemble_v(model.schur)
    return np.ascontiguousarray(vv), (p, theta)


def _log_softmax(logits):
    m = logits.max(axis=-1, keepdims=True)
    z = logits - m
    return z - np.log(np.sum(np.exp(z), axis=-1, keepdims=True))


def forward(model, batch, v=None, kernels=None):
    """Forward pass: hidden trace, logits, and mean cross entropy (nats)
    over the scored steps."""
    k = kernels or get_kernels()
    vv, cache = _resolve_v(model, v)
    b, t_len, _ = batch.inputs.shape
    n = model.n

    pre = np.ascontiguousarray(
        np.einsum("btd,nd->tbn", batch.inputs, model.u_in)
    )
    h0 = batch.h0 if batch.h0 is not None else np.zeros((b, n))
    h0 = np.ascontiguousarray(h0, dtype=np.float64)
    bias = np.zeros(n) if model.linear_mode else np.ascontiguousarray(model.b_hidden)
    h = k.rnn_forward(vv, pre, bias, h0, model.linear_mode)

    if not np.all(np.isfinite(h)):
        bad = int(np.argmax(~np.isfinite(h).all(axis=(1, 2))))
        raise FloatingPointError(f"non-finite hidden state at step {bad}")

    logits = np.einsum("tbn,on->bto", h[1:], model.w_out) + model.b_out

    mask = batch.score_mask
    n_scored = int(mask.sum())
    if n_scored:
        logp = _log_softmax(logits)
        tgt = np.where(mask, batch.targets, 0)
        picked = np.take_along_axis(logp, tgt[..., None], axis=-1)[..., 0]
        loss = float(-np.sum(picked[mask]) / n_scored)
    else:
        loss = 0.0

    return ForwardResult(
        logits=logits,
        hidden=h,
        loss=loss,
        final_hidden=h[-1].copy(),
        v=vv,
        schur_cache=cache,
        n_scored=n_scored,
    )


def bptt(model, batch, fwd=None, gamma_mode=None, kernels=None,
         return_hnorms=False):
    """Exact reverse-mode gradients for all model parameters.

    For the Schur cell the gradient on V is mapped back through the
    parametrization.  The modReLU subgradient at the kink takes the zero
    branch.
    """
    k = kernels or get_kernels()
    if fwd is None:
        fwd = forward(model, batch, kernels=k)

    b, t_len, d_out = fwd.logits.shape
    mask = batch.score_mask
    dlogits = np.zeros_like(fwd.logits)
    if fwd.n_scored:
        p = np.exp(_log_softmax(fwd.logits))
        tgt = np.where(mask, batch.targets, 0)
        onehot = np.zeros_like(p)
        np.put_along_axis(onehot, tgt[..., None], 1.0, axis=-1)
        dlogits = (p - onehot) * mask[..., None] / fwd.n_scored

    h = fwd.hidden
    dw_out = np.einsum("bto,tbn->on", dlogits, h[1:])
    db_out = dlogits.sum(axis=(0, 1))
    gout = np.ascontiguousarray(np.einsum("bto,on->tbn", dlogits, model.w_out))

    dv, dbias, dpre, _dh0, hnorms = k.rnn_backward(
        fwd.v, h, gout, model.linear_mode
    )
    du_in = np.einsum("tbn,btd->nd", dpre, batch.inputs)

    schur_grads = None
    if model.cell_kind == "schur":
        schur_grads = schur_mod.backward_v(
            model.schur, dv, fwd.schur_cache, gamma_mode=gamma_mode
        )
    grads = ModelGrads(
        u_in=du_in,
        b_hidden=np.zeros_like(dbias) if model.linear_mode else dbias,
        w_out=dw_out,
        b_out=db_out,
        v=dv,
        schur=schur_grads,
    )
    if return_hnorms:
        return grads, hnorms
    return grads


def gradient_norm_trace(model, batch, kernels=None):
    """Norm of dL/dh_t recorded during the backward sweep, one entry per
    time gap from the end of the sequence (gap 0 first)."""
    _, hnorms = bptt(model, batch, kernels=kernels, return_hnorms=True)
    return hnorms
