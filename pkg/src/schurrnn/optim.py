"""RMSprop training with a Stiefel-manifold update for the orthogonal
basis.

The skew-symmetric generator of P is updated with its own learning rate and
P is re-exponentiated at the next assembly, so the basis never leaves the
manifold (up to the accuracy of the matrix exponential).  Regularizer
gradients are folded into the task gradients before the RMSprop
normalization.
"""

import csv
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np

from . import rnn as rnn_mod
from .schur import GammaMode, regularizer_loss_and_grads

__all__ = [
    "TrainConfig",
    "RmsState",
    "DivergenceError",
    "LogRecord",
    "rmsprop_step",
    "stiefel_step",
    "train_loop",
    "write_log_csv",
    "LOG_COLUMNS",
]

LOG_COLUMNS = [
    "update",
    "loss",
    "task_loss",
    "reg_loss",
    "mean_gamma",
    "t_fro",
    "orth_err",
    "grad_norm_total",
]


class DivergenceError(RuntimeError):
    """Raised when the training loss stops being finite."""


@dataclass
class TrainConfig:
    lr: float = 5e-4
    lr_orth: float = 1e-6
    rms_alpha: float = 0.99
    delta: float = 1e-4
    t_decay: float = 1e-6
    gamma_mode: str = "regularized"   # "free" | "regularized" | "clamped"
    gamma_clamp: float = 1.0
    batch_size: int = 10
    max_updates: int = 1000
    seed: int = 0
    log_every: int = 10
    eps: float = 1e-8

    def __post_init__(self):
        if self.lr <= 0 or self.lr_orth <= 0:
            raise ValueError("learning rates must be > 0")
        if not 0.0 < self.rms_alpha < 1.0:
            raise ValueError("rms_alpha must be in (0, 1)")
        if self.delta < 0 or self.t_decay < 0:
            raise ValueError("regularizer weights must be >= 0")

    def mode(self):
        if self.gamma_mode == "free":
            return GammaMode.free()
        if self.gamma_mode == "regularized":
            return GammaMode.regularized(self.delta)
        if self.gamma_mode == "clamped":
            return GammaMode.clamped(self.gamma_clamp)
        raise ValueError(f"unknown gamma mode {self.gamma_mode!r}")


class RmsState(dict):
    """Running mean of squared gradients, keyed per parameter tensor."""

    def get_for(self, name, shape):
        if name not in self:
            self[name] = np.zeros(shape)
        return self[name]


def rmsprop_step(param, grad, state, lr, alpha, eps=1e-8):
    """One RMSprop update.  Returns (new_param, new_state)."""
    state = alpha * state + (1.0 - alpha) * grad * grad
    param = param - lr * grad / (np.sqrt(state) + eps)
    return param, state


def stiefel_step(b_skew, grad_b, state, lr_orth, alpha, eps=1e-8):
    """RMSprop on the skew-symmetric generator.  The gradient is projected
    to the skew subspace and the result is re-mirrored from its lower half,
    so skew symmetry is exact regardless of rounding."""
    g = 0.5 * (grad_b - grad_b.T)
    b_new, state = rmsprop_step(b_skew, g, state, lr_orth, alpha, eps)
    lower = np.tril(b_new, -1)
    return lower - lower.T, state


@dataclass
class LogRecord:
    update: int
    loss: float
    task_loss: float
    reg_loss: float
    mean_gamma: float
    t_fro: float
    orth_err: float
    grad_norm_total: float


@dataclass
class TrainResult:
    records: list
    model: object
    final_hidden: Optional[np.ndarray] = None
    diverged_at: Optional[int] = None


def _grad_norm(arrays):
    return float(np.sqrt(sum(float(np.sum(a * a)) for a in arrays)))


def train_loop(model, stream, config, on_record=None):
    """Run ``config.max_updates`` optimizer steps over batches drawn from
    ``stream``.

    The stream may set ``carry_hidden = True`` to have each window start
    from the previous window's final hidden state (no gradient flows across
    the boundary).  Raises :class:`DivergenceError` on non-finite loss.
    """
    mode = config.mode()
    if model.cell_kind == "schur" and mode.kind == "clamped":
        model.schur.gamma[:] = mode.value

    rms = RmsState()
    records = []
    carry = bool(getattr(stream, "carry_hidden", False))
    last_hidden = None
    it = iter(stream)

    for update in range(1, config.max_updates + 1):
        batch = next(it)
        if carry and last_hidden is not None:
            batch.h0 = last_hidden

        fwd = rnn_mod.forward(model, batch)
        grads = rnn_mod.bptt(model, batch, fwd=fwd, gamma_mode=mode)
        last_hidden = fwd.final_hidden

        task_loss = fwd.loss
        reg_loss = 0.0
        grad_list = [grads.u_in, grads.b_hidden, grads.w_out, grads.b_out]

        if model.cell_kind == "schur":
            p = model.schur
            reg_loss, g_gamma_reg, g_t_reg = regularizer_loss_and_grads(
                p, mode, config.t_decay
            )
            sg = grads.schur
            sg.t_lower = sg.t_lower + g_t_reg
            if mode.kind != "clamped":
                sg.gamma = sg.gamma + g_gamma_reg
            grad_list += [sg.gamma, sg.theta, sg.t_lower, sg.b_skew]

            model.u_in, rms["u_in"] = rmsprop_step(
                model.u_in, grads.u_in, rms.get_for("u_in", model.u_in.shape),
                config.lr, config.rms_alpha, config.eps)
            model.b_hidden, rms["b_hidden"] = rmsprop_step(
                model.b_hidden, grads.b_hidden,
                rms.get_for("b_hidden", model.b_hidden.shape),
                config.lr, config.rms_alpha, config.eps)
            model.w_out, rms["w_out"] = rmsprop_step(
                model.w_out, grads.w_out, rms.get_for("w_out", model.w_out.shape),
                config.lr, config.rms_alpha, config.eps)
            model.b_out, rms["b_out"] = rmsprop_step(
                model.b_out, grads.b_out, rms.get_for("b_out", model.b_out.shape),
                config.lr, config.rms_alpha, config.eps)
            if mode.kind != "clamped":
                p.gamma, rms["gamma"] = rmsprop_step(
                    p.gamma, sg.gamma, rms.get_for("gamma", p.gamma.shape),
                    config.lr, config.rms_alpha, config.eps)
            p.theta, rms["theta"] = rmsprop_step(
                p.theta, sg.theta, rms.get_for("theta", p.theta.shape),
                config.lr, config.rms_alpha, config.eps)
            p.t_lower, rms["t_lower"] = rmsprop_step(
                p.t_lower, sg.t_lower, rms.get_for("t_lower", p.t_lower.shape),
                config.lr, config.rms_alpha, config.eps)
            p.b_skew, rms["b_skew"] = stiefel_step(
                p.b_skew, sg.b_skew, rms.get_for("b_skew", p.b_skew.shape),
                config.lr_orth, config.rms_alpha, config.eps)
        else:
            grad_list.append(grads.v)
            for name, pname in (("u_in", "u_in"), ("b_hidden", "b_hidden"),
                                ("w_out", "w_out"), ("b_out", "b_out"),
                                ("v_dense", "v")):
                cur = getattr(model, name)
                new, rms[name] = rmsprop_step(
                    cur, getattr(grads, pname), rms.get_for(name, cur.shape),
                    config.lr, config.rms_alpha, config.eps)
                setattr(model, name, new)

        total = task_loss + reg_loss
        if not np.isfinite(total):
            raise DivergenceError(f"non-finite loss at update {update}")

        if config.log_every and update % config.log_every == 0:
            if model.cell_kind == "schur":
                big_p = fwd.schur_cache[0]
                orth_err = float(np.linalg.norm(big_p.T @ big_p - np.eye(model.n)))
                mean_gamma = float(np.mean(model.schur.gamma))
                t_fro = float(np.linalg.norm(model.schur.t_lower))
            else:
                orth_err = float("nan")
                mean_gamma = float("nan")
                t_fro = float("nan")
            rec = LogRecord(
                update=update,
                loss=total,
                task_loss=task_loss,
                reg_loss=reg_loss,
                mean_gamma=mean_gamma,
                t_fro=t_fro,
                orth_err=orth_err,
                grad_norm_total=_grad_norm(grad_list),
            )
            records.append(rec)
            if on_record is not None:
                on_record(rec)

    return TrainResult(records=records, model=model, final_hidden=last_hidden)


def write_log_csv(records, path):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=LOG_COLUMNS)
        writer.writeheader()
        for rec in records:
            writer.writerow(asdict(rec))
