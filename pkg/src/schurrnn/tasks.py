"""Task generators: the copy task and character-level next-character
prediction over a plain-text corpus.

Copy task layout (delay T, total length T + 20): 10 random data symbols
(ids 0..7), T - 1 blanks (id 8), one marker (id 9), then 10 blanks.
Targets are blank for the first T + 10 steps and the data symbols for the
last 10.  The whole sequence is scored, so the predictor that always says
"blank" achieves exactly 10 ln(8) / (T + 20) mean cross entropy, which is
the natural baseline for the task.
"""

from dataclasses import dataclass, field

import numpy as np

from .rnn import SequenceBatch

__all__ = [
    "CopyTaskSpec",
    "copy_batch",
    "copy_stream",
    "copy_baseline_loss",
    "CharLmSpec",
    "char_lm_stream",
    "build_vocabulary",
    "nats_to_bpc",
    "COPY_N_SYMBOLS",
    "COPY_N_DATA",
]

COPY_N_SYMBOLS = 8    # distinct data symbols
COPY_N_DATA = 10      # symbols to memorize and recall
BLANK = COPY_N_SYMBOLS          # id 8
MARKER = COPY_N_SYMBOLS + 1     # id 9, input-only
COPY_D_IN = COPY_N_SYMBOLS + 2      # one-hot over data + blank + marker
COPY_D_OUT = COPY_N_SYMBOLS + 1     # marker is never a target


@dataclass(frozen=True)
class CopyTaskSpec:
    delay: int
    batch_size: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.delay < 1:
            raise ValueError("delay must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    @property
    def seq_len(self):
        return self.delay + 2 * COPY_N_DATA


def _one_hot(ids, depth):
    out = np.zeros(ids.shape + (depth,))
    np.put_along_axis(out, ids[..., None], 1.0, axis=-1)
    return out


def copy_batch(spec, rng=None):
    """One batch of copy-task sequences.  With no explicit ``rng`` the
    spec's seed produces the same batch every call."""
    rng = rng if rng is not None else np.random.default_rng(spec.seed)
    b, t_len, delay = spec.batch_size, spec.seq_len, spec.delay

    data = rng.integers(0, COPY_N_SYMBOLS, size=(b, COPY_N_DATA))

    inputs = np.full((b, t_len), BLANK, dtype=np.int64)
    inputs[:, :COPY_N_DATA] = data
    inputs[:, delay + COPY_N_DATA - 1] = MARKER

    targets = np.full((b, t_len), BLANK, dtype=np.int64)
    targets[:, delay + COPY_N_DATA:] = data

    return SequenceBatch(
        inputs=_one_hot(inputs, COPY_D_IN),
        targets=targets,
        score_mask=np.ones((b, t_len), dtype=bool),
    )


def copy_stream(spec):
    """Endless iterator of fresh copy-task batches from one seeded RNG."""
    rng = np.random.default_rng(spec.seed)
    while True:
        yield copy_batch(spec, rng=rng)


def copy_baseline_loss(delay):
    """Mean loss of the constant-blank predictor: 10 ln(8) / (T + 20)."""
    if delay < 1:
        raise ValueError("delay must be >= 1")
    return COPY_N_DATA * np.log(COPY_N_SYMBOLS) / (delay + 2 * COPY_N_DATA)


# --- character-level prediction ----------------------------------------------

def build_vocabulary(text_bytes):
    """Sorted distinct bytes -> contiguous ids.  Returns (byte -> id dict,
    id -> byte list)."""
    alphabet = sorted(set(text_bytes))
    if not alphabet:
        raise ValueError("corpus is empty")
    return {ch: i for i, ch in enumerate(alphabet)}, alphabet


@dataclass
class CharLmSpec:
    corpus_path: str
    window: int = 150
    batch_size: int = 8
    seed: int = 0
    vocab: dict = field(default=None, repr=False)
    ids: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.window < 2:
            raise ValueError("window must be >= 2")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        with open(self.corpus_path, "rb") as fh:
            raw = fh.read()
        if len(raw) < self.window + 1:
            raise ValueError("corpus shorter than one window")
        self.vocab, self._alphabet = build_vocabulary(raw)
        self.ids = np.array([self.vocab[b] for b in raw], dtype=np.int64)

    @property
    def vocab_size(self):
        return len(self.vocab)


class _CharLmStream:
    """Batch lanes walk contiguous non-overlapping slices of the corpus.

    Lane l owns the id range [l * span, (l + 1) * span); windows advance by
    ``window`` characters each batch and wrap around within the lane.  The
    trainer detects ``carry_hidden`` and reuses each window's final hidden
    state as the next window's h0 (no gradient crosses the boundary).
    """

    carry_hidden = True

    def __init__(self, spec):
        self.spec = spec
        ids = spec.ids
        # each window consumes `window` inputs and needs one lookahead target
        usable = len(ids) - 1
        span = usable // spec.batch_size
        if span < spec.window:
            raise ValueError("corpus too short for this batch/window geometry")
        self.span = span
        self.offsets = np.zeros(spec.batch_size, dtype=np.int64)
        self.vocab_size = spec.vocab_size

    def lane_slice(self, lane):
        return self.spec.ids[lane * self.span : (lane + 1) * self.span + 1]

    def __iter__(self):
        return self

    def __next__(self):
        spec = self.spec
        w, b = spec.window, spec.batch_size
        inputs = np.empty((b, w), dtype=np.int64)
        targets = np.empty((b, w), dtype=np.int64)
        for lane in range(b):
            lane_ids = self.lane_slice(lane)
            start = self.offsets[lane]
            if start + w + 1 > len(lane_ids):
                start = 0
            inputs[lane] = lane_ids[start : start + w]
            targets[lane] = lane_ids[start + 1 : start + w + 1]
            self.offsets[lane] = start + w
        return SequenceBatch(
            inputs=_one_hot(inputs, self.vocab_size),
            targets=targets,
            score_mask=np.ones((b, w), dtype=bool),
        )


def char_lm_stream(spec):
    """Truncated-BPTT batch stream over the corpus with per-lane
    contiguous windows and hidden-state carry-over."""
    return _CharLmStream(spec)


def nats_to_bpc(nats):
    """Bits per character from mean cross entropy in nats."""
    return nats / np.log(2.0)
