"""Cross-view contrastive loss, fusion, classification head and the training objective."""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .tensor import Tensor

PROB_FLOOR = 1e-12
# Stands in for -inf on the masked diagonal; exp() of it underflows to exactly 0.
_MASK = -1e300


class Linear:
    """Affine map ``x @ W + b`` with ``W`` of shape ``(in, out)``."""

    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator, bias: bool = True):
        self.weight = T.xavier_init((d_in, d_out), rng)
        self.bias = Tensor(np.zeros(d_out), True) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        out = T.matmul(x, self.weight)
        return out + self.bias if self.bias is not None else out

    def named(self, prefix: str) -> dict[str, Tensor]:
        out = {f"{prefix}.weight": self.weight}
        if self.bias is not None:
            out[f"{prefix}.bias"] = self.bias
        return out


def cosine_matrix(a: Tensor, b: Tensor) -> Tensor:
    """``S[i, j] = cos(a_i, b_j)``."""
    return T.matmul(T.l2_normalize(a), T.transpose(T.l2_normalize(b)))


def contrastive_loss(zm: Tensor, zt: Tensor, tau: float = 0.2, include_positive: bool = False) -> Tensor:
    """Symmetric cross-view contrastive loss, summed over the batch and halved.

    Row ``i`` of ``zm`` and ``zt`` embed the same sample.  For each ``i`` both
    directions contribute ``-(s_ii - logsumexp_j s_ij)`` with ``s = cos / tau``.
    By default the positive pair is left out of the normaliser (``j != i``), so
    the loss can go negative; ``include_positive=True`` gives the usual
    NT-Xent-style normaliser.
    """
    zm = zm if isinstance(zm, Tensor) else Tensor(zm)
    zt = zt if isinstance(zt, Tensor) else Tensor(zt)
    if zm.ndim != 2 or zm.shape != zt.shape:
        raise T.ShapeError(f"contrastive_loss: shapes {zm.shape} and {zt.shape} must be equal (B, d)")
    B = zm.shape[0]
    if B < 2:
        raise ValueError("contrastive_loss needs a batch of at least 2")
    if tau <= 0:
        raise ValueError("tau must be positive")
    s = cosine_matrix(zm, zt) * (1.0 / tau)
    diag = T.tsum(T.mul(s, np.eye(B)), axis=1)
    logits = s if include_positive else s + np.where(np.eye(B, dtype=bool), _MASK, 0.0)
    rows = T.logsumexp(logits, axis=1)
    cols = T.logsumexp(logits, axis=0)
    per_sample = (rows - diag) + (cols - diag)
    return T.tsum(per_sample) * 0.5


def fuse(f_m: Tensor | None, f_t: Tensor | None) -> Tensor:
    """Concatenate temporal then spatial embeddings along the feature axis."""
    parts = [f for f in (f_m, f_t) if f is not None]
    if not parts:
        raise ValueError("fuse needs at least one embedding")
    return parts[0] if len(parts) == 1 else T.concat(parts, axis=-1)


def classify(r: Tensor, head: Linear) -> Tensor:
    """Class probabilities ``softmax(r W + b)``."""
    return T.softmax_rows(head(r))


def cross_entropy(probs: Tensor, y) -> Tensor:
    """Mean negative log-probability of the true class, probabilities floored at 1e-12."""
    y = np.asarray(y, dtype=np.int64)
    probs = probs if isinstance(probs, Tensor) else Tensor(probs)
    if probs.ndim == 1:
        probs = T.reshape(probs, (1, -1))
        y = y.reshape(1)
    onehot = np.zeros(probs.shape)
    onehot[np.arange(len(y)), y] = 1.0
    picked = T.tsum(T.mul(probs, onehot), axis=1)
    return T.mean(T.log(T.clip(picked, PROB_FLOOR, 1.0))) * -1.0


def total_loss(ce: Tensor, cl: Tensor | None) -> Tensor:
    """Unit-weight sum; ``cl=None`` when the contrastive term is switched off."""
    return ce if cl is None else ce + cl
