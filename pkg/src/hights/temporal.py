"""Multiscale Transformer encoder for the temporal view of a series.

A series is cut into non-overlapping segments of length ``s`` for each scale,
each segment becomes a token (ReLU affine embedding plus sinusoidal position),
one self-attention encoder layer runs per scale, and the token outputs are
mean-pooled and concatenated across scales.

Functions accept a single series ``(L,)`` / token matrix ``(L_s, d)`` or a
batch with a leading axis; the maths is identical row by row.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import tensor as T
from .tensor import Tensor


class ConfigError(ValueError):
    """Scale or vertex count incompatible with the series length."""


def segment(x: np.ndarray, s: int) -> np.ndarray:
    """Split the last axis into ``floor(L / s)`` segments of length ``s``.

    Trailing ``L mod s`` points are dropped.  Returns shape ``(..., L // s, s)``.
    """
    x = np.asarray(x, dtype=np.float64)
    L = x.shape[-1]
    if s < 1 or L // s < 1:
        raise ConfigError(f"scale {s} does not fit a series of length {L}")
    n = L // s
    return x[..., : n * s].reshape(*x.shape[:-1], n, s)


def positional_encoding(t, d: int) -> np.ndarray:
    """Sinusoidal code for 1-based positions ``t``: even slots sin, odd slots cos.

    Frequency of pair ``k`` is ``10000 ** (-2k / d)``.
    """
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    k = np.arange(d) // 2
    omega = 10000.0 ** (-2.0 * k / d)
    ang = t[:, None] * omega[None, :]
    pe = np.where(np.arange(d) % 2 == 0, np.sin(ang), np.cos(ang))
    return pe[0] if scalar else pe


def embed_input(h: np.ndarray | Tensor, w_in: Tensor, b_in: Tensor) -> Tensor:
    """ReLU(W_I h + b_I) applied to every segment (last axis of ``h`` has length s).

    ``w_in`` has shape ``(d, s)``.
    """
    h = h if isinstance(h, Tensor) else Tensor(h)
    if h.shape[-1] != w_in.shape[1]:
        raise T.ShapeError(f"segment length {h.shape[-1]} != W_I columns {w_in.shape[1]}")
    if h.ndim == 1:
        return T.relu(T.reshape(T.matmul(T.reshape(h, (1, -1)), T.transpose(w_in)), (-1,)) + b_in)
    return T.relu(T.matmul(h, T.transpose(w_in)) + b_in)


@dataclass
class EncoderLayerParams:
    """One post-norm Transformer encoder layer.

    Query/key/value weights hold all heads side by side, ``(d, h * d_k)``;
    head ``j`` uses columns ``j*d_k:(j+1)*d_k``.
    """

    wq: Tensor
    wk: Tensor
    wv: Tensor
    wm: Tensor
    w1: Tensor
    b1: Tensor
    w2: Tensor
    b2: Tensor
    ln1_g: Tensor
    ln1_b: Tensor
    ln2_g: Tensor
    ln2_b: Tensor
    heads: int

    @classmethod
    def init(cls, d: int, heads: int, d_ff: int, rng: np.random.Generator) -> "EncoderLayerParams":
        if d % heads:
            raise ConfigError(f"latent dim {d} not divisible by {heads} heads")
        return cls(
            wq=T.xavier_init((d, d), rng), wk=T.xavier_init((d, d), rng),
            wv=T.xavier_init((d, d), rng), wm=T.xavier_init((d, d), rng),
            w1=T.xavier_init((d, d_ff), rng), b1=Tensor(np.zeros(d_ff), True),
            w2=T.xavier_init((d_ff, d), rng), b2=Tensor(np.zeros(d), True),
            ln1_g=Tensor(np.ones(d), True), ln1_b=Tensor(np.zeros(d), True),
            ln2_g=Tensor(np.ones(d), True), ln2_b=Tensor(np.zeros(d), True),
            heads=heads,
        )

    def named(self) -> dict[str, Tensor]:
        return {k: v for k, v in vars(self).items() if isinstance(v, Tensor)}


def multi_head_attention(u: Tensor, p: EncoderLayerParams, return_weights: bool = False):
    """Scaled dot-product self-attention over the token axis, heads concatenated then projected."""
    *lead, n, d = u.shape
    h = p.heads
    dk = d // h

    def heads_first(x: Tensor) -> Tensor:
        x = T.reshape(x, (*lead, n, h, dk))
        nd = x.ndim
        return T.permute(x, (*range(nd - 3), nd - 2, nd - 3, nd - 1))

    q = heads_first(T.matmul(u, p.wq))
    k = heads_first(T.matmul(u, p.wk))
    v = heads_first(T.matmul(u, p.wv))
    scores = T.matmul(q, T.transpose(k)) * (1.0 / math.sqrt(dk))
    weights = T.softmax_rows(scores)
    a = T.matmul(weights, v)
    nd = a.ndim
    a = T.permute(a, (*range(nd - 3), nd - 2, nd - 3, nd - 1))
    m = T.matmul(T.reshape(a, (*lead, n, h * dk)), p.wm)
    return (m, weights) if return_weights else m


def encoder_layer(u: Tensor, p: EncoderLayerParams) -> Tensor:
    """Attention, add & norm, position-wise feed-forward (ReLU), add & norm."""
    m = multi_head_attention(u, p)
    n_ = T.layer_norm(m + u, p.ln1_g, p.ln1_b)
    ff = T.matmul(T.relu(T.matmul(n_, p.w1) + p.b1), p.w2) + p.b2
    return T.layer_norm(ff + n_, p.ln2_g, p.ln2_b)


@dataclass
class ScaleParams:
    w_in: Tensor
    b_in: Tensor
    layer: EncoderLayerParams

    def named(self) -> dict[str, Tensor]:
        out = {"w_in": self.w_in, "b_in": self.b_in}
        out.update(self.layer.named())
        return out


class TemporalEncoder:
    """Per-scale parameters and the forward map ``series -> z^1 + ... + z^S`` (concatenated)."""

    def __init__(self, scales: Sequence[int], d: int, heads: int = 4, d_ff: int | None = None,
                 rng: np.random.Generator | int = 0):
        rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        self.scales = [int(s) for s in scales]
        self.d = d
        self.heads = heads
        self.d_ff = d_ff or 4 * d
        self.per_scale: dict[int, ScaleParams] = {}
        for s in self.scales:
            self.per_scale[s] = ScaleParams(
                w_in=T.xavier_init((d, s), rng),
                b_in=Tensor(np.zeros(d), True),
                layer=EncoderLayerParams.init(d, heads, self.d_ff, rng),
            )

    @property
    def out_dim(self) -> int:
        return len(self.scales) * self.d

    def named_parameters(self, prefix: str = "temporal") -> dict[str, Tensor]:
        out = {}
        for s, sp in self.per_scale.items():
            for k, v in sp.named().items():
                out[f"{prefix}.s{s}.{k}"] = v
        return out

    def scale_embedding(self, x: np.ndarray, s: int) -> Tensor:
        """Pooled encoder output ``z^s`` for one scale: ``(d,)`` or ``(B, d)``."""
        sp = self.per_scale[s]
        seg = segment(x, s)
        u = embed_input(seg, sp.w_in, sp.b_in)
        pe = positional_encoding(np.arange(1, seg.shape[-2] + 1), self.d)
        u = u + pe
        z = encoder_layer(u, sp.layer)
        return T.mean(z, axis=-2)

    def __call__(self, x: np.ndarray) -> Tensor:
        x = np.asarray(x, dtype=np.float64)
        zs = [self.scale_embedding(x, s) for s in self.scales]
        return zs[0] if len(zs) == 1 else T.concat(zs, axis=-1)


def temporal_representation(x, scales: Sequence[int], params: TemporalEncoder) -> Tensor:
    missing = [s for s in scales if s not in params.per_scale]
    if missing:
        raise ConfigError(f"no parameters for scales {missing}")
    zs = [params.scale_embedding(np.asarray(x, dtype=np.float64), s) for s in scales]
    return zs[0] if len(zs) == 1 else T.concat(zs, axis=-1)
