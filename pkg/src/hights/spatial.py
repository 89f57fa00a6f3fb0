"""Simplicial message passing over per-series Rips complexes.

The complex of a series depends only on the data, so it is built once per
sample (:func:`prepare_sample`) and reused every epoch.  Batches are padded to
the largest simplex count per dimension; padded rows carry zero features, zero
operator rows and zero pooling weight, so they never influence the result.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import complex as cx
from . import tensor as T
from .tensor import Tensor


def initial_features(K: cx.SimplicialComplex, P: np.ndarray, k: int) -> np.ndarray:
    """Row per k-simplex: the mean of its vertices' patch vectors."""
    P = np.asarray(P, dtype=np.float64)
    m = K.count(k)
    if m == 0:
        return np.zeros((0, P.shape[1]))
    idx = np.array(K.simplexes[k], dtype=np.int64)
    return P[idx].mean(axis=1)


def message_passing_layer(H, A: np.ndarray, W: Tensor) -> Tensor:
    """``ReLU(D^-1/2 (A+I) D^-1/2 H W)`` for one complex (``A`` as from :func:`complex.adjacency`)."""
    H = H if isinstance(H, Tensor) else Tensor(H)
    if H.shape[0] == 0:
        return Tensor(np.zeros((0, W.shape[1])))
    op = Tensor(cx.normalized_operator(A))
    return T.relu(T.matmul(op, T.matmul(H, W)))


def pool_simplexes(H, d: int | None = None) -> Tensor:
    """Column mean over simplexes; an empty level pools to the zero vector."""
    H = H if isinstance(H, Tensor) else Tensor(H)
    if H.shape[0] == 0:
        return Tensor(np.zeros(H.shape[1] if d is None else d))
    return T.mean(H, axis=0)


@dataclass(frozen=True)
class SampleComplex:
    """Precomputed, parameter-free inputs to the spatial encoder for one series."""

    complex: cx.SimplicialComplex
    features: tuple[np.ndarray, ...]
    operators: tuple[np.ndarray, ...]


def prepare_sample(x: np.ndarray, n: int, q: float | None = 0.1, cutoff: float | None = None,
                   k_max: int = cx.MAX_DIM) -> SampleComplex:
    P, K = cx.rips_for_series(x, n, q=q, cutoff=cutoff)
    feats, ops = [], []
    for k in range(k_max + 1):
        feats.append(initial_features(K, P, k))
        ops.append(cx.normalized_operator(cx.adjacency(K, k)))
    return SampleComplex(K, tuple(feats), tuple(ops))


def prepare_dataset(X: np.ndarray, n: int, q: float | None = 0.1,
                    cutoff: float | None = None) -> list[SampleComplex]:
    return [prepare_sample(x, n, q=q, cutoff=cutoff) for x in np.asarray(X)]


@dataclass
class SpatialBatch:
    """Padded per-dimension arrays: operators ``(B, M, M)``, features ``(B, M, L_p)``, pooling ``(B, M)``."""

    operators: list[np.ndarray]
    features: list[np.ndarray]
    pooling: list[np.ndarray]

    @classmethod
    def collate(cls, samples: Sequence[SampleComplex], dims: Sequence[int]) -> "SpatialBatch":
        B = len(samples)
        lp = samples[0].features[0].shape[1]
        ops, feats, pools = [], [], []
        for k in dims:
            M = max(s.features[k].shape[0] for s in samples)
            op = np.zeros((B, M, M))
            ft = np.zeros((B, M, lp))
            pw = np.zeros((B, M))
            for b, s in enumerate(samples):
                m = s.features[k].shape[0]
                if m:
                    op[b, :m, :m] = s.operators[k]
                    ft[b, :m] = s.features[k]
                    pw[b, :m] = 1.0 / m
            ops.append(op)
            feats.append(ft)
            pools.append(pw)
        return cls(ops, feats, pools)


class SpatialEncoder:
    """Independent message-passing stacks per simplex dimension, pooled and concatenated.

    ``dims`` selects the simplex orders that contribute (``[0, 1, 2]`` for the
    full model).  First layer maps ``L_p -> d``, the rest ``d -> d``.
    """

    def __init__(self, patch_len: int, d: int, layers: int = 2, dims: Sequence[int] = (0, 1, 2),
                 rng: np.random.Generator | int = 0):
        if not 1 <= layers <= 3:
            raise ValueError(f"message-passing depth must be 1..3, got {layers}")
        rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        self.patch_len = patch_len
        self.d = d
        self.layers = layers
        self.dims = list(dims)
        self.weights: dict[int, list[Tensor]] = {}
        for k in self.dims:
            ws = [T.xavier_init((patch_len if l == 0 else d, d), rng) for l in range(layers)]
            self.weights[k] = ws

    @property
    def out_dim(self) -> int:
        return len(self.dims) * self.d

    def named_parameters(self, prefix: str = "spatial") -> dict[str, Tensor]:
        return {f"{prefix}.k{k}.w{l}": w for k, ws in self.weights.items() for l, w in enumerate(ws)}

    def level(self, batch: SpatialBatch, pos: int) -> Tensor:
        """Pooled features ``f_k`` (``(B, d)``) for the ``pos``-th enabled dimension."""
        k = self.dims[pos]
        op = Tensor(batch.operators[pos])
        H = Tensor(batch.features[pos])
        for W in self.weights[k]:
            H = T.relu(T.matmul(op, T.matmul(H, W)))
        pooled = T.mul(H, batch.pooling[pos][..., None])
        return T.tsum(pooled, axis=-2)

    def __call__(self, batch: SpatialBatch) -> Tensor:
        fs = [self.level(batch, i) for i in range(len(self.dims))]
        return fs[0] if len(fs) == 1 else T.concat(fs, axis=-1)

    def encode_samples(self, samples: Sequence[SampleComplex]) -> Tensor:
        return self(SpatialBatch.collate(samples, self.dims))


def spatial_representation(x: np.ndarray, n: int, q: float, params: SpatialEncoder,
                           cutoff: float | None = None) -> Tensor:
    """Spatial embedding of one series, shape ``(len(params.dims) * d,)``."""
    sample = prepare_sample(x, n, q=q, cutoff=cutoff)
    fs = []
    for k in params.dims:
        H = Tensor(sample.features[k])
        A = cx.adjacency(sample.complex, k)
        for W in params.weights[k]:
            H = message_passing_layer(H, A, W)
        fs.append(pool_simplexes(H, params.d))
    return fs[0] if len(fs) == 1 else T.concat(fs, axis=-1)
