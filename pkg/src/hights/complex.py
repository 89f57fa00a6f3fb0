"""Vietoris-Rips complexes over cosine similarity of series patches.

Vertices are the ``n`` non-overlapping patches of a series.  Two vertices are
joined when their cosine similarity reaches the cutoff; triangles are the
3-cliques of that graph.  Simplexes are stored as strictly increasing vertex
tuples in lexicographic order, which also fixes the orientation used by the
boundary matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .temporal import ConfigError

MAX_DIM = 2


def patch(x: np.ndarray, n: int) -> np.ndarray:
    """Cut a series into ``n`` patches of length ``floor(L / n)`` (remainder dropped)."""
    x = np.asarray(x, dtype=np.float64)
    L = x.shape[-1]
    if n < 1 or n > L:
        raise ConfigError(f"{n} vertices do not fit a series of length {L}")
    lp = L // n
    return x[..., : n * lp].reshape(*x.shape[:-1], n, lp)


def similarity_matrix(points: np.ndarray) -> np.ndarray:
    """Pairwise cosine similarity; a zero point scores 0 against others, 1 against itself."""
    P = np.asarray(points, dtype=np.float64)
    norms = np.linalg.norm(P, axis=1)
    nz = norms > 0
    safe = np.where(nz, norms, 1.0)
    S = (P @ P.T) / np.outer(safe, safe)
    S[~nz, :] = 0.0
    S[:, ~nz] = 0.0
    S = np.clip(S, -1.0, 1.0)
    S = 0.5 * (S + S.T)
    np.fill_diagonal(S, 1.0)
    return S


def cutoff_from_percentile(S: np.ndarray, q: float) -> float:
    """Cutoff such that roughly the top ``q`` fraction of pairwise similarities pass.

    The ``(1 - q)`` quantile (linear interpolation) of the upper-triangle entries.
    """
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    n = S.shape[0]
    if n < 2:
        raise ValueError("need at least two points for a similarity cutoff")
    iu = np.triu_indices(n, k=1)
    return float(np.quantile(S[iu], 1.0 - q))


@dataclass(frozen=True)
class SimplicialComplex:
    """Simplexes by dimension, each a sorted list of increasing vertex tuples."""

    simplexes: tuple[tuple[tuple[int, ...], ...], ...]
    cutoff: float = float("nan")
    _index: tuple[dict, ...] = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", tuple({s: i for i, s in enumerate(level)}
                                                 for level in self.simplexes))

    def count(self, k: int) -> int:
        return len(self.simplexes[k]) if k < len(self.simplexes) else 0

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(len(level) for level in self.simplexes)

    def index(self, k: int, simplex: tuple[int, ...]) -> int:
        return self._index[k][simplex]


def build_rips(points: np.ndarray, c: float, k_max: int = MAX_DIM,
               S: np.ndarray | None = None) -> SimplicialComplex:
    """Rips complex up to dimension ``k_max`` (at most 2) with similarity ``>= c``."""
    if not 0 <= k_max <= MAX_DIM:
        raise ValueError(f"k_max must be in 0..{MAX_DIM}")
    if S is None:
        S = similarity_matrix(points)
    n = S.shape[0]
    levels: list[tuple] = [tuple((i,) for i in range(n))]
    if k_max >= 1:
        adj = S >= c
        np.fill_diagonal(adj, False)
        ii, jj = np.nonzero(np.triu(adj, k=1))
        levels.append(tuple(zip(ii.tolist(), jj.tolist())))
        if k_max >= 2:
            tris = []
            for i, j in levels[1]:
                common = np.flatnonzero(adj[i] & adj[j])
                tris.extend((i, j, int(k)) for k in common[common > j])
            levels.append(tuple(sorted(tris)))
    return SimplicialComplex(tuple(levels), float(c))


def _check_k(K: SimplicialComplex, k: int, lo: int = 0) -> None:
    if not lo <= k <= MAX_DIM:
        raise ValueError(f"simplex dimension {k} out of range {lo}..{MAX_DIM}")


def boundary_matrix(K: SimplicialComplex, k: int) -> np.ndarray:
    """Signed incidence ``m_{k-1} x m_k``: face omitting the i-th vertex gets ``(-1)**i``."""
    _check_k(K, k, lo=1)
    B = np.zeros((K.count(k - 1), K.count(k)), dtype=np.int64)
    if k >= len(K.simplexes):
        return B
    for col, simplex in enumerate(K.simplexes[k]):
        for i in range(len(simplex)):
            face = simplex[:i] + simplex[i + 1:]
            B[K.index(k - 1, face), col] = (-1) ** i
    return B


def adjacency(K: SimplicialComplex, k: int) -> np.ndarray:
    """0/1 adjacency of k-simplexes.

    Vertices are upper-adjacent through a shared edge; edges and triangles are
    lower-adjacent through a shared (k-1)-face.
    """
    _check_k(K, k)
    m = K.count(k)
    A = np.zeros((m, m), dtype=np.int64)
    if m == 0:
        return A
    if k == 0:
        if len(K.simplexes) > 1:
            for i, j in K.simplexes[1]:
                A[i, j] = A[j, i] = 1
        return A
    by_face: dict[tuple[int, ...], list[int]] = {}
    for idx, simplex in enumerate(K.simplexes[k]):
        for face in combinations(simplex, k):
            by_face.setdefault(face, []).append(idx)
    for members in by_face.values():
        for a, b in combinations(members, 2):
            A[a, b] = A[b, a] = 1
    return A


def degree(K: SimplicialComplex, k: int) -> np.ndarray:
    """Diagonal degree matrix (row sums of :func:`adjacency`)."""
    return np.diag(adjacency(K, k).sum(axis=1))


def normalized_operator(A: np.ndarray) -> np.ndarray:
    """``D^-1/2 (A + I) D^-1/2`` where ``D`` holds the row sums of ``A + I``."""
    A_hat = np.asarray(A, dtype=np.float64) + np.eye(A.shape[0])
    inv_sqrt = 1.0 / np.sqrt(A_hat.sum(axis=1))
    return inv_sqrt[:, None] * A_hat * inv_sqrt[None, :]


def rips_for_series(x: np.ndarray, n: int, q: float | None = 0.1,
                    cutoff: float | None = None) -> tuple[np.ndarray, SimplicialComplex]:
    """Patch a series and build its complex.

    The cutoff is the per-series top-``q`` similarity quantile unless a fixed
    ``cutoff`` is supplied.
    """
    P = patch(x, n)
    S = similarity_matrix(P)
    c = cutoff if cutoff is not None else cutoff_from_percentile(S, q)
    return P, build_rips(P, c, S=S)


def describe(K: SimplicialComplex) -> dict:
    m = K.counts + (0,) * (3 - len(K.counts))
    n = m[0]
    pairs = n * (n - 1) // 2
    return {"m0": m[0], "m1": m[1], "m2": m[2], "cutoff": K.cutoff,
            "edge_density": m[1] / pairs if pairs else 0.0}
