"""The full classifier: temporal and spatial encoders, projection heads, linear head."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import objectives as obj
from . import tensor as T
from .config import TrainConfig
from .spatial import SampleComplex, SpatialBatch, SpatialEncoder, prepare_dataset
from .temporal import ConfigError, TemporalEncoder, segment
from .tensor import Tensor


@dataclass
class Forward:
    f_m: Tensor | None
    f_t: Tensor | None
    r: Tensor
    probs: Tensor
    z_m: Tensor | None = None
    z_t: Tensor | None = None


class HighTS:
    """Cross-structural time-series classifier.

    Parameters are created in a fixed order from ``np.random.default_rng(seed)``
    so that a (config, length, classes) triple fully determines the
    initialisation.
    """

    def __init__(self, cfg: TrainConfig, length: int, n_classes: int, seed: int | None = None):
        self.cfg = cfg
        self.length = int(length)
        self.n_classes = int(n_classes)
        rng = np.random.default_rng(cfg.seed if seed is None else seed)
        d = cfg.latent_dim
        for s in cfg.active_scales:
            segment(np.zeros(self.length), s)
        if cfg.vertices > self.length:
            raise ConfigError(f"{cfg.vertices} vertices do not fit a series of length {self.length}")
        self.patch_len = self.length // cfg.vertices
        self.temporal = (TemporalEncoder(cfg.active_scales, d, cfg.heads, cfg.ff_dim, rng)
                         if cfg.has_temporal else None)
        self.spatial = (SpatialEncoder(self.patch_len, d, cfg.mp_layers, cfg.active_dims, rng)
                        if cfg.has_spatial else None)
        dc = cfg.contrast_dim or d
        if cfg.contrastive:
            self.proj_m = obj.Linear(self.temporal.out_dim, dc, rng)
            self.proj_t = obj.Linear(self.spatial.out_dim, dc, rng)
        else:
            self.proj_m = self.proj_t = None
        self.head = obj.Linear(self.embedding_dim, n_classes, rng)

    @property
    def embedding_dim(self) -> int:
        dm = self.temporal.out_dim if self.temporal else 0
        dt = self.spatial.out_dim if self.spatial else 0
        return dm + dt

    def named_parameters(self) -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        if self.temporal:
            out.update(self.temporal.named_parameters())
        if self.spatial:
            out.update(self.spatial.named_parameters())
        if self.proj_m is not None:
            out.update(self.proj_m.named("proj_m"))
            out.update(self.proj_t.named("proj_t"))
        out.update(self.head.named("classifier"))
        return out

    def parameters(self) -> list[Tensor]:
        return list(self.named_parameters().values())

    def state_dict(self) -> dict[str, np.ndarray]:
        return {k: v.data.copy() for k, v in self.named_parameters().items()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        params = self.named_parameters()
        if set(params) != set(state):
            raise KeyError(f"parameter names differ: missing {sorted(set(params) - set(state))}, "
                           f"unexpected {sorted(set(state) - set(params))}")
        for k, p in params.items():
            if p.data.shape != state[k].shape:
                raise ValueError(f"{k}: shape {state[k].shape} != {p.data.shape}")
            p.data = np.array(state[k], dtype=np.float64, copy=True)

    def prepare(self, X: np.ndarray) -> list[SampleComplex] | None:
        """Per-series complexes for the spatial branch (``None`` when it is disabled)."""
        if self.spatial is None:
            return None
        cfg = self.cfg
        return prepare_dataset(X, cfg.vertices, q=cfg.cutoff_frac, cutoff=cfg.fixed_cutoff)

    def forward(self, X: np.ndarray, complexes: Sequence[SampleComplex] | None = None) -> Forward:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        f_m = self.temporal(X) if self.temporal else None
        f_t = None
        if self.spatial:
            if complexes is None:
                complexes = self.prepare(X)
            f_t = self.spatial(SpatialBatch.collate(complexes, self.spatial.dims))
        r = obj.fuse(f_m, f_t)
        probs = obj.classify(r, self.head)
        z_m = self.proj_m(f_m) if self.proj_m is not None else None
        z_t = self.proj_t(f_t) if self.proj_t is not None else None
        return Forward(f_m, f_t, r, probs, z_m, z_t)

    def loss(self, out: Forward, y) -> tuple[Tensor, Tensor, Tensor | None]:
        """(total, cross-entropy, contrastive-or-None) for one batch."""
        ce = obj.cross_entropy(out.probs, y)
        cl = None
        if self.cfg.contrastive and out.z_m is not None and out.z_m.shape[0] >= 2:
            cl = obj.contrastive_loss(out.z_m, out.z_t, self.cfg.tau, self.cfg.include_positive)
        return obj.total_loss(ce, cl), ce, cl

    def predict_proba(self, X: np.ndarray, complexes: Sequence[SampleComplex] | None = None,
                      batch: int = 256) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if complexes is None:
            complexes = self.prepare(X)
        out = []
        with T.no_grad():
            for start in range(0, len(X), batch):
                sl = slice(start, start + batch)
                cs = complexes[sl] if complexes is not None else None
                out.append(self.forward(X[sl], cs).probs.data)
        return np.concatenate(out, axis=0)

    def embed(self, X: np.ndarray, complexes: Sequence[SampleComplex] | None = None,
              batch: int = 256) -> np.ndarray:
        """Fused representations ``r`` (temporal block first)."""
        X = np.asarray(X, dtype=np.float64)
        if complexes is None:
            complexes = self.prepare(X)
        out = []
        with T.no_grad():
            for start in range(0, len(X), batch):
                sl = slice(start, start + batch)
                cs = complexes[sl] if complexes is not None else None
                out.append(self.forward(X[sl], cs).r.data)
        return np.concatenate(out, axis=0)

    def predict(self, X, complexes=None) -> np.ndarray:
        return self.predict_proba(X, complexes).argmax(axis=1)
