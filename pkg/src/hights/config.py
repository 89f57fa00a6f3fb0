"""Training configuration and the ablation variants built from it."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any

VERTEX_GRID = (15, 20, 25, 30)
LATENT_GRID = (8, 16, 32, 64)


@dataclass(frozen=True)
class TrainConfig:
    scales: tuple[int, ...] = (1, 2, 3)
    vertices: int = 20
    latent_dim: int = 32
    contrast_dim: int | None = None
    heads: int = 4
    ff_dim: int | None = None
    mp_layers: int = 2
    tau: float = 0.2
    lr: float = 2e-4
    batch: int = 64
    epochs: int = 300
    patience: int = 50
    seed: int = 0
    cutoff_frac: float = 0.10
    fixed_cutoff: float | None = None
    val_frac: float = 0.25
    znorm: bool = True
    include_positive: bool = False
    use_cl: bool = True
    use_1simplex: bool = True
    use_2simplex: bool = True
    use_scale2: bool = True
    use_scale3: bool = True
    temporal_only: bool = False
    spatial_only: bool = False

    def __post_init__(self):
        if self.latent_dim % self.heads:
            raise ValueError(f"latent_dim {self.latent_dim} not divisible by heads {self.heads}")
        if not self.scales or any(s < 1 for s in self.scales):
            raise ValueError(f"scales must be positive, got {self.scales}")
        if not 1 <= self.mp_layers <= 3:
            raise ValueError("mp_layers must be 1..3")
        if self.temporal_only and self.spatial_only:
            raise ValueError("temporal_only and spatial_only are exclusive")
        if self.tau <= 0 or self.lr < 0 or self.batch < 1 or self.vertices < 1:
            raise ValueError("tau > 0, lr >= 0, batch >= 1 and vertices >= 1 required")
        if not 0 < self.cutoff_frac < 1:
            raise ValueError("cutoff_frac must lie in (0, 1)")

    @property
    def active_scales(self) -> tuple[int, ...]:
        keep = len(self.scales)
        if not self.use_scale2:
            keep = 1
        elif not self.use_scale3:
            keep = min(keep, 2)
        return tuple(self.scales[:keep])

    @property
    def active_dims(self) -> tuple[int, ...]:
        if not self.use_1simplex:
            return (0,)
        if not self.use_2simplex:
            return (0, 1)
        return (0, 1, 2)

    @property
    def has_temporal(self) -> bool:
        return not self.spatial_only

    @property
    def has_spatial(self) -> bool:
        return not self.temporal_only

    @property
    def contrastive(self) -> bool:
        return self.use_cl and self.has_temporal and self.has_spatial

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["scales"] = list(self.scales)
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        if "scales" in d:
            d["scales"] = tuple(int(s) for s in d["scales"])
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _coerce(name: str, raw: str) -> Any:
    f = {f.name: f for f in fields(TrainConfig)}[name]
    default = f.default
    raw = raw.strip()
    if name == "scales":
        return tuple(int(v) for v in raw.replace(",", " ").split())
    if raw.lower() in ("none", "null", ""):
        return None
    kind = str(f.type)
    if "bool" in kind:
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{name}: not a boolean: {raw!r}")
    if "float" in kind or isinstance(default, float):
        return float(raw)
    return int(raw)


def parse_overrides(pairs: dict[str, str]) -> dict[str, Any]:
    known = {f.name for f in fields(TrainConfig)}
    out = {}
    for k, v in pairs.items():
        key = k.replace("-", "_")
        if key not in known:
            raise ValueError(f"unknown config key {k!r}")
        out[key] = _coerce(key, v)
    return out


def read_config_file(path) -> dict[str, Any]:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    pairs = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        k, v = line.split("=", 1)
        pairs[k.strip()] = v.strip()
    return parse_overrides(pairs)


# name -> overrides applied on top of the base config
ABLATIONS: dict[str, dict[str, Any]] = {
    "full": {},
    "w/o_CL": {"use_cl": False},
    "w/o_2-simplex": {"use_cl": False, "use_2simplex": False},
    "w/o_1-simplex": {"use_cl": False, "use_1simplex": False},
    "w/o_3-scale": {"use_cl": False, "use_scale3": False},
    "w/o_2-scale": {"use_cl": False, "use_scale2": False},
    "w/o_SC": {"use_cl": False, "temporal_only": True},
    "w/o_MS": {"use_cl": False, "spatial_only": True},
}


def variant(cfg: TrainConfig, name: str) -> TrainConfig:
    return replace(cfg, **ABLATIONS[name])


__all__ = ["TrainConfig", "ABLATIONS", "variant", "read_config_file", "parse_overrides",
           "VERTEX_GRID", "LATENT_GRID"]
