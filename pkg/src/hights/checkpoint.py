"""Binary checkpoint format.

Layout (all integers little-endian)::

    b"HITS"                      magic
    u32                          format version
    u32                          tensor count
    per tensor:
        u32 name length, UTF-8 name
        u32 rank, rank x u64 extents
        float64 data, row-major
    u64 metadata length, UTF-8 JSON metadata
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import TrainConfig

MAGIC = b"HITS"
FORMAT_VERSION = 1


class CheckpointError(Exception):
    pass


class NotACheckpoint(CheckpointError):
    pass


class VersionMismatch(CheckpointError):
    pass


class TruncatedCheckpoint(CheckpointError):
    pass


@dataclass
class Checkpoint:
    tensors: dict[str, np.ndarray]
    config: TrainConfig
    seed: int
    best_val_accuracy: float
    length: int
    n_classes: int
    extra: dict = field(default_factory=dict)
    version: int = FORMAT_VERSION

    def metadata(self) -> dict:
        return {"config": self.config.to_dict(), "seed": self.seed,
                "best_val_accuracy": self.best_val_accuracy, "length": self.length,
                "n_classes": self.n_classes, "extra": self.extra}


def to_bytes(ckpt: Checkpoint) -> bytes:
    parts = [MAGIC, struct.pack("<II", ckpt.version, len(ckpt.tensors))]
    for name, arr in ckpt.tensors.items():
        arr = np.ascontiguousarray(arr, dtype="<f8")
        raw = name.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)) + raw)
        parts.append(struct.pack("<I", arr.ndim) + struct.pack(f"<{arr.ndim}Q", *arr.shape))
        parts.append(arr.tobytes(order="C"))
    meta = json.dumps(ckpt.metadata(), sort_keys=True).encode("utf-8")
    parts.append(struct.pack("<Q", len(meta)) + meta)
    return b"".join(parts)


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise TruncatedCheckpoint(f"checkpoint truncated at byte {self.pos} (wanted {n} more)")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def from_bytes(buf: bytes) -> Checkpoint:
    if buf[:4] != MAGIC:
        raise NotACheckpoint("not a checkpoint (bad magic bytes)")
    r = _Reader(buf)
    r.take(4)
    version, count = r.unpack("<II")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"checkpoint format version {version}, expected {FORMAT_VERSION}")
    tensors = {}
    for _ in range(count):
        (nlen,) = r.unpack("<I")
        name = r.take(nlen).decode("utf-8")
        (rank,) = r.unpack("<I")
        shape = r.unpack(f"<{rank}Q") if rank else ()
        size = int(np.prod(shape)) if shape else 1
        tensors[name] = np.frombuffer(r.take(8 * size), dtype="<f8").reshape(shape).astype(np.float64)
    (mlen,) = r.unpack("<Q")
    meta = json.loads(r.take(mlen).decode("utf-8"))
    if r.pos != len(buf):
        raise CheckpointError(f"{len(buf) - r.pos} trailing bytes after metadata")
    return Checkpoint(tensors, TrainConfig.from_dict(meta["config"]), meta["seed"],
                      meta["best_val_accuracy"], meta["length"], meta["n_classes"],
                      meta.get("extra", {}), version)


def atomic_write(path, data: bytes | str) -> None:
    """Write to a temp file next to ``path`` then rename over it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data.encode("utf-8") if isinstance(data, str) else data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    atomic_write(path, to_bytes(ckpt))


def load_checkpoint(path) -> Checkpoint:
    return from_bytes(Path(path).read_bytes())
