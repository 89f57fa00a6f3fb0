"""Optimisation loop, model selection, grid search and ablations."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from . import tensor as T
from .checkpoint import Checkpoint
from .config import ABLATIONS, LATENT_GRID, VERTEX_GRID, TrainConfig, variant
from .data import Dataset, batches, split_train_val, znormalize
from .model import HighTS
from .spatial import SampleComplex

log = logging.getLogger(__name__)


class NumericError(RuntimeError):
    """A non-finite loss or gradient showed up during training."""


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: dict[str, T.Tensor], **kw) -> "AdamState":
        return cls({k: np.zeros_like(p.data) for k, p in params.items()},
                   {k: np.zeros_like(p.data) for k, p in params.items()}, **kw)


def adam_step(params: dict[str, T.Tensor], grads: dict[str, np.ndarray], state: AdamState,
              lr: float) -> None:
    """Bias-corrected Adam update, in place on ``params`` and ``state``."""
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for parameter {name!r}")
        if g.shape != params[name].data.shape:
            raise ValueError(f"{name}: gradient shape {g.shape} != parameter shape {params[name].data.shape}")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    for name, g in grads.items():
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        params[name].data = params[name].data - lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


@dataclass
class Prepared:
    """A dataset together with its precomputed complexes for one model."""

    data: Dataset
    complexes: list[SampleComplex] | None


def train_epoch(model: HighTS, prepared: Prepared, state: AdamState,
                rng: np.random.Generator) -> dict[str, float]:
    """One pass over the data: forward, loss, backward, Adam step per batch."""
    cfg = model.cfg
    params = model.named_parameters()
    leaves = list(params.values())
    d = prepared.data
    tot = ce_sum = cl_sum = 0.0
    correct = 0
    n_batches = skipped_cl = 0
    for idx in batches(d, cfg.batch, rng, shuffle=True):
        cs = [prepared.complexes[i] for i in idx] if prepared.complexes is not None else None
        out = model.forward(d.X[idx], cs)
        loss, ce, cl = model.loss(out, d.y[idx])
        if not math.isfinite(loss.item()):
            raise NumericError(f"non-finite loss {loss.item()} at step {state.step + 1}")
        grads = T.gradients(loss, leaves)
        adam_step(params, dict(zip(params, grads)), state, cfg.lr)
        n_batches += 1
        tot += loss.item()
        ce_sum += ce.item()
        if cl is not None:
            cl_sum += cl.item()
        elif cfg.contrastive:
            skipped_cl += 1
        correct += int((out.probs.data.argmax(axis=1) == d.y[idx]).sum())
    return {"loss": tot / n_batches, "ce": ce_sum / n_batches, "cl": cl_sum / n_batches,
            "accuracy": correct / len(d), "skipped_cl_batches": skipped_cl}


def evaluate(model: HighTS, prepared: Prepared) -> tuple[float, float]:
    """(accuracy, mean cross-entropy) without recording gradients."""
    probs = model.predict_proba(prepared.data.X, prepared.complexes)
    y = prepared.data.y
    acc = float((probs.argmax(axis=1) == y).mean())
    ce = float(-np.mean(np.log(np.clip(probs[np.arange(len(y)), y], 1e-12, 1.0))))
    return acc, ce


@dataclass
class FitResult:
    checkpoint: Checkpoint
    history: list[dict]
    model: HighTS
    best_epoch: int

    @property
    def best_val_accuracy(self) -> float:
        return self.checkpoint.best_val_accuracy


def fit(train: Dataset, val: Dataset, cfg: TrainConfig, verbose: bool = False) -> FitResult:
    """Train up to ``cfg.epochs`` epochs keeping the best validation snapshot.

    A snapshot is better when its validation accuracy is higher, or equal with
    lower validation cross-entropy.  Training stops once ``cfg.patience``
    epochs in a row fail to improve.
    """
    model = HighTS(cfg, train.length, train.n_classes)
    tr = Prepared(train, model.prepare(train.X))
    va = Prepared(val, model.prepare(val.X))
    state = AdamState.for_params(model.named_parameters())
    rng = np.random.default_rng([cfg.seed, 1])
    best_key = (-1.0, -math.inf)
    best_state = model.state_dict()
    best_acc, best_epoch, stale = 0.0, -1, 0
    history = []
    for epoch in range(cfg.epochs):
        metrics = train_epoch(model, tr, state, rng)
        val_acc, val_ce = evaluate(model, va)
        metrics.update(epoch=epoch, val_accuracy=val_acc, val_ce=val_ce)
        history.append(metrics)
        if verbose:
            log.info("epoch %d loss %.4f train %.3f val %.3f", epoch, metrics["loss"],
                     metrics["accuracy"], val_acc)
        key = (val_acc, -val_ce)
        if key > best_key:
            best_key, best_acc, best_epoch, stale = key, val_acc, epoch, 0
            best_state = model.state_dict()
        else:
            stale += 1
            if stale > cfg.patience:
                break
    model.load_state_dict(best_state)
    ckpt = Checkpoint(best_state, cfg, cfg.seed, best_acc, train.length, train.n_classes,
                      {"best_epoch": best_epoch, "epochs_run": len(history)})
    return FitResult(ckpt, history, model, best_epoch)


def model_from_checkpoint(ckpt: Checkpoint) -> HighTS:
    model = HighTS(ckpt.config, ckpt.length, ckpt.n_classes)
    model.load_state_dict(ckpt.tensors)
    return model


def prepare_splits(train: Dataset, test: Dataset | None, cfg: TrainConfig
                   ) -> tuple[Dataset, Dataset, Dataset | None]:
    """Normalise (if configured) and carve the validation split out of ``train``."""
    if cfg.znorm:
        train = znormalize(train)
        test = znormalize(test) if test is not None else None
    tr, va = split_train_val(train, cfg.val_frac, cfg.seed)
    return tr, va, test


@dataclass
class GridResult:
    best: TrainConfig
    cells: list[dict] = field(default_factory=list)


def grid_search(train: Dataset, val: Dataset, cfg: TrainConfig,
                vertices: Iterable[int] = VERTEX_GRID, latent: Iterable[int] = LATENT_GRID
                ) -> GridResult:
    """Fit every (vertices, latent_dim) cell; keep the best validation accuracy.

    Ties go to the smaller latent dimension, then to fewer vertices.  Cell ``i``
    is seeded with ``cfg.seed + i``; a failing cell is recorded and skipped.
    """
    cells = []
    cell_index = 0
    for n in vertices:
        for d in latent:
            rec = {"vertices": n, "latent_dim": d, "seed": cfg.seed + cell_index,
                   "val_accuracy": None, "error": None}
            try:
                heads = cfg.heads if d % cfg.heads == 0 else math.gcd(d, cfg.heads)
                cell_cfg = replace(cfg, vertices=n, latent_dim=d, heads=heads,
                                   seed=cfg.seed + cell_index)
                rec["val_accuracy"] = fit(train, val, cell_cfg).best_val_accuracy
            except Exception as exc:  # recorded, grid continues
                log.warning("grid cell n=%d d=%d failed: %s", n, d, exc)
                rec["error"] = f"{type(exc).__name__}: {exc}"
            cells.append(rec)
            cell_index += 1
    ok = [c for c in cells if c["val_accuracy"] is not None]
    if not ok:
        raise RuntimeError("every grid cell failed")
    best = min(ok, key=lambda c: (-c["val_accuracy"], c["latent_dim"], c["vertices"]))
    best_cfg = replace(cfg, vertices=best["vertices"], latent_dim=best["latent_dim"],
                       heads=cfg.heads if best["latent_dim"] % cfg.heads == 0
                       else math.gcd(best["latent_dim"], cfg.heads))
    return GridResult(best_cfg, cells)


def _test_accuracy(model: HighTS, test: Dataset) -> float:
    return float((model.predict(test.X) == test.y).mean())


def ablate(train: Dataset, val: Dataset, test: Dataset, cfg: TrainConfig,
           seeds: Sequence[int] | None = None, variants: Sequence[str] | None = None) -> list[dict]:
    """Fit the full model and each ablation variant; one row per variant."""
    seeds = list(seeds) if seeds is not None else [cfg.seed]
    names = list(variants) if variants is not None else list(ABLATIONS)
    rows = []
    for name in names:
        accs = []
        for seed in seeds:
            vcfg = replace(variant(cfg, name), seed=seed)
            t0 = time.perf_counter()
            res = fit(train, val, vcfg)
            accs.append(_test_accuracy(res.model, test))
            log.info("%s seed %d: test %.3f (%.1fs)", name, seed, accs[-1], time.perf_counter() - t0)
        rows.append({"variant": name, "seeds": seeds, "accuracies": accs,
                     "mean": float(np.mean(accs)), "median": float(np.median(accs)),
                     "std": float(np.std(accs)), "embedding_dim": res.model.embedding_dim})
    return rows
