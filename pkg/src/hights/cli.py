"""Command-line entry point: ``hights <command> [options]``.

Commands: train, eval, embed, inspect-complex, gridsearch, ablate.

Exit status: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import complex as cx
from .checkpoint import CheckpointError, atomic_write, load_checkpoint, save_checkpoint
from .config import LATENT_GRID, VERTEX_GRID, TrainConfig, read_config_file
from .data import DataError, Dataset, load_split, sine_vs_noise, znormalize
from .metrics import MetricsReport, davies_bouldin, evaluate_accuracy, export_embeddings
from .temporal import ConfigError
from .training import (NumericError, ablate, fit, grid_search, model_from_checkpoint,
                       prepare_splits)

log = logging.getLogger("hights")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

# CLI flag -> TrainConfig field
FLAG_FIELDS = {
    "scales": "scales", "vertices": "vertices", "latent_dim": "latent_dim",
    "contrast_dim": "contrast_dim", "heads": "heads", "mp_layers": "mp_layers", "tau": "tau",
    "lr": "lr", "batch": "batch", "epochs": "epochs", "patience": "patience",
    "cutoff_frac": "cutoff_frac", "seed": "seed",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.replace(",", " ").split())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("data")
    g.add_argument("--data-dir", default="data", help="directory holding <NAME>_TRAIN.tsv / _TEST.tsv")
    g.add_argument("--dataset", default="synthetic",
                   help="dataset name; 'synthetic' generates the sine-vs-noise set")
    g.add_argument("--out", default="runs", help="output directory for reports and artifacts")
    g.add_argument("--config", help="flat key=value file; command-line flags override it")
    g.add_argument("--verbose", "-v", action="store_true")
    h = common.add_argument_group("model / training")
    h.add_argument("--scales", type=_int_list)
    h.add_argument("--vertices", type=int)
    h.add_argument("--latent-dim", type=int)
    h.add_argument("--contrast-dim", type=int)
    h.add_argument("--heads", type=int)
    h.add_argument("--mp-layers", type=int)
    h.add_argument("--tau", type=float)
    h.add_argument("--lr", type=float)
    h.add_argument("--batch", type=int)
    h.add_argument("--epochs", type=int)
    h.add_argument("--patience", type=int)
    h.add_argument("--cutoff-frac", type=float)
    h.add_argument("--seed", type=int, help="base seed (default from config)")
    h.add_argument("--seeds", default="1",
                   help="number of seeds (N -> base..base+N-1) or an explicit comma list")
    h.add_argument("--record-time", action="store_true",
                   help="store wall-clock seconds in the JSON report (breaks byte-identical reruns)")

    p = _Parser(prog="hights", description="Cross-structural time-series classifier.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    sub.add_parser("train", parents=[common], help="fit one model per seed and report test accuracy")
    for name, helptext in (("eval", "evaluate a checkpoint on the test split"),
                           ("embed", "export test-set embeddings of a checkpoint to CSV")):
        sp = sub.add_parser(name, parents=[common], help=helptext)
        sp.add_argument("--checkpoint", required=True)
    sp = sub.add_parser("inspect-complex", parents=[common], help="per-sample complex statistics")
    sp.add_argument("--split", choices=("train", "test"), default="train")
    sp.add_argument("--limit", type=int, default=None)
    sp = sub.add_parser("gridsearch", parents=[common], help="vertices x latent-dim grid search")
    sp.add_argument("--vertex-grid", type=_int_list, default=VERTEX_GRID)
    sp.add_argument("--latent-grid", type=_int_list, default=LATENT_GRID)
    sp = sub.add_parser("ablate", parents=[common], help="full model vs the seven ablation variants")
    sp.add_argument("--variants", default=None, help="comma list of variant names (default all)")
    return p


def resolve_config(args) -> TrainConfig:
    values = read_config_file(args.config) if args.config else {}
    for flag, fld in FLAG_FIELDS.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[fld] = v
    return TrainConfig(**values) if values else TrainConfig()


def resolve_seeds(args, cfg: TrainConfig) -> list[int]:
    text = str(args.seeds).strip()
    if "," in text:
        return list(_int_list(text))
    try:
        n = int(text)
    except ValueError:
        raise UsageError(f"--seeds: expected a count or comma list, got {text!r}") from None
    if n < 1:
        raise UsageError("--seeds must be >= 1")
    return [cfg.seed + i for i in range(n)]


def load_data(args) -> tuple[Dataset, Dataset]:
    if args.dataset.lower() == "synthetic":
        return sine_vs_noise(seed=0)
    return load_split(args.data_dir, args.dataset)


def _write_report(out: Path, name: str, report: MetricsReport) -> Path:
    path = out / name
    atomic_write(path, report.to_json() + "\n")
    return path


def cmd_train(args) -> int:
    cfg = resolve_config(args)
    seeds = resolve_seeds(args, cfg)
    train_full, test = load_data(args)
    out = Path(args.out)
    t0 = time.perf_counter()
    accs, dbis, epochs = [], [], []
    for seed in seeds:
        scfg = replace(cfg, seed=seed)
        tr, va, te = prepare_splits(train_full, test, scfg)
        res = fit(tr, va, scfg, verbose=args.verbose)
        acc = evaluate_accuracy(res.model, te)
        accs.append(acc)
        dbis.append(davies_bouldin(res.model.embed(te.X), te.y))
        epochs.append(res.checkpoint.extra["epochs_run"])
        save_checkpoint(out / f"model_seed{seed}.ckpt", res.checkpoint)
        print(f"seed {seed}: test accuracy {acc:.4f} (best val {res.best_val_accuracy:.4f}, "
              f"{epochs[-1]} epochs)")
    wall = time.perf_counter() - t0
    report = MetricsReport(train_full.name or args.dataset, seeds, accs,
                           dbi=float(np.mean(dbis)), config=cfg.to_dict(),
                           wall_seconds=round(wall, 3) if args.record_time else 0.0,
                           extra={"per_seed_dbi": dbis, "epochs_run": epochs})
    path = _write_report(out, "report.json", report)
    print(report.summary())
    print(f"wall-clock {wall:.1f}s; report written to {path}")
    return EXIT_OK


def _load_for_eval(args):
    ckpt = load_checkpoint(args.checkpoint)
    model = model_from_checkpoint(ckpt)
    _, test = load_data(args)
    if ckpt.config.znorm:
        test = znormalize(test)
    if test.length != ckpt.length:
        raise DataError(f"test length {test.length} != checkpoint length {ckpt.length}")
    return ckpt, model, test


def cmd_eval(args) -> int:
    ckpt, model, test = _load_for_eval(args)
    acc = evaluate_accuracy(model, test)
    dbi = davies_bouldin(model.embed(test.X), test.y)
    report = MetricsReport(test.name or args.dataset, [ckpt.seed], [acc], dbi=dbi,
                           config=ckpt.config.to_dict())
    path = _write_report(Path(args.out), "eval_report.json", report)
    print(report.summary())
    print(f"report written to {path}")
    return EXIT_OK


def cmd_embed(args) -> int:
    ckpt, model, test = _load_for_eval(args)
    path = Path(args.out) / "embeddings.csv"
    R = export_embeddings(model, test, path)
    dbi = davies_bouldin(R, test.y)
    print(f"{R.shape[0]} embeddings of width {R.shape[1]} written to {path}; "
          f"Davies-Bouldin (raw) {dbi:.4f}")
    return EXIT_OK


def cmd_inspect(args) -> int:
    cfg = resolve_config(args)
    train, test = load_data(args)
    d = train if args.split == "train" else test
    if cfg.znorm:
        d = znormalize(d)
    records = []
    for i, x in enumerate(d.X[: args.limit]):
        _, K = cx.rips_for_series(x, cfg.vertices, q=cfg.cutoff_frac, cutoff=cfg.fixed_cutoff)
        rec = {"index": i, "label": int(d.y[i]), **cx.describe(K)}
        records.append(rec)
        print(json.dumps(rec, sort_keys=True))
    atomic_write(Path(args.out) / "complexes.jsonl",
                 "".join(json.dumps(r, sort_keys=True) + "\n" for r in records))
    return EXIT_OK


def cmd_gridsearch(args) -> int:
    cfg = resolve_config(args)
    train_full, test = load_data(args)
    tr, va, _ = prepare_splits(train_full, test, cfg)
    res = grid_search(tr, va, cfg, args.vertex_grid, args.latent_grid)
    for c in res.cells:
        acc = "failed" if c["val_accuracy"] is None else f"{c['val_accuracy']:.4f}"
        print(f"vertices {c['vertices']:>3}  latent {c['latent_dim']:>3}  val accuracy {acc}")
    print(f"best: vertices {res.best.vertices}, latent {res.best.latent_dim}")
    payload = {"dataset": train_full.name or args.dataset, "cells": res.cells,
               "best": {"vertices": res.best.vertices, "latent_dim": res.best.latent_dim},
               "config": cfg.to_dict()}
    atomic_write(Path(args.out) / "gridsearch.json", json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_ablate(args) -> int:
    cfg = resolve_config(args)
    seeds = resolve_seeds(args, cfg)
    train_full, test = load_data(args)
    tr, va, te = prepare_splits(train_full, test, cfg)
    names = [v.strip() for v in args.variants.split(",")] if args.variants else None
    rows = ablate(tr, va, te, cfg, seeds=seeds, variants=names)
    for r in rows:
        print(f"{r['variant']:<14} median {r['median']:.4f}  mean {r['mean']:.4f}  "
              f"(r width {r['embedding_dim']})")
    payload = {"dataset": train_full.name or args.dataset, "seeds": seeds, "rows": rows,
               "config": cfg.to_dict()}
    atomic_write(Path(args.out) / "ablation.json", json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


COMMANDS = {"train": cmd_train, "eval": cmd_eval, "embed": cmd_embed,
            "inspect-complex": cmd_inspect, "gridsearch": cmd_gridsearch, "ablate": cmd_ablate}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except (DataError, CheckpointError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ConfigError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
