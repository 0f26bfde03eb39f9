"""Command-line entry point: train, sweep-depth, verify, inspect-bundle.

Configuration precedence is CLI flag > config file > dataset defaults >
built-in defaults.  Config files are flat UTF-8 ``key=value`` lines;
``#`` starts a comment.  The effective configuration is echoed into every
output directory and hashed into every CSV row.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import os
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import network as net
from . import oracle, report, trainer
from .data import BENCHMARK_STATS, DatasetBundle, full_split, load_bundle, semi_split

# Published per-dataset hyperparameters (learning rate, weight decay,
# channels, dropout, step size) for each split protocol.
DATASET_DEFAULTS = {
    ("cora", "semi"): dict(lr=4.6e-5, weight_decay=1.2e-4, channels=64,
                           dropout=0.5, h=0.6),
    ("citeseer", "semi"): dict(lr=1.0e-5, weight_decay=8.1e-3, channels=256,
                               dropout=0.7, h=0.3),
    ("pubmed", "semi"): dict(lr=2.4e-5, weight_decay=1.2e-4, channels=256,
                             dropout=0.6, h=0.7),
    ("cora", "full"): dict(lr=2.3e-5, weight_decay=1.0e-4, channels=64,
                           dropout=0.5, h=0.2),
    ("citeseer", "full"): dict(lr=2.1e-4, weight_decay=1.1e-4, channels=64,
                               dropout=0.6, h=0.3),
    ("pubmed", "full"): dict(lr=4.3e-5, weight_decay=2.6e-4, channels=64,
                             dropout=0.5, h=0.4),
    ("chameleon", "full"): dict(lr=8.0e-4, weight_decay=9.2e-5, channels=64,
                                dropout=0.6, h=0.5),
}


class ConfigError(Exception):
    pass


@dataclass
class ExperimentConfig:
    dataset: str
    block: str = "mix_ad"
    depths: tuple = (2,)
    channels: int = 64
    dropout: float = 0.5
    h: float = 0.5
    lr: float = 0.01
    weight_decay: float = 5e-4
    seeds: tuple = (0,)
    split: str = "semi"
    out: str = "runs"
    max_epochs: int = 1500
    patience: int = 100
    eval_every: int = 1
    jobs: int = 1
    f64: bool = False
    row_normalize: str = "auto"
    tie_weights: bool = False

    def __post_init__(self):
        if not self.depths:
            raise ConfigError("depth list must be nonempty")
        if not self.seeds:
            raise ConfigError("seed list must be nonempty")
        if self.split not in ("semi", "full"):
            raise ConfigError(f"split must be semi or full, got {self.split!r}")
        if self.row_normalize not in ("auto", "on", "off"):
            raise ConfigError("row_normalize must be auto, on, or off")

    def as_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            out[f.name] = v
        return out

    def as_kwargs(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


_INT_FIELDS = {"channels", "max_epochs", "patience", "eval_every", "jobs"}
_FLOAT_FIELDS = {"dropout", "h", "lr", "weight_decay"}
_BOOL_FIELDS = {"f64", "tie_weights"}
_LIST_FIELDS = {"depths", "seeds"}


def parse_config_file(path) -> dict:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8")
                                 .splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = value
    return values


def _coerce(key: str, value: str):
    if key in _INT_FIELDS:
        return int(value)
    if key in _FLOAT_FIELDS:
        return float(value)
    if key in _BOOL_FIELDS:
        return value.lower() in ("1", "true", "yes", "on")
    if key in _LIST_FIELDS:
        return tuple(int(x) for x in value.split(",") if x.strip())
    return value


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """Merge defaults, dataset defaults, config file, and CLI overrides."""
    layers: dict = {}
    if args.config:
        for key, value in parse_config_file(args.config).items():
            valid = {f.name for f in fields(ExperimentConfig)}
            if key not in valid:
                raise ConfigError(f"unknown config key {key!r}")
            layers[key] = _coerce(key, value)
    for f in fields(ExperimentConfig):
        cli_value = getattr(args, f.name, None)
        if cli_value is not None:
            layers[f.name] = cli_value
    if "dataset" not in layers:
        raise ConfigError("no dataset given (--dataset flag or config file)")
    cfg = ExperimentConfig(dataset=layers.pop("dataset"))
    # dataset-specific published defaults fill anything not set explicitly
    name = Path(cfg.dataset).name.lower()
    split = layers.get("split", cfg.split)
    tuned = DATASET_DEFAULTS.get((name, split), {})
    for key, value in tuned.items():
        if key not in layers:
            layers[key] = value
    return replace(cfg, **layers)


def resolve_dataset_path(dataset: str) -> Path:
    """A bundle directory path, or a name under the PDEGNN_DATA root."""
    p = Path(dataset)
    if p.is_dir():
        return p
    root = os.environ.get("PDEGNN_DATA")
    if root and (Path(root) / dataset).is_dir():
        return Path(root) / dataset
    raise ConfigError(
        f"dataset {dataset!r} not found (not a directory, and not under "
        f"PDEGNN_DATA={root!r}); pass --dataset")


def _normalize_flag(cfg: ExperimentConfig, bundle: DatasetBundle) -> bool:
    if cfg.row_normalize == "auto":
        return bundle.name in BENCHMARK_STATS
    return cfg.row_normalize == "on"


def _echo_config(cfg: ExperimentConfig, out_dir: Path) -> str:
    d = cfg.as_dict()
    h = trainer.config_hash(d)
    lines = [f"{k}={d[k]}" for k in sorted(d)]
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config_used.txt").write_text(
        "\n".join(lines) + f"\n# config_hash={h}\n", encoding="utf-8")
    return h


def run_one(cfg: ExperimentConfig, bundle: DatasetBundle, depth: int,
            seed: int):
    """Train a single (depth, seed) cell and compute its smoothing profile."""
    dtype = np.float64 if cfg.f64 else np.float32
    model_cfg = net.ModelConfig(
        block_kind=cfg.block, depth=depth, channels=cfg.channels,
        dropout_p=cfg.dropout, h=cfg.h, tie_weights=cfg.tie_weights,
        seed=seed)
    model = net.init_model(model_cfg, bundle.graph(), bundle.f_in,
                           bundle.classes, dtype=dtype)
    split = (semi_split if cfg.split == "semi" else full_split)(bundle, seed)
    optim = trainer.OptimConfig(lr=cfg.lr, weight_decay=cfg.weight_decay,
                                max_epochs=cfg.max_epochs,
                                patience=cfg.patience,
                                eval_every=cfg.eval_every)
    normalize = _normalize_flag(cfg, bundle)
    result = trainer.train(model, bundle, split, optim, seed,
                           normalize=normalize)
    feats = trainer.prepare_features(model, bundle, normalize)
    x = np.maximum(feats.values @ model.w_in.values, 0.0)
    profile = oracle.smoothing_profile(model, x)
    return result, profile.variance.tolist()


def _sweep_cell(payload):
    bundle_path, cfg_dict, depth, seed = payload
    cfg = ExperimentConfig(**cfg_dict)
    bundle = load_bundle(bundle_path)
    result, variances = run_one(cfg, bundle, depth, seed)
    return depth, seed, result, variances


def cmd_train(args) -> int:
    cfg = resolve_config(args)
    bundle_path = resolve_dataset_path(cfg.dataset)
    bundle = load_bundle(bundle_path)
    out_dir = Path(cfg.out)
    _echo_config(cfg, out_dir)
    depth = cfg.depths[0]
    results = []
    histories = {}
    for seed in cfg.seeds:
        result, _ = run_one(cfg, bundle, depth, seed)
        results.append(result)
        histories[seed] = result.history
        print(f"seed {seed}: best val {result.best_val_acc:.2f}%, "
              f"test {result.test_acc_at_best_val:.2f}% "
              f"({result.epochs_ran} epochs)")
    trainer.append_results(out_dir / "results.csv", results)
    report.save_training_curves(histories, out_dir / "training_curves.png")
    tests = [r.test_acc_at_best_val for r in results]
    summary = (f"{bundle.name} {cfg.block} depth={depth}: "
               f"test {np.mean(tests):.2f}% "
               f"(best {max(tests):.2f}%, {len(tests)} seeds)")
    print(summary)
    (out_dir / "summary.txt").write_text(summary + "\n", encoding="utf-8")
    return 0


def cmd_sweep_depth(args) -> int:
    cfg = resolve_config(args)
    bundle_path = resolve_dataset_path(cfg.dataset)
    load_bundle(bundle_path)  # fail fast before spawning workers
    out_dir = Path(cfg.out)
    _echo_config(cfg, out_dir)
    cells = [(str(bundle_path), cfg.as_kwargs(), d, s)
             for d in cfg.depths for s in cfg.seeds]
    outcomes = []
    if cfg.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
            outcomes = list(ex.map(_sweep_cell, cells))
    else:
        outcomes = [_sweep_cell(c) for c in cells]
    outcomes.sort(key=lambda item: (item[0], item[1]))  # deterministic merge

    results = [r for _, _, r, _ in outcomes]
    trainer.append_results(out_dir / "results.csv", results)
    rows = [{"block": cfg.block, "depth": d, "seed": s,
             "test": r.test_acc_at_best_val, "best_val": r.best_val_acc}
            for d, s, r, _ in outcomes]
    _write_sweep_table(out_dir / "sweep_table.csv", cfg, rows)
    report.save_depth_sweep_figure(rows, out_dir / "accuracy_vs_depth.png")
    profiles = {}
    with open(out_dir / "smoothing.csv", "w", encoding="utf-8") as f:
        f.write("depth,seed,layer,variance\n")
        for d, s, _, variances in outcomes:
            if d not in profiles:
                profiles[d] = variances
            for layer, v in enumerate(variances):
                f.write(f"{d},{s},{layer},{v!r}\n")
    report.save_smoothing_figure(profiles, out_dir / "smoothing_profiles.png")
    for d in cfg.depths:
        tests = [r.test_acc_at_best_val for dd, _, r, _ in outcomes if dd == d]
        print(f"depth {d}: test {np.mean(tests):.2f}% over {len(tests)} seeds")
    return 0


def _write_sweep_table(path, cfg: ExperimentConfig, rows) -> None:
    """One row per block, one column per depth: a results-table row group."""
    depths = sorted({int(r["depth"]) for r in rows})
    with open(path, "w", encoding="utf-8") as f:
        f.write("block," + ",".join(str(d) for d in depths) + "\n")
        means = []
        for d in depths:
            vals = [float(r["test"]) for r in rows if int(r["depth"]) == d]
            means.append(f"{np.mean(vals):.2f}")
        f.write(cfg.block + "," + ",".join(means) + "\n")


def cmd_verify(args) -> int:
    checks = oracle.run_verification(trials=args.trials, graphs=args.graphs)
    failed = 0
    lines = []
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        line = f"{status} {c.name}" + (f": {c.detail}" if c.detail else "")
        lines.append(line)
        print(line)
        failed += not c.passed
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 1 if failed else 0


def cmd_inspect_bundle(args) -> int:
    try:
        bundle = load_bundle(resolve_dataset_path(args.dataset))
    except Exception as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"name:     {bundle.name}")
    print(f"nodes:    {bundle.n}")
    print(f"edges:    {bundle.m}")
    print(f"features: {bundle.f_in}")
    print(f"classes:  {bundle.classes}")
    if bundle.masks is not None:
        print(f"masks:    train={int(bundle.masks.train_mask.sum())} "
              f"val={int(bundle.masks.val_mask.sum())} "
              f"test={int(bundle.masks.test_mask.sum())}")
    if bundle.name in BENCHMARK_STATS:
        print(f"matches published statistics for {bundle.name!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pdegnn",
        description="PDE-block graph network: training and verification")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--dataset", help="bundle directory or name under "
                                         "PDEGNN_DATA")
        p.add_argument("--block", choices=("gcn", "advection", "burgers",
                                           "diffusion", "wave", "mix_ad",
                                           "mix_aw"))
        p.add_argument("--depth", dest="depths", type=_int_list,
                       help="comma-separated depth list")
        p.add_argument("--seed", dest="seeds", type=_int_list,
                       help="comma-separated seed list")
        p.add_argument("--channels", type=int)
        p.add_argument("--dropout", type=float)
        p.add_argument("--h", type=float)
        p.add_argument("--lr", type=float)
        p.add_argument("--weight-decay", dest="weight_decay", type=float)
        p.add_argument("--split", choices=("semi", "full"))
        p.add_argument("--max-epochs", dest="max_epochs", type=int)
        p.add_argument("--patience", type=int)
        p.add_argument("--eval-every", dest="eval_every", type=int)
        p.add_argument("--jobs", type=int)
        p.add_argument("--out")
        p.add_argument("--f64", action="store_const", const=True,
                       default=None, help="train in float64")
        p.add_argument("--row-normalize", dest="row_normalize",
                       choices=("auto", "on", "off"))
        p.add_argument("--tie-weights", dest="tie_weights",
                       action="store_const", const=True, default=None)

    p_train = sub.add_parser("train", help="train at a single depth")
    common(p_train)
    p_train.set_defaults(fn=cmd_train)

    p_sweep = sub.add_parser("sweep-depth", help="train across a depth list")
    common(p_sweep)
    p_sweep.set_defaults(fn=cmd_sweep_depth)

    p_verify = sub.add_parser("verify", help="run the oracle suite")
    p_verify.add_argument("--trials", type=int, default=500)
    p_verify.add_argument("--graphs", type=int, default=200)
    p_verify.add_argument("--out", help="write the report here too")
    p_verify.set_defaults(fn=cmd_verify)

    p_inspect = sub.add_parser("inspect-bundle", help="show bundle statistics")
    p_inspect.add_argument("--dataset", required=True)
    p_inspect.set_defaults(fn=cmd_inspect_bundle)
    return parser


def _int_list(text: str) -> tuple:
    return tuple(int(x) for x in text.split(",") if x.strip())


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
