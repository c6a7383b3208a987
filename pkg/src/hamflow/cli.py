"""Command-line entry point.

Commands: gen, train, predict, infer, eval, repro, selftest.  Every command
reads a JSON config (where applicable), resolves defaults and flag overrides,
and writes the fully resolved configuration next to its outputs as
``resolved_config.json``.

Seed precedence: ``--seed`` flag, then the HAMFLOW_SEED environment variable,
then the config file, then the built-in default.

Exit codes: 0 success, 1 usage or config error, 2 acceptance failure,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ACCEPTANCE = 2
EXIT_NUMERICAL = 3

RESOLVED_CONFIG_FILE = "resolved_config.json"

_THREAD_VARS = ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS")


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here reserves 2 for
    acceptance failures, so remap usage problems to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _apply_thread_policy(args) -> None:
    """Pin BLAS/OpenMP pools before numpy loads; --deterministic forces one."""
    jobs = 1 if getattr(args, "deterministic", False) else getattr(args, "jobs", None)
    if jobs is not None:
        for var in _THREAD_VARS:
            os.environ[var] = str(jobs)


def _load_config(path) -> dict:
    from .config import load_json_config
    from .errors import ConfigError

    cfg = load_json_config(path)
    version = cfg.pop("schema_version", 1)
    if version != 1:
        raise ConfigError(f"unsupported schema_version {version!r} (this build reads version 1)")
    return cfg


def _resolve_seed(flag_seed, config_seed, default: int = 0) -> int:
    """Precedence: --seed flag, then HAMFLOW_SEED, then config, then default."""
    from .config import resolve_seed

    if flag_seed is not None:
        return int(flag_seed)
    return resolve_seed(config_seed, default)


def _write_resolved(out_dir, resolved: dict) -> None:
    from .config import canonical_json

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    resolved = {"schema_version": 1, **resolved}
    (out / RESOLVED_CONFIG_FILE).write_text(canonical_json(resolved) + "\n")


def cmd_gen(args) -> int:
    from dataclasses import asdict

    from .config import check_keys
    from .pipeline import dataset_preset, generate_dataset

    cfg = _load_config(args.config)
    check_keys(
        cfg,
        required={"kind": str, "n_train": int, "n_val": int, "n_test": int},
        optional={
            "seed": (int, None),
            "n_qubits": (int, None),
            "dt": ((int, float), None),
            "train_horizon": ((int, float), None),
            "full_horizon": ((int, float), None),
            "field_family": (str, None),
            "observables": (str, None),
            "init_policy": (str, None),
            "gamma": ((int, float), None),
            "noise": (bool, None),
            "field_scale": ((int, float), None),
            "time_scale": ((int, float), None),
        },
        where="gen config",
    )
    seed = _resolve_seed(args.seed, cfg.get("seed"))
    overrides = {k: v for k, v in cfg.items() if k not in ("kind", "n_train", "n_val", "n_test", "seed")}
    config = dataset_preset(cfg["kind"], cfg["n_train"], cfg["n_val"], cfg["n_test"], seed=seed, **overrides)
    manifest = generate_dataset(config, args.out)
    _write_resolved(args.out, {"command": "gen", **asdict(config)})
    print(f"dataset: {manifest['n_records']} records, hash {manifest['content_hash']}")
    return EXIT_OK


def cmd_train(args) -> int:
    from dataclasses import asdict

    from .config import check_keys
    from .errors import ConfigError
    from .pipeline import TrainingConfig, load_dataset, train

    cfg = _load_config(args.config)
    check_keys(
        cfg,
        required={"dataset": str},
        optional={
            "direction": (str, None),
            "seed": (int, None),
            "hidden_size": (int, None),
            "n_layers": (int, None),
            "encoder_layers": (int, None),
            "epochs": (int, None),
            "batch_size": (int, None),
            "lr": ((int, float), None),
            "expect_manifest_hash": (str, None),
        },
        where="train config",
    )
    direction = args.direction or cfg.get("direction")
    if direction is None:
        raise ConfigError("direction is required (--direction or config 'direction')")
    seed = _resolve_seed(args.seed, cfg.get("seed"))
    manifest, records = load_dataset(cfg["dataset"])
    expected = cfg.get("expect_manifest_hash")
    if expected is not None and expected != manifest["content_hash"]:
        raise ConfigError(
            f"dataset hash {manifest['content_hash'][:12]}... does not match expected {str(expected)[:12]}..."
        )
    tc_kwargs = {
        k: cfg[k]
        for k in ("hidden_size", "n_layers", "encoder_layers", "epochs", "batch_size", "lr")
        if k in cfg
    }
    train_config = TrainingConfig(direction=direction, seed=seed, **tc_kwargs)
    model, history = train(manifest, records, train_config, out_dir=args.out, resume=args.resume)
    _write_resolved(
        args.out,
        {
            "command": "train",
            "dataset": str(cfg["dataset"]),
            "manifest_hash": manifest["content_hash"],
            **asdict(train_config),
        },
    )
    best = min(h["val_loss"] for h in history)
    print(f"trained {direction}: {len(history)} epochs, best val MSE {best:.6g}")
    return EXIT_OK


def _read_drive_csv(path, drive_names) -> tuple:
    """CSV with header t,<drive...>; returns (times, {name: values})."""
    import numpy as np

    from .errors import ConfigError

    p = Path(path)
    if not p.exists():
        raise ConfigError(f"drive CSV not found: {p}")
    with open(p) as fh:
        header = fh.readline().strip().split(",")
    if header[0] != "t":
        raise ConfigError("drive CSV must start with a 't' column")
    data = np.loadtxt(p, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != len(header):
        raise ConfigError("drive CSV rows do not match the header")
    found = tuple(header[1:])
    if set(found) != set(drive_names):
        raise ConfigError(f"drive CSV columns {found} do not match the model drives {tuple(drive_names)}")
    cols = {name: data[:, header.index(name)] for name in drive_names}
    return data[:, 0], cols


def cmd_predict(args) -> int:
    from .config import check_keys
    from .pipeline import load_trained, predict_dynamics

    cfg = _load_config(args.config)
    check_keys(
        cfg,
        required={"checkpoint": str, "field_csv": str, "init_bloch": list},
        optional={},
        where="predict config",
    )
    model = load_trained(cfg["checkpoint"])
    times, fields = _read_drive_csv(cfg["field_csv"], model.meta["drive_names"])
    series, _ = predict_dynamics(model, fields, times, cfg["init_bloch"])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    series.to_csv(out / "observables.csv")
    _write_resolved(out, {"command": "predict", **cfg})
    print(f"wrote {out / 'observables.csv'} ({series.values.shape[0]} rows)")
    return EXIT_OK


def cmd_infer(args) -> int:
    import csv as csv_mod

    from .config import check_keys
    from .dynamics import ObservableSeries
    from .pipeline import infer_detunings, infer_field, load_trained

    cfg = _load_config(args.config)
    check_keys(
        cfg,
        required={"checkpoint": str, "observables_csv": str, "init_bloch": list},
        optional={},
        where="infer config",
    )
    model = load_trained(cfg["checkpoint"])
    series = ObservableSeries.from_csv(cfg["observables_csv"])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if len(model.meta["drive_names"]) == 2:
        d1, d2 = infer_detunings(model, series, cfg["init_bloch"])
        path = out / "detunings.csv"
        with open(path, "w", newline="") as fh:
            writer = csv_mod.writer(fh)
            writer.writerow(["t", "delta1", "delta2"])
            for t, a, b in zip(d1.times, d1.values, d2.values):
                writer.writerow([f"{t:.17g}", f"{a:.17g}", f"{b:.17g}"])
    else:
        field = infer_field(model, series, cfg["init_bloch"])
        path = out / "field.csv"
        field.to_csv(path)
    _write_resolved(out, {"command": "infer", **cfg})
    print(f"wrote {path} ({series.values.shape[0]} rows)")
    return EXIT_OK


def cmd_eval(args) -> int:
    from .config import check_keys
    from .pipeline import evaluate, load_dataset, load_trained

    cfg = _load_config(args.config)
    check_keys(
        cfg,
        required={"checkpoint": str, "dataset": str},
        optional={"split": (str, "test")},
        where="eval config",
    )
    model = load_trained(cfg["checkpoint"])
    manifest, records = load_dataset(cfg["dataset"])
    split = cfg.get("split", "test")
    report = evaluate(model, manifest, records, split=split, allow_train_split=args.allow_train_split)
    report.write(args.out)
    _write_resolved(args.out, {"command": "eval", "split": split, **cfg})
    extrap = "n/a" if report.extrapolation_mse is None else f"{report.extrapolation_mse:.6g}"
    print(
        f"eval {report.direction} on {split}: window MSE {report.train_window_mse:.6g}, "
        f"extrapolation MSE {extrap} ({report.n_instances} instances)"
    )
    return EXIT_OK


def cmd_repro(args) -> int:
    from .pipeline.reproduce import DEFAULT_SEED, REPRO_FUNCTIONS

    seed = _resolve_seed(args.seed, None, default=DEFAULT_SEED)
    summary = REPRO_FUNCTIONS[args.figure](args.out, seed=seed)
    _write_resolved(
        args.out,
        {
            "command": "repro",
            "figure": args.figure,
            "seed": summary["seed"],
            "deterministic": bool(args.deterministic),
        },
    )
    for check in summary["checks"]:
        status = "PASS" if check["pass"] else "FAIL"
        print(f"{status}  {check['name']}: {check['value']:.6g} {check['op']} {check['threshold']:.6g}")
    if not summary["pass"]:
        failing = ", ".join(c["name"] for c in summary["checks"] if not c["pass"])
        print(f"acceptance failure: {failing}", file=sys.stderr)
        return EXIT_ACCEPTANCE
    print(f"{args.figure}: all checks passed")
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .config import canonical_json
    from .pipeline.selftest import run_selftest

    results = run_selftest(verbose=True)
    if args.out:
        payload = [
            {"name": r.name, "value": r.value, "threshold": r.threshold, "pass": r.passed}
            for r in results
        ]
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "selftest_results.json").write_text(canonical_json(payload) + "\n")
        _write_resolved(out, {"command": "selftest"})
    failing = [r.name for r in results if not r.passed]
    if failing:
        print(f"acceptance failure: {', '.join(failing)}", file=sys.stderr)
        return EXIT_ACCEPTANCE
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="hamflow", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_common(p, config=True, seed=True):
        if config:
            p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", required=True, help="output directory (created if missing)")
        if seed:
            p.add_argument("--seed", type=int, default=None, help="root seed (overrides HAMFLOW_SEED and config)")

    p_gen = sub.add_parser("gen", help="generate a dataset")
    add_common(p_gen)
    p_gen.set_defaults(fn=cmd_gen)

    p_train = sub.add_parser("train", help="train one direction on a dataset")
    add_common(p_train)
    p_train.add_argument("--direction", choices=("dynamics", "hamiltonian"), default=None)
    p_train.add_argument("--resume", action="store_true", help="continue from last.npz in --out")
    p_train.add_argument("--deterministic", action="store_true", help="single-threaded numerics")
    p_train.add_argument("--jobs", type=int, default=None, help="BLAS thread budget")
    p_train.set_defaults(fn=cmd_train)

    p_pred = sub.add_parser("predict", help="predict observables from a drive CSV")
    add_common(p_pred, seed=False)
    p_pred.set_defaults(fn=cmd_predict)

    p_inf = sub.add_parser("infer", help="infer drives from an observables CSV")
    add_common(p_inf, seed=False)
    p_inf.set_defaults(fn=cmd_infer)

    p_eval = sub.add_parser("eval", help="score a checkpoint on a dataset split")
    add_common(p_eval, seed=False)
    p_eval.add_argument("--allow-train-split", action="store_true", help="permit scoring on the train split")
    p_eval.set_defaults(fn=cmd_eval)

    p_repro = sub.add_parser("repro", help="reproduce a figure bundle at desk scale")
    p_repro.add_argument("figure", choices=("fig3", "fig4ab", "fig4cde", "figS4"))
    p_repro.add_argument("--out", required=True)
    p_repro.add_argument("--seed", type=int, default=None)
    p_repro.add_argument("--deterministic", action="store_true", help="single-threaded numerics")
    p_repro.add_argument("--jobs", type=int, default=None, help="BLAS thread budget")
    p_repro.set_defaults(fn=cmd_repro)

    p_self = sub.add_parser("selftest", help="run the physics and gradient oracle suite")
    p_self.add_argument("--out", default=None, help="optional directory for a JSON result dump")
    p_self.set_defaults(fn=cmd_selftest)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _apply_thread_policy(args)
    from .errors import ConfigError, DomainError, NumericalError

    try:
        return args.fn(args)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
