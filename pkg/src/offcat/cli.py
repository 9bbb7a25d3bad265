"""Command-line entry point.

Subcommands: split, augment, train, grid, eval, predict, report.
Exit codes: 0 success, 1 config error, 2 data error, 3 run failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .corpus import SplitSpec, Task
from .errors import ConfigError, DataError
from .presets import get_preset
from .runner import (
    augment_to_file,
    evaluate_artifact,
    load_config_file,
    parse_experiment,
    predict_file,
    run_experiment,
    run_grid,
    split_to_files,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="offcat",
        description="Offensive-tweet categorization experiments: resampling, "
        "augmentation, classical classifiers, ensembles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    split = sub.add_parser("split", help="write stratified train/dev TSVs")
    split.add_argument("--data", required=True)
    split.add_argument("--task", required=True, choices=["B", "C"])
    split.add_argument("--out", required=True)
    split.add_argument("--seed", type=int, default=0)
    split.add_argument("--train-fraction", type=float, default=0.8)
    split.add_argument("--no-stratify", action="store_true")

    augment = sub.add_parser("augment", help="write the enhanced training split as TSV")
    _add_config_args(augment)
    augment.add_argument("--out", required=True)

    train = sub.add_parser("train", help="run one experiment (train, evaluate dev, save artifacts)")
    _add_config_args(train)
    train.add_argument("--out")
    train.add_argument("--test", help="labeled TSV scored after training (never used for fitting)")

    grid = sub.add_parser("grid", help="run the config's [grid] cross product")
    grid.add_argument("--config", required=True)
    grid.add_argument("--out", required=True)
    grid.add_argument("--seed", type=int)
    grid.add_argument("--jobs", type=int, default=1)

    ev = sub.add_parser("eval", help="score a saved model on a labeled TSV")
    ev.add_argument("--model", required=True, help="artifact directory")
    ev.add_argument("--data", required=True)
    ev.add_argument("--out", required=True)

    predict = sub.add_parser("predict", help="label a TSV of tweets with a saved model")
    predict.add_argument("--model", required=True, help="artifact directory")
    predict.add_argument("--input", required=True)
    predict.add_argument("--out", required=True)

    report = sub.add_parser("report", help="print the report of a finished run directory")
    report.add_argument("--run", required=True)
    return parser


def _add_config_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="TOML experiment config")
    sub.add_argument("--preset", help="named preset (see README); requires --data")
    sub.add_argument("--data", help="OLID-format TSV (overrides the config's path)")
    sub.add_argument("--seed", type=int)


def _load_experiment_dict(args) -> dict:
    if args.config and args.preset:
        raise ConfigError("give either --config or --preset, not both")
    if args.config:
        raw = load_config_file(args.config)
    elif args.preset:
        raw = get_preset(args.preset)
    else:
        raise ConfigError("need --config or --preset")
    if args.data:
        raw["data"] = args.data
    if args.seed is not None:
        raw["seed"] = args.seed
    return raw


def _cmd_split(args) -> int:
    spec = SplitSpec(
        train_fraction=args.train_fraction, seed=args.seed, stratified=not args.no_stratify
    )
    train_path, dev_path = split_to_files(args.data, Task(args.task), spec, args.out)
    print(f"wrote {train_path} and {dev_path}")
    return 0


def _cmd_augment(args) -> int:
    config = parse_experiment(_load_experiment_dict(args))
    path = augment_to_file(config, args.out)
    print(f"wrote {path}")
    return 0


def _cmd_train(args) -> int:
    config = parse_experiment(_load_experiment_dict(args))
    result = run_experiment(config, out_dir=args.out, test_path=args.test)
    print(f"{result.name} [{result.fingerprint}]")
    print(f"dev macro-F1: {result.macro_f1:.5f}  ({result.wall_time:.1f}s)")
    print(f"artifacts in {result.out_dir}")
    return 0


def _cmd_grid(args) -> int:
    raw = load_config_file(args.config)
    if args.seed is not None:
        raw["seed"] = args.seed
    rows = run_grid(raw, args.out, jobs=args.jobs)
    done = sum(1 for r in rows if r["status"] == "ok")
    reused = sum(1 for r in rows if r.get("reused"))
    print(f"{done}/{len(rows)} runs ok ({reused} reused); table in {Path(args.out) / 'grid.csv'}")
    for row in rows[:5]:
        macro = f"{row['macro_f1']:.5f}" if row["macro_f1"] is not None else "-"
        print(f"  {macro}  {row['name']}")
    return 0


def _cmd_eval(args) -> int:
    rep = evaluate_artifact(args.model, args.data, args.out)
    print(f"macro-F1: {rep.macro_f1:.5f}  (details in {args.out})")
    return 0


def _cmd_predict(args) -> int:
    out = Path(args.out)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    n = predict_file(args.model, args.input, out)
    print(f"wrote {n} predictions to {out}")
    return 0


def _cmd_report(args) -> int:
    run_dir = Path(args.run)
    result_file = run_dir / "result.json"
    report_file = run_dir / "report.txt"
    if not result_file.exists():
        raise DataError(f"no result.json under {run_dir}")
    result = json.loads(result_file.read_text(encoding="utf-8"))
    print(f"{result['name']} [{result['fingerprint']}]  macro-F1 {result['macro_f1']:.5f}")
    if report_file.exists():
        print(report_file.read_text(encoding="utf-8"), end="")
    return 0


_COMMANDS = {
    "split": _cmd_split,
    "augment": _cmd_augment,
    "train": _cmd_train,
    "grid": _cmd_grid,
    "eval": _cmd_eval,
    "predict": _cmd_predict,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # run failure
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
