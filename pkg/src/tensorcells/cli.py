"""Command-line interface: train, gridsearch, eval, params, plotdata.

Configuration lives in a JSON file (see README for the schema); every
relevant flag overrides the corresponding config key, and the output
directory resolves flag > TENSORCELLS_OUT env var > config > cwd.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .data import load_dataset
from .errors import ConfigError, DataError, TrainingError
from .metrics import emit_table, evaluate
from .model import ModelSpec, SequenceModel, build_model, load_model, save_model
from .training import TrainConfig, grid_search, train_model

__all__ = ["main", "RunConfig", "load_config"]


@dataclass(frozen=True)
class RunConfig:
    """One experiment: architecture, data, optimization protocol."""

    model_kind: str = "dense"
    input_size: int = 256
    hidden_size: int = 512
    m_dims: tuple = (8, 4, 4, 4)
    n_dims_input: tuple = (4, 4, 4, 4)
    n_dims_hidden: tuple = (8, 4, 4, 4)
    ranks: tuple = ()
    leaky_slope: float = 0.01
    dropout_placement: str = "input"
    dataset: str = ""
    out_dir: str = ""
    seed: int = 0
    train: TrainConfig = field(default_factory=TrainConfig)

    def model_spec(self) -> ModelSpec:
        return ModelSpec(
            model_kind=self.model_kind,
            input_size=self.input_size,
            hidden_size=self.hidden_size,
            m_dims=tuple(self.m_dims),
            n_dims_input=tuple(self.n_dims_input),
            n_dims_hidden=tuple(self.n_dims_hidden),
            ranks=tuple(self.ranks),
            leaky_slope=self.leaky_slope,
            dropout_placement=self.dropout_placement,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("m_dims", "n_dims_input", "n_dims_hidden", "ranks"):
            d[key] = list(d[key])
        d["train"]["learning_rates"] = list(d["train"]["learning_rates"])
        d["train"]["dropouts"] = list(d["train"]["dropouts"])
        return d


def config_from_dict(raw: dict) -> RunConfig:
    known = {f for f in RunConfig.__dataclass_fields__}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs = dict(raw)
    for key in ("m_dims", "n_dims_input", "n_dims_hidden", "ranks"):
        if key in kwargs:
            kwargs[key] = tuple(kwargs[key])
    if "train" in kwargs:
        t = dict(kwargs["train"])
        t_unknown = set(t) - {f for f in TrainConfig.__dataclass_fields__}
        if t_unknown:
            raise ConfigError(f"unknown train config keys: {sorted(t_unknown)}")
        for key in ("learning_rates", "dropouts"):
            if key in t:
                t[key] = tuple(t[key])
        kwargs["train"] = TrainConfig(**t)
    try:
        return RunConfig(**kwargs)
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from e


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from e
    return config_from_dict(raw)


def _parse_ranks(text: str) -> tuple:
    try:
        return tuple(int(v) for v in text.replace("(", "").replace(")", "").split(",") if v.strip())
    except ValueError as e:
        raise ConfigError(f"cannot parse ranks {text!r}: {e}") from e


def _apply_overrides(config: RunConfig, args) -> RunConfig:
    updates = {}
    if args.dataset is not None:
        updates["dataset"] = args.dataset
    if args.model_kind is not None:
        updates["model_kind"] = args.model_kind
    if args.ranks is not None:
        updates["ranks"] = _parse_ranks(args.ranks)
    if args.seed is not None:
        updates["seed"] = args.seed
        updates["train"] = replace(config.train, seed=args.seed)
    out = args.out or os.environ.get("TENSORCELLS_OUT") or config.out_dir
    if out:
        updates["out_dir"] = out
    if updates:
        config = replace(config, **updates)
    if config.seed != config.train.seed:
        config = replace(config, train=replace(config.train, seed=config.seed))
    return config


def _out_dir(config: RunConfig) -> Path:
    out = Path(config.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _rank_config_str(config: RunConfig) -> str:
    return "-" if config.model_kind == "dense" else ",".join(str(r) for r in config.ranks)


def _audit_rows(model: SequenceModel):
    rows = []
    for name, op in [("proj", model.proj)] + [
        (f"cell.{n}", o) for n, o in model.cell.operators()
    ] + [("readout", model.readout)]:
        rows.append(
            {
                "operator": name,
                "kind": op.kind,
                "rows": op.rows,
                "cols": op.cols,
                "params": op.param_count(include_bias=False),
                "params_with_bias": op.param_count(include_bias=True),
            }
        )
    return rows


def _dense_cell_params(n: int, m: int) -> int:
    return 3 * (m * n + m * m + m)


def _write_report(path: Path, report: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _config_echo(config: RunConfig) -> dict:
    # reports are byte-compared across runs under fixed seeds, so
    # filesystem locations stay out of them
    echo = config.to_dict()
    echo.pop("out_dir")
    echo.pop("dataset")
    return echo


def _search_rows(config: RunConfig, model: SequenceModel, results, winner, test_nll, test_acc):
    rows = []
    cell_params = model.cell.param_count(include_biases=True)
    for r in results:
        is_winner = winner is not None and r is winner
        rows.append(
            {
                "model_kind": config.model_kind,
                "rank_config": _rank_config_str(config),
                "param_count": cell_params,
                "lr": r.lr,
                "dropout": r.dropout,
                "train_nll": r.train_nll,
                "valid_nll": r.valid_nll,
                "test_nll": test_nll if is_winner else "",
                "test_acc": test_acc if is_winner else "",
                "epochs": r.epochs,
                "wall_time_s": round(r.wall_time_s, 3),
            }
        )
    return rows


def cmd_train(args) -> int:
    config = _apply_overrides(load_config(args.config) if args.config else RunConfig(), args)
    if not config.dataset:
        raise ConfigError("no dataset given (config key 'dataset' or --dataset)")
    dataset = load_dataset(config.dataset)
    spec = config.model_spec()
    lr = args.lr if args.lr is not None else config.train.learning_rates[0]
    dropout = args.dropout if args.dropout is not None else config.train.dropouts[0]
    train_cfg = config.train
    if args.epochs is not None:
        train_cfg = replace(train_cfg, max_epochs=args.epochs)

    model = build_model(spec, config.seed)
    log = None if args.quiet else lambda msg: print(msg, flush=True)
    result = train_model(
        model, dataset.split("train"), dataset.split("valid"), train_cfg, lr, dropout, log=log
    )
    if result.diverged:
        raise TrainingError("training diverged (non-finite loss)")
    test_nll, test_acc = evaluate(model, dataset.split("test"), train_cfg.batch_size)

    out = _out_dir(config)
    save_model(model, out / "model.json")
    report = {
        "dataset": dataset.name,
        "config": _config_echo(config),
        "cells": [
            {
                "lr": result.lr,
                "dropout": result.dropout,
                "train_nll": result.train_nll,
                "valid_nll": result.valid_nll,
                "epochs": result.epochs,
                "diverged": result.diverged,
            }
        ],
        "best": {"lr": result.lr, "dropout": result.dropout},
        "history": result.history,
        "param_counts": model.param_counts(),
        "cell_param_count": model.cell.param_count(include_biases=True),
        "rank_config": _rank_config_str(config),
        "model_kind": config.model_kind,
        "test_nll": test_nll,
        "test_acc": test_acc,
    }
    _write_report(out / "report.json", report)
    rows = _search_rows(config, model, [result], result, test_nll, test_acc)
    emit_table(rows, csv_path=out / "search.csv", json_path=out / "search.json")
    print(f"final train NLL {result.train_nll:.4f}  valid NLL {result.valid_nll:.4f}")
    print(f"test NLL {test_nll:.4f}  test ACC {test_acc:.4f}")
    print(f"artifacts in {out}")
    return 0


def cmd_gridsearch(args) -> int:
    config = _apply_overrides(load_config(args.config) if args.config else RunConfig(), args)
    if not config.dataset:
        raise ConfigError("no dataset given (config key 'dataset' or --dataset)")
    dataset = load_dataset(config.dataset)
    spec = config.model_spec()
    log = None if args.quiet else lambda msg: print(msg, flush=True)

    best_model, results = grid_search(
        lambda seed: build_model(spec, seed),
        dataset.split("train"),
        dataset.split("valid"),
        config.train,
        log=log,
    )
    winner = min(
        (r for r in results if not r.diverged and np.isfinite(r.valid_nll)),
        key=lambda r: r.valid_nll,
    )
    test_nll, test_acc = evaluate(best_model, dataset.split("test"), config.train.batch_size)

    out = _out_dir(config)
    save_model(best_model, out / "model.json")
    report = {
        "dataset": dataset.name,
        "config": _config_echo(config),
        "cells": [
            {
                "lr": r.lr,
                "dropout": r.dropout,
                "train_nll": r.train_nll,
                "valid_nll": r.valid_nll,
                "epochs": r.epochs,
                "diverged": r.diverged,
            }
            for r in results
        ],
        "best": {"lr": winner.lr, "dropout": winner.dropout},
        "param_counts": best_model.param_counts(),
        "cell_param_count": best_model.cell.param_count(include_biases=True),
        "rank_config": _rank_config_str(config),
        "model_kind": config.model_kind,
        "test_nll": test_nll,
        "test_acc": test_acc,
    }
    _write_report(out / "report.json", report)
    rows = _search_rows(config, best_model, results, winner, test_nll, test_acc)
    emit_table(rows, csv_path=out / "search.csv", json_path=out / "search.json")
    print(f"best cell: lr={winner.lr} dropout={winner.dropout} valid NLL {winner.valid_nll:.4f}")
    print(f"test NLL {test_nll:.4f}  test ACC {test_acc:.4f}")
    print(f"artifacts in {out}")
    return 0


def cmd_eval(args) -> int:
    model = load_model(args.model)
    dataset = load_dataset(args.dataset)
    nll, acc = evaluate(model, dataset.split(args.split), args.batch_size)
    print(f"{args.split} NLL {nll:.4f}  ACC {acc:.4f}")
    report = {
        "dataset": dataset.name,
        "split": args.split,
        "model": str(args.model),
        "nll": nll,
        "acc": acc,
    }
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_report(out / f"eval_{args.split}.json", report)
    else:
        print(json.dumps(report, sort_keys=True))
    return 0


def cmd_params(args) -> int:
    config = _apply_overrides(load_config(args.config) if args.config else RunConfig(), args)
    spec = config.model_spec()
    model = build_model(spec, config.seed)
    rows = _audit_rows(model)
    print(f"model_kind: {config.model_kind}   rank_config: {_rank_config_str(config)}")
    print(f"{'operator':<14}{'kind':<8}{'shape':<12}{'params':>10}{'with bias':>12}")
    for r in rows:
        shape = f"{r['rows']}x{r['cols']}"
        print(f"{r['operator']:<14}{r['kind']:<8}{shape:<12}{r['params']:>10}{r['params_with_bias']:>12}")
    cell_no_bias = model.cell.param_count(include_biases=False)
    cell_total = model.cell.param_count(include_biases=True)
    counts = model.param_counts()
    full_total = sum(counts.values())
    dense_cell = _dense_cell_params(config.input_size, config.hidden_size)
    print(f"recurrent cell params (no biases):   {cell_no_bias}")
    print(f"recurrent cell total (with biases):  {cell_total}")
    print(f"full model total (proj + cell + readout): {full_total}")
    print(f"dense cell reference: {dense_cell}   compression ratio: {dense_cell / cell_total:.2f}x")
    return 0


def cmd_plotdata(args) -> int:
    report_dir = Path(args.reports)
    reports = sorted(report_dir.rglob("report.json"))
    if not reports:
        raise DataError(f"no report.json files under {report_dir}")
    by_dataset: dict[str, list] = {}
    for path in reports:
        with open(path, encoding="utf-8") as fh:
            rep = json.load(fh)
        by_dataset.setdefault(rep.get("dataset", "unknown"), []).append(rep)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    for dataset, reps in sorted(by_dataset.items()):
        rows = sorted(
            (
                (r.get("model_kind", "?"), int(r.get("cell_param_count", 0)), r.get("test_nll"))
                for r in reps
            ),
            key=lambda row: (row[0], row[1]),
        )
        path = out / f"plot_{dataset}.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("model,param_count,test_nll\n")
            for kind, params, nll in rows:
                fh.write(f"{kind},{params},{nll}\n")
        print(f"wrote {path} ({len(rows)} rows)")
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="tensorcells", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--dataset", help="dataset JSON path (overrides config)")
        p.add_argument("--model-kind", choices=("dense", "cp", "tucker", "tt"))
        p.add_argument("--ranks", help="comma-separated rank configuration")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory (overrides TENSORCELLS_OUT and config)")

    p_train = sub.add_parser("train", help="train a single (lr, dropout) cell")
    common(p_train)
    p_train.add_argument("--lr", type=float, help="learning rate (default: first grid entry)")
    p_train.add_argument("--dropout", type=float, help="dropout (default: first grid entry)")
    p_train.add_argument("--epochs", type=int, help="override max epochs")
    p_train.add_argument("--quiet", action="store_true")
    p_train.set_defaults(func=cmd_train)

    p_grid = sub.add_parser("gridsearch", help="full learning-rate x dropout grid search")
    common(p_grid)
    p_grid.add_argument("--quiet", action="store_true")
    p_grid.set_defaults(func=cmd_gridsearch)

    p_eval = sub.add_parser("eval", help="evaluate a saved model on a dataset split")
    p_eval.add_argument("--model", required=True, help="model.json path")
    p_eval.add_argument("--dataset", required=True)
    p_eval.add_argument("--split", required=True, choices=("train", "valid", "test"))
    p_eval.add_argument("--batch-size", type=int, default=16)
    p_eval.add_argument("--out", help="directory for the JSON report")
    p_eval.set_defaults(func=cmd_eval)

    p_params = sub.add_parser("params", help="parameter-count audit for a configuration")
    common(p_params)
    p_params.set_defaults(func=cmd_params)

    p_plot = sub.add_parser("plotdata", help="collect (model, param_count, test NLL) CSVs")
    p_plot.add_argument("--reports", required=True, help="directory containing report.json files")
    p_plot.add_argument("--out", help="output directory")
    p_plot.set_defaults(func=cmd_plotdata)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 2
    except (TrainingError, FloatingPointError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
