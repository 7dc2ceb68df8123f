"""Command-line interface: ``locopath {importance,test,screen,simulate}``."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .inference import BootstrapConfig, bootstrap_test, importance_intervals, single_coefficient_test
from .metric import NormSpec, normalized_importance
from .path import Dataset, Hypothesis
from .screening import Threshold, TopK, screen
from .sim import COVARIANCES, SimDesign, experiment_power, experiment_screening, experiment_size

COMMANDS = ("importance", "test", "screen", "simulate")
EXIT_OK, EXIT_DATA, EXIT_USAGE = 0, 1, 2


class DataError(Exception):
    """Problem with the input data or a numerical failure (exit code 1)."""


@dataclass
class RunConfig:
    command: str
    input: str | None = None
    response: str | None = None
    spec: NormSpec = field(default_factory=NormSpec)
    null: tuple[tuple[str, float], ...] = ()
    B: int = 500
    alpha: float = 0.05
    seed: int = 0
    folds: int = 10
    initial: str = "adaptive"
    cv_rule: str = "1se"
    center_residuals: bool = True
    topk: int | None = None
    eps: float | None = None
    intervals: bool = False
    M: int = 100
    level: float = 0.95
    pvalues: bool = False
    top: int | None = None
    center: bool = False
    standardize: bool = False
    output: str | None = None
    format: str = "json"
    jobs: int = 1
    # simulate
    experiment: str = "size"
    n: int = 100
    p: int = 80
    beta: tuple[tuple[str, float], ...] = ()
    sigma: float = 1.0
    cov: str = "identity"
    rho: float = 0.0
    reps: int = 200
    grid: tuple[float, ...] = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
    coef: int = 1
    records: str | None = None


def parse_assignments(text: str) -> tuple[tuple[str, float], ...]:
    """Parse ``"1=1,11=0,12=0"`` into ``(("1", 1.0), ("11", 0.0), ("12", 0.0))``.

    Keys are 1-based column positions or column names.
    """
    pairs = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        key, sep, value = chunk.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ValueError(f"expected index=value, got {chunk!r}")
        try:
            v = float(value)
        except ValueError:
            raise ValueError(f"value {value.strip()!r} in {chunk!r} is not a number") from None
        if not math.isfinite(v):
            raise ValueError(f"value in {chunk!r} must be finite")
        if key.isdigit() and int(key) < 1:
            raise ValueError(f"column positions are 1-based, got {key}")
        pairs.append((key, v))
    if not pairs:
        raise ValueError("empty assignment list")
    keys = [k for k, _ in pairs]
    if len(set(keys)) != len(keys):
        raise ValueError(f"duplicate keys in {text!r}")
    return tuple(pairs)


def resolve_hypothesis(pairs, names: Sequence[str]) -> Hypothesis:
    index = {name: j for j, name in enumerate(names)}
    cols = []
    for key, _ in pairs:
        if key in index:
            cols.append(index[key])
        elif key.isdigit() and 1 <= int(key) <= len(names):
            cols.append(int(key) - 1)
        else:
            raise DataError(f"unknown column {key!r} in hypothesis")
    return Hypothesis(tuple(cols), tuple(v for _, v in pairs))


def _exponent_arg(text: str) -> float:
    try:
        return NormSpec(text, 1).s
    except ValueError as err:
        raise argparse.ArgumentTypeError(str(err)) from None


def _grid_arg(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from None


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--s", type=_exponent_arg, default=1.0, help="inner exponent: 1, 2 or inf")
    common.add_argument("--t", type=_exponent_arg, default=1.0, help="outer exponent: 1, 2 or inf")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--output", "-o", help="write here instead of stdout")
    common.add_argument("--jobs", type=_positive_int, default=1, help="worker threads")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("input", help="CSV file with a header row")
    data.add_argument("--response", required=True, help="name of the response column")
    data.add_argument("--center", action="store_true", help="center X columns and y")
    data.add_argument("--standardize", action="store_true", help="scale X columns to unit sd")

    boot = argparse.ArgumentParser(add_help=False)
    boot.add_argument("--B", type=_positive_int, default=500, help="bootstrap replicates")
    boot.add_argument("--alpha", type=float, default=0.05)
    boot.add_argument("--folds", type=int, default=10)
    boot.add_argument("--initial", choices=("adaptive", "ols"), default="adaptive")
    boot.add_argument("--cv-rule", dest="cv_rule", choices=("min", "1se"), default="1se", help="CV rule for the initial fit")
    boot.add_argument("--no-center-residuals", dest="center_residuals", action="store_false")

    parser = argparse.ArgumentParser(prog="locopath", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("importance", parents=[common, data, boot], help="LOCO variable importance")
    p.add_argument("--intervals", action="store_true", help="add permutation intervals")
    p.add_argument("--M", type=int, default=100, help="permutations per covariate")
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--pvalues", action="store_true", help="bootstrap p-value for each reported row")
    p.add_argument("--top", type=_positive_int, help="report only the K most important covariates")

    p = sub.add_parser("test", parents=[common, data, boot], help="bootstrap test of a linear null")
    p.add_argument("--null", required=True, help='e.g. "1=0" or "1=1,11=0,12=0" (1-based or names)')

    p = sub.add_parser("screen", parents=[common, data], help="LOCO path screening")
    rule = p.add_mutually_exclusive_group()
    rule.add_argument("--topk", type=_positive_int)
    rule.add_argument("--eps", type=float)

    p = sub.add_parser("simulate", parents=[common, boot], help="Monte-Carlo size/power/screening")
    p.add_argument("--experiment", choices=("size", "power", "screening"), default="size")
    p.add_argument("--n", type=_positive_int, default=100)
    p.add_argument("--p", type=_positive_int, default=80)
    p.add_argument("--beta", default="2=1,3=1", help="nonzero coefficients, 1-based")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--cov", choices=COVARIANCES, default="identity")
    p.add_argument("--rho", type=float, default=0.0)
    p.add_argument("--reps", type=_positive_int, default=200)
    p.add_argument("--null", default="1=0", help="hypothesis for size/power cells")
    p.add_argument("--grid", type=_grid_arg, default=(0.0, 0.2, 0.4, 0.6, 0.8, 1.0))
    p.add_argument("--coef", type=_positive_int, default=1, help="coefficient varied by the power grid")
    p.add_argument("--topk", type=_positive_int, help="screening: keep K (default n-1)")
    p.add_argument("--eps", type=float, help="screening: keep statistics above eps")
    p.add_argument("--records", help="write per-replicate records (CSV or .json)")
    p.set_defaults(B=200)
    return parser


def parse_args(argv: Sequence[str] | None = None) -> RunConfig:
    parser = build_parser()
    ns = parser.parse_args(argv)
    values = vars(ns)
    cfg = RunConfig(command=ns.command)
    for key, value in values.items():
        if key in ("s", "t", "null", "beta"):
            continue
        if hasattr(cfg, key):
            setattr(cfg, key, value)
    cfg.spec = NormSpec(ns.s, ns.t)
    try:
        if getattr(ns, "null", None):
            cfg.null = parse_assignments(ns.null)
        if ns.command == "simulate":
            cfg.beta = parse_assignments(ns.beta) if ns.beta.strip() else ()
            for key, _ in cfg.beta + cfg.null:
                if not key.isdigit():
                    raise ValueError(f"simulation columns are 1-based positions, got {key!r}")
    except ValueError as err:
        parser.error(str(err))
    if not 0 < cfg.alpha < 1:
        parser.error("--alpha must lie in (0, 1)")
    if ns.command == "importance" and (cfg.M < 2 or not 0 < cfg.level < 1):
        parser.error("--M must be at least 2 and --level in (0, 1)")
    if getattr(ns, "eps", None) is not None and ns.eps < 0:
        parser.error("--eps must be nonnegative")
    if ns.command == "simulate" and not 0 <= cfg.rho < 1:
        parser.error("--rho must lie in [0, 1)")
    return cfg


def _parse_float(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError(text)
    return v


def ingest_csv(path, response_name: str) -> Dataset:
    """Read a headed CSV; every non-response column becomes a covariate, in header order."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = [h.strip() for h in next(reader)]
            except StopIteration:
                raise DataError(f"{path}: empty file") from None
            if response_name not in header:
                raise DataError(f"{path}: no column named {response_name!r}")
            if len(set(header)) != len(header):
                raise DataError(f"{path}: duplicate column names in header")
            rows = []
            for row_no, row in enumerate(reader, start=1):
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) != len(header):
                    raise DataError(
                        f"{path}: row {row_no} (line {reader.line_num}) has {len(row)} fields, expected {len(header)}"
                    )
                values = []
                for name, cell in zip(header, row):
                    try:
                        values.append(_parse_float(cell))
                    except ValueError:
                        raise DataError(
                            f"{path}: non-numeric value {cell!r} in column {name!r} at row {row_no} (line {reader.line_num})"
                        ) from None
                rows.append(values)
    except OSError as err:
        raise DataError(f"cannot read {path}: {err.strerror}") from None
    if len(rows) < 2:
        raise DataError(f"{path}: need at least 2 data rows, found {len(rows)}")
    table = np.array(rows)
    r = header.index(response_name)
    cols = [j for j in range(len(header)) if j != r]
    if not cols:
        raise DataError(f"{path}: no covariate columns")
    return Dataset(table[:, cols], table[:, r], tuple(header[j] for j in cols))


def write_csv(data: Dataset, path, response_name: str = "y") -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(data.names) + [response_name])
        for i in range(data.n):
            w.writerow([repr(float(v)) for v in data.X[i]] + [repr(float(data.y[i]))])


def _text_table(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    cells = [list(map(str, header))] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[k]) for r in cells) for k in range(len(header))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    return "\n".join(lines) + "\n"


def _fmt(v, digits=6):
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.{digits}g}"
    return str(v)


def _load(cfg: RunConfig) -> Dataset:
    data = ingest_csv(cfg.input, cfg.response)
    if cfg.center:
        data = data.centered()
    if cfg.standardize:
        data = data.standardized()
    return data


def _boot_cfg(cfg: RunConfig, seed=None) -> BootstrapConfig:
    return BootstrapConfig(
        B=cfg.B,
        alpha=cfg.alpha,
        seed=cfg.seed if seed is None else seed,
        folds=cfg.folds,
        center_residuals=cfg.center_residuals,
        initial=cfg.initial,
        cv_rule=cfg.cv_rule,
        jobs=cfg.jobs,
    )


def cmd_importance(cfg: RunConfig):
    data = _load(cfg)
    report = normalized_importance(data, cfg.spec, cfg.jobs)
    order = report.order()
    if cfg.top is not None:
        order = order[: cfg.top]
    seeds = np.random.SeedSequence(cfg.seed).spawn(2)
    intervals = None
    if cfg.intervals:
        intervals = importance_intervals(data, cfg.spec, cfg.M, cfg.level, seeds[0], raw=report.raw)
    pstreams = seeds[1].spawn(data.p)
    rows = []
    for j in order:
        row = {
            "index": int(j) + 1,
            "name": data.names[j],
            "raw": float(report.raw[j]),
            "importance": float(report.normalized[j]),
            "percent": 100.0 * float(report.normalized[j]),
            "lo": None if intervals is None else float(intervals[j, 0]),
            "hi": None if intervals is None else float(intervals[j, 1]),
        }
        if cfg.pvalues:
            row["pvalue"] = single_coefficient_test(data, int(j), cfg.spec, _boot_cfg(cfg, pstreams[j])).pvalue
        rows.append(row)
    doc = {
        "command": "importance",
        "spec": str(cfg.spec),
        "n": data.n,
        "p": data.p,
        "degenerate": report.degenerate,
        "rows": rows,
    }
    head = ["name", "raw", "percent", "lo", "hi"] + (["pvalue"] if cfg.pvalues else [])
    body = []
    for r in rows:
        line = [
            r["name"],
            _fmt(r["raw"]),
            f"{r['percent']:.1f}%",
            "-" if r["lo"] is None else f"{100 * r['lo']:.1f}%",
            "-" if r["hi"] is None else f"{100 * r['hi']:.1f}%",
        ]
        if cfg.pvalues:
            line.append(f"{r['pvalue']:.4f}")
        body.append(line)
    return doc, _text_table(head, body)


def cmd_test(cfg: RunConfig):
    data = _load(cfg)
    h = resolve_hypothesis(cfg.null, data.names)
    out = bootstrap_test(data, h, cfg.spec, _boot_cfg(cfg))
    doc = {
        "command": "test",
        "spec": str(cfg.spec),
        "hypothesis": {data.names[j]: v for j, v in zip(h.constrained, h.values)},
        "B": cfg.B,
        "alpha": cfg.alpha,
        "seed": cfg.seed,
        "initial": cfg.initial,
        "cv_rule": cfg.cv_rule,
        "statistic": out.statistic,
        "critical": out.critical,
        "pvalue": out.pvalue,
        "reject": out.reject,
    }
    hyp = ", ".join(f"{k} = {v:g}" for k, v in doc["hypothesis"].items())
    text = _text_table(
        ["null", "statistic", "critical", "pvalue", "reject"],
        [[hyp, _fmt(out.statistic), _fmt(out.critical), f"{out.pvalue:.4f}", "yes" if out.reject else "no"]],
    )
    return doc, text


def cmd_screen(cfg: RunConfig):
    data = _load(cfg)
    rule = TopK(cfg.topk) if cfg.topk is not None else Threshold(cfg.eps or 0.0)
    report = screen(data, cfg.spec, rule, cfg.jobs)
    doc = {
        "command": "screen",
        "spec": str(cfg.spec),
        "rule": str(rule),
        "n": data.n,
        "p": data.p,
        "kept": [data.names[j] for j in report.kept],
        "stats": {name: float(v) for name, v in zip(data.names, report.stats)},
    }
    body = [[rank + 1, data.names[j], _fmt(float(report.stats[j]))] for rank, j in enumerate(report.kept)]
    text = f"rule {rule}: kept {len(report.kept)} of {data.p}\n" + _text_table(["rank", "name", "statistic"], body)
    return doc, text


def _sim_design(cfg: RunConfig) -> SimDesign:
    coefs = {int(k) - 1: v for k, v in cfg.beta}
    if coefs and max(coefs) >= cfg.p:
        raise DataError("--beta refers to a column beyond --p")
    return SimDesign.sparse(cfg.n, cfg.p, coefs, sigma=cfg.sigma, cov=cfg.cov, rho=cfg.rho, reps=cfg.reps, seed=cfg.seed)


def cmd_simulate(cfg: RunConfig):
    design = _sim_design(cfg)
    boot = _boot_cfg(cfg)
    if cfg.experiment == "screening":
        rule = TopK(cfg.topk) if cfg.topk is not None else (Threshold(cfg.eps) if cfg.eps is not None else None)
        result = experiment_screening(design, rule, (cfg.spec,), jobs=cfg.jobs)
    else:
        h = resolve_hypothesis(cfg.null, [f"X{j + 1}" for j in range(cfg.p)])
        if cfg.experiment == "size":
            result = experiment_size(design, cfg.spec, boot, h, jobs=cfg.jobs)
        else:
            result = experiment_power(design, cfg.spec, boot, cfg.grid, h, cfg.coef - 1, jobs=cfg.jobs)
    if cfg.records:
        text = result.to_json() if cfg.records.endswith(".json") else result.records_csv()
        Path(cfg.records).write_text(text)
    doc = {"command": "simulate", "experiment": cfg.experiment, "cells": result.cells}
    head = ["method", "value", "rate", "se", "reps"]
    body = [[c["method"], _fmt(c.get("value", "-")), f"{c['rate']:.3f}", f"{c['se']:.3f}", c["reps"]] for c in result.cells]
    return doc, _text_table(head, body)


HANDLERS = {"importance": cmd_importance, "test": cmd_test, "screen": cmd_screen, "simulate": cmd_simulate}


def dumps(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def run(cfg: RunConfig) -> int:
    try:
        doc, text = HANDLERS[cfg.command](cfg)
    except (DataError, ValueError, IndexError, np.linalg.LinAlgError) as err:
        print(f"locopath: error: {err}", file=sys.stderr)
        return EXIT_DATA
    out = dumps(doc) if cfg.format == "json" else text
    if cfg.output:
        Path(cfg.output).write_text(out)
    else:
        sys.stdout.write(out)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    try:
        cfg = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
