"""Command-line experiment runner.

Every subcommand reads one JSON config (a path or a bundled name), writes
CSV/JSON files into ``--output-dir`` and a ``manifest.json`` describing the
run. Exit codes: 0 success, 1 invariant violation, 2 config error,
3 budget or precision error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from pathlib import Path
from typing import Callable, Iterable, Sequence

from . import __version__
from .config import BUNDLED, config_hash, load_config, read_config, run_options
from .construction import ExperimentConfig, divergence_setup, psi_index
from .delone import indexed_points_in_window
from .errors import (
    BudgetExceededError,
    ConfigError,
    DegeneratePsiError,
    InsufficientWindowError,
    PrecisionError,
    UndefinedRatioError,
)
from .estimators import density_zoom, global_density, independence_report, measure_table
from .montecarlo import dichotomy_experiment
from .numerics import Scalar, decimal_string, exact_string, is_exact
from .verification import FAIL, VerifyOptions, run_verification

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG, EXIT_BUDGET = 0, 1, 2, 3
DEFAULT_DIGITS = 30

log = logging.getLogger("deloneapprox")


class Run:
    """Output directory, number formatting and the manifest for one invocation."""

    def __init__(self, cfg: ExperimentConfig, args: argparse.Namespace):
        self.cfg = cfg
        self.args = args
        self.out = Path(args.output_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.digits = args.digits
        self.files: list[str] = []
        self.started = time.time()

    # numbers -------------------------------------------------------------

    def dec(self, value: Scalar | None) -> str:
        return "" if value is None else decimal_string(value, self.digits)

    def exact(self, value: Scalar | None) -> str:
        return "" if value is None else exact_string(value)

    @property
    def rational(self) -> bool:
        return self.cfg.numbers.exact

    def number_columns(self, name: str) -> list[str]:
        return [name, f"{name}_exact"] if self.rational else [name]

    def number_cells(self, value: Scalar | None) -> list[str]:
        return [self.dec(value), self.exact(value)] if self.rational else [self.dec(value)]

    def jsonable(self, value):
        if isinstance(value, dict):
            return {str(k): self.jsonable(v) for k, v in value.items()}
        if isinstance(value, (list, tuple)):
            return [self.jsonable(v) for v in value]
        if isinstance(value, (bool, int, str)) or value is None:
            return value
        if is_exact(value) or hasattr(value, "precision"):
            if self.rational and is_exact(value):
                return {"decimal": self.dec(value), "exact": self.exact(value)}
            return self.dec(value)
        return str(value)

    # files ---------------------------------------------------------------

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence]) -> None:
        path = self.out / name
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
        self.files.append(name)

    def write_json(self, name: str, payload: dict) -> None:
        with open(self.out / name, "w", encoding="utf-8") as fh:
            json.dump(self.jsonable(payload), fh, indent=2, sort_keys=True)
            fh.write("\n")
        self.files.append(name)

    def write_manifest(self, subcommand: str, exit_code: int) -> None:
        cfg = self.cfg
        manifest = {
            "subcommand": subcommand,
            "config": str(self.args.config),
            "config_hash": config_hash(cfg.source),
            "tool_version": __version__,
            "seed": cfg.seed,
            "precision_mode": "exact" if cfg.numbers.exact else "big-float",
            "precision_bits": cfg.numbers.precision_bits,
            "decimal_digits": self.digits,
            "started": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(self.started)),
            "wall_clock_seconds": round(time.time() - self.started, 3),
            "exit_code": exit_code,
            "outputs": sorted(self.files) + ["manifest.json"],
        }
        with open(self.out / "manifest.json", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _option(args, opts: dict, name: str, default=None):
    value = getattr(args, name, None)
    if value is not None:
        return value
    return opts.get(name, default)


def _scalar(cfg: ExperimentConfig, value) -> Scalar:
    return value if not isinstance(value, (str, int)) else cfg.numbers.scalar(str(value))


# subcommands ---------------------------------------------------------------


def cmd_gen_points(run: Run) -> int:
    cfg, args = run.cfg, run.args
    opts = run_options(cfg, "gen-points")
    lo = _scalar(cfg, _option(args, opts, "lo", "-20"))
    hi = _scalar(cfg, _option(args, opts, "hi", "20"))
    with cfg.numbers.active():
        pts = indexed_points_in_window(cfg.delone, lo, hi, cfg.point_budget)
    run.write_csv(
        "points.csv",
        ["index"] + run.number_columns("point"),
        ([k] + run.number_cells(y) for k, y in pts),
    )
    print(f"{len(pts)} points of {cfg.delone.describe()['variant']} in [{run.dec(lo)}, {run.dec(hi)}]")
    return EXIT_OK


def cmd_measure_table(run: Run) -> int:
    cfg, args = run.cfg, run.args
    opts = run_options(cfg, "measure-table")
    setup = divergence_setup(cfg)
    N = int(_option(args, opts, "N", 20))
    measures = measure_table(cfg, setup, N)
    run.write_csv(
        "measure_table.csv",
        ["n", "psi_index"] + run.number_columns("psi") + run.number_columns("measure"),
        (
            [n, psi_index(setup, n)] + run.number_cells(cfg.psi(psi_index(setup, n))) + run.number_cells(lam)
            for n, lam in enumerate(measures, start=1)
        ),
    )
    print(f"J={setup.J} j={setup.j}; wrote {N} measures of A'_n")
    return EXIT_OK


def cmd_independence(run: Run) -> int:
    cfg, args = run.cfg, run.args
    opts = run_options(cfg, "independence")
    setup = divergence_setup(cfg)
    N = int(_option(args, opts, "N", 20))
    band = cfg.band_width if args.band_width is None else args.band_width
    report = independence_report(cfg, setup, N, band)
    run.write_csv(
        "measures.csv",
        ["n", "psi_index"] + run.number_columns("measure"),
        ([n, report.psi_indices[n - 1]] + run.number_cells(lam) for n, lam in enumerate(report.measures, start=1)),
    )
    mat = report.intersection_matrix
    run.write_csv(
        "intersections.csv",
        ["m", "n"] + run.number_columns("measure"),
        (
            [m, n] + run.number_cells(mat[m - 1][n - 1])
            for m in range(1, N + 1)
            for n in range(m, N + 1)
            if mat[m - 1][n - 1] is not None
        ),
    )
    traj = report.trajectory
    run.write_csv(
        "ratio_trajectory.csv",
        ["N"] + run.number_columns("ratio") + run.number_columns("running_max"),
        (
            [k] + run.number_cells(ratio) + run.number_cells(best)
            for k, (ratio, best) in enumerate(zip(traj.ratios, traj.running_max_trajectory), start=1)
        ),
    )
    summary = {
        "N": N,
        "J": setup.J,
        "j": setup.j,
        "beta": setup.beta,
        "band_width": band,
        "ratio_is_upper_estimate": band is not None,
        "periodic_engine": report.periodic,
        "interval_width": cfg.width,
        "chung_erdos_ratio": traj.value,
        "ratio_running_max": traj.running_max,
        "ratio_trajectory": traj.ratios,
        "quasi_independence_constant": report.quasi_independence_constant,
        "K_estimate": report.K_estimate,
    }
    run.write_json("summary.json", summary)
    print(
        f"J={setup.J} j={setup.j} N={N}: ratio {run.dec(traj.value)[:12]}, "
        f"K_estimate {run.dec(report.K_estimate)[:12]}"
    )
    # a band drops off-band intersections, so only the full matrix obeys Cauchy-Schwarz
    bad = [k for k, r in enumerate(traj.ratios, start=1) if r is not None and r > cfg.width]
    if bad and band is None:
        print(f"second-moment ratio exceeds b - a at N={bad[:5]}", file=sys.stderr)
        return EXIT_VIOLATION
    if bad:
        print(f"note: banded ratio exceeds b - a at N={bad[:5]}; off-band intersections are omitted", file=sys.stderr)
    return EXIT_OK


def cmd_dichotomy(run: Run) -> int:
    cfg, args = run.cfg, run.args
    opts = run_options(cfg, "dichotomy")
    samples = int(_option(args, opts, "samples", 1000))
    N = int(_option(args, opts, "N", min(cfg.N_max, 100)))
    workers = int(_option(args, opts, "workers", 1))
    rational = True if args.rational_samples else None
    stats = dichotomy_experiment(cfg, samples, cfg.seed, N, workers=workers, rational_samples=rational)
    sample_rational = all(is_exact(x) for x in stats.xs)
    cols = ["sample_id", "x"] + (["x_exact"] if sample_rational else []) + ["hit_count"]
    run.write_csv(
        "hits.csv",
        cols,
        (
            [i, run.dec(x)] + ([run.exact(x)] if sample_rational else []) + [c]
            for i, (x, c) in enumerate(zip(stats.xs, stats.hit_counts))
        ),
    )
    summary = stats.summary()
    summary["standard_error"] = stats.standard_error
    run.write_json("stats.json", summary)
    print(
        f"{samples} samples, N={N}: mean hits {run.dec(stats.mean_hits)[:10]} "
        f"(expected {run.dec(stats.expected_hits)[:10]}), regime {stats.regime}"
    )
    if not 0 <= stats.mean_hits <= N:
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_zoom(run: Run) -> int:
    cfg, args = run.cfg, run.args
    opts = run_options(cfg, "zoom")
    x0 = _scalar(cfg, _option(args, opts, "x0", "1/3"))
    N1 = int(_option(args, opts, "N1", 1))
    N2 = int(_option(args, opts, "N2", 20))
    eps = args.eps if args.eps else opts.get("eps", ["1/8", "1/16", "1/32", "1/64", "1/128", "1/256"])
    eps_list = [_scalar(cfg, e) for e in eps]
    g = global_density(cfg, N1, N2)
    curve = density_zoom(cfg, None, x0, N1, N2, eps_list)
    with cfg.numbers.active():
        rel = [d / g if g else None for _, d in curve]
    run.write_csv(
        "zoom.csv",
        run.number_columns("eps") + run.number_columns("local_density") + run.number_columns("ratio_to_global"),
        (run.number_cells(e) + run.number_cells(d) + run.number_cells(q) for (e, d), q in zip(curve, rel)),
    )
    run.write_json(
        "summary.json",
        {"x0": x0, "N1": N1, "N2": N2, "global_density": g, "local_density": [d for _, d in curve], "ratio_to_global": rel},
    )
    print(f"global density {run.dec(g)[:12]}; ratios " + ", ".join(run.dec(q)[:8] for q in rel))
    return EXIT_OK


def cmd_verify(run: Run) -> int:
    cfg = run.cfg
    setup = divergence_setup(cfg)
    opts = VerifyOptions.from_runs(run_options(cfg, "verify"), cfg.numbers)
    results = run_verification(cfg, setup, opts)
    run.write_csv(
        "verify.csv",
        ["check", "status", "detail"],
        ([r.name, r.status, r.detail] for r in results),
    )
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{r.name:<{width}}  {r.status:<4}  {r.detail}")
    return EXIT_VIOLATION if any(r.status == FAIL for r in results) else EXIT_OK


COMMANDS: dict[str, tuple[Callable[[Run], int], str]] = {
    "gen-points": (cmd_gen_points, "dump the points of Y in a window"),
    "verify": (cmd_verify, "run the invariant suites and print a pass/fail table"),
    "measure-table": (cmd_measure_table, "exact measures of A'_n"),
    "independence": (cmd_independence, "intersection matrix, second-moment ratio, quasi-independence"),
    "dichotomy": (cmd_dichotomy, "Monte Carlo hit counts along the orbit"),
    "zoom": (cmd_zoom, "local density of the union of A_n around x0"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deloneapprox",
        description="Exact and Monte Carlo experiments on approximating alpha^n x by a Delone set.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help=f"config file, or one of: {', '.join(BUNDLED)}")
    common.add_argument("--seed", type=int)
    common.add_argument("--precision-bits", type=int)
    common.add_argument("--point-budget", type=int)
    common.add_argument("--band-width", type=int)
    common.add_argument("--output-dir", default="out")
    common.add_argument("--digits", type=int, default=DEFAULT_DIGITS, help="significant digits in decimal output")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        if name == "gen-points":
            p.add_argument("--lo")
            p.add_argument("--hi")
        if name in ("measure-table", "independence", "dichotomy"):
            p.add_argument("-N", type=int, dest="N")
        if name == "dichotomy":
            p.add_argument("--samples", type=int)
            p.add_argument("--workers", type=int)
            p.add_argument("--rational-samples", action="store_true", help="draw exact dyadic x")
        if name == "zoom":
            p.add_argument("--x0")
            p.add_argument("--N1", type=int)
            p.add_argument("--N2", type=int)
            p.add_argument("--eps", nargs="+")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.digits < 1:
        print("error: --digits must be positive", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(
            args.config,
            seed=args.seed,
            precision_bits=args.precision_bits,
            point_budget=args.point_budget,
            band_width=args.band_width,
        )
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PrecisionError as exc:
        print(f"precision error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    handler = COMMANDS[args.command][0]
    run = Run(cfg, args)
    try:
        code = handler(run)
    except BudgetExceededError as exc:
        print(f"budget error: {exc}", file=sys.stderr)
        code = EXIT_BUDGET
    except PrecisionError as exc:
        print(f"precision error: {exc}", file=sys.stderr)
        code = EXIT_BUDGET
    except (ConfigError, DegeneratePsiError, UndefinedRatioError, InsufficientWindowError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_CONFIG
    run.write_manifest(args.command, code)
    return code


if __name__ == "__main__":
    sys.exit(main())
