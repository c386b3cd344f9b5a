#!/usr/bin/env python3
"""
entrofunc Command Line Interface

Estimate entropy functionals from sample files, run configured Monte Carlo
experiments, and query the ground-truth oracles.
"""

import argparse
import sys
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from entrofunc import __version__
from entrofunc.config import get_settings
from entrofunc.errors import EntroFuncError, InvalidArgumentError
from entrofunc.logger import configure_logging, logger
from entrofunc.models import FunctionalOrder, SampleMode
from entrofunc.schemas import RunManifest, parse_distribution
from entrofunc.services.inference import (
    bregman_estimate,
    estimate_report,
    join_size_estimate,
    select_epsilon,
    variability_estimate,
)
from entrofunc.services.oracle import numeric_q, true_q
from entrofunc.services.simulation import (
    ReplicationResult,
    run_mse_curve,
    run_replications,
)
from entrofunc.utils.config_file import list_presets, load_experiment_config
from entrofunc.utils.sample_io import read_sample
from entrofunc.utils.serialization import safe_json_dumps, write_csv, write_json


def create_parser() -> argparse.ArgumentParser:
    """Create the argument parser for the CLI."""
    parser = argparse.ArgumentParser(
        prog="entrofunc",
        description="Renyi entropy functionals via epsilon-coincidence U-statistics",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  entrofunc estimate --x x.csv --r1 2 --r2 0 --epsilon 0.2
  entrofunc estimate --x x.csv --y y.csv --r1 1 --r2 1 --mode discrete
  entrofunc experiment example2 --out results/
  entrofunc oracle --dist-x "bernoulliProduct(d=3,p=0.8)" --r1 3 --r2 0
        """,
    )
    parser.add_argument("--log-level", default=None, help="Override ENTROFUNC_LOG_LEVEL")
    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    subparsers.add_parser("version", help="Show version information")

    est = subparsers.add_parser("estimate", help="Estimate a functional from sample files")
    est.add_argument("--x", required=True, type=Path, help="CSV file of the X sample")
    est.add_argument("--y", type=Path, help="CSV file of the Y sample")
    est.add_argument("--r1", type=int, default=2)
    est.add_argument("--r2", type=int, default=0)
    bandwidth = est.add_mutually_exclusive_group()
    bandwidth.add_argument("--epsilon", type=float, help="Ball radius")
    bandwidth.add_argument(
        "--auto-eps", metavar="alpha=A,c=C", help="Rate-optimal radius for smoothness A"
    )
    est.add_argument(
        "--mode",
        choices=[m.value for m in SampleMode],
        default=SampleMode.CONTINUOUS.value,
    )
    est.add_argument("--ci", type=float, default=0.95, help="Confidence level")
    est.add_argument("--out", type=Path, help="Write the JSON report here")
    est.add_argument("--bregman", type=int, metavar="S", help="Also estimate B_S(p_X, p_Y)")
    est.add_argument("--symmetrized", action="store_true", help="Symmetrized Bregman K_S")
    est.add_argument(
        "--join-size", metavar="m1,m2", help="Expected epsilon-join size of tables of these sizes"
    )

    exp = subparsers.add_parser("experiment", help="Run a Monte Carlo experiment")
    exp.add_argument("config", help=f"INI file or preset ({', '.join(list_presets())})")
    exp.add_argument("--out", type=Path, help="Output directory (default: results/<name>)")
    exp.add_argument("--threads", type=int, help="Worker processes (default: all cores)")
    exp.add_argument("--n-sim", type=int, help="Override the replication count")
    exp.add_argument("--seed", type=int, help="Override the config seed")

    ora = subparsers.add_parser("oracle", help="Print the true value of q_(r1,r2)")
    ora.add_argument("--dist-x", required=True, help='e.g. "gaussian1d(0,1.5)"')
    ora.add_argument("--dist-y", help='e.g. "exp(3)"')
    ora.add_argument("--r1", type=int, default=2)
    ora.add_argument("--r2", type=int, default=0)
    ora.add_argument("--numeric", action="store_true", help="Use quadrature instead of closed forms")
    ora.add_argument("--grid", type=int, help="Quadrature points per axis")

    return parser


def cmd_version() -> int:
    """Show version information."""
    print(f"entrofunc v{__version__}")
    print("Renyi entropy functional estimation with epsilon-coincidence U-statistics")
    return 0


def _parse_pairs(text: str, names: tuple[str, ...]) -> dict[str, float]:
    values: dict[str, float] = {}
    for token in text.split(","):
        key, sep, value = token.partition("=")
        key = key.strip()
        if not sep or key not in names:
            raise InvalidArgumentError(f"expected {','.join(n + '=…' for n in names)}", text=text)
        try:
            values[key] = float(value)
        except ValueError as exc:
            raise InvalidArgumentError(f"not a number: {value!r}") from exc
    return values


def _format_12(value: float) -> str:
    return np.format_float_positional(value, precision=12, unique=False, fractional=False, trim="k")


def _write_manifest(
    path: Path,
    command: str,
    config: dict[str, Any],
    outputs: list[Path],
    started_at: datetime,
    started: float,
    seed: int | None = None,
) -> Path:
    manifest = RunManifest(
        command=command,
        config=config,
        seed=seed,
        tool_version=__version__,
        started_at=started_at,
        duration_seconds=time.perf_counter() - started,
        outputs=[str(p) for p in [*outputs, path]],
    )
    return write_json(path, manifest)


def cmd_estimate(args: argparse.Namespace) -> int:
    """Estimate Q, k_n, H and the interval for one pair of samples."""
    started_at = datetime.now(timezone.utc)
    started = time.perf_counter()
    mode = SampleMode(args.mode)
    order = FunctionalOrder(args.r1, args.r2)
    x = read_sample(args.x, mode)
    y = read_sample(args.y, mode) if args.y is not None else None

    epsilon: float | None = None
    if mode is SampleMode.CONTINUOUS:
        if args.epsilon is not None:
            epsilon = args.epsilon
        elif args.auto_eps is not None:
            params = _parse_pairs(args.auto_eps, ("alpha", "c"))
            if "alpha" not in params:
                raise InvalidArgumentError("--auto-eps needs alpha=A")
            n = x.n + (y.n if y is not None and order.r2 > 0 else 0)
            epsilon = select_epsilon(n, x.d, order.r, params["alpha"], params.get("c", 1.0))
        else:
            raise InvalidArgumentError("continuous mode needs --epsilon or --auto-eps")

    report = estimate_report(x, y, order, epsilon, level=args.ci)
    result: dict[str, Any] = {
        "order": str(order),
        "mode": mode.value,
        "epsilon": epsilon,
        "q": report.q,
        "k_n": None if report.variance is None else report.variance.kappa_hat,
        "h": None if report.entropy is None else report.entropy.h_hat,
        "ci": report.interval,
        "diagnostics": report.diagnostics,
    }
    summary = [f"Q={report.q.value:.6g}"]
    if report.entropy is not None and report.variance is not None:
        summary += [f"H={report.entropy.h_hat:.6g}", f"k_n={report.variance.kappa_hat:.6g}"]
    if report.interval is not None:
        summary.append(f"CI{args.ci:g}=[{report.interval.lower:.6g}, {report.interval.upper:.6g}]")

    if args.bregman is not None or args.join_size is not None:
        if y is None:
            raise InvalidArgumentError("--bregman and --join-size need --y")
    if args.bregman is not None:
        b = bregman_estimate(x, y, args.bregman, epsilon, symmetrized=args.symmetrized)  # type: ignore[arg-type]
        result["bregman"] = {"s": args.bregman, "symmetrized": args.symmetrized, "value": b}
        summary.append(f"{'K' if args.symmetrized else 'B'}_{args.bregman}={b:.6g}")
    if args.join_size is not None:
        try:
            sizes = [int(part) for part in args.join_size.split(",")]
        except ValueError as exc:
            raise InvalidArgumentError("--join-size expects integers m1,m2") from exc
        if len(sizes) != 2:
            raise InvalidArgumentError("--join-size expects m1,m2")
        v_hat = variability_estimate(x, y, epsilon).h_hat  # type: ignore[arg-type]
        size = join_size_estimate(sizes[0], sizes[1], epsilon or 0.0, x.d, v_hat)
        result["join"] = {"m1": sizes[0], "m2": sizes[1], "v": v_hat, "expected_size": size}
        summary.append(f"join={size:.6g}")

    if args.out is not None:
        report_path = write_json(args.out, result)
        _write_manifest(
            args.out.with_name(f"{args.out.stem}.manifest.json"),
            "estimate",
            {
                "x": str(args.x),
                "y": None if args.y is None else str(args.y),
                "order": str(order),
                "mode": mode.value,
                "epsilon": epsilon,
                "auto_eps": args.auto_eps,
                "ci": args.ci,
                "bregman": args.bregman,
                "symmetrized": args.symmetrized,
                "join_size": args.join_size,
            },
            [report_path],
            started_at,
            started,
        )
    else:
        logger.debug("estimate_report", report=safe_json_dumps(result))
    print(" ".join(summary))
    return 0


def _replication_frame(result: ReplicationResult) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "replication": [r.index for r in result.records],
            "estimate": result.estimates(),
            "k_n": [r.k_n for r in result.records],
            "residual": result.residuals(),
        }
    )


def _qq_frame(results: list[tuple[dict[str, Any], ReplicationResult]]) -> pd.DataFrame:
    columns: dict[str, list[np.ndarray]] = {}
    for keys, result in results:
        quantiles, ordered = result.qq_points()
        for name, value in keys.items():
            columns.setdefault(name, []).append(np.full(ordered.size, value))
        columns.setdefault("normal_quantile", []).append(quantiles)
        columns.setdefault("sorted_residual", []).append(ordered)
    return pd.DataFrame({name: np.concatenate(parts) for name, parts in columns.items()})


def cmd_experiment(args: argparse.Namespace) -> int:
    """Run an experiment config and write residuals, summary, QQ pairs and a manifest."""
    started_at = datetime.now(timezone.utc)
    started = time.perf_counter()

    overrides: dict[str, Any] = {}
    if args.n_sim is not None:
        overrides["n_sim"] = args.n_sim
    seed = args.seed if args.seed is not None else get_settings().SEED
    if seed is not None:
        overrides["seed"] = seed
    config = load_experiment_config(args.config, overrides)
    out_dir = args.out if args.out is not None else Path("results") / config.name
    workers = args.threads

    if config.target == "mse-curve":
        points = run_mse_curve(config, workers)
        residuals = pd.concat(
            [
                _replication_frame(p.result).assign(a=p.a, n=p.n)[
                    ["a", "n", "replication", "estimate", "k_n", "residual"]
                ]
                for p in points
            ],
            ignore_index=True,
        )
        summary = pd.DataFrame(
            [
                {"a": p.a, "n": p.n, "epsilon": p.epsilon, **p.result.summary.as_dict()}
                for p in points
            ]
        )
        qq = _qq_frame([({"a": p.a, "n": p.n}, p.result) for p in points])
    else:
        result = run_replications(config, workers)
        residuals = _replication_frame(result)
        summary = pd.DataFrame([{"epsilon": result.epsilon, **result.summary.as_dict()}])
        qq = _qq_frame([({}, result)])

    outputs = [
        write_csv(out_dir / "residuals.csv", residuals),
        write_csv(out_dir / "summary.csv", summary),
        write_csv(out_dir / "qq.csv", qq),
    ]
    _write_manifest(
        out_dir / "manifest.json",
        "experiment",
        config.model_dump(mode="json", by_alias=True),
        outputs,
        started_at,
        started,
        seed=config.seed,
    )

    print(summary.to_string(index=False, float_format=lambda v: f"{v:.6g}"))
    print(f"✅ Results written to {out_dir}")
    return 0


def cmd_oracle(args: argparse.Namespace) -> int:
    """Print q_(r1,r2) for a pair of catalog distributions."""
    dist_x = parse_distribution(args.dist_x)
    dist_y = parse_distribution(args.dist_y) if args.dist_y else None
    order = FunctionalOrder(args.r1, args.r2)
    if args.numeric:
        value = numeric_q(dist_x, dist_y, order, grid_size=args.grid)
    else:
        value = true_q(dist_x, dist_y, order, allow_numeric=False)
    print(_format_12(value))
    return 0


def main(args: list[str] | None = None) -> int:
    """Main CLI entry point."""
    parser = create_parser()
    try:
        parsed_args = parser.parse_args(args)
    except SystemExit as exc:
        return int(exc.code or 0)

    configure_logging(parsed_args.log_level)

    if not parsed_args.command:
        parser.print_help()
        return 0

    commands = {
        "estimate": cmd_estimate,
        "experiment": cmd_experiment,
        "oracle": cmd_oracle,
    }
    if parsed_args.command == "version":
        return cmd_version()
    try:
        return commands[parsed_args.command](parsed_args)
    except EntroFuncError as exc:
        logger.error(
            "command_failed",
            command=parsed_args.command,
            code=exc.detail.code,
            context=exc.detail.context,
        )
        print(f"❌ {exc.detail.message}", file=sys.stderr)
        if exc.detail.suggestion:
            print(f"   {exc.detail.suggestion}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
