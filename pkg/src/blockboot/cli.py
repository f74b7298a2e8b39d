"""Batch command-line interface.

Subcommands: ``generate``, ``bootstrap``, ``cvm-test``, ``vstat-test``,
``two-sample``, ``montecarlo``.  Reports are JSON with a fixed key order and
no timestamps, so a fixed seed yields byte-identical output across runs and
thread counts.  Exit codes: 0 success, 2 configuration error, 3 failure-policy
breach in a Monte Carlo run.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .bootstrap import (
    BlockPlan,
    LongRunVarianceStatistic,
    MeanNormStatistic,
    block_length_schedule,
    bootstrap_distribution,
    bootstrap_quantile,
    long_run_variance_estimate,
    two_sample_test,
)
from .config import load_experiment_config, load_process_config
from .dists import distribution_from_token
from .exceptions import BlockbootError, ConfigError
from .generators import generate_functional, generate_real
from .harness import run_experiment
from .io import read_sample, write_sample
from .vmstat import (
    cvm_test,
    degeneracy_diagnostic,
    kernel_from_token,
    make_cvm_spec,
    vstat_test,
)

_QUANTILES = (0.5, 0.9, 0.95, 0.99)


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(json.dumps(payload, indent=2) + "\n")


def _plan_dict(plan: BlockPlan) -> dict:
    return {"n": plan.n, "p": plan.p, "k": plan.k, "kp": plan.kp,
            "dyadic_freeze": plan.dyadic_freeze}


def _plan_from_args(n: int, args) -> BlockPlan:
    if args.block_length != "auto":
        try:
            p = int(args.block_length)
        except ValueError as exc:
            raise ConfigError(
                f"--block-length must be an integer or 'auto', got {args.block_length!r}"
            ) from exc
        if not 1 <= p <= n:
            raise ConfigError(f"--block-length must be in 1..n={n}, got {p}")
        return BlockPlan(n=n, p=p)
    return block_length_schedule(n, args.exponent, args.freeze_dyadic)


def _warn_discard(plan: BlockPlan) -> None:
    if plan.discarded > 0:
        print(
            f"warning: discarding the trailing {plan.discarded} of {plan.n} "
            f"observations (k*p = {plan.kp})",
            file=sys.stderr,
        )


def _add_plan_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--block-length", default="auto",
                        help="block length p, or 'auto' for the n**exponent schedule")
    parser.add_argument("--exponent", type=float, default=1.0 / 3.0,
                        help="schedule exponent in (0, 1); default 1/3")
    parser.add_argument("--freeze-dyadic", action="store_true",
                        help="evaluate the schedule at the next power of two")


def _test_payload(command: str, result: dict, plan: BlockPlan, args, extra: dict | None = None) -> dict:
    payload = {
        "schema": 1,
        "version": __version__,
        "command": command,
        "plan": _plan_dict(plan),
        "seed": args.seed,
        "level": args.level,
        "replicates": int(result["replicates"].size),
        "statistic": result["statistic"],
        "critical_value": result["critical_value"],
        "p_value": result["p_value"],
        "reject": result["reject"],
        "decision": "reject" if result["reject"] else "fail-to-reject",
    }
    if extra:
        payload.update(extra)
    return payload


def cmd_generate(args) -> int:
    process, grid_spec = load_process_config(args.config)
    if process.is_functional:
        grid, w = grid_spec.make()
        sample = generate_functional(process, args.n, grid, w)
        sidecar = args.sidecar if args.sidecar else args.out + ".grid.csv"
        write_sample(sample, args.out, sidecar, pointwise_w=w)
    else:
        sample = generate_real(process, args.n)
        write_sample(sample, args.out, args.sidecar)
    return 0


def cmd_bootstrap(args) -> int:
    sample = read_sample(args.data, args.sidecar)
    plan = _plan_from_args(sample.n, args)
    _warn_discard(plan)
    if args.statistic == "mean-norm":
        statistic = MeanNormStatistic()
    elif args.statistic == "lrv":
        statistic = LongRunVarianceStatistic()
    else:
        raise ConfigError(f"unknown statistic {args.statistic!r}")
    dist = bootstrap_distribution(sample, plan, args.replicates, statistic, args.seed)
    values = dist.replicates
    payload = {
        "schema": 1,
        "version": __version__,
        "command": "bootstrap",
        "plan": _plan_dict(plan),
        "seed": args.seed,
        "statistic": dist.statistic_id,
        "replicates": {
            "count": int(values.size),
            "mean": float(values.mean()),
            "quantiles": {str(q): bootstrap_quantile(dist, q) for q in _QUANTILES},
        },
    }
    if args.statistic == "lrv":
        payload["sample_estimate"] = long_run_variance_estimate(sample, plan)
    _write_json(args.out, payload)
    if args.raw_out:
        with open(args.raw_out, "w", encoding="ascii") as fh:
            fh.write("replicate,value\n")
            for r, v in enumerate(values):
                fh.write(f"{r},{repr(float(v))}\n")
    return 0


def cmd_cvm_test(args) -> int:
    sample = read_sample(args.data, None)
    if sample.d != 1:
        raise ConfigError("cvm-test expects a scalar series")
    plan = _plan_from_args(sample.n, args)
    _warn_discard(plan)
    dist = distribution_from_token(args.dist)
    spec = make_cvm_spec(dist.cdf, dist.support, dist.weight_fn, sample=sample)
    result = cvm_test(sample, spec, plan, args.replicates, args.seed, args.level)
    payload = _test_payload("cvm-test", result, plan, args, {"null": dist.name})
    _write_json(args.out, payload)
    return 0


def cmd_vstat_test(args) -> int:
    sample = read_sample(args.data, None)
    if sample.d != 1:
        raise ConfigError("vstat-test expects a scalar series")
    plan = _plan_from_args(sample.n, args)
    _warn_discard(plan)
    kernel = kernel_from_token(args.kernel)
    result = vstat_test(sample, kernel, plan, args.replicates, args.seed, args.level)
    probes = np.quantile(sample.scalars(), np.linspace(0.05, 0.95, 19))
    probes = np.unique(probes)
    diagnostic = degeneracy_diagnostic(sample, kernel, probes)
    payload = _test_payload("vstat-test", result, plan, args, {
        "kernel": kernel.name,
        "degeneracy_diagnostic": diagnostic,
    })
    _write_json(args.out, payload)
    return 0


def cmd_two_sample(args) -> int:
    x = read_sample(args.data_x, args.sidecar_x)
    y = read_sample(args.data_y, args.sidecar_y)
    if x.n != y.n:
        raise ConfigError(f"samples must have equal length, got {x.n} and {y.n}")
    plan = _plan_from_args(x.n, args)
    _warn_discard(plan)
    result = two_sample_test(x, y, plan, plan, args.replicates, args.seed, args.level)
    payload = _test_payload("two-sample", result, plan, args)
    _write_json(args.out, payload)
    return 0


def cmd_montecarlo(args) -> int:
    cfg = load_experiment_config(args.config)
    if args.workers < 1:
        raise ConfigError(f"--workers must be at least 1, got {args.workers}")
    report = run_experiment(cfg, workers=args.workers)
    report.write(args.out)
    if report.flags["failure_policy_breach"]:
        print(
            f"error: {report.aggregates['failed']} of {report.aggregates['replications']} "
            "replications failed (limit 1%)",
            file=sys.stderr,
        )
        return 3
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blockboot",
        description="Nonoverlapping block bootstrap for dependent (functional) time series",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="simulate a process and write it as CSV")
    p.add_argument("--config", required=True, help="process config file (INI, schema=1)")
    p.add_argument("--n", type=int, required=True, help="number of observations")
    p.add_argument("--out", required=True, help="output data CSV")
    p.add_argument("--sidecar", default=None, help="output grid/weight sidecar CSV")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("bootstrap", help="bootstrap distribution of a statistic")
    p.add_argument("--data", required=True)
    p.add_argument("--sidecar", default=None)
    _add_plan_flags(p)
    p.add_argument("--replicates", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--statistic", default="mean-norm", choices=("mean-norm", "lrv"))
    p.add_argument("--out", required=True, help="output report JSON")
    p.add_argument("--raw-out", default=None, help="optional CSV of raw replicates")
    p.set_defaults(func=cmd_bootstrap)

    p = sub.add_parser("cvm-test", help="goodness-of-fit test for a scalar series")
    p.add_argument("--data", required=True)
    _add_plan_flags(p)
    p.add_argument("--dist", default="normal",
                   help="null distribution token, e.g. normal, uniform:0,1, t:6")
    p.add_argument("--replicates", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--level", type=float, default=0.05)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cvm_test)

    p = sub.add_parser("vstat-test", help="degenerate V-statistic bootstrap test")
    p.add_argument("--data", required=True)
    _add_plan_flags(p)
    p.add_argument("--kernel", default="product",
                   help="kernel token: product, gaussian:<bw>, cvm:<dist>")
    p.add_argument("--replicates", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--level", type=float, default=0.05)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_vstat_test)

    p = sub.add_parser("two-sample", help="bootstrap test for equal means")
    p.add_argument("--data-x", required=True)
    p.add_argument("--data-y", required=True)
    p.add_argument("--sidecar-x", default=None)
    p.add_argument("--sidecar-y", default=None)
    _add_plan_flags(p)
    p.add_argument("--replicates", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--level", type=float, default=0.05)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_two_sample)

    p = sub.add_parser("montecarlo", help="run a Monte Carlo experiment from a config file")
    p.add_argument("--config", required=True, help="experiment config file (INI, schema=1)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--workers", type=int, default=1,
                   help="process-pool size for replications; output is identical "
                        "for any value")
    p.set_defaults(func=cmd_montecarlo)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (BlockbootError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
