"""Command-line front end: search, exhaustive validation, and design evaluation.

Examples:
  multiclp --arch alexnet --platform vc707 --precision fp32 --algo sa \
           --runs 10 --iterations 1000 --seed 7 --out results --trace
  multiclp --algo evaluate --design mydesign.json --platform vc707
  multiclp --arch tiny2 --platform vc707 --algo oracle
"""

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import report as rpt
from .annealing import SaParams, sa_run
from .arch import ConfigError, Precision, resolve_architecture, resolve_platform
from .design import Evaluator, InfeasiblePlatformError
from .oracle import SearchSpaceTooLarge, exhaustive_search
from .tabu import TsParams, ts_run

_VERSION = "0.1.0"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="multiclp",
        description="Model and optimize multi-CLP CNN accelerator designs for FPGAs.",
    )
    p.add_argument("--arch", help="bundled architecture name or path to a JSON file")
    p.add_argument("--platform", help="bundled platform name or path to a JSON file")
    p.add_argument("--precision", default="fp32", choices=["fp32", "fxp16"])
    p.add_argument("--algo", default="sa", choices=["sa", "ts", "oracle", "evaluate"])
    p.add_argument("--iterations", type=int, default=1000,
                   help="search iteration budget per run")
    p.add_argument("--runs", type=int, default=1, help="independent seeded runs")
    p.add_argument("--seed", type=int, default=0, help="base seed; run i uses seed+i")
    p.add_argument("--design", help="design file to evaluate (algo=evaluate)")
    p.add_argument("--out", default=".", help="directory for report files")
    p.add_argument("--trace", action="store_true", help="write per-run trace CSVs")
    p.add_argument("--no-timestamp", action="store_true",
                   help="omit the timestamp for byte-stable reports")
    p.add_argument("--no-plot", action="store_true", help="skip figure rendering")
    p.add_argument("--jobs", type=int, default=0,
                   help="parallel workers for --runs (default: min(runs, cpus))")
    # annealing overrides
    p.add_argument("--t0", type=float, default=25_000.0)
    p.add_argument("--alpha", type=float, default=0.99)
    p.add_argument("--beta", type=float, default=1.005)
    p.add_argument("--m0", type=int, default=10)
    # tabu overrides
    p.add_argument("--cands", type=int, default=20, help="tabu candidate list size")
    p.add_argument("--tenure", type=int, default=7, help="tabu list length")
    return p


def _search_params(args, seed):
    if args.algo == "sa":
        return SaParams(t0=args.t0, alpha=args.alpha, beta=args.beta,
                        m0=args.m0, max_time=args.iterations, seed=seed)
    return TsParams(candidate_list_size=args.cands, tabu_tenure=args.tenure,
                    max_time=args.iterations, seed=seed)


def _run_search(payload):
    """Worker for one seeded run; module-level so process pools can pickle it."""
    algo, arch_src, platform_src, precision_name, args_ns, seed = payload
    arch = resolve_architecture(arch_src)
    platform = resolve_platform(platform_src)
    precision = Precision.from_name(precision_name)
    params = _search_params(args_ns, seed)
    run = sa_run if algo == "sa" else ts_run
    return run(arch, platform, precision, params)


def _cmd_search(args, out: Path) -> int:
    arch = resolve_architecture(args.arch)
    platform = resolve_platform(args.platform)
    precision = Precision.from_name(args.precision)
    seeds = [args.seed + i for i in range(args.runs)]

    jobs = args.jobs or min(args.runs, os.cpu_count() or 1)
    payloads = [
        (args.algo, args.arch, args.platform, args.precision, args, seed)
        for seed in seeds
    ]
    if args.runs > 1 and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_search, payloads))
    else:
        evaluator = Evaluator(arch, platform, precision)
        results = []
        for seed in seeds:
            params = _search_params(args, seed)
            run = sa_run if args.algo == "sa" else ts_run
            results.append(run(arch, platform, precision, params, evaluator))

    best_idx = min(range(len(results)), key=lambda i: results[i].best_key)
    best = results[best_idx]
    evaluator = Evaluator(arch, platform, precision)
    metrics = evaluator.report(best.best)

    payload = {
        "meta": {
            "tool": "multiclp",
            "version": _VERSION,
            "algo": args.algo,
            "arch": arch.name,
            "platform": platform.name,
            "precision": args.precision,
            "iterations": args.iterations,
            "runs": args.runs,
            "seed": args.seed,
        },
        "runs": [
            {"run": i, "seed": r.seed, "best_cycles": r.best_cost,
             "evaluations": r.evaluations}
            for i, r in enumerate(results)
        ],
        "best_run": best_idx,
        "design": rpt.solution_to_dict(best.best, arch),
        "metrics": metrics.to_dict(),
    }
    rpt.write_report_json(out / "report.json", payload,
                          timestamp=not args.no_timestamp)
    rpt.write_summary_csv(out / "summary.csv", metrics, arch)
    if args.trace:
        for i, r in enumerate(results):
            rpt.write_trace_csv(out / f"trace_run{i}.csv", r.trace)
    if not args.no_plot:
        label = args.algo.upper()
        rpt.render_convergence(
            out / "convergence.png",
            [(f"{label} run {i} (seed {r.seed})", r.trace)
             for i, r in enumerate(results)],
            platform.freq_mhz,
            f"{label} on {arch.name}/{platform.name} ({args.precision})",
        )
        rpt.render_clp_cycles(out / "clp_cycles.png", metrics,
                              f"best design, {arch.name} on {platform.name}")

    for i, r in enumerate(results):
        marker = " <- best" if i == best_idx else ""
        print(f"run {i} (seed {r.seed}): {r.best_cost:,} cycles "
              f"in {r.runtime_s:.1f}s, {r.evaluations} evaluations{marker}")
    print()
    print(rpt.summary_table(metrics, arch))
    print(f"\nreport written to {out / 'report.json'}")
    return 0


def _cmd_oracle(args, out: Path) -> int:
    arch = resolve_architecture(args.arch)
    platform = resolve_platform(args.platform)
    precision = Precision.from_name(args.precision)
    evaluator = Evaluator(arch, platform, precision)
    result = exhaustive_search(arch, platform, precision, evaluator=evaluator)
    metrics = evaluator.report(result.best)
    payload = {
        "meta": {
            "tool": "multiclp", "version": _VERSION, "algo": "oracle",
            "arch": arch.name, "platform": platform.name,
            "precision": args.precision,
        },
        "evaluated": result.evaluated,
        "design": rpt.solution_to_dict(result.best, arch),
        "metrics": metrics.to_dict(),
    }
    rpt.write_report_json(out / "report.json", payload,
                          timestamp=not args.no_timestamp)
    rpt.write_summary_csv(out / "summary.csv", metrics, arch)
    if not args.no_plot:
        rpt.render_clp_cycles(out / "clp_cycles.png", metrics,
                              f"optimal design, {arch.name} on {platform.name}")
    print(f"enumerated {result.evaluated} designs")
    print(rpt.summary_table(metrics, arch))
    print(f"\nreport written to {out / 'report.json'}")
    return 0


def _cmd_evaluate(args, out: Path) -> int:
    arch = resolve_architecture(args.arch) if args.arch else None
    sol, arch = rpt.load_design(args.design, arch)
    platform = resolve_platform(args.platform)
    precision = Precision.from_name(args.precision)
    evaluator = Evaluator(arch, platform, precision)
    feasible, violation = evaluator.is_feasible(sol)
    if not feasible:
        print(f"design is infeasible on {platform.name}: {violation}",
              file=sys.stderr)
        return 1
    metrics = evaluator.report(sol)
    payload = {
        "meta": {
            "tool": "multiclp", "version": _VERSION, "algo": "evaluate",
            "arch": arch.name, "platform": platform.name,
            "precision": args.precision, "design_file": str(args.design),
        },
        "design": rpt.solution_to_dict(evaluator.with_tilings(sol), arch),
        "metrics": metrics.to_dict(),
    }
    rpt.write_report_json(out / "report.json", payload,
                          timestamp=not args.no_timestamp)
    rpt.write_summary_csv(out / "summary.csv", metrics, arch)
    if not args.no_plot:
        rpt.render_clp_cycles(out / "clp_cycles.png", metrics,
                              f"{Path(args.design).stem} on {platform.name}")
    print(rpt.summary_table(metrics, arch))
    print(f"\nreport written to {out / 'report.json'}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.algo == "evaluate":
        if not args.design:
            parser.error("--algo evaluate requires --design")
    elif not args.arch:
        parser.error(f"--algo {args.algo} requires --arch")
    if not args.platform:
        parser.error("--platform is required")
    if args.runs < 1 or args.iterations < 0:
        parser.error("--runs must be >= 1 and --iterations >= 0")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        if args.algo in ("sa", "ts"):
            return _cmd_search(args, out)
        if args.algo == "oracle":
            return _cmd_oracle(args, out)
        return _cmd_evaluate(args, out)
    except (ConfigError, InfeasiblePlatformError, SearchSpaceTooLarge,
            FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
