"""Command-line front end: run a parameter file, size a big run, benchmark."""

from __future__ import annotations

import argparse
import json
import sys

from . import bench
from .simulation import Simulator


def _cmd_run(args) -> int:
    sim = Simulator.from_parfile(args.parfile)
    try:
        done = sim.run(niters=args.niters, t_end=args.t_end)
    finally:
        sim.shutdown()
    print(f"completed {done} iterations, t = {sim.t:.6g}")
    if sim.monitor is not None:
        print(f"monitor was serving on {sim.monitor.url}")
    return 0


def _cmd_estimate(args) -> int:
    inp = bench.CostModelInput(
        levels=args.levels, base=args.base, gridfns=args.gridfns,
        bytes_per_value=args.bytes_per_value, flops=args.flops,
        extra_flops=args.extra_flops, steps=args.steps, rate=args.rate)
    est = bench.estimate_cost(inp)
    if args.json:
        print(json.dumps({
            "memory_bytes": est.memory_bytes,
            "memory_tib": est.memory_tib,
            "total_flops": est.total_flops,
            "total_petaflops": est.total_petaflops,
            "level_steps": list(est.level_steps),
            "finest_steps": est.finest_steps,
            "runtime_seconds": est.runtime_seconds,
            "runtime_days": est.runtime_days,
        }, indent=1))
        return 0
    print(f"memory            {est.memory_bytes} bytes "
          f"({est.memory_tib:.4g} TiB)")
    print(f"total flops       {est.total_flops:.4e} "
          f"({est.total_petaflops:.4g} petaflops)")
    print(f"finest-level steps {est.finest_steps}")
    print(f"runtime           {est.runtime_seconds:.4e} s "
          f"({est.runtime_days:.3g} days)")
    return 0


def _cmd_bench(args) -> int:
    ranks = [int(tok) for tok in args.ranks.split(",") if tok]
    if not ranks:
        raise SystemExit("bench: --ranks must name at least one rank count")
    rows = bench.run_weak_scaling(
        args.kernel, ranks, parallel=not args.sequential,
        workdir=args.workdir)
    for row in rows:
        print(f"{row['kernel']:28s} ranks={row['ranks']:<3d} "
              f"{row['seconds']:.4f}s  {row['updates_per_s']:.3e} up/s  "
              f"eff={row['efficiency']:.3f}")
    if args.report:
        path = bench.emit_report(rows, args.report)
        print(f"report written to {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="tapestry",
        description="component-based PDE evolution testbed")
    sub = top.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="evolve a parameter file")
    run.add_argument("parfile")
    run.add_argument("--niters", type=int, default=None,
                     help="stop after this many iterations")
    run.add_argument("--t-end", type=float, default=None,
                     help="stop at this coordinate time")
    run.set_defaults(fn=_cmd_run)

    est = sub.add_parser("estimate", help="cost model for a large tiered run")
    est.add_argument("--levels", type=int, required=True)
    est.add_argument("--base", type=int, required=True,
                     help="points per edge of the base grid")
    est.add_argument("--gridfns", type=int, required=True)
    est.add_argument("--flops", type=int, default=10_000,
                     help="flops per point per step, main update")
    est.add_argument("--extra-flops", type=int, default=22_000,
                     help="flops per point per step, everything else")
    est.add_argument("--steps", type=int, default=6_000,
                     help="steps on the coarsest level")
    est.add_argument("--rate", type=float, default=2e15,
                     help="sustained machine rate in flop/s")
    est.add_argument("--bytes-per-value", type=int, default=8)
    est.add_argument("--json", action="store_true")
    est.set_defaults(fn=_cmd_estimate)

    bn = sub.add_parser("bench", help="weak-scaling benchmark harness")
    bn.add_argument("--kernel", required=True,
                    choices=sorted(bench.KERNELS))
    bn.add_argument("--ranks", default="1,2,4,8",
                    help="comma-separated rank counts")
    bn.add_argument("--report", default=None,
                    help="write a CSV (or .json) report here")
    bn.add_argument("--sequential", action="store_true",
                    help="run simulated ranks on one worker")
    bn.add_argument("--workdir", default=".")
    bn.set_defaults(fn=_cmd_bench)
    return top


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
