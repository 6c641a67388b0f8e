"""Benchmark kernels, weak-scaling harness, and the petascale cost model.

The cost estimator works in exact integer arithmetic and answers the
classic sizing question: how much memory, how many operations, and how
long at a sustained machine rate, for L factor-2 levels over an N^3 base
grid where every level takes twice the steps of the one above it.

Weak-scaling kernels hold per-rank work constant while the domain grows
with the rank count, timing the evolution loop only (startup, initial
data, and shutdown excluded). Desk-scale sizes: ~32^3 owned points per
rank for stencil kernels, 16 MiB per rank for the I/O kernel.
"""

from __future__ import annotations

import csv
import json
import os
import time as _time
from dataclasses import dataclass

from .simulation import Simulator
from .unigrid import factor_triples


@dataclass(frozen=True)
class CostModelInput:
    levels: int
    base: int
    gridfns: int
    bytes_per_value: int = 8
    flops: int = 10_000
    extra_flops: int = 22_000
    steps: int = 6_000
    rate: float = 2e15

    def validate(self):
        ints = (self.levels, self.base, self.gridfns, self.bytes_per_value,
                self.flops, self.extra_flops, self.steps)
        if any(v <= 0 for v in ints) or self.rate <= 0:
            raise ValueError("all cost-model inputs must be positive")


@dataclass(frozen=True)
class CostEstimate:
    memory_bytes: int
    total_flops: int
    level_steps: tuple[int, ...]
    runtime_seconds: float

    @property
    def finest_steps(self) -> int:
        return self.level_steps[-1]

    @property
    def total_petaflops(self) -> float:
        return self.total_flops / 1e15

    @property
    def runtime_days(self) -> float:
        return self.runtime_seconds / 86_400.0

    @property
    def memory_tib(self) -> float:
        return self.memory_bytes / 2**40


def estimate_cost(inp: CostModelInput) -> CostEstimate:
    inp.validate()
    n3 = inp.base**3
    memory = inp.levels * n3 * inp.gridfns * inp.bytes_per_value
    per_point = inp.flops + inp.extra_flops
    total = n3 * per_point * inp.steps * (2**inp.levels - 1)
    level_steps = tuple(inp.steps * 2**lv for lv in range(inp.levels))
    return CostEstimate(memory, total, level_steps, total / inp.rate)


def ghost_overhead(owned: int, ghost: int) -> float:
    """Ghost points per owned point for a cubic block with a full halo."""
    if owned < 1 or ghost < 0:
        raise ValueError("need owned >= 1 and ghost >= 0")
    return ((owned + 2 * ghost) ** 3 - owned**3) / owned**3


# -- weak-scaling kernels ---------------------------------------------------


def most_cubic_grid(nranks: int) -> tuple[int, int, int]:
    """Process grid whose per-rank blocks stay closest to cubes."""
    best = None
    for p in factor_triples(nranks):
        surface = p[0] * p[1] + p[1] * p[2] + p[0] * p[2]
        key = (surface, p)
        if best is None or key < best:
            best = key
    return best[1]


def _cube_side(nranks: int) -> int:
    k = round(nranks ** (1.0 / 3.0))
    if k**3 != nranks:
        raise ValueError(
            f"infeasible sizing: refinement kernels need a cube rank count "
            f"(1, 8, 27, ...), got {nranks}")
    return k


def _wave_base(nranks: int, per_dim: int) -> dict[str, str]:
    grid = most_cubic_grid(nranks)
    npoints = " ".join(str(per_dim * g) for g in grid)
    return {
        "flesh::thorns": "wave",
        "grid::npoints": npoints,
        "grid::periodic": "true",
        "driver::nranks": str(nranks),
        "mol::scheme": "rk4",
        "mol::cfl": "0.5",
        "wave::epsilon": "0.1",
    }


def _params_unigrid_wave(nranks: int) -> dict[str, str]:
    raw = _wave_base(nranks, 32)
    raw["driver::name"] = "unigrid"
    return raw


def _params_amr1lev_wave(nranks: int) -> dict[str, str]:
    raw = _wave_base(nranks, 32)
    raw["driver::name"] = "amr"
    raw["amr::nlevels"] = "1"
    return raw


def _params_amr8lev_wave(nranks: int) -> dict[str, str]:
    k = _cube_side(nranks)
    n = 32 * k
    half = 0.5
    return {
        "flesh::thorns": "wave",
        "grid::npoints": str(n),
        "grid::periodic": "true",
        "driver::name": "amr",
        "driver::nranks": str(nranks),
        "mol::scheme": "rk2",
        "mol::cfl": "0.4",
        "amr::nlevels": "8",
        "amr::centres": f"{half},{half},{half}",
        "amr::half_widths": str(16 * k),
        "amr::buffer_factor": "1",
        "wave::initial_data": "gaussian",
        "wave::gaussian_sigma": "0.08",
    }


def _params_amr_hydro(nranks: int) -> dict[str, str]:
    k = _cube_side(nranks)
    n = 32 * k
    return {
        "flesh::thorns": "hydro",
        "grid::npoints": str(n),
        "grid::periodic": "true",
        "driver::name": "amr",
        "driver::nranks": str(nranks),
        "mol::scheme": "rk2",
        "mol::cfl": "0.2",
        "amr::nlevels": "2",
        "amr::centres": "0.5,0.5,0.5",
        "amr::half_widths": str(16 * k),
        "amr::buffer_factor": "1",
        "hydro::initial_data": "smooth",
    }


def _params_io(nranks: int, out_dir: str) -> dict[str, str]:
    raw = _wave_base(nranks, 64)
    raw["driver::name"] = "unigrid"
    raw["flesh::thorns"] = "wave ballast"
    raw["io::out_dir"] = out_dir
    return raw


@dataclass(frozen=True)
class KernelSpec:
    name: str
    params: object  # nranks -> raw parameter dict
    steps: int
    memory_target: int  # bytes per rank of evolved storage


KERNELS = {
    "unigrid-wave-pugh": KernelSpec(
        "unigrid-wave-pugh", _params_unigrid_wave, 10, 7 * 32**3 * 8),
    "unigrid-wave-amr1lev": KernelSpec(
        "unigrid-wave-amr1lev", _params_amr1lev_wave, 10, 7 * 32**3 * 8),
    "amr8lev-wave": KernelSpec(
        "amr8lev-wave", _params_amr8lev_wave, 2, 7 * 32**3 * 8),
    "amr-hydro": KernelSpec(
        "amr-hydro", _params_amr_hydro, 4, 15 * 32**3 * 8),
    "io-checkpoint": KernelSpec(
        "io-checkpoint", _params_io, 2, 8 * 64**3 * 8),
}


def _owned_updates_per_step(sim) -> int:
    total = 0
    for b in sim.driver.blocks:
        vol = b.box.volume
        total += vol * 2 ** getattr(b, "level", 0)
    return total


def run_weak_scaling(kernel: str, ranks, parallel: bool = True,
                     workdir: str = ".") -> list[dict]:
    """Time one kernel across rank counts; returns one result row per run
    (the io kernel returns one row per output strategy per rank count)."""
    if kernel not in KERNELS:
        raise ValueError(f"unknown kernel {kernel!r} "
                         f"(have: {', '.join(sorted(KERNELS))})")
    spec = KERNELS[kernel]
    if kernel == "io-checkpoint":
        rows = _run_io_kernel(spec, ranks, parallel, workdir)
    else:
        rows = []
        for r in ranks:
            raw = spec.params(r)
            if parallel:
                raw["driver::nworkers"] = str(min(r, os.cpu_count() or 1))
            sim = Simulator(raw)
            sim.run(0)  # startup + initial data, excluded from timing
            t0 = _time.perf_counter()
            sim.run(spec.steps)
            seconds = _time.perf_counter() - t0
            updates = _owned_updates_per_step(sim) * spec.steps
            sim.shutdown()
            rows.append({
                "kernel": kernel,
                "ranks": r,
                "seconds": seconds,
                "updates_per_s": updates / seconds if seconds > 0 else 0.0,
                "efficiency": 0.0,
            })
    _fill_efficiency(rows)
    return rows


def _run_io_kernel(spec, ranks, parallel, workdir):
    rows = []
    for r in ranks:
        for strategy in ("single-collector", "every-nth", "per-rank"):
            out_dir = os.path.join(workdir, f"bench_io_r{r}_{strategy}")
            raw = spec.params(r, out_dir)
            raw["io::strategy"] = strategy
            if parallel:
                raw["driver::nworkers"] = str(min(r, os.cpu_count() or 1))
            sim = Simulator(raw)
            sim.run(spec.steps)
            t0 = _time.perf_counter()
            path = sim.checkpoint()
            seconds = _time.perf_counter() - t0
            payload = sum(
                os.path.getsize(os.path.join(path, f))
                for f in os.listdir(path) if f.endswith(".tpst"))
            sim.shutdown()
            rows.append({
                "kernel": f"{spec.name}/{strategy}",
                "ranks": r,
                "seconds": seconds,
                "updates_per_s": (payload / 8) / seconds if seconds > 0 else 0.0,
                "efficiency": 0.0,
                "mb_per_s": payload / 1e6 / seconds if seconds > 0 else 0.0,
                "payload_bytes": payload,
            })
    return rows


def _fill_efficiency(rows):
    base: dict[str, float] = {}
    for row in rows:
        if row["kernel"] not in base:
            base[row["kernel"]] = row["seconds"]
            row["efficiency"] = 1.0
        else:
            s = row["seconds"]
            row["efficiency"] = base[row["kernel"]] / s if s > 0 else 0.0


REPORT_COLUMNS = ("kernel", "ranks", "seconds", "updates_per_s", "efficiency")


def emit_report(results, path, fmt: str | None = None) -> str:
    """Write results as CSV (stable column order) or JSON (all fields)."""
    if fmt is None:
        fmt = "json" if str(path).endswith(".json") else "csv"
    if fmt == "json":
        with open(path, "w") as f:
            json.dump(list(results), f, indent=1)
    elif fmt == "csv":
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(REPORT_COLUMNS)
            for row in results:
                w.writerow([row[c] for c in REPORT_COLUMNS])
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    return str(path)
