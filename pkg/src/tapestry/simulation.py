"""Simulator: parameters, thorn registration, driver selection, main loop.

A Simulator is built from a parsed parameter table. It registers the
requested thorns against the flesh, builds the unigrid or refinement
driver, allocates storage, and runs the schedule bins around the
method-of-lines integrator. Steering, pause/resume, checkpoint requests,
and reduction queries arriving over HTTP are applied only between
iterations, so a running step is never perturbed.
"""

from __future__ import annotations

import time as _time
from concurrent.futures import ThreadPoolExecutor

from . import hydro, mol, wave
from . import io as tio
from .amr import AMRDriver
from .flesh import (Flesh, ParameterError, ParameterSpec, VariableGroup,
                    load_parameter_file, parse_parameter_file)
from .unigrid import DomainSpec, Mesh


def _ballast_register(sim):
    """Inert storage used by I/O benchmarks to reach a target payload size."""
    sim.flesh.declare_group(VariableGroup("ballast", "pad", ("b0",)))


THORNS = {
    "wave": wave.register,
    "hydro": hydro.register,
    "ballast": _ballast_register,
}


class BlockCtx:
    """Handed to per-block schedule items outside the EVOL bin."""

    def __init__(self, sim, block):
        self.sim = sim
        self.block = block

    def coords(self):
        return self.block.coords()

    def spacing(self):
        return self.block.spacing

    def state(self, group, var):
        return self.block.var(group, var, 0)


class UnigridDriver:
    """Single-level driver: one block per simulated rank over the domain."""

    name = "unigrid"

    def __init__(self, domain: DomainSpec, nranks: int, gw: int, strategy: str):
        self.domain = domain
        self.mesh = Mesh(domain, nranks, gw, strategy)
        self.groups: dict[str, tuple[tuple[str, ...], int]] = {}

    @property
    def blocks(self):
        return self.mesh.blocks

    @property
    def message_count(self):
        return self.mesh.message_count

    @property
    def message_points(self):
        return self.mesh.message_points

    def allocate(self, group_name, variables, time_levels):
        self.groups[group_name] = (tuple(variables), time_levels)
        self.mesh.allocate(group_name, variables, time_levels)

    def sync(self, group_vars, tl: int = 0):
        self.mesh.sync(group_vars, tl)

    def sync_groups(self, names, tl: int = 0):
        for name in names:
            variables, _ = self.groups[name]
            self.mesh.sync([(name, v) for v in variables], tl)

    def run_per_block(self, fn, pool=None):
        self.mesh.run_per_block(fn, pool)

    def advance(self, sim):
        for g in sorted({g for g, _ in sim.evolved}):
            for b in self.blocks:
                b.rotate(g)
        mol.mol_step(sim, self.blocks, self.sync, sim.t, sim.dt,
                     sim.flesh.order("EVOL"), sim.evolved, sim.tableau,
                     lambda fn: self.run_per_block(fn, sim.pool))

    def gather(self, group, var, tl=0):
        return self.mesh.gather(group, var, tl)

    def reduce(self, group, var, op, tl=0):
        return self.mesh.reduce(group, var, op, tl)

    def interpolate(self, group, var, points, order=3, tl=0):
        return self.mesh.interpolate(group, var, points, order, tl)

    def description(self):
        return {
            "nlevels": 1,
            "levels": [{
                "index": 0,
                "blocks": [[b.rank, list(b.box.lo), list(b.box.hi)]
                           for b in self.blocks],
            }],
        }


def _split_list(text: str) -> list[str]:
    return text.replace(",", " ").split()


class Simulator:
    def __init__(self, raw_params: dict[str, str], restored: bool = False):
        self.flesh = Flesh()
        self.evolved: list[tuple[str, str]] = []
        self.speed_hints: list = []
        self.observables: dict[str, float] = {}
        self.events: list[str] = []
        self.iteration = 0
        self.t = 0.0
        self.dt = None
        self.pool = None
        self.monitor = None
        self.paused = False
        self.terminating = False
        self.restored = restored
        self.current_bin = "none"
        self._started = False
        self._t0 = None
        self._raw_params = dict(raw_params)
        self._declare_core()
        thorn_names = _split_list(raw_params.get("flesh::thorns", "wave"))
        for name in thorn_names:
            if name not in THORNS:
                raise ParameterError(
                    f"unknown thorn '{name}' (have: {', '.join(sorted(THORNS))})")
            THORNS[name](self)
        for key, value in raw_params.items():
            self.flesh.set_initial(key, value)
        self.domain = self._build_domain()
        self.driver = self._build_driver()
        for group in self.flesh.groups.values():
            self.driver.allocate(group.full_name, group.variables,
                                 group.time_levels)
        self.tableau = mol.SCHEMES[self.flesh.get("mol::scheme")]

    # -- construction -------------------------------------------------------

    def _declare_core(self):
        f = self.flesh
        P = ParameterSpec
        f.declare_param(P("flesh", "thorns", "string", "wave",
                          "physics thorns to activate"))
        f.declare_param(P("flesh", "itlast", "int", 0,
                          "stop after this many iterations", steerable=True,
                          low=0))
        f.declare_param(P("flesh", "tfinal", "real", 0.0,
                          "stop at this coordinate time (0: ignore)",
                          steerable=True))
        f.declare_param(P("grid", "npoints", "string", "33 33 33",
                          "grid points per dimension"))
        f.declare_param(P("grid", "xmin", "string", "0 0 0",
                          "lower domain corner"))
        f.declare_param(P("grid", "xmax", "string", "1 1 1",
                          "upper domain corner"))
        f.declare_param(P("grid", "periodic", "string", "true true true",
                          "periodic wrap per dimension"))
        f.declare_param(P("driver", "name", "keyword", "unigrid",
                          "domain decomposition driver",
                          choices=("unigrid", "amr")))
        f.declare_param(P("driver", "nranks", "int", 1,
                          "simulated process count", low=1))
        f.declare_param(P("driver", "strategy", "keyword", "directional",
                          "ghost exchange strategy",
                          choices=("directional", "neighbors")))
        f.declare_param(P("driver", "ghost_width", "int", 3,
                          "ghost points per side", low=1))
        f.declare_param(P("driver", "nworkers", "int", 0,
                          "worker threads for per-block work (0: sequential)",
                          low=0))
        f.declare_param(P("mol", "scheme", "keyword", "rk4",
                          "time integration scheme",
                          choices=tuple(sorted(mol.SCHEMES))))
        f.declare_param(P("mol", "cfl", "real", 0.25,
                          "Courant factor for automatic dt", low=0.0))
        f.declare_param(P("mol", "dt", "real", 0.0,
                          "explicit time step (0: cfl-based)", low=0.0))
        f.declare_param(P("amr", "nlevels", "int", 1,
                          "refinement levels including the base grid", low=1))
        f.declare_param(P("amr", "centres", "string", "0.5,0.5,0.5",
                          "refinement centres, semicolon separated"))
        f.declare_param(P("amr", "half_widths", "string", "16",
                          "box half-width per refined level, in own points"))
        f.declare_param(P("amr", "spatial_order", "int", 5,
                          "prolongation order (odd)", low=1, high=7))
        f.declare_param(P("amr", "time_order", "int", 2,
                          "time interpolation order", low=1, high=4))
        f.declare_param(P("amr", "buffer_factor", "int", 2,
                          "buffer width in units of substeps times stencil",
                          low=1))
        f.declare_param(P("amr", "regrid_every", "int", 0,
                          "rebuild refined boxes every n iterations (0: never)",
                          low=0))
        f.declare_param(P("io", "out_dir", "string", "out",
                          "output directory"))
        f.declare_param(P("io", "out_every", "int", 0,
                          "write selected variables every n iterations",
                          steerable=True, low=0))
        f.declare_param(P("io", "out_vars", "string", "",
                          "variables to write, e.g. 'wave::phi'"))
        f.declare_param(P("io", "strategy", "keyword", "single-collector",
                          "file layout for parallel output",
                          choices=("single-collector", "every-nth", "per-rank")))
        f.declare_param(P("io", "every_nth", "int", 4,
                          "ranks per file for the every-nth strategy", low=1))
        f.declare_param(P("io", "checkpoint_every", "int", 0,
                          "write a checkpoint every n iterations",
                          steerable=True, low=0))
        f.declare_param(P("http", "enabled", "bool", False,
                          "serve live status over HTTP"))
        f.declare_param(P("http", "port", "int", 0,
                          "listen port (0: pick a free one)", low=0))

    def _triple(self, name, conv):
        parts = _split_list(self.flesh.get(name))
        if len(parts) == 1:
            parts = parts * 3
        if len(parts) != 3:
            raise ParameterError(f"{name} needs 1 or 3 entries")
        try:
            return tuple(conv(p) for p in parts)
        except ValueError as e:
            raise ParameterError(f"{name}: {e}") from None

    def _build_domain(self):
        def to_bool(s):
            low = s.lower()
            if low in ("true", "yes", "1"):
                return True
            if low in ("false", "no", "0"):
                return False
            raise ValueError(f"not a boolean: {s!r}")

        return DomainSpec(
            self._triple("grid::npoints", int),
            self._triple("grid::xmin", float),
            self._triple("grid::xmax", float),
            self._triple("grid::periodic", to_bool),
        )

    def _build_driver(self):
        f = self.flesh
        nranks = f.get("driver::nranks")
        gw = f.get("driver::ghost_width")
        if f.get("driver::name") == "unigrid":
            return UnigridDriver(self.domain, nranks, gw,
                                 f.get("driver::strategy"))
        centres = []
        for part in f.get("amr::centres").split(";"):
            part = part.strip()
            if part:
                centres.append(tuple(float(c) for c in _split_list(part)))
        half_widths = [int(w) for w in _split_list(f.get("amr::half_widths"))]
        substeps = mol.substeps_of(f.get("mol::scheme"))
        buffer_width = substeps * gw * f.get("amr::buffer_factor")
        return AMRDriver(
            self.domain, nranks, gw, f.get("amr::nlevels"), centres,
            half_widths, spatial_order=f.get("amr::spatial_order"),
            time_order=f.get("amr::time_order"), buffer_width=buffer_width)

    @classmethod
    def from_parfile(cls, path) -> "Simulator":
        return cls(load_parameter_file(path))

    @classmethod
    def from_checkpoint(cls, path, nranks: int | None = None) -> "Simulator":
        """Rebuild a simulator from a checkpoint directory; the stored state
        replaces initial data. The rank count may differ from the writer's."""
        manifest = tio.read_manifest(path)
        raw = dict(manifest["parameters"])
        if nranks is not None:
            raw["driver::nranks"] = str(nranks)
        sim = cls(raw, restored=True)
        tio.checkpoint_load(sim, path, manifest)
        sim._sync_everything()
        return sim

    # -- schedule execution -------------------------------------------------

    def run_bin(self, bin_name: str):
        self.current_bin = bin_name
        for item in self.flesh.order(bin_name):
            label = f"{bin_name}/{item.thorn}::{item.name}"
            with self.flesh.timed(label):
                if item.per_block:
                    def call(b, item=item):
                        try:
                            item.func(BlockCtx(self, b))
                        except Exception as e:
                            raise RuntimeError(
                                f"schedule item {item.thorn}::{item.name} "
                                f"failed on block of rank {b.rank}: {e}") from e
                    self.driver.run_per_block(call, self.pool)
                else:
                    try:
                        item.func(self)
                    except Exception as e:
                        raise RuntimeError(
                            f"schedule item {item.thorn}::{item.name} "
                            f"failed: {e}") from e
            if item.sync:
                self.driver.sync_groups(item.sync)

    def _sync_everything(self):
        for name, (_, time_levels) in self.driver.groups.items():
            for tl in range(time_levels):
                self.driver.sync_groups([name], tl)

    # -- time step ----------------------------------------------------------

    def coarse_spacing(self):
        return self.domain.spacing()

    def _resolve_dt(self):
        if self.dt is not None:
            return
        explicit = self.flesh.get("mol::dt")
        if explicit > 0.0:
            self.dt = explicit
        else:
            speed = 0.0
            for hint in self.speed_hints:
                speed = max(speed, float(hint(self)))
            if speed <= 0.0:
                raise ParameterError(
                    "no propagation speed known; set mol::dt explicitly")
            self.dt = self.flesh.get("mol::cfl") * min(self.coarse_spacing()) / speed
        if self.dt <= 0.0:
            raise ParameterError("time step must be positive")
        if isinstance(self.driver, AMRDriver) and not self.restored:
            self.driver.init_times(self.t, self.dt)

    # -- main loop ----------------------------------------------------------

    def run(self, niters: int | None = None, t_end: float | None = None):
        """Advance until a limit is hit: explicit arguments take precedence
        over flesh::itlast / flesh::tfinal. Returns iterations done."""
        if self.pool is None and self.flesh.get("driver::nworkers") > 0:
            self.pool = ThreadPoolExecutor(
                max_workers=self.flesh.get("driver::nworkers"))
        if self._t0 is None:
            self._t0 = _time.monotonic()
        if not self._started:
            with self.flesh.timed("bin/STARTUP"):
                self.run_bin("STARTUP")
            self._started = True
            if not self.restored:
                with self.flesh.timed("bin/INITIAL"):
                    self.run_bin("INITIAL")
                self._sync_everything()
        self._resolve_dt()
        if self.monitor is None and self.flesh.get("http::enabled"):
            from .monitor import Monitor
            self.monitor = Monitor(self, self.flesh.get("http::port"))
            self.monitor.start()
        start_iter = self.iteration
        limit = niters if niters is not None else None
        while True:
            if self.monitor is not None:
                self.monitor.service()
            if self.terminating:
                break
            if limit is not None and self.iteration - start_iter >= limit:
                break
            if limit is None:
                itlast = self.flesh.get("flesh::itlast")
                if itlast and self.iteration >= itlast:
                    break
            tfinal = t_end if t_end is not None else self.flesh.get("flesh::tfinal")
            if tfinal and self.t >= tfinal - 1e-12 * max(1.0, abs(tfinal)):
                break
            regrid_every = self.flesh.get("amr::regrid_every")
            if (regrid_every and isinstance(self.driver, AMRDriver)
                    and self.iteration and self.iteration % regrid_every == 0):
                with self.flesh.timed("bin/REGRID"):
                    self.driver.regrid(self.driver.centres, self.evolved)
            with self.flesh.timed("bin/PRESTEP"):
                self.run_bin("PRESTEP")
            with self.flesh.timed("bin/EVOL"):
                self.driver.advance(self)
            self.t = self.t + self.dt
            self.iteration += 1
            with self.flesh.timed("bin/POSTSTEP"):
                self.run_bin("POSTSTEP")
            with self.flesh.timed("bin/ANALYSIS"):
                self.run_bin("ANALYSIS")
            with self.flesh.timed("bin/OUTPUT"):
                self.run_bin("OUTPUT")
                out_every = self.flesh.get("io::out_every")
                if out_every and self.iteration % out_every == 0:
                    tio.write_vars(self)
                ck_every = self.flesh.get("io::checkpoint_every")
                if ck_every and self.iteration % ck_every == 0:
                    self.checkpoint()
        if self.monitor is not None:
            self.monitor.publish()
        return self.iteration - start_iter

    def shutdown(self):
        with self.flesh.timed("bin/SHUTDOWN"):
            self.run_bin("SHUTDOWN")
        if self.monitor is not None:
            self.monitor.stop()
            self.monitor = None
        if self.pool is not None:
            self.pool.shutdown()
            self.pool = None

    # -- services for the monitor and I/O -----------------------------------

    def uptime(self) -> float:
        if self._t0 is None:
            return 0.0
        return _time.monotonic() - self._t0

    def checkpoint(self):
        path = tio.checkpoint_write(self)
        self.events.append(f"{self.iteration} checkpoint {path}")
        return path

    def resolve_variable(self, name: str) -> tuple[str, str]:
        """'wave::phi' -> ('wave::state', 'phi'): find the group of a leaf."""
        if "::" not in name:
            raise KeyError(f"variable name needs thorn:: prefix: {name!r}")
        thorn, leaf = name.split("::", 1)
        for group in self.flesh.groups.values():
            if group.thorn == thorn and leaf in group.variables:
                return group.full_name, leaf
        raise KeyError(f"unknown variable {name!r}")

    def variable_names(self) -> list[str]:
        out = []
        for group in self.flesh.groups.values():
            for v in group.variables:
                out.append(f"{group.thorn}::{v}")
        return sorted(out)

    def state_dict(self) -> dict:
        norms = {}
        for gv in self.evolved:
            group, var = gv
            thorn = group.split("::", 1)[0]
            norms[f"{thorn}::{var}"] = self.driver.reduce(group, var, "l2")
        return {
            "iteration": self.iteration,
            "time": self.t,
            "dt": self.dt,
            "uptime": self.uptime(),
            "bin": self.current_bin,
            "state": "paused" if self.paused else "running",
            "paused": self.paused,
            "terminating": self.terminating,
            "driver": self.flesh.get("driver::name"),
            "nranks": self.flesh.get("driver::nranks"),
            "scheme": self.flesh.get("mol::scheme"),
            "nlevels": getattr(self.driver, "nlevels", 1),
            "norms": norms,
            "observables": dict(self.observables),
        }
