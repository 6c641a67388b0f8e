"""Module registry and scheduler.

Thorns (components) register parameters, grid-variable groups, and schedule
items against one of eight fixed bins. The flesh resolves each bin's items
into a deterministic order (topological sort over after/before constraints,
ties broken by item name), runs them, and accumulates per-item timers.

Parameter values live here too: typed, optionally steerable at runtime, with
every applied change appended to a steering log.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field

BINS = (
    "STARTUP",
    "INITIAL",
    "PRESTEP",
    "EVOL",
    "POSTSTEP",
    "ANALYSIS",
    "OUTPUT",
    "SHUTDOWN",
)

PARAM_KINDS = ("int", "real", "bool", "keyword", "string")


class ParameterError(Exception):
    pass


class ScheduleError(Exception):
    pass


@dataclass
class ParameterSpec:
    thorn: str
    name: str
    kind: str
    default: object
    description: str = ""
    steerable: bool = False
    choices: tuple = ()          # keyword kind only
    low: float | None = None     # numeric range, inclusive
    high: float | None = None

    @property
    def full_name(self) -> str:
        return f"{self.thorn}::{self.name}"

    def coerce(self, value):
        """Parse/validate a raw value (string from a parameter file, or native)."""
        if self.kind == "int":
            if isinstance(value, bool):
                raise ParameterError(f"{self.full_name}: expected int, got bool")
            try:
                v = int(value)
            except (TypeError, ValueError):
                raise ParameterError(f"{self.full_name}: expected int, got {value!r}")
        elif self.kind == "real":
            try:
                v = float(value)
            except (TypeError, ValueError):
                raise ParameterError(f"{self.full_name}: expected real, got {value!r}")
        elif self.kind == "bool":
            if isinstance(value, bool):
                v = value
            elif isinstance(value, str) and value.lower() in ("true", "yes", "1"):
                v = True
            elif isinstance(value, str) and value.lower() in ("false", "no", "0"):
                v = False
            else:
                raise ParameterError(f"{self.full_name}: expected bool, got {value!r}")
        elif self.kind == "keyword":
            v = str(value).strip()
            if len(v) >= 2 and v[0] == v[-1] and v[0] in "'\"":
                v = v[1:-1]
            v = v.lower()
            if v not in self.choices:
                raise ParameterError(
                    f"{self.full_name}: {v!r} not one of {sorted(self.choices)}"
                )
        elif self.kind == "string":
            v = str(value)
            if len(v) >= 2 and v[0] == v[-1] and v[0] in "'\"":
                v = v[1:-1]
        else:
            raise ParameterError(f"{self.full_name}: unknown kind {self.kind!r}")
        if self.kind in ("int", "real"):
            if self.low is not None and v < self.low:
                raise ParameterError(f"{self.full_name}: {v} below minimum {self.low}")
            if self.high is not None and v > self.high:
                raise ParameterError(f"{self.full_name}: {v} above maximum {self.high}")
        return v


@dataclass
class VariableGroup:
    """A named set of grid functions allocated together on every block."""

    thorn: str
    name: str
    variables: tuple[str, ...]
    time_levels: int = 1

    @property
    def full_name(self) -> str:
        return f"{self.thorn}::{self.name}"


@dataclass
class ScheduleItem:
    thorn: str
    name: str
    bin: str
    func: object                      # callable(simulator) or callable(block) per driver contract
    after: tuple[str, ...] = ()
    before: tuple[str, ...] = ()
    sync: tuple[str, ...] = ()        # group full names to halo-exchange after the item runs
    per_block: bool = True


@dataclass
class Timer:
    calls: int = 0
    seconds: float = 0.0


class Flesh:
    """Registry plus scheduler. One instance per simulation."""

    def __init__(self):
        self.params: dict[str, ParameterSpec] = {}
        self.values: dict[str, object] = {}
        self.groups: dict[str, VariableGroup] = {}
        self.items: dict[str, list[ScheduleItem]] = {b: [] for b in BINS}
        self.timers: dict[str, Timer] = {}
        self.steering_log: list[str] = []
        self._order_cache: dict[str, list[ScheduleItem]] = {}

    # -- registration -------------------------------------------------------

    def declare_param(self, spec: ParameterSpec):
        key = spec.full_name
        if key in self.params:
            raise ParameterError(f"duplicate parameter {key}")
        self.params[key] = spec
        self.values[key] = spec.coerce(spec.default)

    def declare_group(self, group: VariableGroup):
        key = group.full_name
        if key in self.groups:
            raise ParameterError(f"duplicate variable group {key}")
        if group.time_levels < 1:
            raise ParameterError(f"{key}: time_levels must be >= 1")
        self.groups[key] = group

    def schedule(self, item: ScheduleItem):
        if item.bin not in BINS:
            raise ScheduleError(f"{item.name}: unknown bin {item.bin!r}")
        if any(existing.name == item.name for existing in self.items[item.bin]):
            raise ScheduleError(f"duplicate schedule item {item.name} in {item.bin}")
        self.items[item.bin].append(item)
        self._order_cache.pop(item.bin, None)

    # -- parameters ---------------------------------------------------------

    def get(self, full_name: str):
        try:
            return self.values[full_name]
        except KeyError:
            raise ParameterError(f"unknown parameter {full_name}")

    def set_initial(self, full_name: str, raw):
        """Set a value before the run starts (parameter file). Any parameter."""
        spec = self.params.get(full_name)
        if spec is None:
            raise ParameterError(f"unknown parameter {full_name}")
        self.values[full_name] = spec.coerce(raw)

    def steer(self, full_name: str, raw, iteration: int):
        """Apply a runtime change. Only steerable parameters; logs old and new."""
        spec = self.params.get(full_name)
        if spec is None:
            raise ParameterError(f"unknown parameter {full_name}")
        if not spec.steerable:
            raise ParameterError(f"{full_name} is not steerable")
        new = spec.coerce(raw)
        old = self.values[full_name]
        self.values[full_name] = new
        self.steering_log.append(f"{iteration} {full_name} {old} {new}")
        return old, new

    # -- schedule resolution ------------------------------------------------

    def order(self, bin_name: str) -> list[ScheduleItem]:
        if bin_name not in BINS:
            raise ScheduleError(f"unknown bin {bin_name!r}")
        cached = self._order_cache.get(bin_name)
        if cached is not None:
            return cached
        items = self.items[bin_name]
        by_name = {it.name: it for it in items}
        succ: dict[str, set[str]] = {n: set() for n in by_name}
        indeg = {n: 0 for n in by_name}
        for it in items:
            for dep in it.after:
                if dep in by_name and it.name not in succ[dep]:
                    succ[dep].add(it.name)
                    indeg[it.name] += 1
            for post in it.before:
                if post in by_name and post not in succ[it.name]:
                    succ[it.name].add(post)
                    indeg[post] += 1
        # Kahn with a heap: among ready items, lexicographically first runs next
        ready = [n for n, d in sorted(indeg.items()) if d == 0]
        heapq.heapify(ready)
        out = []
        while ready:
            n = heapq.heappop(ready)
            out.append(by_name[n])
            for m in succ[n]:
                indeg[m] -= 1
                if indeg[m] == 0:
                    heapq.heappush(ready, m)
        if len(out) != len(items):
            stuck = sorted(n for n, d in indeg.items() if d > 0)
            raise ScheduleError(f"schedule cycle in {bin_name} involving {stuck}")
        self._order_cache[bin_name] = out
        return out

    def timed(self, name: str):
        return _TimerContext(self.timers.setdefault(name, Timer()))

    def timer_report(self) -> dict[str, dict]:
        return {
            name: {"calls": t.calls, "seconds": t.seconds}
            for name, t in sorted(self.timers.items())
        }


class _TimerContext:
    def __init__(self, timer: Timer):
        self.timer = timer

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.timer.calls += 1
        self.timer.seconds += time.perf_counter() - self.t0
        return False


def parse_parameter_file(text: str) -> dict[str, str]:
    """Parse ``thorn::name = value`` lines; ``#`` starts a comment.

    Returns raw string values keyed by full parameter name, in file order.
    Validation against declared parameters happens when the values are applied.
    """
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ParameterError(f"line {lineno}: expected 'thorn::name = value'")
        lhs, rhs = stripped.split("=", 1)
        key = lhs.strip()
        if "::" not in key:
            raise ParameterError(f"line {lineno}: parameter {key!r} lacks thorn:: prefix")
        out[key] = rhs.strip()
    return out


def load_parameter_file(path) -> dict[str, str]:
    with open(path, encoding="utf-8") as f:
        return parse_parameter_file(f.read())
