"""Method-of-lines time integration: explicit Runge-Kutta over block storage.

The integrator owns no grid data. Each step it captures the state of the
evolved groups, then for every stage sets the stage state, asks the driver
to refresh ghosts, and runs the scheduled right-hand-side items per block
into scratch arrays. Stage arithmetic touches whole padded arrays in a
fixed coefficient order, so results are reproducible bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Tableau:
    name: str
    a: tuple[tuple[float, ...], ...]
    b: tuple[float, ...]
    c: tuple[float, ...]

    @property
    def stages(self) -> int:
        return len(self.b)

    def validate(self):
        for s, row in enumerate(self.a):
            if abs(sum(row) - self.c[s]) > 1e-12:
                raise ValueError(f"{self.name}: row {s} of a does not sum to c[{s}]")
        if abs(sum(self.b) - 1.0) > 1e-12:
            raise ValueError(f"{self.name}: b weights do not sum to 1")


SCHEMES: dict[str, Tableau] = {
    "euler": Tableau("euler", ((),), (1.0,), (0.0,)),
    "rk2": Tableau("rk2", ((), (0.5,)), (0.0, 1.0), (0.0, 0.5)),
    # Shu-Osher strong-stability-preserving third order, in Butcher form
    "rk3": Tableau(
        "rk3",
        ((), (1.0,), (0.25, 0.25)),
        (1 / 6, 1 / 6, 2 / 3),
        (0.0, 1.0, 0.5),
    ),
    "rk4": Tableau(
        "rk4",
        ((), (0.5,), (0.0, 0.5), (0.0, 0.0, 1.0)),
        (1 / 6, 1 / 3, 1 / 3, 1 / 6),
        (0.0, 0.5, 0.5, 1.0),
    ),
}

for _t in SCHEMES.values():
    _t.validate()


def substeps_of(scheme: str) -> int:
    return SCHEMES[scheme].stages


class StageContext:
    """Handed to every EVOL schedule item, once per block per stage."""

    def __init__(self, sim, block, t, dt, stage, k):
        self.sim = sim
        self.block = block
        self.t = t
        self.dt = dt
        self.stage = stage
        self._k = k

    def state(self, group: str, var: str) -> np.ndarray:
        return self.block.var(group, var, 0)

    def spacing(self) -> tuple[float, float, float]:
        return self.block.spacing

    def coords(self):
        return self.block.coords()

    def out(self, group: str, var: str) -> np.ndarray:
        """Scratch right-hand-side array; items accumulate into its owned region."""
        return self._k[(group, var)]


def mol_step(sim, blocks, sync, t, dt, rhs_items, evolved: list[tuple[str, str]],
             tableau: Tableau, run_per_block):
    """Advance tl 0 of the evolved (group, var) pairs by dt.

    sync(group_vars) refreshes ghosts of tl 0; rhs_items are the resolved
    EVOL schedule items; run_per_block maps a function over blocks.
    """
    if dt <= 0:
        raise ValueError("mol_step needs dt > 0")
    nstage = tableau.stages
    y0: dict[int, dict] = {}
    ks: dict[int, list] = {}

    def capture(b):
        y0[id(b)] = {gv: b.var(*gv, 0).copy() for gv in evolved}
        ks[id(b)] = []

    run_per_block(capture)

    for s in range(nstage):
        if s > 0:
            arow = tableau.a[s]

            def set_stage(b, arow=arow):
                base = y0[id(b)]
                kb = ks[id(b)]
                for gv in evolved:
                    acc = base[gv].copy()
                    for j, aj in enumerate(arow):
                        if aj != 0.0:
                            acc += (dt * aj) * kb[j][gv]
                    b.var(*gv, 0)[...] = acc

            run_per_block(set_stage)
        sync(evolved)
        ts = t + tableau.c[s] * dt

        def eval_rhs(b):
            k = {gv: np.zeros(b.shape) for gv in evolved}
            ks[id(b)].append(k)
            for item in rhs_items:
                item.func(StageContext(sim, b, ts, dt, s, k))

        run_per_block(eval_rhs)

    def combine(b):
        base = y0[id(b)]
        kb = ks[id(b)]
        for gv in evolved:
            acc = base[gv].copy()
            for j, bj in enumerate(tableau.b):
                if bj != 0.0:
                    acc += (dt * bj) * kb[j][gv]
            b.var(*gv, 0)[...] = acc

    run_per_block(combine)
    sync(evolved)
