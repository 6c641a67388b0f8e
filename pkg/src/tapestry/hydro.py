"""Newtonian compressible hydrodynamics: ideal-gas Euler equations.

Finite-volume style update on the vertex grid: primitive reconstruction
(PLM with minmod slopes, or PPM with monotonized parabolas and optional
contact steepening on the density), HLLE interface fluxes, and unsplit
summation of the three directional flux differences. Conserved variables
are density D, momentum Sx/Sy/Sz, and total energy E.
"""

from __future__ import annotations

import numpy as np

from .flesh import ParameterSpec, ScheduleItem, VariableGroup

STENCIL_RADIUS = 3
GROUP = "hydro::cons"
VARS = ("D", "Sx", "Sy", "Sz", "E")

# contact steepening thresholds (density jump vs pressure jump)
K0 = 0.1


def minmod_slopes(a: np.ndarray) -> np.ndarray:
    """Limited central slope per cell along the last axis; zero where the
    data has an extremum, and zero in the outermost cell on each side."""
    dm = np.zeros_like(a)
    da = 0.5 * (a[..., 2:] - a[..., :-2])
    lim = 2.0 * np.minimum(np.abs(a[..., 1:-1] - a[..., :-2]),
                           np.abs(a[..., 2:] - a[..., 1:-1]))
    mono = (a[..., 2:] - a[..., 1:-1]) * (a[..., 1:-1] - a[..., :-2]) > 0
    dm[..., 1:-1] = np.where(
        mono, np.sign(da) * np.minimum(np.abs(da), lim), 0.0)
    return dm


def plm_reconstruct(a: np.ndarray):
    """Left/right face states of cells 2..n-3 along the last axis."""
    dm = minmod_slopes(a)
    ac = a[..., 2:-2].copy()
    s = dm[..., 2:-2]
    return ac - 0.5 * s, ac + 0.5 * s, ac


def ppm_reconstruct(a: np.ndarray, gamma: float = 1.4,
                    steepen_rho: bool = False, rho=None, p=None):
    """Piecewise-parabolic face states of cells 2..n-3 along the last axis.

    With steepen_rho, cells flagged as contact discontinuities blend the
    parabola's faces toward one-sided slope extrapolations, which keeps
    moving contacts from diffusing over ever more cells.
    """
    dm = minmod_slopes(a)
    af = a[..., 1:-2] + 0.5 * (a[..., 2:-1] - a[..., 1:-2]) \
        - (1.0 / 6.0) * (dm[..., 2:-1] - dm[..., 1:-2])
    aL = af[..., :-1].copy()
    aR = af[..., 1:].copy()
    ac = a[..., 2:-2].copy()

    if steepen_rho:
        r = rho
        d2 = np.zeros_like(r)
        d2[..., 1:-1] = (r[..., 2:] - 2.0 * r[..., 1:-1] + r[..., :-2]) / 6.0
        d2m, d2p = d2[..., 1:-3], d2[..., 3:-1]
        rm, rp = r[..., 1:-3], r[..., 3:-1]
        denom = rp - rm
        with np.errstate(divide="ignore", invalid="ignore"):
            eta_t = np.where(
                (d2p * d2m < 0)
                & (np.abs(denom) > 0.01 * np.minimum(np.abs(rp), np.abs(rm))),
                -(d2p - d2m) / np.where(denom == 0, 1.0, denom),
                0.0,
            )
        eta = np.clip(20.0 * (eta_t - 0.05), 0.0, 1.0)
        pm, pp = p[..., 1:-3], p[..., 3:-1]
        pj = np.abs(pp - pm) / np.minimum(pp, pm)
        rj = np.abs(rp - rm) / np.minimum(rp, rm)
        eta = np.where(gamma * K0 * rj >= pj, eta, 0.0)
        aLd = a[..., 1:-3] + 0.5 * dm[..., 1:-3]
        aRd = a[..., 3:-1] - 0.5 * dm[..., 3:-1]
        aL = aL * (1.0 - eta) + aLd * eta
        aR = aR * (1.0 - eta) + aRd * eta

    cond = (aR - ac) * (ac - aL) <= 0.0
    aL[cond] = ac[cond]
    aR[cond] = ac[cond]
    d = aR - aL
    q = d * (ac - 0.5 * (aL + aR))
    c1 = q > d * d / 6.0
    aL[c1] = 3.0 * ac[c1] - 2.0 * aR[c1]
    c2 = -d * d / 6.0 > q
    aR[c2] = 3.0 * ac[c2] - 2.0 * aL[c2]
    return aL, aR, ac


def hlle_flux(gamma, Lrho, Lvn, Lvt1, Lvt2, Lp, Rrho, Rvn, Rvt1, Rvt2, Rp):
    """HLLE flux of (rho, mom_n, mom_t1, mom_t2, E) through each interface."""
    csL = np.sqrt(gamma * Lp / Lrho)
    csR = np.sqrt(gamma * Rp / Rrho)
    sL = np.minimum(Lvn - csL, Rvn - csR)
    sR = np.maximum(Lvn + csL, Rvn + csR)
    sLc = np.minimum(sL, 0.0)
    sRc = np.maximum(sR, 0.0)
    span = sRc - sLc
    out = []
    for UK, FK in zip(_con_states(gamma, Lrho, Lvn, Lvt1, Lvt2, Lp,
                                  Rrho, Rvn, Rvt1, Rvt2, Rp),
                      _flux_states(gamma, Lrho, Lvn, Lvt1, Lvt2, Lp,
                                   Rrho, Rvn, Rvt1, Rvt2, Rp)):
        UL, UR = UK
        FL, FR = FK
        out.append((sRc * FL - sLc * FR + sLc * sRc * (UR - UL)) / span)
    return out


def _energy(gamma, rho, vn, vt1, vt2, p):
    return p / (gamma - 1.0) + 0.5 * rho * (vn * vn + vt1 * vt1 + vt2 * vt2)


def _con_states(gamma, Lrho, Lvn, Lvt1, Lvt2, Lp, Rrho, Rvn, Rvt1, Rvt2, Rp):
    EL = _energy(gamma, Lrho, Lvn, Lvt1, Lvt2, Lp)
    ER = _energy(gamma, Rrho, Rvn, Rvt1, Rvt2, Rp)
    return (
        (Lrho, Rrho),
        (Lrho * Lvn, Rrho * Rvn),
        (Lrho * Lvt1, Rrho * Rvt1),
        (Lrho * Lvt2, Rrho * Rvt2),
        (EL, ER),
    )


def _flux_states(gamma, Lrho, Lvn, Lvt1, Lvt2, Lp, Rrho, Rvn, Rvt1, Rvt2, Rp):
    EL = _energy(gamma, Lrho, Lvn, Lvt1, Lvt2, Lp)
    ER = _energy(gamma, Rrho, Rvn, Rvt1, Rvt2, Rp)
    return (
        (Lrho * Lvn, Rrho * Rvn),
        (Lrho * Lvn * Lvn + Lp, Rrho * Rvn * Rvn + Rp),
        (Lrho * Lvn * Lvt1, Rrho * Rvn * Rvt1),
        (Lrho * Lvn * Lvt2, Rrho * Rvn * Rvt2),
        ((EL + Lp) * Lvn, (ER + Rp) * Rvn),
    )


def register(sim):
    f = sim.flesh
    f.declare_param(ParameterSpec("hydro", "gamma", "real", 1.4,
                                  "adiabatic index", low=1.0))
    f.declare_param(ParameterSpec(
        "hydro", "reconstruction", "keyword", "ppm",
        "face-state reconstruction", choices=("plm", "ppm")))
    f.declare_param(ParameterSpec("hydro", "steepening", "bool", True,
                                  "sharpen contact discontinuities (ppm only)"))
    f.declare_param(ParameterSpec("hydro", "rho_floor", "real", 1e-10,
                                  "density floor", low=0.0))
    f.declare_param(ParameterSpec("hydro", "p_floor", "real", 1e-12,
                                  "pressure floor", low=0.0))
    f.declare_param(ParameterSpec(
        "hydro", "initial_data", "keyword", "sod-x", "initial data family",
        choices=("sod-x", "sod-y", "sod-z", "smooth")))
    f.declare_group(VariableGroup("hydro", "cons", VARS, time_levels=3))
    f.schedule(ScheduleItem("hydro", "hydro_init", "INITIAL", _init))
    f.schedule(ScheduleItem("hydro", "hydro_rhs", "EVOL", _rhs))
    f.schedule(ScheduleItem("hydro", "hydro_floor_count", "POSTSTEP",
                            _aggregate_floors, per_block=False))
    f.schedule(ScheduleItem("hydro", "hydro_mass", "ANALYSIS",
                            _total_mass, per_block=False))
    for v in VARS:
        sim.evolved.append((GROUP, v))
    sim.speed_hints.append(_speed_hint)


def _prims_of(sim, D, Sx, Sy, Sz, E):
    """Primitive recovery with floors; returns (rho, vx, vy, vz, p, nfloor)."""
    gamma = sim.flesh.get("hydro::gamma")
    rho_floor = sim.flesh.get("hydro::rho_floor")
    p_floor = sim.flesh.get("hydro::p_floor")
    nfloor = int(np.count_nonzero(D < rho_floor))
    rho = np.maximum(D, rho_floor)
    vx = Sx / rho
    vy = Sy / rho
    vz = Sz / rho
    praw = (gamma - 1.0) * (E - 0.5 * (Sx * Sx + Sy * Sy + Sz * Sz) / rho)
    nfloor += int(np.count_nonzero(praw < p_floor))
    p = np.maximum(praw, p_floor)
    return rho, vx, vy, vz, p, nfloor


def _init(ctx):
    b = ctx.block
    sim = ctx.sim
    kind = sim.flesh.get("hydro::initial_data")
    gamma = sim.flesh.get("hydro::gamma")
    x, y, z = ctx.coords()
    X, Y, Z = np.meshgrid(x, y, z, indexing="ij")
    if kind.startswith("sod-"):
        axis = "xyz".index(kind[-1])
        C = (X, Y, Z)[axis]
        mid = 0.5 * (sim.domain.xmin[axis] + sim.domain.xmax[axis])
        left = C < mid
        rho = np.where(left, 1.0, 0.125)
        p = np.where(left, 1.0, 0.1)
        vx = vy = vz = np.zeros_like(rho)
    else:  # smooth: density wave advected at unit speed in x
        rho = 1.0 + 0.2 * np.sin(2.0 * np.pi * X)
        p = np.ones_like(rho)
        vx = np.ones_like(rho)
        vy = vz = np.zeros_like(rho)
    D = rho
    Sx, Sy, Sz = rho * vx, rho * vy, rho * vz
    E = p / (gamma - 1.0) + 0.5 * rho * (vx * vx + vy * vy + vz * vz)
    for name, vals in zip(VARS, (D, Sx, Sy, Sz, E)):
        for tl in range(len(b.data[GROUP])):
            b.var(GROUP, name, tl)[...] = vals
    b.hydro_floor_events = 0


def _rhs(ctx):
    b = ctx.block
    sim = ctx.sim
    gamma = sim.flesh.get("hydro::gamma")
    p_floor = sim.flesh.get("hydro::p_floor")
    rho_floor = sim.flesh.get("hydro::rho_floor")
    recon = sim.flesh.get("hydro::reconstruction")
    steepen = sim.flesh.get("hydro::steepening")
    h = ctx.spacing()
    gw = b.gw
    fields = [ctx.state(GROUP, v) for v in VARS]
    rho, vx, vy, vz, p, nfloor = _prims_of(sim, *fields)
    vel = (vx, vy, vz)
    outs = [ctx.out(GROUP, v) for v in VARS]
    own = b.owned
    for axis in range(3):
        t1 = (axis + 1) % 3
        t2 = (axis + 2) % 3
        sel = list(own)
        sel[axis] = slice(None)

        def pencil(a):
            return np.moveaxis(a[tuple(sel)], axis, -1)

        prho = pencil(rho)
        pp = pencil(p)
        raw = [prho, pencil(vel[axis]), pencil(vel[t1]), pencil(vel[t2]), pp]
        states = []
        for i, a in enumerate(raw):
            if recon == "ppm":
                states.append(ppm_reconstruct(
                    a, gamma, steepen_rho=(steepen and i == 0),
                    rho=prho, p=pp))
            else:
                states.append(plm_reconstruct(a))
        # interface between cell j and j+1: left comes from cell j's right
        # face, right from cell j+1's left face
        L = [s[1][..., :-1] for s in states]
        R = [s[0][..., 1:] for s in states]
        nfloor += int(np.count_nonzero(L[0] < rho_floor))
        nfloor += int(np.count_nonzero(R[0] < rho_floor))
        nfloor += int(np.count_nonzero(L[4] < p_floor))
        nfloor += int(np.count_nonzero(R[4] < p_floor))
        L[0] = np.maximum(L[0], rho_floor)
        R[0] = np.maximum(R[0], rho_floor)
        L[4] = np.maximum(L[4], p_floor)
        R[4] = np.maximum(R[4], p_floor)
        F = hlle_flux(gamma, *L, *R)
        # local conserved ordering -> global variable index
        comp = [0, 1 + axis, 1 + t1, 1 + t2, 4]
        for i, Fi in enumerate(F):
            dF = -(Fi[..., 1:] - Fi[..., :-1]) / h[axis]
            outs[comp[i]][own] += np.moveaxis(dF, -1, axis)
    b.hydro_floor_events = getattr(b, "hydro_floor_events", 0) + nfloor


def _aggregate_floors(sim):
    total = sum(getattr(b, "hydro_floor_events", 0)
                for b in sim.driver.blocks)
    sim.observables["hydro::floor_events"] = total


def _total_mass(sim):
    h = sim.coarse_spacing()
    total = sim.driver.reduce(GROUP, "D", "sum")
    sim.observables["hydro::total_mass"] = total * h[0] * h[1] * h[2]


def _speed_hint(sim):
    """1.5x the largest |v|+cs of the current state: headroom for transients
    between the initial data and the strongest waves they launch."""
    gamma = sim.flesh.get("hydro::gamma")
    smax = 0.0
    for b in sim.driver.blocks:
        fields = [b.var(GROUP, v)[b.owned] for v in VARS]
        rho, vx, vy, vz, p, _ = _prims_of(sim, *fields)
        speed = np.sqrt(vx * vx + vy * vy + vz * vz) + np.sqrt(gamma * p / rho)
        if speed.size:
            smax = max(smax, float(speed.max()))
    return 1.5 * smax
