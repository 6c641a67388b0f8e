"""Scalar wave equation as a first-order-in-time system.

phi_t = pi, pi_t = c^2 lap(phi), discretized with fourth-order centered
second differences (radius 2) plus fifth-order Kreiss-Oliger dissipation
(radius 3) on both fields, for a total stencil radius of 3.
"""

from __future__ import annotations

import numpy as np

from .flesh import ParameterSpec, ScheduleItem, VariableGroup

STENCIL_RADIUS = 3
GROUP = "wave::state"

# f'' weights over offsets -2..2, divided by 12 h^2
D2_W = (-1.0, 16.0, -30.0, 16.0, -1.0)
# f' weights over offsets -2..2, divided by 12 h
D1_W = (1.0, -8.0, 0.0, 8.0, -1.0)
# sixth difference over offsets -3..3; dissipation adds eps/(64 h) times this
KO_W = (1.0, -6.0, 15.0, -20.0, 15.0, -6.0, 1.0)


def stencil1d(a: np.ndarray, dim: int, weights, gw: int) -> np.ndarray:
    """Weighted sum of shifts of `a` along dim, evaluated on the owned core.

    `a` is padded with gw ghosts per side; the weight list spans offsets
    -r..r with r = (len-1)/2 <= gw. Returns an owned-shape array.
    """
    r = (len(weights) - 1) // 2
    out = np.zeros(tuple(s - 2 * gw for s in a.shape))
    core = [slice(gw, s - gw) for s in a.shape]
    for k, w in enumerate(weights):
        if w == 0.0:
            continue
        sl = list(core)
        sl[dim] = slice(gw + k - r, a.shape[dim] - gw + k - r)
        out += w * a[tuple(sl)]
    return out


def laplacian4(a: np.ndarray, h, gw: int) -> np.ndarray:
    out = stencil1d(a, 0, D2_W, gw) / (12.0 * h[0] * h[0])
    out += stencil1d(a, 1, D2_W, gw) / (12.0 * h[1] * h[1])
    out += stencil1d(a, 2, D2_W, gw) / (12.0 * h[2] * h[2])
    return out


def dissipation(a: np.ndarray, h, eps: float, gw: int) -> np.ndarray:
    out = (eps / (64.0 * h[0])) * stencil1d(a, 0, KO_W, gw)
    out += (eps / (64.0 * h[1])) * stencil1d(a, 1, KO_W, gw)
    out += (eps / (64.0 * h[2])) * stencil1d(a, 2, KO_W, gw)
    return out


def gradient4(a: np.ndarray, h, gw: int) -> list[np.ndarray]:
    return [stencil1d(a, d, D1_W, gw) / (12.0 * h[d]) for d in range(3)]


def plane_wave(x, y, z, t, c):
    """Exact solution moving in +x on a unit-periodic domain."""
    phase = 2.0 * np.pi * (x - c * t)
    return np.sin(phase), -2.0 * np.pi * c * np.cos(phase)


def register(sim):
    f = sim.flesh
    f.declare_param(ParameterSpec("wave", "c", "real", 1.0, "wave speed", low=0.0))
    f.declare_param(ParameterSpec("wave", "epsilon", "real", 0.1,
                                  "Kreiss-Oliger dissipation strength",
                                  steerable=True, low=0.0))
    f.declare_param(ParameterSpec(
        "wave", "initial_data", "keyword", "plane", "initial data family",
        choices=("minkowski-constant", "gaussian", "plane")))
    f.declare_param(ParameterSpec("wave", "gaussian_sigma", "real", 0.1,
                                  "width of the gaussian pulse", low=0.0))
    f.declare_param(ParameterSpec("wave", "source_amplitude", "real", 0.0,
                                  "amplitude of a time-constant source on pi",
                                  steerable=True))
    f.declare_group(VariableGroup("wave", "state", ("phi", "pi"), time_levels=3))
    f.schedule(ScheduleItem("wave", "wave_init", "INITIAL", _init))
    f.schedule(ScheduleItem("wave", "wave_rhs", "EVOL", _rhs))
    f.schedule(ScheduleItem("wave", "wave_energy_density", "ANALYSIS", _energy_density))
    f.schedule(ScheduleItem("wave", "wave_energy", "ANALYSIS", _energy,
                            after=("wave_energy_density",), per_block=False))
    f.declare_group(VariableGroup("wave", "analysis", ("energy_density",)))
    sim.evolved.append((GROUP, "phi"))
    sim.evolved.append((GROUP, "pi"))
    sim.speed_hints.append(lambda s: s.flesh.get("wave::c"))


def _init(ctx):
    b = ctx.block
    kind = ctx.sim.flesh.get("wave::initial_data")
    c = ctx.sim.flesh.get("wave::c")
    x, y, z = ctx.coords()
    X, Y, Z = np.meshgrid(x, y, z, indexing="ij")
    phi = b.var(GROUP, "phi")
    pi = b.var(GROUP, "pi")
    if kind == "minkowski-constant":
        phi[...] = 0.0
        pi[...] = 0.0
    elif kind == "plane":
        phi[...], pi[...] = plane_wave(X, Y, Z, 0.0, c)
    elif kind == "gaussian":
        sigma = ctx.sim.flesh.get("wave::gaussian_sigma")
        if sigma <= 0:
            raise ValueError("wave::gaussian_sigma must be positive")
        centre = [0.5 * (a + bb) for a, bb in
                  zip(ctx.sim.domain.xmin, ctx.sim.domain.xmax)]
        r2 = (X - centre[0]) ** 2 + (Y - centre[1]) ** 2 + (Z - centre[2]) ** 2
        phi[...] = np.exp(-r2 / (2.0 * sigma * sigma))
        pi[...] = 0.0
    # past levels start as copies so early time interpolation sees flat history
    for tl in range(1, len(b.data[GROUP])):
        b.var(GROUP, "phi", tl)[...] = phi
        b.var(GROUP, "pi", tl)[...] = pi


def _rhs(ctx):
    b = ctx.block
    gw = b.gw
    h = ctx.spacing()
    c = ctx.sim.flesh.get("wave::c")
    eps = ctx.sim.flesh.get("wave::epsilon")
    src = ctx.sim.flesh.get("wave::source_amplitude")
    phi = ctx.state(GROUP, "phi")
    pi = ctx.state(GROUP, "pi")
    own = b.owned
    kphi = ctx.out(GROUP, "phi")
    kpi = ctx.out(GROUP, "pi")
    kphi[own] += pi[own]
    kpi[own] += (c * c) * laplacian4(phi, h, gw)
    if eps != 0.0:
        kphi[own] += dissipation(phi, h, eps, gw)
        kpi[own] += dissipation(pi, h, eps, gw)
    if src != 0.0:
        kpi[own] += src


def _energy_density(ctx):
    b = ctx.block
    h = ctx.spacing()
    c = ctx.sim.flesh.get("wave::c")
    pi = b.var(GROUP, "pi")
    phi = b.var(GROUP, "phi")
    gx, gy, gz = gradient4(phi, h, b.gw)
    dens = 0.5 * pi[b.owned] ** 2 + 0.5 * c * c * (gx**2 + gy**2 + gz**2)
    b.var("wave::analysis", "energy_density")[b.owned] = dens


def _energy(sim):
    h = sim.coarse_spacing()
    cell = h[0] * h[1] * h[2]
    total = sim.driver.reduce("wave::analysis", "energy_density", "sum")
    sim.observables["wave::energy"] = total * cell
