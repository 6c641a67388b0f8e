"""Berger-Oliger mesh refinement driver.

Factor-2 nested levels are built around centres of interest. Each level
owns its refined region plus a buffer band sized so that the integrator's
substeps can run without touching the coarser level: interpolation from
coarse data (5th-order Lagrange in space by default, polynomial in time
across stored time levels) happens only once per complete fine step, into
the buffer+ghost band. After the two fine steps of a coarse step, fine
data are injected back onto coincident coarse points.

Level 0 always covers the whole domain, so a 1-level hierarchy runs the
identical numerical path as the unigrid driver, block for block.
"""

from __future__ import annotations

import numpy as np

from . import mol
from .region import Box, Region
from .unigrid import (Block, DomainSpec, choose_process_grid, factor_triples,
                      lagrange_weights, reduce_array, split_extent)


class NestingError(Exception):
    pass


def midpoint_weights(order: int) -> np.ndarray:
    """Lagrange weights for the point halfway between two grid points,
    using order+1 symmetric nodes."""
    if order % 2 != 1 or not 1 <= order <= 7:
        raise ValueError("prolongation order must be odd, 1..7")
    off0 = -(order - 1) // 2
    nodes = np.arange(off0, off0 + order + 1, dtype=float)
    return lagrange_weights(0.5, nodes)


def refine_axis(src: np.ndarray, axis: int, fa: int, fb: int, cl: int,
                order: int) -> np.ndarray:
    """Refine one axis by factor 2: coarse index range starts at cl, fine
    output covers [fa, fb). Even fine indices copy the coincident coarse
    value bitwise; odd ones get the midpoint Lagrange combination."""
    w = midpoint_weights(order)
    off0 = -(order - 1) // 2
    shape = list(src.shape)
    shape[axis] = fb - fa
    out = np.empty(shape)
    fe = fa if fa % 2 == 0 else fa + 1
    ne = (fb - fe + 1) // 2
    if ne > 0:
        dst = [slice(None)] * src.ndim
        dst[axis] = slice(fe - fa, fe - fa + 2 * ne, 2)
        ssl = [slice(None)] * src.ndim
        ssl[axis] = slice(fe // 2 - cl, fe // 2 - cl + ne)
        out[tuple(dst)] = src[tuple(ssl)]
    fo = fa if fa % 2 == 1 else fa + 1
    no = (fb - fo + 1) // 2
    if no > 0:
        dst = [slice(None)] * src.ndim
        dst[axis] = slice(fo - fa, fo - fa + 2 * no, 2)
        c0 = (fo - 1) // 2
        acc = None
        for k in range(order + 1):
            s0 = c0 + off0 + k - cl
            ssl = [slice(None)] * src.ndim
            ssl[axis] = slice(s0, s0 + no)
            term = w[k] * src[tuple(ssl)]
            acc = term if acc is None else acc + term
        out[tuple(dst)] = acc
    return out


def coarse_need(box: Box, order: int) -> Box:
    """Coarse index box whose data suffices to prolong onto `box`."""
    m = (order + 1) // 2
    lo = tuple(l // 2 - m for l in box.lo)
    hi = tuple((h - 1) // 2 + m + 1 for h in box.hi)
    return Box(lo, hi)


def prolong_box(target: Box, coarse: np.ndarray, coarse_origin, order: int
                ) -> np.ndarray:
    """Fine values on `target` from a coarse array anchored at coarse_origin."""
    need = coarse_need(target, order)
    sl = need.slicer(coarse_origin)
    for s, n in zip(sl, coarse.shape):
        if s.start < 0 or s.stop > n:
            raise NestingError("insufficient coarse data for prolongation")
    arr = coarse[sl]
    for axis in range(3):
        arr = refine_axis(arr, axis, target.lo[axis], target.hi[axis],
                          need.lo[axis], order)
    return arr


def snap_box(centre_idx, half_width: int, npoints) -> Box:
    """Box of +-half_width points around a centre, pushed outward to even
    indices so its points coincide with the coarser grid, clipped to the
    level's index range."""
    lo, hi = [], []
    for c, n in zip(centre_idx, npoints):
        a = c - half_width
        a -= a % 2
        b = c + half_width
        b += b % 2
        a = max(a, 0)
        b = min(b, n - 1)
        b -= b % 2
        lo.append(a)
        hi.append(b + 1)
    return Box(tuple(lo), tuple(hi))


class Level:
    def __init__(self, index: int, domain: DomainSpec, region: Region,
                 ext: Region, gw: int, nranks: int):
        self.index = index
        self.domain = domain
        self.region = region
        self.ext = ext
        self.gw = gw
        self.spacing = tuple(h / 2**index for h in domain.spacing())
        self.npoints = level_points(domain, index)
        self.blocks: list[Block] = []
        self.times: list[float] = []
        self.steps = 0
        bid = 0
        for ibox, box in enumerate(ext.boxes):
            for j, piece in enumerate(split_box(box, nranks, gw)):
                rank = (ibox + j) % nranks
                self.blocks.append(Block(
                    rank, piece, gw, spacing=self.spacing, xmin=domain.xmin,
                    level=index, block_id=(index, bid)))
                bid += 1
        # ghost+buffer band refilled from the coarser level each complete step
        self.fill_band = ext.grow(gw).subtract(region)

    def allocate(self, group_name, variables, time_levels):
        for b in self.blocks:
            b.allocate(group_name, variables, time_levels)

    def rotate(self, groups):
        for b in self.blocks:
            for g in groups:
                b.rotate(g)
        if self.times:
            self.times = [self.times[0]] + self.times[:-1]


def level_points(domain: DomainSpec, index: int):
    out = []
    for n, per in zip(domain.npoints, domain.periodic):
        out.append(n * 2**index if per else (n - 1) * 2**index + 1)
    return tuple(out)


def split_box(box: Box, nranks: int, gw: int) -> list[Box]:
    """Split one box into at most nranks blocks, every extent >= gw."""
    for r in range(nranks, 0, -1):
        best = None
        for p in factor_triples(r):
            if any(n // pi < max(gw, 1) for n, pi in zip(box.extent, p)):
                continue
            ext = tuple(-(-n // pi) for n, pi in zip(box.extent, p))
            surface = 2 * (ext[0] * ext[1] + ext[1] * ext[2] + ext[0] * ext[2])
            key = (surface, p)
            if best is None or key < best:
                best = key
        if best is None:
            continue
        grid = best[1]
        splits = [split_extent(n, p) for n, p in zip(box.extent, grid)]
        out = []
        for ix in range(grid[0]):
            for iy in range(grid[1]):
                for iz in range(grid[2]):
                    lo = (box.lo[0] + splits[0][ix][0],
                          box.lo[1] + splits[1][iy][0],
                          box.lo[2] + splits[2][iz][0])
                    hi = (box.lo[0] + splits[0][ix][1],
                          box.lo[1] + splits[1][iy][1],
                          box.lo[2] + splits[2][iz][1])
                    out.append(Box(lo, hi))
        return out
    raise ValueError(f"box {box} cannot host ghost width {gw}")


def build_regions(domain: DomainSpec, centres, half_widths, nlevels: int,
                  buffer_width: int, gw: int, order: int):
    """Per-level (region, extended region) pairs; raises NestingError when a
    level's interpolation needs reach outside the next coarser region."""
    levels = []
    whole = Box((0, 0, 0), level_points(domain, 0))
    levels.append((Region([whole]), Region([whole])))
    for idx in range(1, nlevels):
        hw = half_widths[min(idx - 1, len(half_widths) - 1)]
        h = [s / 2**idx for s in domain.spacing()]
        npts = level_points(domain, idx)
        region = Region()
        for c in centres:
            cidx = tuple(int(round((c[d] - domain.xmin[d]) / h[d]))
                         for d in range(3))
            region.add(snap_box(cidx, hw, npts))
        if region.empty:
            raise NestingError(f"level {idx}: no refined points for any centre")
        ext = region.grow(buffer_width)
        coarse_region = levels[idx - 1][0]
        for b in ext.grow(gw).boxes:
            need = coarse_need(b, order)
            lo = list(need.lo)
            hi = list(need.hi)
            for d in range(3):
                if idx == 1 and domain.periodic[d]:
                    # wrap margin is honoured by padded gathers
                    lo[d] = max(lo[d], 0)
                    hi[d] = min(hi[d], domain.npoints[d])
            if not coarse_region.contains_box(Box(tuple(lo), tuple(hi))):
                raise NestingError(
                    f"level {idx} not properly nested: needs coarse box "
                    f"{Box(tuple(lo), tuple(hi))} outside level {idx - 1}")
        levels.append((region, ext))
    return levels


class AMRDriver:
    """Driver protocol over a refinement hierarchy."""

    def __init__(self, domain: DomainSpec, nranks: int, gw: int, nlevels: int,
                 centres, half_widths, spatial_order: int = 5,
                 time_order: int = 2, buffer_width: int = 0):
        self.domain = domain
        self.nranks = nranks
        self.gw = gw
        self.spatial_order = spatial_order
        self.time_order = time_order
        self.buffer_width = buffer_width
        self.centres = [tuple(c) for c in centres]
        self.half_widths = list(half_widths)
        self.nlevels = nlevels
        self.levels: list[Level] = []
        self.groups: dict[str, tuple[tuple[str, ...], int]] = {}
        self._build()

    def _build(self):
        regions = build_regions(self.domain, self.centres, self.half_widths,
                                self.nlevels, self.buffer_width, self.gw,
                                self.spatial_order)
        self.levels = [Level(i, self.domain, r, x, self.gw, self.nranks)
                       for i, (r, x) in enumerate(regions)]

    # -- storage ------------------------------------------------------------

    def allocate(self, group_name, variables, time_levels):
        tls = max(time_levels, self.time_order + 1)
        self.groups[group_name] = (tuple(variables), tls)
        for lv in self.levels:
            lv.allocate(group_name, variables, tls)

    @property
    def blocks(self):
        return [b for lv in self.levels for b in lv.blocks]

    def run_per_block(self, fn, pool=None):
        if pool is None:
            for b in self.blocks:
                fn(b)
        else:
            list(pool.map(fn, self.blocks))

    def _run_level(self, lv, fn, pool=None):
        if pool is None:
            for b in lv.blocks:
                fn(b)
        else:
            list(pool.map(fn, lv.blocks))

    # -- ghost fill within one level ----------------------------------------

    def sync_level(self, lv: Level, group_vars, tl: int = 0):
        """Copy sibling data into ghost slabs; at level 0 also wrap or clamp
        physical boundaries. Refinement-boundary ghosts are left alone."""
        g = self.gw
        N = lv.npoints
        for b in lv.blocks:
            for ox in (-1, 0, 1):
                for oy in (-1, 0, 1):
                    for oz in (-1, 0, 1):
                        offset = (ox, oy, oz)
                        if offset == (0, 0, 0):
                            continue
                        tlo, thi = [0, 0, 0], [0, 0, 0]
                        for d in range(3):
                            if offset[d] == 0:
                                tlo[d], thi[d] = b.box.lo[d], b.box.hi[d]
                            elif offset[d] < 0:
                                tlo[d], thi[d] = b.box.lo[d] - g, b.box.lo[d]
                            else:
                                tlo[d], thi[d] = b.box.hi[d], b.box.hi[d] + g
                        target = Box(tuple(tlo), tuple(thi))
                        if target.empty:
                            continue
                        shift = [0, 0, 0]
                        clamp = []
                        if lv.index == 0:
                            for d in range(3):
                                if target.lo[d] < 0 or target.hi[d] > N[d]:
                                    if self.domain.periodic[d]:
                                        shift[d] = N[d] if target.lo[d] < 0 else -N[d]
                                    else:
                                        clamp.append(d)
                        self._fill_target(lv, b, target, tuple(shift), clamp,
                                          group_vars, tl)

    def _fill_target(self, lv, b, target, shift, clamp, group_vars, tl):
        src_lo = [l + s for l, s in zip(target.lo, shift)]
        src_hi = [h + s for h, s in zip(target.hi, shift)]
        for d in clamp:
            edge = 0 if target.lo[d] < 0 else lv.npoints[d] - 1
            src_lo[d], src_hi[d] = edge, edge + 1
        lookup = Box(tuple(src_lo), tuple(src_hi))
        for s in lv.blocks:
            ov = lookup.intersect(s.box)
            if ov.empty:
                continue
            dlo = list(ov.lo)
            dhi = list(ov.hi)
            for d in range(3):
                if d in clamp:
                    dlo[d], dhi[d] = target.lo[d], target.hi[d]
                else:
                    dlo[d] -= shift[d]
                    dhi[d] -= shift[d]
            dst_box = Box(tuple(dlo), tuple(dhi))
            ssl = s.local(ov)
            dsl = b.local(dst_box)
            for gname, v in group_vars:
                b.var(gname, v, tl)[dsl] = s.var(gname, v, tl)[ssl]

    def sync(self, group_vars, tl: int = 0):
        for lv in self.levels:
            self.sync_level(lv, group_vars, tl)

    def sync_groups(self, names, tl: int = 0):
        for name in names:
            variables, _ = self.groups[name]
            self.sync([(name, v) for v in variables], tl)

    # -- inter-level transfer -----------------------------------------------

    def gather_level(self, lv: Level, group, var, tl=0):
        """(array over the level region's bounding box, origin)."""
        bbox = lv.region.bounding_box()
        out = np.zeros(bbox.extent)
        for b in lv.blocks:
            ov = b.box.intersect(bbox)
            if ov.empty:
                continue
            out[ov.slicer(bbox.lo)] = b.var(group, var, tl)[b.local(ov)]
        return out, bbox.lo

    def _source_at_time(self, lv: Level, group, var, t):
        """Level data time-interpolated to t, padded for wrap at level 0."""
        stored = lv.times
        order = min(self.time_order, len(stored) - 1)
        scale = max(1.0, abs(t))
        exact = [j for j, tj in enumerate(stored) if abs(tj - t) < 1e-12 * scale]
        if exact:
            arr, org = self.gather_level(lv, group, var, exact[0])
        else:
            nodes = np.array(stored[:order + 1])
            if t > nodes.max() + 1e-9 * scale:
                raise ValueError(
                    f"time interpolation target {t} beyond stored levels {nodes}")
            w = lagrange_weights(t, nodes)
            arr = None
            org = None
            for j in range(order + 1):
                aj, org = self.gather_level(lv, group, var, j)
                term = w[j] * aj
                arr = term if arr is None else arr + term
        if lv.index == 0 and any(self.domain.periodic):
            # margin covers stencils reaching outside fine ghost zones
            m = (self.spatial_order + 1) // 2 + self.gw
            pads = tuple((m, m) if per else (0, 0) for per in self.domain.periodic)
            if any(p[0] for p in pads):
                arr = np.pad(arr, pads, mode="wrap")
                org = tuple(o - p[0] for o, p in zip(org, pads))
        return arr, org

    def fill_boundary(self, lv: Level, t: float, group_vars):
        """Prolongate the buffer+ghost band of level lv from level lv-1 at
        time t, then refresh sibling ghosts."""
        coarse = self.levels[lv.index - 1]
        for gname, v in group_vars:
            src, org = self._source_at_time(coarse, gname, v, t)
            for b in lv.blocks:
                arr_box = b.box.grow(self.gw)
                for band_box in lv.fill_band.boxes:
                    piece = band_box.intersect(arr_box)
                    if piece.empty:
                        continue
                    vals = prolong_box(piece, src, org, self.spatial_order)
                    b.var(gname, v, 0)[b.local(piece)] = vals
        self.sync_level(lv, group_vars)

    def restrict(self, fine: Level, group_vars):
        """Inject fine values at coincident points into the coarser level."""
        coarse = self.levels[fine.index - 1]
        for fb in fine.blocks:
            for piece in fine.region.intersect_box(fb.box).boxes:
                clo = tuple(-(-l // 2) for l in piece.lo)
                chi = tuple((h - 1) // 2 + 1 for h in piece.hi)
                cbox = Box(clo, chi)
                if cbox.empty:
                    continue
                for cb in coarse.blocks:
                    tv = cbox.intersect(cb.box)
                    if tv.empty:
                        continue
                    ssl = tuple(
                        slice(2 * l - o, 2 * (h - 1) - o + 1, 2)
                        for l, h, o in zip(tv.lo, tv.hi, fb.origin))
                    for gname, v in group_vars:
                        cb.var(gname, v, 0)[cb.local(tv)] = \
                            fb.var(gname, v, 0)[ssl]
        self.sync_level(coarse, group_vars)

    # -- evolution ----------------------------------------------------------

    def advance(self, sim):
        self._recurse(sim, 0, sim.t, sim.dt)

    def _recurse(self, sim, idx: int, t: float, dt: float):
        lv = self.levels[idx]
        evolved = sim.evolved
        if idx > 0:
            self.fill_boundary(lv, t, evolved)
        lv.rotate(sorted({g for g, _ in evolved}))
        mol.mol_step(
            sim, lv.blocks, lambda gv, tl=0: self.sync_level(lv, gv, tl),
            t, dt, sim.flesh.order("EVOL"), evolved, sim.tableau,
            lambda fn: self._run_level(lv, fn, sim.pool))
        lv.steps += 1
        if lv.times:
            lv.times[0] = t + dt
        if idx + 1 < len(self.levels):
            self._recurse(sim, idx + 1, t, dt / 2)
            self._recurse(sim, idx + 1, t + dt / 2, dt / 2)
            self.restrict(self.levels[idx + 1], evolved)

    def init_times(self, t0: float, dt: float):
        tls = max((t for _, t in self.groups.values()), default=1)
        for lv in self.levels:
            step = dt / 2**lv.index
            lv.times = [t0 - j * step for j in range(tls)]

    # -- global views (level 0) ---------------------------------------------

    def gather(self, group, var, tl=0):
        out = np.empty(self.domain.npoints)
        for b in self.levels[0].blocks:
            out[b.box.slicer((0, 0, 0))] = b.var(group, var, tl)[b.owned]
        return out

    def reduce(self, group, var, op, tl=0):
        return reduce_array(self.gather(group, var, tl), op)

    def interpolate(self, group, var, points, order=3, tl=0):
        from .unigrid import interpolate_array
        return interpolate_array(self.gather(group, var, tl), self.domain,
                                 points, order)

    # -- regridding ---------------------------------------------------------

    def regrid(self, new_centres, evolved=()):
        """Move refined boxes to follow new centres. Points present before
        and after keep their bits; newly exposed points of evolved variables
        are prolonged from the level below at each stored time."""
        old_levels = self.levels
        self.centres = [tuple(c) for c in new_centres]
        regions = build_regions(self.domain, self.centres, self.half_widths,
                                self.nlevels, self.buffer_width, self.gw,
                                self.spatial_order)
        new_levels = [old_levels[0]]
        for idx in range(1, self.nlevels):
            region, ext = regions[idx]
            lv = Level(idx, self.domain, region, ext, self.gw, self.nranks)
            old = old_levels[idx]
            lv.times = list(old.times)
            lv.steps = old.steps
            covered = Region()
            for ob in old.blocks:
                covered.add(ob.box)
            for gname, (variables, tls) in self.groups.items():
                lv.allocate(gname, variables, tls)
                for v in variables:
                    pairs = [(tl, lv.times[tl]) for tl in range(tls)
                             if (gname, v) in evolved and tl < len(lv.times)]
                    for tl in range(tls):
                        for nb in lv.blocks:
                            for ob in old.blocks:
                                ov = nb.box.intersect(ob.box)
                                if ov.empty:
                                    continue
                                nb.var(gname, v, tl)[nb.local(ov)] = \
                                    ob.var(gname, v, tl)[ob.local(ov)]
                    for tl, t_tl in pairs:
                        src = org = None
                        for nb in lv.blocks:
                            for miss in Region([nb.box]).subtract(covered).boxes:
                                if src is None:
                                    src, org = self._source_at_time(
                                        new_levels[idx - 1], gname, v, t_tl)
                                nb.var(gname, v, tl)[nb.local(miss)] = \
                                    prolong_box(miss, src, org,
                                                self.spatial_order)
                for tl in range(tls):
                    self.sync_level(lv, [(gname, v) for v in variables], tl)
            new_levels.append(lv)
        self.levels = new_levels

    def description(self):
        return {
            "nlevels": self.nlevels,
            "centres": [list(c) for c in self.centres],
            "half_widths": self.half_widths,
            "levels": [
                {
                    "index": lv.index,
                    "times": lv.times,
                    "region": [[list(b.lo), list(b.hi)] for b in lv.region.boxes],
                    "blocks": [[b.rank, list(b.box.lo), list(b.box.hi)]
                               for b in lv.blocks],
                }
                for lv in self.levels
            ],
        }
