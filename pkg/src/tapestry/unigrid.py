"""Unigrid driver: one block of a regular grid per simulated rank.

The domain is split by a process grid chosen to minimize per-block surface
area. Ghost zones are filled by explicit messages between blocks, delivered
in a fixed sort order so results never depend on execution interleaving.
Two interchangeable exchange strategies are provided:

* ``directional``: three sweeps (x, then y, then z). Each sweep sends two
  face slabs per block; slabs are widened in already-swept dimensions so
  edge and corner ghosts arrive transitively.
* ``neighbors``: one phase with up to 26 messages per block, one per
  face/edge/corner neighbor.

Both leave bit-identical ghost values, including at physical boundaries
(periodic wrap or copy of the nearest interior plane).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .region import Box

REDUCTION_OPS = ("sum", "min", "max", "l1", "l2", "linf", "count")


@dataclass(frozen=True)
class DomainSpec:
    """Vertex-centered grid covering [xmin, xmax] per dimension.

    Periodic dimensions identify point N with point 0, so spacing is
    (xmax-xmin)/N there and (xmax-xmin)/(N-1) otherwise.
    """

    npoints: tuple[int, int, int]
    xmin: tuple[float, float, float] = (0.0, 0.0, 0.0)
    xmax: tuple[float, float, float] = (1.0, 1.0, 1.0)
    periodic: tuple[bool, bool, bool] = (True, True, True)

    def spacing(self) -> tuple[float, float, float]:
        out = []
        for n, a, b, per in zip(self.npoints, self.xmin, self.xmax, self.periodic):
            out.append((b - a) / n if per else (b - a) / (n - 1))
        return tuple(out)

    def coord(self, dim: int, index) -> np.ndarray:
        return self.xmin[dim] + np.asarray(index, dtype=float) * self.spacing()[dim]


def factor_triples(r: int):
    for px in range(1, r + 1):
        if r % px:
            continue
        for py in range(1, r // px + 1):
            if (r // px) % py:
                continue
            yield (px, py, pz := r // px // py)


def choose_process_grid(nranks: int, npoints) -> tuple[int, int, int]:
    """Factorization of nranks minimizing per-block surface; ties go to the
    lexicographically smallest triple."""
    best = None
    for p in factor_triples(nranks):
        ext = tuple(-(-n // pi) for n, pi in zip(npoints, p))
        surface = 2 * (ext[0] * ext[1] + ext[1] * ext[2] + ext[0] * ext[2])
        key = (surface, p)
        if best is None or key < best:
            best = key
    return best[1]


def split_extent(n: int, parts: int) -> list[tuple[int, int]]:
    """Balanced contiguous split of [0, n) into `parts` ranges, larger first."""
    base, rem = divmod(n, parts)
    out = []
    lo = 0
    for i in range(parts):
        size = base + (1 if i < rem else 0)
        out.append((lo, lo + size))
        lo += size
    return out


class Block:
    """Owned sub-box plus ghost padding, with storage for every variable group.

    Index coordinates are global for the block's refinement level; physical
    position of point i along dim d is xmin[d] + i*spacing[d].
    """

    def __init__(self, rank: int, box: Box, gw: int, grid_pos=(0, 0, 0),
                 spacing=(1.0, 1.0, 1.0), xmin=(0.0, 0.0, 0.0), level: int = 0,
                 block_id=None):
        self.rank = rank
        self.box = box
        self.gw = gw
        self.grid_pos = grid_pos
        self.spacing = tuple(spacing)
        self.xmin = tuple(xmin)
        self.level = level
        self.block_id = block_id if block_id is not None else (level,) + tuple(box.lo)
        self.origin = tuple(l - gw for l in box.lo)
        self.shape = tuple(e + 2 * gw for e in box.extent)
        # group full name -> [time level] -> {var name: array}
        self.data: dict[str, list[dict[str, np.ndarray]]] = {}

    def allocate(self, group_name: str, variables, time_levels: int):
        self.data[group_name] = [
            {v: np.zeros(self.shape) for v in variables} for _ in range(time_levels)
        ]

    def var(self, group: str, name: str, tl: int = 0) -> np.ndarray:
        return self.data[group][tl][name]

    def rotate(self, group: str):
        """Shift time levels back: new level 0 starts as a copy of the old."""
        levels = self.data[group]
        if len(levels) > 1:
            levels.insert(0, {v: a.copy() for v, a in levels[0].items()})
            levels.pop()

    def local(self, box: Box) -> tuple[slice, slice, slice]:
        return box.slicer(self.origin)

    @property
    def owned(self) -> tuple[slice, slice, slice]:
        g = self.gw
        return tuple(slice(g, g + e) for e in self.box.extent)

    def coords(self, padded: bool = True):
        """1D coordinate arrays [x, y, z]; padded covers the ghost shell."""
        out = []
        for d in range(3):
            if padded:
                idx = np.arange(self.origin[d], self.origin[d] + self.shape[d])
            else:
                idx = np.arange(self.box.lo[d], self.box.hi[d])
            out.append(self.xmin[d] + idx.astype(float) * self.spacing[d])
        return out


def _interior_slab(box: Box, dim: int, side: int, gw: int) -> tuple[int, int]:
    # ghost range just outside the given face
    if side < 0:
        return box.lo[dim] - gw, box.lo[dim]
    return box.hi[dim], box.hi[dim] + gw


class Mesh:
    """All blocks of the unigrid decomposition, with exchange and reductions."""

    def __init__(self, domain: DomainSpec, nranks: int, gw: int,
                 strategy: str = "directional"):
        if strategy not in ("directional", "neighbors"):
            raise ValueError(f"unknown exchange strategy {strategy!r}")
        self.domain = domain
        self.nranks = nranks
        self.gw = gw
        self.strategy = strategy
        self.pgrid = choose_process_grid(nranks, domain.npoints)
        splits = [split_extent(n, p) for n, p in zip(domain.npoints, self.pgrid)]
        self.blocks: list[Block] = []
        rank = 0
        for ix in range(self.pgrid[0]):
            for iy in range(self.pgrid[1]):
                for iz in range(self.pgrid[2]):
                    lo = (splits[0][ix][0], splits[1][iy][0], splits[2][iz][0])
                    hi = (splits[0][ix][1], splits[1][iy][1], splits[2][iz][1])
                    box = Box(lo, hi)
                    if any(e < gw for e in box.extent):
                        raise ValueError(
                            f"block extent {box.extent} smaller than ghost width {gw}; "
                            f"use fewer ranks or a larger grid"
                        )
                    self.blocks.append(Block(
                        rank, box, gw, (ix, iy, iz),
                        spacing=domain.spacing(), xmin=domain.xmin))
                    rank += 1
        self._by_pos = {b.grid_pos: b for b in self.blocks}
        self.message_count = 0
        self.message_points = 0

    def allocate(self, group_name: str, variables, time_levels: int):
        for b in self.blocks:
            b.allocate(group_name, variables, time_levels)

    # -- ghost exchange -----------------------------------------------------

    def sync(self, group_vars: list[tuple[str, str]], tl: int = 0):
        """Fill ghosts for the given (group, var) pairs on every block."""
        if self.strategy == "directional":
            self._sync_directional(group_vars, tl)
        else:
            self._sync_neighbors(group_vars, tl)

    def _neighbor(self, pos, dim, side):
        """(block, wrap_shift) for the grid neighbor, or (None, clamp) at a wall."""
        p = list(pos)
        p[dim] += side
        n = self.domain.npoints[dim]
        if 0 <= p[dim] < self.pgrid[dim]:
            return self._by_pos[tuple(p)], 0
        if self.domain.periodic[dim]:
            p[dim] %= self.pgrid[dim]
            return self._by_pos[tuple(p)], -side * n
        return None, 0

    def _sync_directional(self, group_vars, tl):
        for dim in range(3):
            messages = []
            fills = []
            for b in self.blocks:
                for side in (-1, 1):
                    tlo = [b.origin[d] for d in range(3)]
                    thi = [b.origin[d] + b.shape[d] for d in range(3)]
                    # unswept dims stay at the owned extent
                    for d in range(dim + 1, 3):
                        tlo[d], thi[d] = b.box.lo[d], b.box.hi[d]
                    tlo[dim], thi[dim] = _interior_slab(b.box, dim, side, self.gw)
                    target = Box(tuple(tlo), tuple(thi))
                    if target.empty:
                        continue
                    src, shift = self._neighbor(b.grid_pos, dim, side)
                    if src is None:
                        fills.append((b, target, dim, side))
                    else:
                        offs = [0, 0, 0]
                        offs[dim] = shift
                        messages.append((dim, src.rank, b.rank, target.lo,
                                         src, b, target, target.shift(offs)))
            self._deliver(messages, group_vars, tl)
            for b, target, d, side in fills:
                self._clamp_fill(b, target, [d], group_vars, tl)

    def _sync_neighbors(self, group_vars, tl):
        messages = []
        fills = []
        for b in self.blocks:
            for ox in (-1, 0, 1):
                for oy in (-1, 0, 1):
                    for oz in (-1, 0, 1):
                        offset = (ox, oy, oz)
                        if offset == (0, 0, 0):
                            continue
                        tlo, thi = [0, 0, 0], [0, 0, 0]
                        clamp_dims = []
                        shift = [0, 0, 0]
                        src_pos = list(b.grid_pos)
                        for d in range(3):
                            if offset[d] == 0:
                                tlo[d], thi[d] = b.box.lo[d], b.box.hi[d]
                            else:
                                tlo[d], thi[d] = _interior_slab(
                                    b.box, d, offset[d], self.gw)
                                p = b.grid_pos[d] + offset[d]
                                if 0 <= p < self.pgrid[d]:
                                    src_pos[d] = p
                                elif self.domain.periodic[d]:
                                    src_pos[d] = p % self.pgrid[d]
                                    shift[d] = -offset[d] * self.domain.npoints[d]
                                else:
                                    clamp_dims.append(d)
                        target = Box(tuple(tlo), tuple(thi))
                        if target.empty:
                            continue
                        if clamp_dims:
                            # boundary wall in some dims; data may still come
                            # from a neighbor in the others
                            src = self._by_pos[tuple(
                                b.grid_pos[d] if d in clamp_dims else src_pos[d]
                                for d in range(3))]
                            fills.append((src, b, target, clamp_dims,
                                          tuple(shift), offset))
                        else:
                            src = self._by_pos[tuple(src_pos)]
                            messages.append((0, src.rank, b.rank, target.lo,
                                             src, b, target, target.shift(shift)))
        self._deliver(messages, group_vars, tl)
        for src, b, target, clamp_dims, shift, _ in fills:
            self._clamped_copy(src, b, target, clamp_dims, shift, group_vars, tl)

    def _deliver(self, messages, group_vars, tl):
        """Apply payloads sorted by (phase, source rank, destination, slab)."""
        messages.sort(key=lambda m: m[:4])
        for _, _, _, _, src, dst, target, source in messages:
            ssl = src.local(source)
            dsl = dst.local(target)
            for g, v in group_vars:
                payload = src.var(g, v, tl)[ssl].copy()
                dst.var(g, v, tl)[dsl] = payload
            if src is not dst or any(s for s in
                                     (source.lo[d] - target.lo[d] for d in range(3))):
                self.message_count += 1
                self.message_points += target.volume * len(group_vars)

    def _clamp_fill(self, b: Block, target: Box, dims, group_vars, tl):
        """Copy the nearest already-valid plane into a wall's ghost slab."""
        src_lo = list(target.lo)
        src_hi = list(target.hi)
        for d in dims:
            edge = b.box.lo[d] if target.lo[d] < b.box.lo[d] else b.box.hi[d] - 1
            src_lo[d], src_hi[d] = edge, edge + 1
        source = Box(tuple(src_lo), tuple(src_hi))
        dsl = b.local(target)
        ssl = b.local(source)
        for g, v in group_vars:
            arr = b.var(g, v, tl)
            arr[dsl] = arr[ssl]

    def _clamped_copy(self, src: Block, dst: Block, target: Box, clamp_dims,
                      shift, group_vars, tl):
        """Wall ghost fill where unclamped dims may live on a neighbor block."""
        src_lo = list(target.lo)
        src_hi = list(target.hi)
        for d in range(3):
            if d in clamp_dims:
                n = self.domain.npoints[d]
                edge = 0 if target.lo[d] < 0 else n - 1
                src_lo[d], src_hi[d] = edge, edge + 1
            else:
                src_lo[d] += shift[d]
                src_hi[d] += shift[d]
        source = Box(tuple(src_lo), tuple(src_hi))
        ssl = src.local(source)
        dsl = dst.local(target)
        for g, v in group_vars:
            dst.var(g, v, tl)[dsl] = src.var(g, v, tl)[ssl]
        if src is not dst:
            self.message_count += 1
            self.message_points += source.volume * len(group_vars)

    # -- global operations --------------------------------------------------

    def gather(self, group: str, var: str, tl: int = 0) -> np.ndarray:
        """Assemble the full grid from owned data, in rank order."""
        out = np.empty(self.domain.npoints)
        for b in self.blocks:
            out[b.box.slicer((0, 0, 0))] = b.var(group, var, tl)[b.owned]
        return out

    def scatter(self, group: str, var: str, full: np.ndarray, tl: int = 0):
        for b in self.blocks:
            b.var(group, var, tl)[b.owned] = full[b.box.slicer((0, 0, 0))]

    def reduce(self, group: str, var: str, op: str, tl: int = 0) -> float:
        """Reduction over owned points only, identical for every rank count."""
        return reduce_array(self.gather(group, var, tl), op)

    def interpolate(self, group: str, var: str, points, order: int = 3,
                    tl: int = 0) -> np.ndarray:
        full = self.gather(group, var, tl)
        return interpolate_array(full, self.domain, points, order)

    def run_per_block(self, fn, pool=None):
        """Apply fn to each block; optionally via a thread pool. Blocks only
        touch their own storage, so the result matches the sequential order."""
        if pool is None:
            for b in self.blocks:
                fn(b)
        else:
            list(pool.map(fn, self.blocks))


def reduce_array(a: np.ndarray, op: str) -> float:
    if op == "sum":
        return float(np.sum(a))
    if op == "min":
        return float(np.min(a))
    if op == "max":
        return float(np.max(a))
    if op == "l1":
        return float(np.mean(np.abs(a)))
    if op == "l2":
        return float(np.sqrt(np.mean(a * a)))
    if op == "linf":
        return float(np.max(np.abs(a)))
    if op == "count":
        return float(a.size)
    raise ValueError(f"unknown reduction {op!r}")


def lagrange_weights(xi: float, nodes: np.ndarray) -> np.ndarray:
    w = np.ones(len(nodes))
    for j in range(len(nodes)):
        for k in range(len(nodes)):
            if k != j:
                w[j] *= (xi - nodes[k]) / (nodes[j] - nodes[k])
    return w


def interpolate_array(full: np.ndarray, domain: DomainSpec, points,
                      order: int) -> np.ndarray:
    """Tensor-product Lagrange interpolation at scattered points.

    order+1 nearest grid points per dimension; stencils clamp at walls,
    wrap in periodic dimensions. Points outside a wall-bounded domain
    come back NaN.
    """
    if order not in (1, 3, 5):
        raise ValueError("interpolation order must be 1, 3, or 5")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    h = domain.spacing()
    npts = order + 1
    out = np.empty(len(pts))
    for ip, p in enumerate(pts):
        idx_sets = []
        weights = []
        bad = False
        for d in range(3):
            n = domain.npoints[d]
            x = (p[d] - domain.xmin[d]) / h[d]
            if domain.periodic[d]:
                x %= n
                start = int(np.floor(x)) - (npts - 1) // 2
                idx = (np.arange(start, start + npts)) % n
                nodes = np.arange(start, start + npts, dtype=float)
            else:
                if x < -1e-12 or x > n - 1 + 1e-12:
                    bad = True
                    break
                start = int(np.floor(x)) - (npts - 1) // 2
                start = min(max(start, 0), n - npts)
                idx = np.arange(start, start + npts)
                nodes = idx.astype(float)
            idx_sets.append(idx)
            weights.append(lagrange_weights(x, nodes))
        if bad:
            out[ip] = np.nan
            continue
        cube = full[np.ix_(idx_sets[0], idx_sets[1], idx_sets[2])]
        out[ip] = np.einsum("i,j,k,ijk->", weights[0], weights[1], weights[2], cube)
    return out
