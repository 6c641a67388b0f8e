"""Integer index boxes and unions of boxes on a 3D vertex-centered lattice.

Boxes are half-open: ``lo`` inclusive, ``hi`` exclusive, so ``extent = hi - lo``
counts lattice points. A Region is a set of pairwise-disjoint boxes; union and
subtraction keep that canonical form deterministically (carve order x, y, z).
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Box:
    lo: tuple[int, int, int]
    hi: tuple[int, int, int]

    def __post_init__(self):
        if len(self.lo) != 3 or len(self.hi) != 3:
            raise ValueError("Box is 3D: lo and hi must have 3 entries")

    @property
    def extent(self) -> tuple[int, int, int]:
        return tuple(h - l for l, h in zip(self.lo, self.hi))

    @property
    def volume(self) -> int:
        v = 1
        for l, h in zip(self.lo, self.hi):
            v *= max(0, h - l)
        return v

    @property
    def empty(self) -> bool:
        return any(h <= l for l, h in zip(self.lo, self.hi))

    def contains_point(self, p) -> bool:
        return all(l <= x < h for x, l, h in zip(p, self.lo, self.hi))

    def contains_box(self, other: "Box") -> bool:
        if other.empty:
            return True
        return all(
            sl <= ol and oh <= sh
            for sl, sh, ol, oh in zip(self.lo, self.hi, other.lo, other.hi)
        )

    def intersect(self, other: "Box") -> "Box":
        lo = tuple(max(a, b) for a, b in zip(self.lo, other.lo))
        hi = tuple(min(a, b) for a, b in zip(self.hi, other.hi))
        return Box(lo, tuple(max(l, h) for l, h in zip(lo, hi)))

    def overlaps(self, other: "Box") -> bool:
        return not self.intersect(other).empty

    def shift(self, offset) -> "Box":
        return Box(
            tuple(l + o for l, o in zip(self.lo, offset)),
            tuple(h + o for h, o in zip(self.hi, offset)),
        )

    def grow(self, width: int) -> "Box":
        return Box(
            tuple(l - width for l in self.lo),
            tuple(h + width for h in self.hi),
        )

    def slicer(self, origin) -> tuple[slice, slice, slice]:
        """Slices addressing this box inside an array whose [0,0,0] sits at origin."""
        return tuple(
            slice(l - o, h - o) for l, h, o in zip(self.lo, self.hi, origin)
        )

    def subtract(self, other: "Box") -> list["Box"]:
        """Disjoint boxes covering self minus other, carved dimension by dimension."""
        inter = self.intersect(other)
        if inter.empty:
            return [self]
        pieces = []
        lo = list(self.lo)
        hi = list(self.hi)
        for d in range(3):
            if lo[d] < inter.lo[d]:
                cut_hi = hi.copy()
                cut_hi[d] = inter.lo[d]
                pieces.append(Box(tuple(lo), tuple(cut_hi)))
                lo[d] = inter.lo[d]
            if inter.hi[d] < hi[d]:
                cut_lo = lo.copy()
                cut_lo[d] = inter.hi[d]
                pieces.append(Box(tuple(cut_lo), tuple(hi)))
                hi[d] = inter.hi[d]
        return [p for p in pieces if not p.empty]

    def __repr__(self):
        return f"Box({list(self.lo)}..{list(self.hi)})"


class Region:
    """Union of pairwise-disjoint boxes."""

    def __init__(self, boxes=()):
        self.boxes: list[Box] = []
        for b in boxes:
            self.add(b)

    def add(self, box: Box):
        if box.empty:
            return
        pieces = [box]
        for existing in self.boxes:
            nxt = []
            for p in pieces:
                nxt.extend(p.subtract(existing))
            pieces = nxt
            if not pieces:
                return
        self.boxes.extend(pieces)

    def union(self, other: "Region") -> "Region":
        r = Region(self.boxes)
        for b in other.boxes:
            r.add(b)
        return r

    def intersect_box(self, box: Box) -> "Region":
        r = Region()
        for b in self.boxes:
            cut = b.intersect(box)
            if not cut.empty:
                r.boxes.append(cut)
        return r

    def subtract_box(self, box: Box) -> "Region":
        r = Region()
        for b in self.boxes:
            r.boxes.extend(b.subtract(box))
        return r

    def subtract(self, other: "Region") -> "Region":
        r = self
        for b in other.boxes:
            r = r.subtract_box(b)
        return r

    def grow(self, width: int) -> "Region":
        return Region([b.grow(width) for b in self.boxes])

    @property
    def volume(self) -> int:
        return sum(b.volume for b in self.boxes)

    @property
    def empty(self) -> bool:
        return not self.boxes

    def contains_point(self, p) -> bool:
        return any(b.contains_point(p) for b in self.boxes)

    def contains_box(self, box: Box) -> bool:
        return Region([box]).subtract(self).empty

    def contains_region(self, other: "Region") -> bool:
        return other.subtract(self).empty

    def bounding_box(self) -> Box:
        if not self.boxes:
            return Box((0, 0, 0), (0, 0, 0))
        lo = tuple(min(b.lo[d] for b in self.boxes) for d in range(3))
        hi = tuple(max(b.hi[d] for b in self.boxes) for d in range(3))
        return Box(lo, hi)

    def __eq__(self, other):
        if not isinstance(other, Region):
            return NotImplemented
        return self.subtract(other).empty and other.subtract(self).empty

    def __repr__(self):
        return f"Region({self.boxes})"
