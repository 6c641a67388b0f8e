"""Box and Region algebra, checked against dense voxel masks."""

import numpy as np
import pytest

from tapestry.region import Box, Region

LIM = 12  # voxel-mask world is [0, LIM)^3


def mask_of_box(b: Box) -> np.ndarray:
    m = np.zeros((LIM, LIM, LIM), dtype=bool)
    sl = tuple(slice(max(0, l), max(0, min(LIM, h))) for l, h in zip(b.lo, b.hi))
    if all(s.start < s.stop for s in sl):
        m[sl] = True
    return m


def mask_of_region(r: Region) -> np.ndarray:
    m = np.zeros((LIM, LIM, LIM), dtype=bool)
    for b in r.boxes:
        m |= mask_of_box(b)
    return m


def random_box(rng, span=LIM) -> Box:
    lo = rng.integers(0, span - 1, size=3)
    hi = lo + rng.integers(1, 5, size=3)
    return Box(tuple(int(x) for x in lo), tuple(int(min(span, x)) for x in hi))


def test_extent_volume_empty():
    b = Box((1, 2, 3), (4, 4, 7))
    assert b.extent == (3, 2, 4)
    assert b.volume == 24
    assert not b.empty
    assert Box((2, 0, 0), (2, 5, 5)).empty
    assert Box((3, 0, 0), (2, 5, 5)).volume == 0


def test_box_must_be_3d():
    with pytest.raises(ValueError):
        Box((0, 0), (1, 1))


def test_contains_and_intersect():
    a = Box((0, 0, 0), (10, 10, 10))
    b = Box((2, 2, 2), (5, 5, 5))
    assert a.contains_box(b)
    assert not b.contains_box(a)
    assert a.contains_point((0, 0, 0))
    assert not a.contains_point((10, 0, 0))
    inter = a.intersect(Box((8, 8, 8), (15, 15, 15)))
    assert inter == Box((8, 8, 8), (10, 10, 10))
    assert a.intersect(Box((20, 20, 20), (25, 25, 25))).empty
    # an empty box is contained in anything
    assert b.contains_box(Box((9, 9, 9), (9, 12, 12)))


def test_shift_grow_slicer():
    b = Box((1, 1, 1), (3, 4, 5))
    assert b.shift((1, -1, 0)) == Box((2, 0, 1), (4, 3, 5))
    assert b.grow(2) == Box((-1, -1, -1), (5, 6, 7))
    sl = b.slicer((1, 1, 1))
    assert sl == (slice(0, 2), slice(0, 3), slice(0, 4))


def test_subtract_produces_disjoint_exact_cover(rng):
    for _ in range(200):
        a = random_box(rng)
        b = random_box(rng)
        pieces = a.subtract(b)
        assert len(pieces) <= 6
        got = np.zeros((LIM, LIM, LIM), dtype=bool)
        for p in pieces:
            pm = mask_of_box(p)
            assert not (got & pm).any(), "subtract pieces overlap"
            got |= pm
        expect = mask_of_box(a) & ~mask_of_box(b)
        assert np.array_equal(got, expect)


def test_subtract_disjoint_and_swallowed():
    a = Box((0, 0, 0), (2, 2, 2))
    assert a.subtract(Box((5, 5, 5), (6, 6, 6))) == [a]
    assert a.subtract(Box((-1, -1, -1), (3, 3, 3))) == []


def test_region_union_is_disjoint_cover(rng):
    for _ in range(100):
        boxes = [random_box(rng) for _ in range(rng.integers(1, 6))]
        r = Region(boxes)
        # canonical form: pairwise disjoint
        for i, b1 in enumerate(r.boxes):
            for b2 in r.boxes[i + 1:]:
                assert not b1.overlaps(b2)
        expect = np.zeros((LIM, LIM, LIM), dtype=bool)
        for b in boxes:
            expect |= mask_of_box(b)
        assert np.array_equal(mask_of_region(r), expect)
        assert r.volume == int(expect.sum())


def test_region_subtract_and_contains(rng):
    for _ in range(100):
        r1 = Region([random_box(rng) for _ in range(3)])
        r2 = Region([random_box(rng) for _ in range(3)])
        diff = r1.subtract(r2)
        assert np.array_equal(
            mask_of_region(diff), mask_of_region(r1) & ~mask_of_region(r2))
        assert r1.contains_region(diff)
        assert r1.union(r2).contains_region(r1)


def test_region_equality_ignores_decomposition():
    whole = Region([Box((0, 0, 0), (4, 4, 4))])
    halves = Region([Box((0, 0, 0), (2, 4, 4)), Box((2, 0, 0), (4, 4, 4))])
    assert whole == halves
    assert not (whole == Region([Box((0, 0, 0), (3, 4, 4))]))


def test_grow_restores_disjointness():
    # growing two touching boxes makes them overlap; the Region constructor
    # must carve the result back to a disjoint cover with the right volume
    r = Region([Box((0, 0, 0), (2, 4, 4)), Box((2, 0, 0), (4, 4, 4))])
    g = r.grow(1)
    for i, b1 in enumerate(g.boxes):
        for b2 in g.boxes[i + 1:]:
            assert not b1.overlaps(b2)
    assert g.volume == 6 * 6 * 6


def test_bounding_box():
    r = Region([Box((0, 0, 0), (1, 1, 1)), Box((5, 3, 2), (7, 4, 4))])
    assert r.bounding_box() == Box((0, 0, 0), (7, 4, 4))
    assert Region().bounding_box().empty
