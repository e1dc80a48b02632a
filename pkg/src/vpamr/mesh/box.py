"""Integer index boxes and the box calculus used by the hierarchy code.

All boxes are cell-centered with inclusive bounds in a global Cartesian
index space.  Coordinates are signed; coarsening rounds toward -inf.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

IndexVec = tuple


@dataclass(frozen=True, order=True)
class IndexBox:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise ValueError(f"lo/hi dimension mismatch: {self.lo} vs {self.hi}")
        object.__setattr__(self, "lo", tuple(int(a) for a in self.lo))
        object.__setattr__(self, "hi", tuple(int(b) for b in self.hi))

    @classmethod
    def from_shape(cls, shape: Sequence[int], lo: Sequence[int] | None = None) -> "IndexBox":
        lo = tuple(lo) if lo is not None else (0,) * len(shape)
        return cls(lo, tuple(a + n - 1 for a, n in zip(lo, shape)))

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def empty(self) -> bool:
        return any(a > b for a, b in zip(self.lo, self.hi))

    @property
    def shape(self) -> tuple:
        if self.empty:
            return (0,) * self.dim
        return tuple(b - a + 1 for a, b in zip(self.lo, self.hi))

    @property
    def size(self) -> int:
        return int(np.prod(self.shape)) if not self.empty else 0

    def __bool__(self) -> bool:
        return not self.empty

    def intersect(self, other: "IndexBox") -> "IndexBox":
        return _box(tuple(map(max, self.lo, other.lo)), tuple(map(min, self.hi, other.hi)))

    __and__ = intersect

    def intersects(self, other: "IndexBox") -> bool:
        return all(max(a, c) <= min(b, d) for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi))

    def contains(self, other: "IndexBox") -> bool:
        if other.empty:
            return True
        return all(a <= c and d <= b for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi))

    def contains_index(self, idx: Sequence[int]) -> bool:
        return all(a <= i <= b for a, i, b in zip(self.lo, idx, self.hi))

    def grow(self, n) -> "IndexBox":
        n = _as_vec(n, self.dim)
        return _box(tuple(a - g for a, g in zip(self.lo, n)), tuple(b + g for b, g in zip(self.hi, n)))

    def grow_dim(self, d: int, n: int) -> "IndexBox":
        return replace_dims(self, d, self.lo[d] - n, self.hi[d] + n)

    def shift(self, offset) -> "IndexBox":
        offset = _as_vec(offset, self.dim)
        return _box(tuple(a + o for a, o in zip(self.lo, offset)), tuple(b + o for b, o in zip(self.hi, offset)))

    def slices(self, origin: Sequence[int]) -> tuple:
        """Array slices selecting this box inside an array whose [0,...] cell is `origin`."""
        return tuple(slice(a - o, b - o + 1) for a, b, o in zip(self.lo, self.hi, origin))

    def cells(self):
        """Iterate over all index tuples (small boxes only; used by oracles)."""
        if self.empty:
            return iter(())
        return _cells(self)

    def bounds_tuple(self) -> tuple:
        return self.lo + self.hi

    def __repr__(self) -> str:
        return f"[{self.lo},{self.hi}]"


def _box(lo: tuple, hi: tuple) -> IndexBox:
    """Construct without validation; lo and hi must already be int tuples."""
    b = object.__new__(IndexBox)
    object.__setattr__(b, "lo", lo)
    object.__setattr__(b, "hi", hi)
    return b


def _cells(box: IndexBox):
    for off in np.ndindex(*box.shape):
        yield tuple(a + o for a, o in zip(box.lo, off))


def _as_vec(n, dim: int) -> tuple:
    if type(n) is tuple and len(n) == dim and all(type(a) is int for a in n):
        return n
    if isinstance(n, (int, np.integer)):
        return (int(n),) * dim
    n = tuple(int(a) for a in n)
    if len(n) != dim:
        raise ValueError(f"expected {dim} components, got {n}")
    return n


def empty_box(dim: int) -> IndexBox:
    return IndexBox((0,) * dim, (-1,) * dim)


def restrict_dims(box: IndexBox, dims: Iterable[int]) -> IndexBox:
    """Drop the listed components from lo and hi."""
    dims = set(dims)
    if any(d < 0 or d >= box.dim for d in dims):
        raise ValueError(f"dimension out of range in {dims} for a {box.dim}-D box")
    keep = [d for d in range(box.dim) if d not in dims]
    if not keep:
        raise ValueError("cannot remove every dimension of a box")
    return IndexBox(tuple(box.lo[d] for d in keep), tuple(box.hi[d] for d in keep))


def replace_dims(box: IndexBox, d: int, a: int, b: int) -> IndexBox:
    """Return `box` with component `d` of lo set to `a` and of hi set to `b`."""
    lo = list(box.lo)
    hi = list(box.hi)
    lo[d] = int(a)
    hi[d] = int(b)
    return _box(tuple(lo), tuple(hi))


def refine_box(box: IndexBox, d: int, R: int) -> IndexBox:
    if R < 1:
        raise ValueError("refinement ratio must be >= 1")
    return replace_dims(box, d, R * box.lo[d], R * (box.hi[d] + 1) - 1)


def coarsen_box(box: IndexBox, d: int, R: int) -> IndexBox:
    if R < 1:
        raise ValueError("coarsening ratio must be >= 1")
    return replace_dims(box, d, box.lo[d] // R, box.hi[d] // R)


def refine(box: IndexBox, ratio) -> IndexBox:
    ratio = _as_vec(ratio, box.dim)
    for d, r in enumerate(ratio):
        box = refine_box(box, d, r)
    return box


def coarsen(box: IndexBox, ratio) -> IndexBox:
    ratio = _as_vec(ratio, box.dim)
    for d, r in enumerate(ratio):
        box = coarsen_box(box, d, r)
    return box


def box_subtract(a: IndexBox, b: IndexBox) -> list:
    """Rectangular decomposition of a minus b.

    Fragments are produced dimension by dimension starting at dimension 0,
    the low fragment before the high one, so the result is deterministic.
    """
    if a.empty:
        return []
    if not a.intersects(b):
        return [a]
    inter = a & b
    out = []
    rest = a
    for d in range(a.dim):
        if rest.lo[d] < inter.lo[d]:
            out.append(replace_dims(rest, d, rest.lo[d], inter.lo[d] - 1))
        if inter.hi[d] < rest.hi[d]:
            out.append(replace_dims(rest, d, inter.hi[d] + 1, rest.hi[d]))
        rest = replace_dims(rest, d, inter.lo[d], inter.hi[d])
    return out


def boxes_subtract(boxes: Iterable[IndexBox], b: IndexBox) -> list:
    out = []
    for a in boxes:
        out.extend(box_subtract(a, b))
    return out


def total_size(boxes: Iterable[IndexBox]) -> int:
    return sum(bx.size for bx in boxes)


def bounding_box(boxes: Sequence[IndexBox]) -> IndexBox:
    boxes = [bx for bx in boxes if not bx.empty]
    if not boxes:
        raise ValueError("bounding box of an empty collection")
    lo = tuple(min(bx.lo[d] for bx in boxes) for d in range(boxes[0].dim))
    hi = tuple(max(bx.hi[d] for bx in boxes) for d in range(boxes[0].dim))
    return IndexBox(lo, hi)


def periodic_shifts(domain: IndexBox, periodic: Sequence[bool]) -> list:
    """Offsets of the periodic images adjacent to `domain` (including zero)."""
    choices = [(0, -n, n) if per else (0,) for n, per in zip(domain.shape, periodic)]
    return [tuple(int(c) for c in combo) for combo in itertools.product(*choices)]
