"""Patches, levels and hierarchies over a global Cartesian index space."""
from __future__ import annotations

import weakref
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .box import (
    IndexBox,
    box_subtract,
    boxes_subtract,
    coarsen,
    periodic_shifts,
    refine,
    replace_dims,
)


@dataclass(frozen=True)
class Patch:
    box: IndexBox
    level_index: int
    patch_id: int

    def __post_init__(self):
        if self.box.empty:
            raise ValueError("patches must be non-empty")


@dataclass
class PatchLevel:
    patches: list
    ratio_to_coarsest: tuple
    allow_overlap: bool = False

    def __post_init__(self):
        ids = [p.patch_id for p in self.patches]
        if len(set(ids)) != len(ids):
            raise ValueError("patch ids must be unique within a level")
        if not self.allow_overlap:
            for a in range(len(self.patches)):
                for b in range(a + 1, len(self.patches)):
                    if self.patches[a].box.intersects(self.patches[b].box):
                        raise ValueError(
                            f"overlapping patches {self.patches[a].box} and {self.patches[b].box}"
                        )

    @classmethod
    def from_boxes(cls, boxes: Iterable[IndexBox], level_index: int, ratio_to_coarsest,
                   allow_overlap: bool = False) -> "PatchLevel":
        patches = [Patch(bx, level_index, k) for k, bx in enumerate(boxes)]
        return cls(patches, tuple(ratio_to_coarsest), allow_overlap)

    @property
    def boxes(self) -> list:
        return [p.box for p in self.patches]

    def __len__(self) -> int:
        return len(self.patches)

    def __iter__(self):
        return iter(self.patches)

    def n_cells(self) -> int:
        return sum(p.box.size for p in self.patches)


class PatchHierarchy:
    """An ordered set of refinement levels; level 0 is the coarsest.

    `ratios[l]` is the refinement ratio from level l to level l+1 and may be
    longer than the current number of levels (it lists the ratios of every
    level the hierarchy is allowed to grow to).
    """

    def __init__(self, domain_box: IndexBox, ratios: Sequence[Sequence[int]] = (),
                 periodic: Sequence[bool] | None = None, levels: Sequence[Iterable[IndexBox]] | None = None,
                 allow_overlap: bool = False):
        self.domain_box = domain_box
        self.ratios = [tuple(int(a) for a in r) for r in ratios]
        for r in self.ratios:
            if len(r) != domain_box.dim or min(r) < 1:
                raise ValueError(f"bad refinement ratio {r}")
        self.periodic = tuple(periodic) if periodic is not None else (False,) * domain_box.dim
        self.allow_overlap = allow_overlap
        self.levels: list = []
        self.generation = 0
        self._observers: list = []
        self._cache: dict = {}
        if levels is None:
            levels = [[domain_box]]
        self.set_levels(levels, notify=False)

    # geometry -------------------------------------------------------------
    @property
    def dim(self) -> int:
        return self.domain_box.dim

    @property
    def num_levels(self) -> int:
        return len(self.levels)

    @property
    def max_levels(self) -> int:
        return len(self.ratios) + 1

    def ratio_to_coarsest(self, level: int) -> tuple:
        out = np.ones(self.dim, dtype=int)
        for r in self.ratios[:level]:
            out *= np.asarray(r)
        return tuple(int(a) for a in out)

    def ratio_between(self, coarse: int, fine: int) -> tuple:
        out = np.ones(self.dim, dtype=int)
        for r in self.ratios[coarse:fine]:
            out *= np.asarray(r)
        return tuple(int(a) for a in out)

    def level_domain(self, level: int) -> IndexBox:
        return refine(self.domain_box, self.ratio_to_coarsest(level))

    def shifts(self, level: int) -> list:
        return periodic_shifts(self.level_domain(level), self.periodic)

    # mutation -------------------------------------------------------------
    def set_levels(self, levels: Sequence[Iterable[IndexBox]], notify: bool = True) -> None:
        if len(levels) > self.max_levels:
            raise ValueError(f"{len(levels)} levels requested, at most {self.max_levels} allowed")
        new = []
        for l, boxes in enumerate(levels):
            boxes = list(boxes)
            if not boxes:
                break
            dom = self.level_domain(l)
            for bx in boxes:
                if not dom.contains(bx):
                    raise ValueError(f"box {bx} outside level-{l} domain {dom}")
            new.append(PatchLevel.from_boxes(boxes, l, self.ratio_to_coarsest(l), self.allow_overlap))
        if not new:
            raise ValueError("a hierarchy needs at least one level")
        self.levels = new
        self.generation += 1
        self._cache.clear()
        if notify:
            self.notify_regrid()

    # observers ----------------------------------------------------------------
    def register_observer(self, obs) -> None:
        self._observers.append(weakref.ref(obs))

    def notify_regrid(self) -> None:
        alive = []
        for ref in self._observers:
            obs = ref()
            if obs is not None:
                obs.hierarchy_changed(self)
                alive.append(ref)
        self._observers = alive

    def cached(self, key, build):
        """Memoize `build()` until the next change of the patch layout."""
        try:
            return self._cache[key]
        except KeyError:
            val = self._cache[key] = build()
            return val

    # queries ------------------------------------------------------------------
    def n_cells(self) -> int:
        return sum(lev.n_cells() for lev in self.levels)

    def n_composite_cells(self) -> int:
        total = 0
        for l, lev in enumerate(self.levels):
            if l + 1 < self.num_levels:
                r = self.ratios[l]
                covered = [coarsen(b, r) for b in self.levels[l + 1].boxes]
                for bx in lev.boxes:
                    frags = [bx]
                    for c in covered:
                        frags = boxes_subtract(frags, c)
                    total += sum(f.size for f in frags)
            else:
                total += lev.n_cells()
        return total

    def describe(self) -> str:
        lines = []
        for l, lev in enumerate(self.levels):
            lines.append(f"level {l} ratio {lev.ratio_to_coarsest}: " + ", ".join(map(repr, lev.boxes)))
        return "\n".join(lines)


def covered_by_union(box: IndexBox, boxes: Iterable[IndexBox]) -> bool:
    rest = [box]
    for b in boxes:
        rest = boxes_subtract(rest, b)
        if not rest:
            return True
    return not rest


def check_proper_nesting(h: PatchHierarchy) -> bool:
    """True iff every fine patch, coarsened, lies inside the next coarser level."""
    for l in range(1, h.num_levels):
        r = h.ratios[l - 1]
        coarse_boxes = h.levels[l - 1].boxes
        for bx in h.levels[l].boxes:
            if not covered_by_union(coarsen(bx, r), coarse_boxes):
                return False
    return True


def compute_sub_patches(p_in: Patch, level: PatchLevel, hierarchy: PatchHierarchy,
                        reduction_dims: Iterable[int]) -> list:
    """Split a patch into the rectangles of the composite grid it owns.

    Every overlapping finer patch is first stretched across the whole input
    patch in the reduction directions; cutting by the stretched box keeps the
    pieces as long as possible in those directions and makes the final
    removal of the covered region leave rectangles.
    """
    reduction_dims = tuple(reduction_dims)
    l_in = p_in.level_index
    pin = p_in.box
    S = [pin]
    for lf in range(l_in + 1, hierarchy.num_levels):
        r = hierarchy.ratio_between(l_in, lf)
        for fp in hierarchy.levels[lf].patches:
            P = coarsen(fp.box, r)
            if not P.intersects(pin):
                continue
            ext = P
            for d in reduction_dims:
                ext = replace_dims(ext, d, pin.lo[d], pin.hi[d])
            newS = []
            for ps in S:
                inter = ps & ext
                if inter.empty:
                    newS.append(ps)
                    continue
                newS.append(inter)
                newS.extend(box_subtract(ps, inter))
            S = boxes_subtract(newS, P)
    return S
