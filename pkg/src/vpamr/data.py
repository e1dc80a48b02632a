"""Patch data with ghost regions and communication within one hierarchy.

Fields store one dense float64 array per patch, covering the patch box
grown by `ghost_width` cells.  Communication patterns (which cells are
copied from where) depend only on the patch layout and are cached on the
hierarchy, so they are rebuilt automatically after a regrid.
"""
from __future__ import annotations

from typing import Callable, Iterable

import numpy as np

from . import interp
from .timing import TIMERS
from .mesh import IndexBox, PatchHierarchy, PatchLevel, boxes_subtract, coarsen, refine

PHASE_GHOST_WIDTH = 3
CONFIG_GHOST_WIDTH = 2
STENCIL_GHOSTS = 2  # coarse cells needed on each side by the 5-cell interpolants


class CellField:
    """Cell averages on every patch of a hierarchy (single component)."""

    def __init__(self, hierarchy: PatchHierarchy, ghost_width: int, name: str = "", fill: float = 0.0):
        self.hierarchy = hierarchy
        self.ghost_width = int(ghost_width)
        self.name = name
        self.generation = hierarchy.generation
        self.data = []
        for lev in hierarchy.levels:
            self.data.append({p.patch_id: np.full(p.box.grow(self.ghost_width).shape, fill, dtype=np.float64)
                              for p in lev.patches})

    # access -------------------------------------------------------------------
    def ghost_box(self, level: int, pid: int) -> IndexBox:
        return self._patch(level, pid).box.grow(self.ghost_width)

    def _patch(self, level: int, pid: int):
        return self.hierarchy.levels[level].patches[pid]

    def array(self, level: int, pid: int) -> np.ndarray:
        return self.data[level][pid]

    def interior(self, level: int, pid: int) -> np.ndarray:
        g = self.ghost_width
        a = self.data[level][pid]
        return a[tuple(slice(g, n - g) for n in a.shape)]

    def view(self, level: int, pid: int, box: IndexBox) -> np.ndarray:
        """Writable view of the cells of `box` (must lie in the ghost box)."""
        gb = self.ghost_box(level, pid)
        if not gb.contains(box):
            raise ValueError(f"{box} not inside ghosted patch {gb}")
        return self.data[level][pid][box.slices(gb.lo)]

    def items(self):
        for l, lev in enumerate(self.hierarchy.levels):
            for p in lev.patches:
                yield l, p, self.data[l][p.patch_id]

    @property
    def num_levels(self) -> int:
        return len(self.data)

    # whole-field arithmetic -------------------------------------------------------
    def copy(self, name: str | None = None) -> "CellField":
        out = CellField.__new__(CellField)
        out.hierarchy = self.hierarchy
        out.ghost_width = self.ghost_width
        out.name = self.name if name is None else name
        out.generation = self.generation
        out.data = [{k: v.copy() for k, v in lev.items()} for lev in self.data]
        return out

    def like(self, name: str = "", fill: float = 0.0) -> "CellField":
        return CellField(self.hierarchy, self.ghost_width, name, fill)

    def assign(self, other: "CellField") -> None:
        for lev, olev in zip(self.data, other.data):
            for k in lev:
                lev[k][...] = olev[k]

    def fill(self, value: float) -> None:
        for lev in self.data:
            for a in lev.values():
                a.fill(value)

    def set_interior(self, func: Callable[[int, object], np.ndarray]) -> None:
        """Set interiors from func(level, patch) -> array of the patch shape."""
        for l, p, _ in self.items():
            self.interior(l, p.patch_id)[...] = func(l, p)

    def all_finite(self) -> bool:
        return all(np.isfinite(self.interior(l, p.patch_id)).all() for l, p, _ in self.items())


class FluxField:
    """Face-averaged fluxes: per patch one array per dimension, with one
    more entry than cells in the face-normal dimension."""

    def __init__(self, hierarchy: PatchHierarchy, name: str = ""):
        self.hierarchy = hierarchy
        self.name = name
        self.data = []
        for lev in hierarchy.levels:
            d = {}
            for p in lev.patches:
                shp = p.box.shape
                d[p.patch_id] = [np.zeros(tuple(n + (1 if a == k else 0) for a, n in enumerate(shp)))
                                 for k in range(len(shp))]
            self.data.append(d)

    def faces(self, level: int, pid: int) -> list:
        return self.data[level][pid]

    def zero(self) -> None:
        for lev in self.data:
            for arrs in lev.values():
                for a in arrs:
                    a.fill(0.0)


class MaskField:
    """Per-patch 0/1 arrays over patch interiors: 0 where a finer patch
    covers the cell."""

    def __init__(self, hierarchy: PatchHierarchy, data: list):
        self.hierarchy = hierarchy
        self.data = data

    def array(self, level: int, pid: int) -> np.ndarray:
        return self.data[level][pid]


# ---------------------------------------------------------------------------
# same-level exchange

def _exchange_schedule(h: PatchHierarchy, l: int, g: int) -> list:
    lev = h.levels[l]
    shifts = h.shifts(l)
    sched = []
    for p in lev.patches:
        G = p.box.grow(g)
        for sh in shifts:
            zero = not any(sh)
            for q in lev.patches:
                if zero and q.patch_id == p.patch_id:
                    continue
                src = q.box.shift(sh)
                I = G & src
                if I.empty:
                    continue
                back = tuple(-s for s in sh)
                sched.append((p.patch_id, I.slices(G.lo), q.patch_id, I.shift(back).slices(q.box.grow(g).lo)))
    return sched


def exchange_ghosts(level, field: CellField, level_index: int | None = None) -> None:
    """Copy sibling interiors (and periodic images) into ghost cells.

    `level` is either the level index or a PatchLevel of field.hierarchy.
    """
    if isinstance(level, PatchLevel):
        l = level.patches[0].level_index if level_index is None else level_index
    else:
        l = int(level)
    h = field.hierarchy
    g = field.ghost_width
    sched = h.cached(("exchange", l, g), lambda: _exchange_schedule(h, l, g))
    arrays = field.data[l]
    # two phases: gather donor values first, then write
    vals = [arrays[src][ss].copy() for _, _, src, ss in sched]
    for (dst, ds, _, _), v in zip(sched, vals):
        arrays[dst][ds] = v


# ---------------------------------------------------------------------------
# interpolation from the next coarser level

def _clip_nonperiodic(h: PatchHierarchy, l: int, box: IndexBox) -> IndexBox:
    dom = h.level_domain(l)
    lo = list(box.lo)
    hi = list(box.hi)
    for d in range(h.dim):
        if not h.periodic[d]:
            lo[d] = max(lo[d], dom.lo[d])
            hi[d] = min(hi[d], dom.hi[d])
    return IndexBox(tuple(lo), tuple(hi))


def _coarse_assembly(h: PatchHierarchy, lc: int, cbox: IndexBox, gc: int) -> list:
    """Pieces (src_pid, src_slices, dst_slices) filling `cbox` from level
    lc: interiors (with periodic images) first, then valid ghost cells."""
    lev = h.levels[lc]
    shifts = h.shifts(lc)
    pieces = []
    remaining = [cbox]
    for use_ghosts in (False, True):
        for sh in shifts:
            back = tuple(-s for s in sh)
            for q in lev.patches:
                src = (q.box.grow(gc) if use_ghosts else q.box).shift(sh)
                new_rem = []
                for frag in remaining:
                    I = frag & src
                    if I.empty:
                        new_rem.append(frag)
                        continue
                    pieces.append((q.patch_id, I.shift(back).slices(q.box.grow(gc).lo), I.slices(cbox.lo)))
                    new_rem.extend(boxes_subtract([frag], I))
                remaining = new_rem
                if not remaining:
                    return pieces
    raise ValueError(f"insufficient coarse data on level {lc} to interpolate region {cbox}")


def _interp_schedule(h: PatchHierarchy, l: int, targets_per_patch: dict, gc: int) -> list:
    """For each fine target box: the coarse stencil box and how to fill it."""
    r = h.ratios[l - 1]
    sched = []
    for pid, targets in targets_per_patch.items():
        for T in targets:
            C = coarsen(T, r)
            cbox = C.grow(STENCIL_GHOSTS)
            sched.append((pid, T, C, cbox, _coarse_assembly(h, l - 1, cbox, gc)))
    return sched


def _run_interp(field: CellField, l: int, sched: list, params, method: str = "weno") -> None:
    with TIMERS.section("interp"):
        _run_interp_inner(field, l, sched, params, method)


def _run_interp_inner(field: CellField, l: int, sched: list, params, method: str) -> None:
    h = field.hierarchy
    r = h.ratios[l - 1]
    coarse = field.data[l - 1]
    for pid, T, C, cbox, pieces in sched:
        buf = np.empty(cbox.shape)
        for src, ss, ds in pieces:
            buf[ds] = coarse[src][ss]
        fine = interp.weno5_interp_nd(buf, r, params, method)
        fbox = refine(C, r)
        field.view(l, pid, T)[...] = fine[T.slices(fbox.lo)]


def _cf_schedule(h: PatchHierarchy, l: int, g: int, gc: int) -> list:
    lev = h.levels[l]
    shifts = h.shifts(l)
    targets = {}
    for p in lev.patches:
        G = _clip_nonperiodic(h, l, p.box.grow(g))
        frags = boxes_subtract([G], p.box)
        for sh in shifts:
            for q in lev.patches:
                frags = boxes_subtract(frags, q.box.shift(sh))
        targets[p.patch_id] = frags
    return _interp_schedule(h, l, targets, gc)


def fill_coarse_fine_ghosts(h: PatchHierarchy, field: CellField, level: int | None = None,
                            params: interp.WenoParams | None = None) -> None:
    """Interpolate ghost cells of fine patches that no sibling owns.

    Cells outside the physical domain in non-periodic directions are left
    to the boundary conditions.  With `level` given only that level is
    filled (the next coarser level's ghosts must already be valid).
    """
    if h is not field.hierarchy:
        raise ValueError("field lives on a different hierarchy")
    g = field.ghost_width
    levels = range(1, h.num_levels) if level is None else [level]
    for l in levels:
        if l == 0:
            continue
        sched = h.cached(("cf", l, g), lambda: _cf_schedule(h, l, g, g))
        _run_interp(field, l, sched, params)


BoundaryFill = Callable[[CellField, int], None]


def fill_ghosts(field: CellField, bc: BoundaryFill | None = None,
                params: interp.WenoParams | None = None, levels: Iterable[int] | None = None) -> None:
    """Full ghost fill, level by level from coarse to fine: coarse-fine
    interpolation, same-level exchange, then physical boundaries."""
    h = field.hierarchy
    for l in (range(h.num_levels) if levels is None else levels):
        if l > 0:
            fill_coarse_fine_ghosts(h, field, l, params)
        exchange_ghosts(l, field)
        if bc is not None:
            bc(field, l)


# ---------------------------------------------------------------------------
# fine to coarse

def _average_down_schedule(h: PatchHierarchy, l: int) -> list:
    r = h.ratios[l - 1]
    sched = []
    for p in h.levels[l].patches:
        cp = coarsen(p.box, r)
        for q in h.levels[l - 1].patches:
            I = cp & q.box
            if not I.empty:
                sched.append((p.patch_id, refine(I, r).slices(p.box.lo), q.patch_id, I.slices(q.box.lo), I.shape))
    return sched


def _block_mean(a: np.ndarray, r, shape) -> np.ndarray:
    new_shape = []
    for n, R in zip(shape, r):
        new_shape.extend((n, R))
    axes = tuple(range(1, 2 * len(shape), 2))
    return a.reshape(new_shape).mean(axis=axes)


def average_down(h: PatchHierarchy, field: CellField, levels: Iterable[int] | None = None) -> None:
    """Replace covered coarse cells by the mean of their fine sub-cells,
    finest level first."""
    ls = range(h.num_levels - 1, 0, -1) if levels is None else levels
    for l in ls:
        r = h.ratios[l - 1]
        sched = h.cached(("avgdown", l), lambda: _average_down_schedule(h, l))
        for fp, fs, cq, cs, shape in sched:
            fine = field.interior(l, fp)[fs]
            field.interior(l - 1, cq)[cs] = _block_mean(fine, r, shape)


def _face_box(box: IndexBox, d: int) -> IndexBox:
    hi = list(box.hi)
    hi[d] += 1
    return IndexBox(box.lo, tuple(hi))


def _flux_down_schedule(h: PatchHierarchy, l: int) -> list:
    r = h.ratios[l - 1]
    shifts = h.shifts(l - 1)
    sched = []
    for d in range(h.dim):
        for p in h.levels[l].patches:
            if p.box.lo[d] % r[d] or (p.box.hi[d] + 1) % r[d]:
                raise ValueError(f"patch {p.box} not aligned with the coarse level")
            cfaces = _face_box(coarsen(p.box, r), d)
            for sh in shifts:
                for q in h.levels[l - 1].patches:
                    qf = _face_box(q.box, d).shift(sh)
                    I = cfaces & qf
                    if I.empty:
                        continue
                    # fine faces over coarse faces I: normal index K*R, transverse block
                    lo = [I.lo[a] * r[a] - p.box.lo[a] for a in range(h.dim)]
                    fine_sl = []
                    for a in range(h.dim):
                        if a == d:
                            fine_sl.append(slice(lo[a], lo[a] + I.shape[a] * r[a], r[a]))
                        else:
                            fine_sl.append(slice(lo[a], lo[a] + I.shape[a] * r[a]))
                    back = tuple(-s for s in sh)
                    q_sl = I.shift(back).slices(q.box.lo)
                    sched.append((d, p.patch_id, tuple(fine_sl), q.patch_id, q_sl, I.shape))
    return sched


def average_down_fluxes(h: PatchHierarchy, flux: FluxField, level: int | None = None) -> None:
    """Overwrite coarse faces lying under fine faces with the mean of the
    fine face averages (including periodic images of boundary faces)."""
    ls = range(h.num_levels - 1, 0, -1) if level is None else [level]
    for l in ls:
        r = h.ratios[l - 1]
        sched = h.cached(("fluxdown", l), lambda: _flux_down_schedule(h, l))
        for d, fp, fs, cq, cs, shape in sched:
            fine = flux.data[l][fp][d][fs]
            rr = tuple(1 if a == d else r[a] for a in range(h.dim))
            flux.data[l - 1][cq][d][cs] = _block_mean(fine, rr, shape)


def build_masks(h: PatchHierarchy) -> MaskField:
    """1 on cells of each level not covered by the next finer level, else 0."""
    data = []
    for l, lev in enumerate(h.levels):
        d = {}
        fine = [coarsen(b, h.ratios[l]) for b in h.levels[l + 1].boxes] if l + 1 < h.num_levels else []
        for p in lev.patches:
            m = np.ones(p.box.shape)
            for c in fine:
                I = c & p.box
                if not I.empty:
                    m[I.slices(p.box.lo)] = 0.0
            d[p.patch_id] = m
        data.append(d)
    return MaskField(h, data)


def composite_sum(field: CellField, cell_volumes: list, masks: MaskField | None = None) -> float:
    """Volume-weighted sum over the composite grid."""
    h = field.hierarchy
    masks = masks or h.cached("masks", lambda: build_masks(h))
    total = 0.0
    for l, p, _ in field.items():
        total += cell_volumes[l] * float(np.sum(field.interior(l, p.patch_id) * masks.array(l, p.patch_id)))
    return total


# ---------------------------------------------------------------------------
# regridding

def interpolate_level(field: CellField, level: int, params: interp.WenoParams | None = None) -> None:
    """Fill the interiors of `level` by interpolation from level-1."""
    h = field.hierarchy
    targets = {p.patch_id: [p.box] for p in h.levels[level].patches}
    sched = _interp_schedule(h, level, targets, field.ghost_width)
    _run_interp(field, level, sched, params)


def move_data_on_regrid(old_level: PatchLevel | None, old_data: dict | None, new_field: CellField,
                        level: int, params: interp.WenoParams | None = None) -> None:
    """Populate `level` of `new_field` after a regrid.

    Every new patch is first interpolated from the (already populated, ghost
    filled) coarser level of the new hierarchy; cells that overlap a patch
    of `old_level` are then overwritten by the old data, so same-level
    copies win over interpolation.  `old_data` maps old patch ids to their
    ghosted arrays (same ghost width as `new_field`).
    """
    h = new_field.hierarchy
    g = new_field.ghost_width
    if level > 0:
        interpolate_level(new_field, level, params)
    if old_level is None:
        return
    for p in h.levels[level].patches:
        dst = new_field.interior(level, p.patch_id)
        for q in old_level.patches:
            I = p.box & q.box
            if I.empty:
                continue
            dst[I.slices(p.box.lo)] = old_data[q.patch_id][I.slices(q.box.grow(g).lo)]


def regrid_field(old: CellField, old_levels: list, new_h: PatchHierarchy, bc: BoundaryFill | None = None,
                 params: interp.WenoParams | None = None) -> CellField:
    """Transfer a field onto a regridded hierarchy (level 0 unchanged).

    `old_levels` is the list of PatchLevel objects `old.data` was laid out
    on (the hierarchy object itself may already hold the new layout).
    Levels are populated coarse to fine, each one ghost filled before it
    serves as the source for the next; the result is averaged down.
    """
    new = CellField(new_h, old.ghost_width, old.name)
    for l in range(new_h.num_levels):
        old_level = old_levels[l] if l < len(old_levels) else None
        old_data = old.data[l] if old_level is not None else None
        move_data_on_regrid(old_level, old_data, new, l, params)
        fill_ghosts(new, bc, params, levels=[l])
    average_down(new_h, new)
    return new
