"""Coupling between the phase-space and configuration-space hierarchies.

Reductions integrate f over velocity onto the configuration grid at the
finest configuration resolution; injection spreads configuration data
(the electric field) back over phase-space patches.  Both work through a
`ReductionPlan` that caches the intermediate 1-D patch sets and is
invalidated whenever either hierarchy is regridded.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import interp
from .data import CONFIG_GHOST_WIDTH, STENCIL_GHOSTS, CellField, average_down, build_masks, exchange_ghosts
from .mesh import PatchHierarchy, compute_sub_patches, refine, restrict_dims

X_DIM = 0
V_DIM = 1


def config_hierarchy_for(phase_h: PatchHierarchy, num_levels: int | None = None) -> PatchHierarchy:
    """1-D hierarchy matching the x-resolution of every phase level, each
    level a single periodic patch covering the whole domain."""
    n = phase_h.num_levels if num_levels is None else num_levels
    dom = restrict_dims(phase_h.domain_box, [V_DIM])
    ratios = [(r[X_DIM],) for r in phase_h.ratios]
    h = PatchHierarchy(dom, ratios, periodic=(True,), levels=[[dom]])
    h.set_levels([[h.level_domain(l)] for l in range(n)], notify=False)
    return h


@dataclass(frozen=True)
class MomentSpec:
    """Zeroth velocity moment with an affine post-transform:
    result = offset + scale * dv * sum(f).  `dv` is the coarsest-level cell
    size; finer levels divide it by their velocity refinement."""

    dv: float
    order: int = 0
    offset: float = 1.0
    scale: float = -1.0

    def __post_init__(self):
        if not self.dv > 0:
            raise ValueError("dv must be positive")
        if self.order != 0:
            raise NotImplementedError("only the zeroth moment is implemented")


class ReductionPlan:
    """Intermediate structures for reductions and injection.

    partial_level : one 1-D box per phase patch, its x-extent at the finest
                    configuration resolution (overlapping)
    total_level   : disjoint 1-D boxes tiling the domain at that resolution
    restricted    : 1-D hierarchy of the x-restrictions of all phase patches
    patch_map     : (level, phase pid) -> index into partial_level
    """

    def __init__(self, phase_h: PatchHierarchy, config_h: PatchHierarchy):
        self.phase_h = phase_h
        self.config_h = config_h
        self.valid = False
        self.rebuild_count = 0
        phase_h.register_observer(self)
        config_h.register_observer(self)
        self.rebuild()

    # observer protocol ---------------------------------------------------------
    def hierarchy_changed(self, h) -> None:
        self.valid = False

    def ensure_valid(self) -> None:
        if not self.valid:
            self.rebuild()

    def rebuild(self) -> None:
        ph, ch = self.phase_h, self.config_h
        L = ph.num_levels - 1
        if ch.num_levels != ph.num_levels:
            raise ValueError("configuration hierarchy depth differs from the phase hierarchy")
        for l in range(L + 1):
            if ch.ratio_to_coarsest(l)[0] != ph.ratio_to_coarsest(l)[X_DIM]:
                raise ValueError(f"inconsistent x-resolution on level {l}")
        if ch.domain_box.shape[0] != ph.domain_box.shape[X_DIM]:
            raise ValueError("configuration and phase domains differ")
        self.finest = L
        self.partial_level = []
        self.patch_map = {}
        self.sub_patches = {}
        for l, lev in enumerate(ph.levels):
            rx = ph.ratio_between(l, L)[X_DIM]
            for p in lev.patches:
                self.patch_map[(l, p.patch_id)] = len(self.partial_level)
                self.partial_level.append(refine(restrict_dims(p.box, [V_DIM]), (rx,)))
                self.sub_patches[(l, p.patch_id)] = compute_sub_patches(p, lev, ph, [V_DIM])
        self.total_level = list(ch.levels[L].boxes)
        self.restricted = PatchHierarchy(
            ch.domain_box, ch.ratios, periodic=(True,),
            levels=[[restrict_dims(p.box, [V_DIM]) for p in lev.patches] for lev in ph.levels],
            allow_overlap=True)
        self.masks = build_masks(ph)
        self.phase_generation = ph.generation
        self.config_generation = ch.generation
        self.rebuild_count += 1
        self.valid = True

    def check_field(self, field: CellField, which: str) -> None:
        h = self.phase_h if which == "phase" else self.config_h
        gen = self.phase_generation if which == "phase" else self.config_generation
        if field.hierarchy is not h or field.generation != gen:
            raise ValueError(f"{which} field does not match the plan's current hierarchy")

    def dv(self, spec: MomentSpec, level: int) -> float:
        return spec.dv / self.phase_h.ratio_to_coarsest(level)[V_DIM]


def _finish_reduction(plan: ReductionPlan, partials: list, spec: MomentSpec,
                      out: CellField | None) -> CellField:
    ch = plan.config_h
    L = plan.finest
    if out is None:
        out = CellField(ch, CONFIG_GHOST_WIDTH, "rho")
    plan.check_field(out, "config")
    tot_box = plan.total_level[0]
    total = np.zeros(tot_box.shape)
    for box, vals in zip(plan.partial_level, partials):
        total[box.slices(tot_box.lo)] += vals
    # the finest configuration level is a single domain-covering patch
    out.interior(L, 0)[...] = total
    average_down(ch, out)
    for l in range(ch.num_levels):
        a = out.interior(l, 0)
        a[...] = spec.offset + spec.scale * a
        exchange_ghosts(l, out)
    return out


def mask_reduce(plan: ReductionPlan, f: CellField, spec: MomentSpec, out: CellField | None = None,
                method: str = "linear", params: interp.WenoParams | None = None) -> CellField:
    """Velocity moment by masking: refine every phase patch in x to the
    finest resolution, zero the covered cells, sum over v."""
    plan.ensure_valid()
    plan.check_field(f, "phase")
    ph = plan.phase_h
    g = f.ghost_width
    partials = []
    for l, lev in enumerate(ph.levels):
        rx = ph.ratio_between(l, plan.finest)[X_DIM]
        dv = plan.dv(spec, l)
        for p in lev.patches:
            a = f.array(l, p.patch_id)
            nx = p.box.shape[X_DIM]
            sub = a[g - STENCIL_GHOSTS:g + nx + STENCIL_GHOSTS, g:a.shape[1] - g]
            fine = interp.refine_axis(sub, rx, X_DIM, method, params)
            mask = np.repeat(plan.masks.array(l, p.patch_id), rx, axis=X_DIM)
            partials.append(dv * np.sum(fine * mask, axis=V_DIM))
    return _finish_reduction(plan, partials, spec, out)


def subpatch_reduce(plan: ReductionPlan, f: CellField, spec: MomentSpec, out: CellField | None = None,
                    method: str = "linear", params: interp.WenoParams | None = None) -> CellField:
    """Velocity moment over the composite-grid sub-patches: sum each
    sub-patch over v at its own resolution, then refine the 1-D sums."""
    plan.ensure_valid()
    plan.check_field(f, "phase")
    ph = plan.phase_h
    g = f.ghost_width
    partials = []
    for l, lev in enumerate(ph.levels):
        rx = ph.ratio_between(l, plan.finest)[X_DIM]
        dv = plan.dv(spec, l)
        for p in lev.patches:
            a = f.array(l, p.patch_id)
            gb = p.box.grow(g)
            part = np.zeros(p.box.shape[X_DIM] * rx)
            for S in plan.sub_patches[(l, p.patch_id)]:
                Sg = S.grow_dim(X_DIM, STENCIL_GHOSTS)
                sums = dv * np.sum(a[Sg.slices(gb.lo)], axis=V_DIM)
                fine = interp.refine_axis(sums, rx, 0, method, params)
                k0 = (S.lo[X_DIM] - p.box.lo[X_DIM]) * rx
                part[k0:k0 + fine.size] += fine
            partials.append(part)
    return _finish_reduction(plan, partials, spec, out)


REDUCERS = {"mask": mask_reduce, "subpatch": subpatch_reduce}


class InjectedField:
    """Configuration data seen from phase-space patches: one 1-D array per
    phase patch covering its x-cells plus ghosts, constant in v."""

    def __init__(self, plan: ReductionPlan, field: CellField):
        self.plan = plan
        self.field = field
        self.ghost_width = field.ghost_width

    def column(self, level: int, pid: int) -> np.ndarray:
        return self.field.array(level, pid)

    def value(self, level: int, pid: int, i: int, j: int | None = None) -> float:
        """E at global phase cell (i, j) of the patch (j is irrelevant)."""
        box = self.plan.phase_h.levels[level].patches[pid].box
        return float(self.field.array(level, pid)[i - box.lo[X_DIM] + self.ghost_width])

    def broadcast(self, level: int, pid: int) -> np.ndarray:
        """Field on the patch's ghosted (x, v) array."""
        p = self.plan.phase_h.levels[level].patches[pid]
        col = self.column(level, pid)
        nv = p.box.shape[V_DIM] + 2 * self.ghost_width
        return np.broadcast_to(col[:, None], (col.size, nv))


def inject(config_field: CellField, plan: ReductionPlan, ghost_width: int = 3) -> InjectedField:
    """Copy each config level onto the restrictions of the phase patches of
    the same level (periodic ghosts included)."""
    plan.ensure_valid()
    plan.check_field(config_field, "config")
    rh = plan.restricted
    out = CellField(rh, ghost_width, config_field.name)
    for l, lev in enumerate(rh.levels):
        full = config_field.interior(l, 0)
        n = full.size
        for p in lev.patches:
            idx = np.arange(p.box.lo[0] - ghost_width, p.box.hi[0] + ghost_width + 1) % n
            out.array(l, p.patch_id)[...] = full[idx]
    return InjectedField(plan, out)
