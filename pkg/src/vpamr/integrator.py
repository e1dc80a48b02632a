"""Synchronous RK4 advance of phase-space hierarchies coupled through the
Poisson constraint, with flux accumulation, tagging and regridding."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import data, interp, transfer
from .data import CellField, FluxField
from .field import cached_poisson, compute_E, solve_potential
from .mesh import IndexBox, PatchHierarchy, TagField, check_proper_nesting, cluster_tags, coarsen, refine
from .timing import TIMERS
from .vlasov import (
    PhaseMesh,
    ReconstructionParams,
    apply_boundary_conditions,
    boundary_background,
    compute_fluxes,
    flux_divergence,
)


@dataclass(frozen=True)
class RKScheme:
    alpha: tuple = (0.0, 0.5, 0.5, 1.0)
    b: tuple = (1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0)
    c: tuple = (0.0, 0.5, 0.5, 1.0)

    def __post_init__(self):
        if not (len(self.alpha) == len(self.b) == len(self.c)):
            raise ValueError("inconsistent tableau")
        if abs(sum(self.b) - 1.0) > 1e-14:
            raise ValueError("weights must sum to one")

    @property
    def stages(self) -> int:
        return len(self.b)


@dataclass
class TimeController:
    dt_initial: float = 0.01
    safety_fraction: float = 0.5
    growth_cap: float = 1.10
    stability_coefficient: float = 1.7
    dt: float | None = None

    def __post_init__(self):
        if not self.dt_initial > 0:
            raise ValueError("dt_initial must be positive")
        if self.dt is None:
            self.dt = self.dt_initial

    def limit(self, rate: float) -> float:
        """Time step allowed by the stability estimate alone."""
        if not math.isfinite(rate):
            raise FloatingPointError("non-finite wave speed in time step estimate")
        if rate <= 0.0:
            return math.inf
        return self.safety_fraction * self.stability_coefficient / rate

    def next_dt(self, rate: float) -> float:
        self.dt = min(self.limit(rate), self.growth_cap * self.dt)
        return self.dt


@dataclass(frozen=True)
class TagCriteria:
    tol: float = 0.01
    tag_buffer: tuple = (1, 1)
    regrid_interval: int = 2

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.regrid_interval < 0:
            raise ValueError("regrid_interval must be non-negative")


@dataclass(frozen=True)
class AMRPolicy:
    """Patch-size limits per level (the last entry applies to deeper levels)."""

    largest_patch_size: tuple = ((32, 32), (64, 64), (64, 64))
    smallest_patch_size: tuple = ((4, 4),)
    efficiency: float = 0.70
    nest_buffer: int = 2

    def largest(self, level: int) -> tuple:
        return tuple(self.largest_patch_size[min(level, len(self.largest_patch_size) - 1)])

    def smallest(self, level: int) -> tuple:
        return tuple(self.smallest_patch_size[min(level, len(self.smallest_patch_size) - 1)])


class Species:
    """One phase-space hierarchy and its working fields."""

    def __init__(self, name: str, hierarchy: PatchHierarchy, mesh: PhaseMesh, f: CellField,
                 background: Callable[[np.ndarray], np.ndarray] | None = None,
                 recon: ReconstructionParams | None = None):
        self.name = name
        self.hierarchy = hierarchy
        self.mesh = mesh
        self.f = f
        self.background = background
        self.recon = recon or ReconstructionParams()
        self.plan: transfer.ReductionPlan | None = None
        self._bg = {}
        self.f_pred: CellField | None = None
        self.k: CellField | None = None
        self.F_accum: FluxField | None = None
        # time-integrated mass that has entered through the v boundaries
        self.boundary_inflow = 0.0

    def mesh_at(self, level: int) -> PhaseMesh:
        return self.mesh.refined(self.hierarchy.ratio_to_coarsest(level))

    def boundary_values(self, level: int):
        if self.background is None:
            return None
        if level not in self._bg:
            self._bg[level] = boundary_background(self.background, self.mesh_at(level), data.PHASE_GHOST_WIDTH)
        return self._bg[level]


@dataclass
class SimState:
    species: list
    config_h: PatchHierarchy
    rk: RKScheme = field(default_factory=RKScheme)
    time: TimeController = field(default_factory=TimeController)
    tags: TagCriteria = field(default_factory=TagCriteria)
    amr: AMRPolicy = field(default_factory=AMRPolicy)
    reduction: str = "subpatch"
    reduction_method: str = "linear"
    weno: interp.WenoParams = field(default_factory=interp.WenoParams)
    refine: bool = True
    t: float = 0.0
    step: int = 0
    dt: float | None = None
    rho: CellField | None = None
    phi: CellField | None = None
    E: CellField | None = None
    injected: list = field(default_factory=list)
    regrid_count: int = 0
    _constraints_gen: tuple | None = None

    def __post_init__(self):
        if self.reduction not in transfer.REDUCERS:
            raise ValueError(f"unknown reduction algorithm {self.reduction!r}")
        for sp in self.species:
            if sp.plan is None:
                sp.plan = transfer.ReductionPlan(sp.hierarchy, self.config_h)
        self._allocate_config()
        if self.dt is None:
            self.dt = self.time.dt

    def _allocate_config(self):
        g = data.CONFIG_GHOST_WIDTH
        self.rho = CellField(self.config_h, g, "rho")
        self.phi = CellField(self.config_h, g, "phi")
        self.E = CellField(self.config_h, g, "E")

    # boundary conditions -----------------------------------------------------------
    def e_column(self, sp: Species, level: int, box: IndexBox, g: int) -> np.ndarray:
        """E on the x-cells of `box` (plus g ghosts) at phase level `level`,
        read straight from the configuration field."""
        ch = self.config_h
        lc = min(level, ch.num_levels - 1)
        full = self.E.interior(lc, 0)
        rep = sp.hierarchy.ratio_to_coarsest(level)[0] // ch.ratio_to_coarsest(lc)[0]
        idx = np.arange(box.lo[0] - g, box.hi[0] + g + 1)
        return full[(idx // rep) % full.size]

    def boundary_fill(self, sp: Species) -> Callable[[CellField, int], None]:
        def bc(fld: CellField, level: int) -> None:
            mesh = sp.mesh_at(level)
            bg = sp.boundary_values(level)
            g = fld.ghost_width
            for p in fld.hierarchy.levels[level].patches:
                if p.box.lo[1] == 0 or p.box.hi[1] == mesh.nv - 1:
                    E = self.e_column(sp, level, p.box, g)
                    apply_boundary_conditions(fld.array(level, p.patch_id), E, p.box, mesh, bg, g)
        return bc

    def fill_ghosts(self, sp: Species, fld: CellField) -> None:
        with TIMERS.section("fill"):
            data.fill_ghosts(fld, self.boundary_fill(sp), self.weno)

    # diagnostics ------------------------------------------------------------------
    def max_E(self) -> float:
        L = self.config_h.num_levels - 1
        return float(np.max(np.abs(self.E.interior(L, 0))))

    def mass(self, sp: Species | None = None) -> float:
        sp = sp or self.species[0]
        h = sp.hierarchy
        vols = []
        for l in range(h.num_levels):
            m = sp.mesh_at(l)
            vols.append(m.dx * m.dv)
        return data.composite_sum(sp.f, vols)


# ---------------------------------------------------------------------------
# stages

def compute_predictor_state(state: SimState, s: int) -> None:
    """f_pred = f_old + alpha_s dt k, then ghost cells (coarse-fine,
    exchange, physical boundaries)."""
    a = state.rk.alpha[s] * state.dt
    for sp in state.species:
        if sp.f_pred is None or sp.f_pred.generation != sp.hierarchy.generation:
            sp.f_pred = sp.f.like("f_pred")
        for l, p, arr in sp.f_pred.items():
            pid = p.patch_id
            if s == 0 or a == 0.0:
                sp.f_pred.interior(l, pid)[...] = sp.f.interior(l, pid)
            else:
                sp.f_pred.interior(l, pid)[...] = sp.f.interior(l, pid) + a * sp.k.interior(l, pid)
        state.fill_ghosts(sp, sp.f_pred)


def evaluate_constraints(state: SimState, sources: Sequence[CellField] | None = None) -> None:
    """rho from the velocity moment of every species, then phi and E on the
    finest configuration level, averaged down, and E injected."""
    with TIMERS.section("constraints"):
        sources = [sp.f for sp in state.species] if sources is None else list(sources)
        ch = state.config_h
        L = ch.num_levels - 1
        reducer = transfer.REDUCERS[state.reduction]
        total = None
        with TIMERS.section("reduce"):
            for k, (sp, f) in enumerate(zip(state.species, sources)):
                spec = transfer.MomentSpec(dv=sp.mesh.dv, offset=1.0 if k == 0 else 0.0, scale=-1.0)
                out = reducer(sp.plan, f, spec, method=state.reduction_method, params=state.weno)
                if total is None:
                    total = out
                else:
                    for l in range(ch.num_levels):
                        total.interior(l, 0)[...] += out.interior(l, 0)
        if state.rho.generation != ch.generation:
            state._allocate_config()
        state.rho.assign(total)
        n = ch.levels[L].patches[0].box.size
        dx = state.species[0].mesh_at(L).dx
        op = cached_poisson(n, dx)
        phi = solve_potential(op, state.rho.interior(L, 0))
        state.phi.interior(L, 0)[...] = phi
        state.E.interior(L, 0)[...] = compute_E(phi, dx)
        data.average_down(ch, state.phi)
        data.average_down(ch, state.E)
        for l in range(ch.num_levels):
            data.exchange_ghosts(l, state.phi)
            data.exchange_ghosts(l, state.E)
        state.injected = [transfer.inject(state.E, sp.plan, data.PHASE_GHOST_WIDTH) for sp in state.species]


def compute_rhs(state: SimState, s: int) -> None:
    """Fluxes on every patch (coarse to fine), then divergence and flux
    accumulation (fine to coarse)."""
    with TIMERS.section("rhs"):
        b = state.rk.b[s]
        for sp, inj in zip(state.species, state.injected):
            h = sp.hierarchy
            if sp.k is None or sp.k.generation != h.generation:
                sp.k = CellField(h, 0, "k")
            if s == 0 or sp.F_accum is None:
                sp.F_accum = FluxField(h, "F_accum")
            fluxes = []
            for l in range(h.num_levels):
                mesh = sp.mesh_at(l)
                lev = {}
                for p in h.levels[l].patches:
                    lev[p.patch_id] = compute_fluxes(sp.f_pred.array(l, p.patch_id), inj.column(l, p.patch_id),
                                                     p.box, mesh, sp.recon, sp.f_pred.ghost_width)
                fluxes.append(lev)
            # shared faces between siblings are computed from identical data, so
            # the flux exchange between patches of a level is the identity
            for l in range(h.num_levels - 1, -1, -1):
                mesh = sp.mesh_at(l)
                for p in h.levels[l].patches:
                    Fx, Fv = fluxes[l][p.patch_id]
                    sp.k.interior(l, p.patch_id)[...] = flux_divergence(Fx, Fv, mesh)
                    acc = sp.F_accum.faces(l, p.patch_id)
                    acc[0] += b * Fx
                    acc[1] += b * Fv


def compute_update(state: SimState) -> list:
    """f_new = f_old + dt div(F_accum), finest level first, with the accumulated
    fluxes averaged onto each coarser level before it is updated."""
    with TIMERS.section("update"):
        out = []
        for sp in state.species:
            h = sp.hierarchy
            f_new = sp.f.like("f")
            for l in range(h.num_levels - 1, -1, -1):
                if l + 1 < h.num_levels:
                    data.average_down_fluxes(h, sp.F_accum, l + 1)
                mesh = sp.mesh_at(l)
                for p in h.levels[l].patches:
                    Fx, Fv = sp.F_accum.faces(l, p.patch_id)
                    f_new.interior(l, p.patch_id)[...] = (sp.f.interior(l, p.patch_id)
                                                          + state.dt * flux_divergence(Fx, Fv, mesh))
            data.average_down(h, f_new)
            out.append((f_new, state.dt * _boundary_flux(sp)))
        return out


def _boundary_flux(sp: Species) -> float:
    """Net mass rate into the domain through the v boundaries, from the
    level-0 accumulated fluxes (which carry the averaged fine fluxes)."""
    h = sp.hierarchy
    mesh = sp.mesh_at(0)
    dom = h.domain_box
    rate = 0.0
    for p in h.levels[0].patches:
        Fv = sp.F_accum.faces(0, p.patch_id)[1]
        if p.box.lo[1] == dom.lo[1]:
            rate += mesh.dx * float(np.sum(Fv[:, 0]))
        if p.box.hi[1] == dom.hi[1]:
            rate -= mesh.dx * float(np.sum(Fv[:, -1]))
    return rate


def compute_dt(state: SimState) -> float:
    """Stability-limited step, at most growth_cap times the previous one."""
    rate = 0.0
    for sp in state.species:
        h = sp.hierarchy
        for l in range(h.num_levels):
            mesh = sp.mesh_at(l)
            for p in h.levels[l].patches:
                vmax = float(np.max(np.abs(mesh.vbar(np.array([p.box.lo[1], p.box.hi[1]])))))
                E = state.e_column(sp, l, p.box, 0)
                if not np.isfinite(E).all():
                    raise FloatingPointError("non-finite electric field")
                rate = max(rate, vmax / mesh.dx + float(np.max(np.abs(E))) / mesh.dv)
    return state.time.next_dt(rate)


def advance_step(state: SimState, dt: float | None = None) -> float:
    """One synchronous RK4 step of all species; returns the step taken.

    If anything fails the species keep their old data and the constraints
    are re-evaluated on it before the error propagates.
    """
    if dt is not None:
        state.dt = dt
    if state._constraints_gen != _generations(state):
        evaluate_constraints(state)
        state._constraints_gen = _generations(state)
    try:
        for sp in state.species:
            if sp.k is not None:
                sp.k.fill(0.0)
        for s in range(state.rk.stages):
            compute_predictor_state(state, s)
            if s > 0:
                evaluate_constraints(state, [sp.f_pred for sp in state.species])
            compute_rhs(state, s)
        new = compute_update(state)
    except Exception:
        evaluate_constraints(state)
        raise
    taken = state.dt
    for sp, (f_new, inflow) in zip(state.species, new):
        sp.f = f_new
        sp.boundary_inflow += inflow
        state.fill_ghosts(sp, sp.f)
    state.t += taken
    state.step += 1
    if state.refine and state.tags.regrid_interval and state.step % state.tags.regrid_interval == 0:
        regrid_hierarchies(state)
    evaluate_constraints(state)
    state._constraints_gen = _generations(state)
    state.dt = compute_dt(state)
    return taken


def _generations(state: SimState) -> tuple:
    return (state.config_h.generation,) + tuple((sp.hierarchy.generation, id(sp.f)) for sp in state.species)


# ---------------------------------------------------------------------------
# tagging and regridding

def tag_cells(f: CellField, level: int, criteria: TagCriteria, spacing: Sequence[float],
              periodic: Sequence[bool] = (True, False), domain: IndexBox | None = None) -> TagField:
    """Tag where delta1 + delta2 > tol, then grow the tags by tag_buffer.

    With d_i f = f_{i+e} - f_{i-e} and D_i f = f_{i+e} - 2 f_i + f_{i-e}:
    delta1 = sqrt(1/2 sum_d dx_d (d f)^2), delta2 = 1/2 sum_d dx_d^2 |D f|.
    Needs one valid ghost cell.  Buffers wrap in periodic dimensions and
    are clipped to `domain` otherwise.
    """
    h = f.hierarchy
    g = f.ghost_width
    lev = h.levels[level]
    domain = domain or h.level_domain(level)
    tags = []
    for p in lev.patches:
        a = f.array(level, p.patch_id)
        core = tuple(slice(g, n - g) for n in a.shape)
        s1 = np.zeros(p.box.shape)
        s2 = np.zeros(p.box.shape)
        for d in range(a.ndim):
            up = list(core)
            dn = list(core)
            up[d] = slice(g + 1, a.shape[d] - g + 1)
            dn[d] = slice(g - 1, a.shape[d] - g - 1)
            fp, fm, f0 = a[tuple(up)], a[tuple(dn)], a[core]
            s1 += spacing[d] * (fp - fm) ** 2
            s2 += spacing[d] ** 2 * np.abs(fp - 2.0 * f0 + fm)
        tags.append(np.sqrt(0.5 * s1) + 0.5 * s2 > criteria.tol)
    raw = TagField(lev.boxes, tags)
    return TagField(lev.boxes, [_dilate(raw, p.box, criteria.tag_buffer, domain, periodic) for p in lev.patches])


def _dilate(tf: TagField, box: IndexBox, buf: Sequence[int], domain: IndexBox, periodic) -> np.ndarray:
    """Tags inside `box` after growing every tag of the level by `buf`."""
    full = tf.to_array(domain)
    out = full.copy()
    for d, b in enumerate(buf):
        cur = out.copy()
        for k in range(1, int(b) + 1):
            for sgn in (1, -1):
                if periodic[d]:
                    out |= np.roll(cur, sgn * k, axis=d)
                else:
                    sh = np.zeros_like(cur)
                    src = [slice(None)] * cur.ndim
                    dst = [slice(None)] * cur.ndim
                    if sgn > 0:
                        src[d], dst[d] = slice(0, -k), slice(k, None)
                    else:
                        src[d], dst[d] = slice(k, None), slice(0, -k)
                    sh[tuple(dst)] = cur[tuple(src)]
                    out |= sh
    return out[box.slices(domain.lo)]


def _level_tags(state: SimState, sp: Species, level: int) -> np.ndarray:
    h = sp.hierarchy
    mesh = sp.mesh_at(level)
    tf = tag_cells(sp.f, level, state.tags, (mesh.dx, mesh.dv), h.periodic)
    return tf.to_array(h.level_domain(level))


def plan_new_levels(state: SimState, sp: Species) -> list:
    """Boxes of every level of the regridded hierarchy (level 0 kept)."""
    h = sp.hierarchy
    top = min(h.num_levels - 1, h.max_levels - 2)
    new_boxes = {0: list(h.levels[0].boxes)}
    finer: list = []  # boxes of new level lev + 2 while working on lev
    for lev in range(top, -1, -1):
        dom = h.level_domain(lev)
        tags = _level_tags(state, sp, lev)
        if finer:
            r1 = h.ratios[lev + 1]
            r0 = h.ratios[lev]
            for bx in finer:
                need = coarsen(coarsen(bx, r1).grow(state.amr.nest_buffer), r0)
                # the buffer wraps around periodic boundaries
                for sh in h.shifts(lev):
                    part = need.shift(sh) & dom
                    if not part.empty:
                        tags[part.slices(dom.lo)] = True
        r = h.ratios[lev]
        lo_sz = tuple(-(-m // rr) for m, rr in zip(state.amr.smallest(lev + 1), r))
        hi_sz = tuple(max(1, M // rr) for M, rr in zip(state.amr.largest(lev + 1), r))
        boxes = cluster_tags(tags, lo_sz, hi_sz, state.amr.efficiency, dom) if tags.any() else []
        fine = [refine(b, r) for b in boxes]
        new_boxes[lev + 1] = fine
        finer = fine
    levels = [new_boxes[0]]
    for l in range(1, top + 2):
        if not new_boxes.get(l):
            break
        levels.append(new_boxes[l])
    return levels


def regrid_hierarchies(state: SimState) -> bool:
    """Rebuild every phase hierarchy from fresh tags and move the data.

    The configuration hierarchy follows the deepest phase hierarchy; it is
    only rebuilt when that depth changes.  Returns True if anything changed.
    """
    changed = False
    with TIMERS.section("regrid"):
        for sp in state.species:
            h = sp.hierarchy
            levels = plan_new_levels(state, sp)
            if [sorted(map(repr, b)) for b in levels] == [sorted(map(repr, lev.boxes)) for lev in h.levels]:
                continue
            changed = True
            old_levels = list(h.levels)
            h.set_levels(levels)
            if not check_proper_nesting(h):
                raise RuntimeError("regridded hierarchy is not properly nested")
            sp.f = data.regrid_field(sp.f, old_levels, h, state.boundary_fill(sp), state.weno)
            sp.f_pred = sp.k = sp.F_accum = None
        depth = max(sp.hierarchy.num_levels for sp in state.species)
        if depth != state.config_h.num_levels:
            ch = state.config_h
            ch.set_levels([[ch.level_domain(l)] for l in range(depth)])
            old_E = state.E
            state._allocate_config()
            # provisional E for the boundary conditions until the next solve
            for l in range(min(depth, old_E.num_levels)):
                state.E.interior(l, 0)[...] = old_E.interior(l, 0)
            changed = True
        if changed:
            state.regrid_count += 1
    return changed
