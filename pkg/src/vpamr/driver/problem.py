"""Bump-on-tail initial data and construction of the simulation state."""
from __future__ import annotations

import math

import numpy as np

from .. import integrator as itg
from .. import interp
from ..data import PHASE_GHOST_WIDTH, CellField
from ..mesh import IndexBox, PatchHierarchy, refine
from ..transfer import config_hierarchy_for
from ..vlasov import PhaseMesh, ReconstructionParams
from .config import SimConfig

SQRT_2PI = math.sqrt(2.0 * math.pi)


def f_background(v):
    """Maxwellian core plus a warm beam centred at v = 4.5."""
    v = np.asarray(v, dtype=np.float64)
    return 0.9 / SQRT_2PI * np.exp(-0.5 * v * v) + 0.2 / SQRT_2PI * np.exp(-4.0 * (v - 4.5) ** 2)


def f_initial(x, v, amplitude: float = 0.04, k: float = 0.3):
    return f_background(v) * (1.0 + amplitude * np.cos(k * np.asarray(x)))


def cell_averages(mesh: PhaseMesh, box: IndexBox, amplitude: float = 0.04, k: float = 0.3,
                  n_gauss: int = 3) -> np.ndarray:
    """Cell averages: exact in x (the perturbation is a cosine), Gauss-Legendre in v."""
    i = np.arange(box.lo[0], box.hi[0] + 2)
    xe = mesh.x_lo + i * mesh.dx
    xavg = 1.0 + amplitude * (np.sin(k * xe[1:]) - np.sin(k * xe[:-1])) / (k * mesh.dx)
    xg, wg = np.polynomial.legendre.leggauss(n_gauss)
    vc = mesh.vbar(np.arange(box.lo[1], box.hi[1] + 1))
    vavg = 0.5 * sum(w * f_background(vc + 0.5 * mesh.dv * q) for q, w in zip(xg, wg))
    return np.outer(xavg, vavg)


def build_state(cfg: SimConfig) -> itg.SimState:
    """Hierarchies, fields and integrator settings for a configuration
    (the distribution function is left at zero)."""
    dom = IndexBox((0, 0), (cfg.nx - 1, cfg.nv - 1))
    ratios = [tuple(r) for r in cfg.ratios[:cfg.max_levels - 1]]
    levels = [[dom]]
    if cfg.initial_box is not None and cfg.max_levels > 1:
        levels.append([refine(IndexBox(tuple(cfg.initial_box[0]), tuple(cfg.initial_box[1])), ratios[0])])
    h = PatchHierarchy(dom, ratios, periodic=(True, False), levels=levels)
    mesh = PhaseMesh(cfg.x_lo, cfg.x_hi, cfg.v_lo, cfg.v_hi, cfg.nx, cfg.nv, cfg.accel_sign)
    f = CellField(h, PHASE_GHOST_WIDTH, "f")
    sp = itg.Species("electrons", h, mesh, f, f_background,
                     ReconstructionParams(cfg.epsilon, cfg.limiting))
    ch = config_hierarchy_for(h)
    weno = interp.WenoParams(cfg.epsilon, cfg.ideal_weights if cfg.ideal_weights == "subcell"
                             else interp.PAPER_IDEAL_WEIGHTS)
    state = itg.SimState(
        species=[sp], config_h=ch,
        time=itg.TimeController(cfg.dt0, cfg.safety_fraction, cfg.growth_cap, cfg.stability_coefficient),
        tags=itg.TagCriteria(cfg.tol, tuple(cfg.tag_buffer), cfg.regrid_interval),
        amr=itg.AMRPolicy(tuple(map(tuple, cfg.largest_patch_size)), tuple(map(tuple, cfg.smallest_patch_size)),
                          cfg.efficiency, cfg.nest_buffer),
        reduction=cfg.reduction, reduction_method=cfg.reduction_method, weno=weno, refine=cfg.refine)
    return state


def init_bump_on_tail(cfg: SimConfig) -> itg.SimState:
    """State at t = 0: initial averages on every level, ghosts filled and
    the field solved."""
    state = build_state(cfg)
    sp = state.species[0]
    sp.f.set_interior(lambda l, p: cell_averages(sp.mesh_at(l), p.box, cfg.amplitude, cfg.wavenumber))
    # boundary ghosts depend on E and E on the (x-)ghosts: fill with E = 0,
    # solve, then refill and solve again
    state.fill_ghosts(sp, sp.f)
    itg.evaluate_constraints(state)
    state.fill_ghosts(sp, sp.f)
    itg.evaluate_constraints(state)
    state._constraints_gen = itg._generations(state)
    return state
