import math

import numpy as np
import pytest

from vpamr import integrator as itg
from vpamr.data import CellField
from vpamr.driver.config import preset
from vpamr.driver.problem import build_state, cell_averages, init_bump_on_tail
from vpamr.mesh import IndexBox, PatchHierarchy, check_proper_nesting

SMALL = preset("amr1", max_levels=2)


# -- time stepping controls --------------------------------------------------------

def test_rk4_amplification_factor():
    """Stage recurrence as used by the integrator, on y' = -y with dt = 0.1:
    1 - 0.1 + 0.1^2/2 - 0.1^3/6 + 0.1^4/24."""
    rk = itg.RKScheme()
    dt, y = 0.1, 1.0
    k, acc = 0.0, 0.0
    for s in range(rk.stages):
        pred = y + rk.alpha[s] * dt * k
        k = -pred
        acc += rk.b[s] * k
    assert y + dt * acc == pytest.approx(0.90483750, abs=5e-9)
    assert y + dt * acc == pytest.approx(1 - 0.1 + 0.005 - 0.1 ** 3 / 6 + 0.1 ** 4 / 24, abs=1e-15)
    with pytest.raises(ValueError):
        itg.RKScheme(b=(0.5, 0.5, 0.5, 0.5))


def test_time_controller():
    dx = 0.3
    tc = itg.TimeController()
    assert tc.limit(10.0 / dx) == pytest.approx(0.5 * 1.7 * dx / 10)
    assert tc.next_dt(1e-9) == pytest.approx(0.011)   # growth cap from dt0 = 0.01
    assert tc.next_dt(10.0 / dx) == pytest.approx(0.0121)    # still capped (limit 0.0255)
    assert tc.next_dt(100.0 / dx) == pytest.approx(0.5 * 1.7 * dx / 100)
    assert tc.limit(0.0) == math.inf
    with pytest.raises(FloatingPointError):
        tc.limit(float("nan"))
    with pytest.raises(ValueError):
        itg.TimeController(dt_initial=0.0)


def test_compute_dt_uses_fastest_cell():
    cfg = preset("uniform", nx=16, nv=32)
    s = init_bump_on_tail(cfg)
    mesh = s.species[0].mesh
    vmax = 10.0 - 0.5 * mesh.dv
    Emax = float(np.max(np.abs(s.E.interior(0, 0))))
    rate = vmax / mesh.dx + Emax / mesh.dv
    s.time.dt = 1.0
    assert itg.compute_dt(s) == pytest.approx(0.5 * 1.7 / rate, rel=1e-14)


# -- tagging ------------------------------------------------------------------------

def test_tagging_spike():
    dom = IndexBox((0, 0), (15, 15))
    h = PatchHierarchy(dom, [(2, 2)], periodic=(True, False), levels=[[dom]])
    f = CellField(h, 3)
    f.interior(0, 0)[8, 8] = 1.0
    crit = itg.TagCriteria(tol=0.01, tag_buffer=(1, 1))
    tags = itg.tag_cells(f, 0, crit, (1.0, 1.0)).to_array(dom)
    # raw tags: the spike and its four face neighbours; grown by one cell
    # in x, then v, this gives a 5 x 3 block plus two 3-cell caps
    want = np.zeros((16, 16), bool)
    want[6:11, 7:10] = True
    want[7:10, 6] = want[7:10, 10] = True
    assert np.array_equal(tags, want)
    # nothing to tag on constant data
    f.fill(0.3)
    assert not itg.tag_cells(f, 0, crit, (1.0, 1.0)).to_array(dom).any()


def test_tag_buffer_wraps_in_x_only():
    dom = IndexBox((0, 0), (15, 15))
    h = PatchHierarchy(dom, [(2, 2)], periodic=(True, False), levels=[[dom]])
    f = CellField(h, 3)
    f.array(0, 0)[3, 3] = 1.0        # spike at global cell (0, 0)
    f.array(0, 0)[-4, 3] = 0.0
    tags = itg.tag_cells(f, 0, itg.TagCriteria(tol=0.01, tag_buffer=(2, 2)), (1.0, 1.0)).to_array(dom)
    assert tags[15, 0] and tags[14, 0]   # wrapped in x
    assert tags[0, 2] and not tags[0, 4]


def test_tag_criteria_validation():
    with pytest.raises(ValueError):
        itg.TagCriteria(tol=0.0)


# -- conservation -------------------------------------------------------------------

def test_one_step_mass_balance():
    s = init_bump_on_tail(SMALL)
    m0 = s.mass()
    itg.advance_step(s)
    sp = s.species[0]
    assert abs(s.mass() - m0 - sp.boundary_inflow) <= 1e-12 * m0
    assert sp.boundary_inflow != 0.0


def test_regrid_conserves_mass_and_nesting():
    s = init_bump_on_tail(preset("amr1"))
    m0 = s.mass()
    for _ in range(3):
        assert itg.regrid_hierarchies(s) in (True, False)
        assert check_proper_nesting(s.species[0].hierarchy)
        s.fill_ghosts(s.species[0], s.species[0].f)
        itg.evaluate_constraints(s)
        assert abs(s.mass() - m0) <= 1e-12 * m0
    assert s.species[0].hierarchy.num_levels >= 3


def test_nesting_buffer_wraps_periodically():
    """A feature straddling x = x_lo must be refined on both sides of the
    periodic boundary, on every level, and ghost filling must find coarse
    data for the finest patches."""
    cfg = preset("amr1", initial_box=None)
    s = build_state(cfg)
    sp = s.species[0]
    mesh = sp.mesh
    L = mesh.x_hi - mesh.x_lo

    def fill(l, p):
        m = sp.mesh_at(l)
        x = m.x_center(np.arange(p.box.lo[0], p.box.hi[0] + 1))
        d = (x - mesh.x_lo + 0.5 * L) % L - 0.5 * L         # periodic distance to x_lo
        bump = 1.0 + 0.5 * np.exp(-(d / 0.4) ** 2)
        return bump[:, None] * cell_averages(m, p.box, 0.0)

    for _ in range(4):
        sp.f.set_interior(fill)
        s.fill_ghosts(sp, sp.f)
        itg.evaluate_constraints(s)
        itg.regrid_hierarchies(s)
        h = sp.hierarchy
        assert check_proper_nesting(h)
        s.fill_ghosts(sp, sp.f)       # raises if a fine patch lacks coarse data
    h = sp.hierarchy
    assert h.num_levels == 4
    top = h.level_domain(3)
    finest = h.levels[3].boxes
    assert any(b.lo[0] == top.lo[0] for b in finest) and any(b.hi[0] == top.hi[0] for b in finest)


def test_failed_step_keeps_state():
    s = init_bump_on_tail(SMALL)
    f = s.species[0].f
    f.interior(0, 0)[5, 10] = np.nan
    before = f.copy()
    with pytest.raises(ValueError):      # the field solve rejects non-finite charge
        itg.advance_step(s)
    assert s.step == 0 and s.t == 0.0
    assert s.species[0].f is f
    assert np.array_equal(f.interior(0, 0), before.interior(0, 0), equal_nan=True)
