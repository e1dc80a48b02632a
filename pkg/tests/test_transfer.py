import math

import numpy as np
import pytest

from vpamr.data import CellField, fill_ghosts
from vpamr.driver.harness import reduction_equivalence
from vpamr.mesh import IndexBox, PatchHierarchy
from vpamr.transfer import (
    MomentSpec,
    ReductionPlan,
    config_hierarchy_for,
    inject,
    mask_reduce,
    subpatch_reduce,
)

V_LO, V_HI, NV = -8.0, 10.0, 32
DV = (V_HI - V_LO) / NV
DOM = IndexBox((0, 0), (15, NV - 1))
SPEC = MomentSpec(DV)
REDUCE = [mask_reduce, subpatch_reduce]


def B(lo, hi):
    return IndexBox(tuple(lo), tuple(hi))


def two_level():
    levels = [[DOM], [B((4, 8), (11, 23)), B((20, 40), (27, 55))]]
    ph = PatchHierarchy(DOM, [(2, 2)], periodic=(True, False), levels=levels)
    return ph, config_hierarchy_for(ph)


def three_level():
    levels = [[DOM], [B((4, 8), (19, 47))], [B((16, 32), (31, 63))]]
    ph = PatchHierarchy(DOM, [(2, 2), (2, 4)], periodic=(True, False), levels=levels)
    return ph, config_hierarchy_for(ph)


def maxwell_avg(ph, l, box):
    """Exact cell averages of the unit Maxwellian on level l."""
    r = ph.ratio_to_coarsest(l)[1]
    dv = DV / r
    j = np.arange(box.lo[1], box.hi[1] + 1)
    e = V_LO + np.append(j, j[-1] + 1) * dv
    cdf = 0.5 * (1 + np.array([math.erf(x / math.sqrt(2)) for x in e]))
    return np.broadcast_to(np.diff(cdf) / dv, box.shape)


@pytest.mark.parametrize("build", [two_level, three_level])
@pytest.mark.parametrize("reduce", REDUCE)
def test_constant_f(build, reduce):
    ph, ch = build()
    plan = ReductionPlan(ph, ch)
    f = CellField(ph, 3, fill=0.25)
    rho = reduce(plan, f, SPEC)
    # 1 - 0.25 * (v_hi - v_lo), on every level and in the ghosts
    for l in range(ch.num_levels):
        assert np.allclose(rho.array(l, 0), 1 - 0.25 * 18.0, atol=1e-13)


@pytest.mark.parametrize("reduce", REDUCE)
def test_unit_f_counts_each_velocity_cell_once(reduce):
    ph, ch = three_level()
    plan = ReductionPlan(ph, ch)
    f = CellField(ph, 3, fill=1.0)
    rho = reduce(plan, f, MomentSpec(DV, offset=0.0, scale=1.0))
    assert np.allclose(rho.interior(2, 0), 18.0, atol=1e-13)


@pytest.mark.parametrize("reduce", REDUCE)
def test_maxwellian_neutralises(reduce):
    ph, ch = two_level()
    plan = ReductionPlan(ph, ch)
    f = CellField(ph, 3)
    f.set_interior(lambda l, p: maxwell_avg(ph, l, p.box))
    fill_ghosts(f)
    rho = reduce(plan, f, SPEC)
    S = 0.5 * (math.erf(V_HI / math.sqrt(2)) - math.erf(V_LO / math.sqrt(2)))
    assert np.allclose(rho.interior(1, 0), 1 - S, atol=1e-13)
    assert abs(1 - S) < 1e-14


def test_mask_and_subpatch_agree_on_random_hierarchies():
    rep = reduction_equivalence(trials=15, seed=11)
    assert rep.max_rel <= 1e-13


def test_plan_rebuilds_lazily():
    ph, ch = two_level()
    plan = ReductionPlan(ph, ch)
    assert plan.rebuild_count == 1
    plan.ensure_valid()
    assert plan.rebuild_count == 1
    f_old = CellField(ph, 3, fill=1.0)
    ph.set_levels([[DOM], [B((0, 0), (7, 15))]])
    ch.set_levels([[ch.level_domain(l)] for l in range(2)])
    assert not plan.valid and plan.rebuild_count == 1
    with pytest.raises(ValueError):   # stale field
        mask_reduce(plan, f_old, SPEC)
    assert plan.rebuild_count == 2
    mask_reduce(plan, CellField(ph, 3, fill=1.0), SPEC)
    assert plan.rebuild_count == 2


def test_plan_rejects_mismatched_hierarchies():
    ph, _ = two_level()
    ch = config_hierarchy_for(ph, num_levels=1)
    with pytest.raises(ValueError):
        ReductionPlan(ph, ch)


def test_moment_spec_validation():
    with pytest.raises(ValueError):
        MomentSpec(0.0)
    with pytest.raises(NotImplementedError):
        MomentSpec(1.0, order=1)


def test_injection_copies_levels_with_periodic_ghosts():
    ph, ch = two_level()
    plan = ReductionPlan(ph, ch)
    E = CellField(ch, 2)
    for l in range(2):
        n = ch.level_domain(l).shape[0]
        E.interior(l, 0)[...] = 0.5 + 2.0 * np.arange(n)   # linear in the cell index
    inj = inject(E, plan)
    # level 1 patch 1 spans fine x-cells 20..27
    col = inj.column(1, 1)
    assert col.size == 8 + 6
    assert np.array_equal(col, 0.5 + 2.0 * np.arange(17, 31))
    assert inj.value(1, 1, 20, 44) == 40.5
    # level 0 wraps: x-ghosts of the domain patch come from the other end
    c0 = inj.column(0, 0)
    assert np.array_equal(c0[:3], 0.5 + 2.0 * np.array([13, 14, 15]))
    assert inj.broadcast(0, 0).shape == (22, NV + 6)
    with pytest.raises(ValueError):
        inject(CellField(ph, 3), plan)
