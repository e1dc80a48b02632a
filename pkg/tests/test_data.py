import numpy as np
import pytest

from vpamr.data import (
    CellField,
    FluxField,
    average_down,
    average_down_fluxes,
    build_masks,
    composite_sum,
    exchange_ghosts,
    fill_ghosts,
    interpolate_level,
    regrid_field,
)
from vpamr.mesh import IndexBox, PatchHierarchy, refine


def B(lo, hi):
    return IndexBox(tuple(lo), tuple(hi))


DOM = B((0, 0), (15, 15))


def centres(box, ratio=(1, 1)):
    """Cell centres of `box` in coarse-index units."""
    i = (np.arange(box.lo[0], box.hi[0] + 1) + 0.5) / ratio[0]
    j = (np.arange(box.lo[1], box.hi[1] + 1) + 0.5) / ratio[1]
    return i[:, None], j[None, :]


def test_exchange_copies_from_the_correct_donor():
    h = PatchHierarchy(DOM, [], periodic=(True, False), levels=[[B((0, 0), (7, 15)), B((8, 0), (15, 15))]])
    f = CellField(h, 3, fill=-1.0)
    f.set_interior(lambda l, p: 1000.0 * centres(p.box)[0] + centres(p.box)[1] + 0 * centres(p.box)[0])
    exchange_ghosts(0, f)
    for p in h.levels[0].patches:
        gb = p.box.grow(3)
        a = f.array(0, p.patch_id)
        for (i, j) in gb.cells():
            val = a[i - gb.lo[0], j - gb.lo[1]]
            if 0 <= j <= 15:
                want = 1000.0 * ((i % 16) + 0.5) + j + 0.5
                assert val == want, (p.box, i, j)
            else:
                assert val == -1.0   # non-periodic: left for the boundary condition


def test_coarse_fine_ghosts_reproduce_linear_profiles():
    fine_box = B((12, 8), (19, 23))
    h = PatchHierarchy(DOM, [(2, 2)], periodic=(True, True), levels=[[DOM], [fine_box]])
    f = CellField(h, 3)

    def lin(i, j):
        return 0.7 + 0.3 * i - 0.2 * j

    f.set_interior(lambda l, p: lin(*centres(p.box, (2, 2) if l else (1, 1))))
    fill_ghosts(f)
    gb = fine_box.grow(3)
    exact = lin(*centres(gb, (2, 2)))
    assert np.max(np.abs(f.array(1, 0) - exact)) < 1e-13


def test_average_down_mean_of_subcells():
    h = PatchHierarchy(B((0, 0), (3, 3)), [(2, 2)], levels=[[B((0, 0), (3, 3))], [B((2, 2), (3, 3))]])
    f = CellField(h, 2)
    f.interior(1, 0)[...] = [[3.0, 4.0], [5.0, 6.0]]
    average_down(h, f)
    assert f.interior(0, 0)[1, 1] == 4.5
    assert f.interior(0, 0)[0, 0] == 0.0


@pytest.mark.parametrize("ratio", [(2, 2), (2, 4), (4, 2)])
def test_refine_then_average_down_round_trip(ratio):
    rng = np.random.default_rng(1)
    fine = refine(B((4, 4), (11, 9)), ratio)
    h = PatchHierarchy(DOM, [ratio], periodic=(True, True), levels=[[DOM], [fine]])
    f = CellField(h, 3)
    f.interior(0, 0)[...] = rng.random((16, 16))
    fill_ghosts(f, levels=[0])
    before = f.interior(0, 0).copy()
    interpolate_level(f, 1)
    f.interior(0, 0)[...] = 0.0
    average_down(h, f)
    cov = (slice(4, 12), slice(4, 10))
    assert np.max(np.abs(f.interior(0, 0)[cov] - before[cov])) < 1e-13


def test_masks_and_composite_volume():
    levels = [[DOM], [B((4, 4), (15, 11)), B((16, 8), (23, 19))], [B((12, 12), (27, 19)), B((36, 20), (43, 35))]]
    h = PatchHierarchy(DOM, [(2, 2), (2, 2)], levels=levels)
    m = build_masks(h)
    # coarsened level-1 footprints: [2,7]x[2,5] and [8,11]x[4,9]
    assert m.array(0, 0).sum() == 256 - (6 * 4 + 4 * 6)
    assert m.array(2, 0).min() == 1.0
    f = CellField(h, 2, fill=1.0)
    vols = [1.0, 0.25, 0.0625]
    assert composite_sum(f, vols) == pytest.approx(256.0, abs=1e-12)
    assert h.n_composite_cells() == sum(int(m.array(l, p.patch_id).sum()) for l, p, _ in f.items())


def test_regrid_conserves_composite_integral():
    rng = np.random.default_rng(5)
    h0 = PatchHierarchy(DOM, [(2, 4)], periodic=(True, True), levels=[[DOM], [B((4, 8), (11, 31))]])
    f = CellField(h0, 3)
    i, j = centres(DOM)
    f.interior(0, 0)[...] = 1 + 0.5 * np.sin(2 * np.pi * i / 16) * np.cos(2 * np.pi * j / 16)
    fill_ghosts(f, levels=[0])
    interpolate_level(f, 1)
    f.interior(1, 0)[...] += 1e-3 * rng.standard_normal(f.interior(1, 0).shape)
    average_down(h0, f)
    vols = [1.0, 1 / 8]
    m0 = composite_sum(f, vols)
    old_levels = list(h0.levels)
    h0.set_levels([[DOM], [B((6, 4), (15, 27)), B((20, 40), (27, 55))]])
    g = regrid_field(f, old_levels, h0)
    assert abs(composite_sum(g, vols) - m0) <= 1e-12 * abs(m0)
    # overlapping old cells were copied, untouched
    assert np.array_equal(g.interior(1, 0)[:6, 4:24], f.interior(1, 0)[2:, :20])


def test_flux_average_down():
    h = PatchHierarchy(B((0, 0), (3, 3)), [(2, 2)], levels=[[B((0, 0), (3, 3))], [B((2, 2), (5, 5))]])
    F = FluxField(h)
    fx, fv = F.faces(1, 0)
    assert fx.shape == (5, 4) and fv.shape == (4, 5)
    fx[...] = np.arange(20.0).reshape(5, 4)
    average_down_fluxes(h, F)
    cx = F.faces(0, 0)[0]
    # coarse x-face 1 (between cells 0 and 1) under fine faces 2 (fine row 0)
    assert cx[1, 1] == pytest.approx(0.5 * (fx[0, 0] + fx[0, 1]))
    assert cx[3, 2] == pytest.approx(0.5 * (fx[4, 2] + fx[4, 3]))
    assert cx[2, 1] == pytest.approx(0.5 * (fx[2, 0] + fx[2, 1]))
    assert cx[0, 0] == 0.0


def test_field_copy_is_deep():
    h = PatchHierarchy(DOM)
    f = CellField(h, 2, fill=1.0)
    g = f.copy()
    g.fill(2.0)
    assert f.array(0, 0).max() == 1.0
    assert f.all_finite()
    f.interior(0, 0)[0, 0] = np.nan
    assert not f.all_finite()
    with pytest.raises(ValueError):
        f.view(0, 0, B((-3, 0), (0, 0)))
