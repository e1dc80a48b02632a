import numpy as np
import pytest

from vpamr.driver.problem import f_background
from vpamr.mesh import IndexBox
from vpamr.vlasov import (
    PhaseMesh,
    ReconstructionParams,
    apply_boundary_conditions,
    background_cell_averages,
    boundary_background,
    compute_fluxes,
    flux_divergence,
    reconstruct_faces,
)

UNLIMITED = ReconstructionParams(enable_limiting=False)
MESH = PhaseMesh(0.0, 4 * np.pi / 0.3, -8.0, 10.0, 16, 32)
G = 3


def ghosted(box, g=G):
    return box.grow(g).shape


# -- face reconstruction -------------------------------------------------------

@pytest.mark.parametrize("s", [1.0, -1.0])
def test_symmetric_step_face_is_one_half(s):
    assert reconstruct_faces(np.array([0.0, 0.0, 1.0, 1.0]), 0, s) == pytest.approx([0.5], abs=1e-15)


def test_step_upwinding():
    u = np.array([0.0, 0.0, 0.0, 1.0])
    # the smooth (upwind) side gets the dominant weight: the jump is ignored
    plus = reconstruct_faces(u, 0, 1.0)[0]
    assert abs(plus) < 1e-12 and plus == pytest.approx(-9.375e-14, rel=1e-3)
    # from the other side the jump dominates the smooth stencil's weight
    assert reconstruct_faces(u, 0, -1.0)[0] == pytest.approx(-1.0 / 6.0, abs=1e-10)
    # unlimited: (-f_{-1} + 7 f_0 + 7 f_1 - f_2) / 12
    assert reconstruct_faces(u, 0, 1.0, UNLIMITED)[0] == pytest.approx(-1.0 / 12.0, abs=1e-15)
    # mirror symmetry
    assert reconstruct_faces(u[::-1].copy(), 0, -1.0)[0] == plus


def test_limited_is_fourth_order_face_on_smooth_data():
    # the limiter perturbs the centred face value by O(h^4) only
    diffs = []
    for h in (0.04, 0.02, 0.01, 0.005):
        u = np.exp(np.arange(-1.5, 2.5) * h)
        diffs.append(abs(reconstruct_faces(u, 0, 1.0)[0] - reconstruct_faces(u, 0, 1.0, UNLIMITED)[0]))
    assert np.all(np.log2(np.array(diffs[:-1]) / diffs[1:]) > 3.9)
    # with smoothness indicators far below epsilon the two coincide
    u = 1e-6 * np.exp(np.arange(-1.5, 2.5) * 0.3)
    assert reconstruct_faces(u, 0, 1.0)[0] == pytest.approx(reconstruct_faces(u, 0, 1.0, UNLIMITED)[0], rel=1e-9)


def test_bad_epsilon():
    with pytest.raises(ValueError):
        ReconstructionParams(epsilon=-1.0)


# -- fluxes and divergence ------------------------------------------------------

def test_free_stream_preservation():
    box = IndexBox((0, 0), (15, 31))
    f = np.full(ghosted(box), 0.37)
    E = np.random.default_rng(0).standard_normal(box.grow(G).shape[0])
    for p in (ReconstructionParams(), UNLIMITED):
        Fx, Fv = compute_fluxes(f, E, box, MESH, p)
        assert Fx.shape == (17, 32) and Fv.shape == (16, 33)
        assert np.max(np.abs(flux_divergence(Fx, Fv, MESH))) < 1e-13


def test_zero_field_gives_zero_velocity_flux():
    box = IndexBox((0, 0), (15, 31))
    f = np.random.default_rng(1).random(ghosted(box))
    Fx, Fv = compute_fluxes(f, np.zeros(box.grow(G).shape[0]), box, MESH)
    assert np.all(Fv == 0.0)
    assert np.any(Fx != 0.0)


def test_divergence_telescopes_to_boundary_flux():
    box = IndexBox((0, 0), (15, 31))
    rng = np.random.default_rng(2)
    inner = rng.random((16, 38))
    f = np.pad(inner, ((G, G), (0, 0)), mode="wrap")   # periodic in x
    E = np.pad(rng.standard_normal(16), G, mode="wrap")
    Fx, Fv = compute_fluxes(f, E, box, MESH)
    assert np.array_equal(Fx[0], Fx[-1])
    total = flux_divergence(Fx, Fv, MESH).sum() * MESH.dx * MESH.dv
    boundary = -MESH.dx * (Fv[:, -1] - Fv[:, 0]).sum()
    assert total == pytest.approx(boundary, abs=1e-13)


def test_flux_signs():
    box = IndexBox((0, 0), (3, 31))
    f = np.ones(ghosted(box))
    E = np.full(box.grow(G).shape[0], 0.5)
    Fx, Fv = compute_fluxes(f, E, box, MESH)
    # x-flux is v f: negative for v < 0 and positive above
    assert Fx[0, 0] < 0 < Fx[0, -1]
    assert np.allclose(Fv, 0.5, atol=1e-14)
    neg = PhaseMesh(MESH.x_lo, MESH.x_hi, MESH.v_lo, MESH.v_hi, 4, 32, accel_sign=-1.0)
    assert np.allclose(compute_fluxes(f, E, box, neg)[1], -0.5, atol=1e-14)


# -- velocity boundaries -----------------------------------------------------------

def test_extrapolation_reproduces_cubics():
    box = IndexBox((0, 0), (3, 31))
    j = np.arange(-G, 32 + G, dtype=float)
    cubic = 0.2 + 0.1 * j - 0.03 * j ** 2 + 0.002 * j ** 3
    f = np.tile(cubic, (box.grow(G).shape[0], 1))
    g = f.copy()
    g[:, :G] = 0.0
    g[:, -G:] = 0.0
    apply_boundary_conditions(g, np.zeros(f.shape[0]), box, MESH)
    assert np.allclose(g, f, rtol=1e-12, atol=1e-12)


def test_inflow_uses_background():
    box = IndexBox((0, 0), (3, 31))
    bg = boundary_background(f_background, MESH)
    f = np.ones(ghosted(box))
    E = np.array([1.0, -1.0] * 5)         # inflow at the bottom where E > 0
    apply_boundary_conditions(f, E, box, MESH, bg)
    assert np.array_equal(f[0, :G], bg[0, ::-1])
    assert np.allclose(f[1, :G], 1.0)      # outflow: extrapolated
    assert np.array_equal(f[1, -G:], bg[1])
    assert np.allclose(f[0, -G:], 1.0)


def test_interior_patch_ghosts_untouched():
    box = IndexBox((0, 4), (3, 11))
    f = np.full(ghosted(box), 2.0)
    apply_boundary_conditions(f, np.ones(f.shape[0]), box, MESH, boundary_background(f_background, MESH))
    assert np.all(f == 2.0)


def test_background_tail_is_negligible():
    assert f_background(10.0) < 1e-20
    assert f_background(-10.0) < 1e-20
    avg = background_cell_averages(f_background, MESH, np.arange(32))
    # 0.9 from the core plus 0.2 * sqrt(pi / 4) / sqrt(2 pi) from the beam
    assert avg.sum() * MESH.dv == pytest.approx(0.9 + 0.1 / np.sqrt(2), abs=1e-6)


def test_mesh_geometry():
    assert MESH.dv == 18.0 / 32
    assert MESH.vbar(0) == pytest.approx(-8.0 + 0.5 * MESH.dv)
    r = MESH.refined((2, 4))
    assert (r.nx, r.nv) == (32, 128) and r.dx == MESH.dx / 2
