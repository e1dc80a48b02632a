import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from vpamr import interp
from vpamr.interp import (
    PAPER_WENO,
    WenoParams,
    linear5_coeffs,
    linear5_interp_1d,
    refine_axis,
    subcell_ideal_weights,
    weno5_interp_1d,
    weno5_interp_nd,
)


def coarse_avgs_poly(k, centers=range(-2, 3)):
    """Averages of xi^k over unit cells [i - 1/2, i + 1/2]."""
    return np.array([((i + 0.5) ** (k + 1) - (i - 0.5) ** (k + 1)) / (k + 1) for i in centers])


def fine_avgs_poly(k, R):
    e = -0.5 + np.arange(R + 1) / R
    return (e[1:] ** (k + 1) - e[:-1] ** (k + 1)) / (k + 1) * R


# -- linear5 ---------------------------------------------------------------------

def test_linear5_identity_R1():
    assert np.array_equal(linear5_coeffs(1).b, np.array([[0.0, 0.0, 1.0, 0.0, 0.0]]))


@pytest.mark.parametrize("R", [1, 2, 3, 4, 8])
def test_linear5_invariants(R):
    c = linear5_coeffs(R)
    assert np.allclose(c.b.sum(axis=1), 1.0, atol=1e-14)
    assert np.allclose(c.b.mean(axis=0), [0, 0, 1, 0, 0], atol=1e-14)
    c.check()


def test_linear5_linear_example():
    assert np.allclose(linear5_interp_1d([-2, -1, 0, 1, 2], 2), [-0.25, 0.25], atol=1e-15)


@pytest.mark.parametrize("R", [1, 2, 3, 4])
@pytest.mark.parametrize("k", [0, 1, 2, 3, 4])
def test_linear5_polynomial_exactness(R, k):
    out = linear5_interp_1d(coarse_avgs_poly(k), R)
    assert np.max(np.abs(out - fine_avgs_poly(k, R))) <= 1e-12


def test_linear5_frozen_R2_coefficients():
    # hand-derived: average of the quartic through five unit-cell averages
    # over [-1/2, 0] and [0, 1/2]
    b = linear5_coeffs(2).b
    want_left = np.array([-3, 22, 128, -22, 3]) / 128.0
    assert np.allclose(b[0], want_left, atol=1e-15)
    assert np.allclose(b[1], want_left[::-1], atol=1e-15)


# -- WENO5 -------------------------------------------------------------------

def test_paper_weights_are_the_printed_ones():
    assert np.allclose(PAPER_WENO.weights(2), [[0.3, 0.6, 0.1]] * 2, atol=0)
    with pytest.raises(ValueError):
        WenoParams(epsilon=0.0)
    with pytest.raises(ValueError):
        WenoParams(ideal_weights=(0.5, 0.6, 0.1))


@pytest.mark.parametrize("R", [1, 2, 3, 4, 8])
def test_weno_constant(R):
    assert np.allclose(weno5_interp_1d([3.5] * 5, R), 3.5, atol=1e-15)


@pytest.mark.parametrize("params", [interp.DEFAULT_WENO, PAPER_WENO])
def test_weno_linear_example(params):
    assert np.allclose(weno5_interp_1d([-2, -1, 0, 1, 2], 2, params), [-0.25, 0.25], atol=1e-15)


@settings(max_examples=200)
@given(arrays(np.float64, 5, elements=st.floats(-1e3, 1e3)), st.sampled_from([2, 3, 4, 8]))
def test_weno_conservation(u, R):
    out = weno5_interp_1d(u, R)
    scale = max(1.0, float(np.max(np.abs(u))))
    assert abs(out.mean() - u[2]) <= 1e-15 * scale * 8
    assert np.all(np.isfinite(out))


def test_weno_random_R4_renormalized():
    rng = np.random.default_rng(3)
    for _ in range(100):
        u = rng.random(5)
        assert abs(weno5_interp_1d(u, 4).mean() - u[2]) <= 1e-15


def test_subcell_weights_are_a_partition_of_unity():
    for R in (2, 3, 4, 8):
        w = np.asarray(subcell_ideal_weights(R))
        assert w.shape == (R, 3)
        assert np.allclose(w.sum(axis=1), 1.0, atol=1e-14)
        assert np.all(w >= 0)
    # with smoothness indicators far below epsilon the nonlinear weights
    # collapse to the ideal ones, which recombine the candidates into the
    # quartic interpolant: exact on quartics (relative to the amplitude)
    amp = 1e-7
    for R in (2, 4):
        for k in range(5):
            out = weno5_interp_1d(coarse_avgs_poly(k) * amp, R, WenoParams(1e-6))
            assert np.max(np.abs(out - amp * fine_avgs_poly(k, R))) < 1e-6 * amp


def test_weno_step_overshoot_bounded():
    u = np.array([0.0, 0.0, 0.0, 1.0, 1.0])
    for R in (2, 4, 8):
        for params in (interp.DEFAULT_WENO, PAPER_WENO):
            out = weno5_interp_1d(u, R, params)
            assert out.min() >= -0.1 and out.max() <= 1.1


def test_weno_matches_linear_on_smooth_monotone_data():
    """The difference to the linear interpolant shrinks like h^5 or faster."""
    diffs = []
    hs = [0.2, 0.1, 0.05, 0.025]
    for h in hs:
        x = (np.arange(-2, 3)) * h + 0.3
        # cell averages of exp(x) over [x - h/2, x + h/2]
        u = (np.exp(x + h / 2) - np.exp(x - h / 2)) / h
        diffs.append(np.max(np.abs(weno5_interp_1d(u, 4) - linear5_interp_1d(u, 4))))
    diffs = np.array(diffs)
    assert np.all(diffs / np.array(hs) ** 5 < 10 * diffs[0] / hs[0] ** 5 + 1e-300)
    assert np.log2(diffs[-2] / diffs[-1]) > 4.5


def test_weno_requires_five_values():
    with pytest.raises(ValueError):
        weno5_interp_1d([1, 2, 3], 2)


# -- n-d ---------------------------------------------------------------------

def test_nd_constant():
    out = weno5_interp_nd(np.full((7, 9), 2.0), (2, 4))
    assert out.shape == (6, 20)
    assert np.allclose(out, 2.0, atol=1e-15)


def test_nd_bilinear_exact():
    # f = 1 + 2x + 3y + 4xy on unit cells: averages of xy are products of averages
    n0, n1 = 7, 8
    xc = np.arange(n0) - 2.0
    yc = np.arange(n1) - 2.0
    coarse = 1 + 2 * xc[:, None] + 3 * yc[None, :] + 4 * xc[:, None] * yc[None, :]
    R = (2, 4)
    out = weno5_interp_nd(coarse, R)
    fx = (np.arange((n0 - 4) * R[0]) + 0.5) / R[0] - 0.5
    fy = (np.arange((n1 - 4) * R[1]) + 0.5) / R[1] - 0.5
    exact = 1 + 2 * fx[:, None] + 3 * fy[None, :] + 4 * fx[:, None] * fy[None, :]
    assert np.max(np.abs(out - exact)) < 1e-12


def test_nd_insufficient_ghosts():
    with pytest.raises(ValueError):
        weno5_interp_nd(np.ones((4, 8)), (2, 2))
    with pytest.raises(ValueError):
        weno5_interp_nd(np.ones((8, 8)), (2,))


def test_nd_conservation_per_coarse_cell():
    rng = np.random.default_rng(0)
    c = rng.random((9, 10))
    out = weno5_interp_nd(c, (4, 2))
    back = out.reshape(5, 4, 6, 2).mean(axis=(1, 3))
    assert np.max(np.abs(back - c[2:-2, 2:-2])) <= 1e-14


def test_smooth_2d_order():
    from vpamr.driver.harness import interp_convergence

    r = interp_convergence()
    assert r.order >= 4.0


def test_counter_counts_coarse_cells():
    interp.COUNTER.reset()
    refine_axis(np.ones((10, 3)), 2, 0, "linear")
    assert interp.COUNTER.snapshot() == (18, 1)
    refine_axis(np.ones((10, 3)), 1, 0, "linear")
    assert interp.COUNTER.calls == 1
