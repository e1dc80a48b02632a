import numpy as np
import pytest

from vpamr.field import (
    STENCIL,
    assemble_poisson,
    cached_poisson,
    compute_E,
    periodic_pad,
    solve_potential,
)


def centres(n, L=2 * np.pi):
    dx = L / n
    return (np.arange(n) + 0.5) * dx, dx


@pytest.mark.parametrize("n,k", [(16, 1), (32, 3), (40, 7)])
def test_stencil_eigenvalues(n, k):
    # the circulant stencil acting on cos(k x) multiplies it by
    # 30 - 32 cos(k dx) + 2 cos(2 k dx)
    x, dx = centres(n)
    op = assemble_poisson(n, dx)
    u = np.cos(k * x)
    lam = 30 - 32 * np.cos(k * dx) + 2 * np.cos(2 * k * dx)
    assert np.allclose(op.apply(u), lam * u, atol=1e-12)
    assert np.allclose(op.matrix @ u, lam * u, atol=1e-12)
    assert tuple(STENCIL) == (1.0, -16.0, 30.0, -16.0, 1.0)


@pytest.mark.parametrize("L", [2 * np.pi, 4 * np.pi / 0.3, 1.0])
def test_discrete_manufactured_solution(L):
    # rho = cos(2 pi x / L): the discrete solution is known in closed form
    n = 32
    x, dx = centres(n, L)
    k = 2 * np.pi / L
    rho = np.cos(k * x)
    phi = solve_potential(assemble_poisson(n, dx), rho)
    lam = 30 - 32 * np.cos(k * dx) + 2 * np.cos(2 * k * dx)
    exact = 12 * dx ** 2 / lam * rho
    assert np.max(np.abs(phi - exact)) <= 1e-12 * max(1.0, (L / (2 * np.pi)) ** 2)
    # and approaches (L / 2 pi)^2 cos  (i.e. -phi'' = rho)
    assert np.max(np.abs(phi - rho / k ** 2)) < 1e-3 / k ** 2


def test_potential_is_mean_free_and_ignores_rho_mean():
    n = 24
    x, dx = centres(n)
    op = assemble_poisson(n, dx)
    rho = np.sin(x) + 0.3 * np.cos(2 * x)
    a = solve_potential(op, rho)
    b = solve_potential(op, rho + 5.0)
    assert abs(a.mean()) < 1e-14
    assert np.allclose(a, b, atol=1e-13)
    res = op.apply(a) - op.rhs_scale * (rho - rho.mean())
    assert np.max(np.abs(res)) < 1e-11


@pytest.mark.parametrize("n", [16, 64])
def test_E_of_sine(n):
    # E = (8 (phi+ - phi-) - phi++ + phi--) / (12 dx) on phi = sin x gives
    # cos x times (8 sin h - sin 2h) / (6 h)
    x, dx = centres(n)
    E = compute_E(np.sin(x), dx)
    factor = (8 * np.sin(dx) - np.sin(2 * dx)) / (6 * dx)
    assert np.allclose(E, factor * np.cos(x), atol=1e-13)
    assert np.allclose(compute_E(periodic_pad(np.sin(x), 2), dx, ghosted=True), E, atol=0)


def test_field_convergence_orders():
    from vpamr.driver.harness import efield_convergence, poisson_convergence

    assert poisson_convergence().order >= 3.9
    assert efield_convergence().order >= 3.9


def test_errors():
    with pytest.raises(ValueError):
        assemble_poisson(4, 0.1)
    with pytest.raises(ValueError):
        assemble_poisson(8, 0.0)
    with pytest.raises(ValueError):
        solve_potential(assemble_poisson(8, 0.1), np.zeros(7))


def test_cached_factorisation():
    assert cached_poisson(16, 0.25) is cached_poisson(16, 0.25)


def test_field_invariants():
    n = 20
    x, dx = centres(n)
    rho = np.exp(np.sin(x)) - 1.0
    op = cached_poisson(n, dx)
    phi = solve_potential(op, rho)
    assert abs(compute_E(phi, dx).sum()) < 1e-13
    # reusing the cached factorisation is bitwise identical to a fresh one
    assert np.array_equal(phi, solve_potential(assemble_poisson(n, dx), rho))
    assert np.allclose(op.apply(np.full(n, 3.0)), 0.0, atol=1e-13)
    assert np.all(assemble_poisson(8, 1.0).matrix.sum(axis=1) == 0.0)
    assert np.all(solve_potential(op, np.zeros(n)) == 0.0)
    # linear potential (away from the periodic seam) gives its slope
    lin = 0.7 * np.arange(12) * dx
    assert np.allclose(compute_E(lin, dx, ghosted=True), 0.7, atol=1e-13)
