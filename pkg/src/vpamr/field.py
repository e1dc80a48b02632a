"""Periodic fourth-order Poisson solve and cell-averaged electric field."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import lu_factor, lu_solve

STENCIL = (1.0, -16.0, 30.0, -16.0, 1.0)  # offsets -2..2


@dataclass
class PoissonOperator:
    """30 phi_i - 16 (phi_{i+1} + phi_{i-1}) + (phi_{i+2} + phi_{i-2}) = 12 dx^2 rho_i
    on a periodic grid of n cells.

    The circulant matrix is singular (constants); the factorised system
    replaces its last row by the mean-zero condition.
    """

    n: int
    dx: float
    matrix: np.ndarray = field(repr=False)
    lu: tuple = field(repr=False)

    @property
    def rhs_scale(self) -> float:
        return 12.0 * self.dx * self.dx

    def apply(self, phi: np.ndarray) -> np.ndarray:
        phi = np.asarray(phi, dtype=np.float64)
        out = np.zeros_like(phi)
        for off, c in zip(range(-2, 3), STENCIL):
            out += c * np.roll(phi, -off)
        return out


def assemble_poisson(n: int, dx: float) -> PoissonOperator:
    if n < 5:
        raise ValueError("the periodic 5-point stencil needs at least 5 cells")
    if not dx > 0:
        raise ValueError("dx must be positive")
    A = np.zeros((n, n))
    idx = np.arange(n)
    for off, c in zip(range(-2, 3), STENCIL):
        A[idx, (idx + off) % n] += c
    aug = A.copy()
    aug[-1, :] = 1.0
    return PoissonOperator(n, float(dx), A, lu_factor(aug))


@lru_cache(maxsize=32)
def cached_poisson(n: int, dx: float) -> PoissonOperator:
    """One factorisation per resolution."""
    return assemble_poisson(n, dx)


def solve_potential(op: PoissonOperator, rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=np.float64)
    if rho.shape != (op.n,):
        raise ValueError(f"rho has shape {rho.shape}, operator expects ({op.n},)")
    rhs = op.rhs_scale * (rho - rho.mean())
    rhs[-1] = 0.0
    phi = lu_solve(op.lu, rhs)
    return phi - phi.mean()


def periodic_pad(a, g: int) -> np.ndarray:
    return np.concatenate([a[-g:], a, a[:g]]) if g else np.asarray(a).copy()


def compute_E(phi, dx: float, ghosted: bool = False) -> np.ndarray:
    """E_i = [8 (phi_{i+1} - phi_{i-1}) - phi_{i+2} + phi_{i-2}] / (12 dx).

    `phi` is periodic interior data unless `ghosted`, in which case it
    already carries two valid ghost cells per side.
    """
    p = np.asarray(phi, dtype=np.float64)
    if not ghosted:
        p = periodic_pad(p, 2)
    return (8.0 * (p[3:-1] - p[1:-3]) - p[4:] + p[:-4]) / (12.0 * dx)
