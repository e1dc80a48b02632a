"""Phase-space discretisation of the 1D+1V Vlasov equation.

The equation is advanced in flux-divergence form

    f_t + (v f)_x + (a f)_v = 0,    a = accel_sign * E,

with fourth-order face averages of the fluxes.  The default
accel_sign = +1 pairs with the Poisson orientation used in `field`
(E = +d(phi)/dx, the printed stencil acting on phi equals 12 dx^2 rho) to give
electron dynamics; accel_sign = -1 gives the opposite-signed coupling.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .mesh import IndexBox


@dataclass(frozen=True)
class PhaseMesh:
    """Geometry of one refinement level of the (x, v) domain."""

    x_lo: float
    x_hi: float
    v_lo: float
    v_hi: float
    nx: int
    nv: int
    accel_sign: float = 1.0

    @property
    def dx(self) -> float:
        return (self.x_hi - self.x_lo) / self.nx

    @property
    def dv(self) -> float:
        return (self.v_hi - self.v_lo) / self.nv

    def vbar(self, j) -> np.ndarray:
        """Exact cell-average velocity of cells j (global indices)."""
        return self.v_lo + (np.asarray(j, dtype=np.float64) + 0.5) * self.dv

    def x_center(self, i) -> np.ndarray:
        return self.x_lo + (np.asarray(i, dtype=np.float64) + 0.5) * self.dx

    def refined(self, ratio: Sequence[int]) -> "PhaseMesh":
        return PhaseMesh(self.x_lo, self.x_hi, self.v_lo, self.v_hi,
                         self.nx * int(ratio[0]), self.nv * int(ratio[1]), self.accel_sign)


@dataclass(frozen=True)
class ReconstructionParams:
    epsilon: float = 1e-6
    enable_limiting: bool = True

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")


def reconstruct_faces(f: np.ndarray, dim: int, upwind_sign, params: ReconstructionParams | None = None,
                      ghost: int = 2) -> np.ndarray:
    """Face averages between consecutive cells along `dim`.

    `f` carries `ghost` >= 2 cells on each side along `dim`; the result has
    one entry per face of the interior cells (n + 1 along `dim`).
    `upwind_sign` broadcasts against the result.
    """
    params = params or ReconstructionParams()
    f = np.moveaxis(np.asarray(f, dtype=np.float64), dim, 0)
    n = f.shape[0] - 2 * ghost
    s = ghost - 1  # cell left of the first face
    sl = [f[s - 1 + k:s - 1 + k + n + 1] for k in range(4)]
    up = np.moveaxis(np.broadcast_to(np.asarray(upwind_sign, dtype=np.float64),
                                     np.moveaxis(np.empty(sl[0].shape), 0, dim).shape), dim, 0)
    out = kernels.face_values(sl[0], sl[1], sl[2], sl[3], up, params.epsilon, params.enable_limiting)
    return np.moveaxis(out, 0, dim)


def compute_fluxes(f: np.ndarray, E: np.ndarray, box: IndexBox, mesh: PhaseMesh,
                   params: ReconstructionParams | None = None, ghost: int = 3):
    """Face-averaged x and v fluxes on one ghosted patch.

    `E` holds the cell-averaged field on the patch's x-cells with the same
    number of ghosts as `f`.  Returns (Fx, Fv) with shapes (nx+1, nv) and
    (nx, nv+1).
    """
    params = params or ReconstructionParams()
    j = np.arange(box.lo[1] - ghost, box.hi[1] + ghost + 1)
    vbar = mesh.vbar(j)
    return kernels.vlasov_fluxes(f, E, vbar, mesh.dv, ghost, params.epsilon,
                                 params.enable_limiting, float(mesh.accel_sign))


def flux_divergence(Fx: np.ndarray, Fv: np.ndarray, mesh: PhaseMesh) -> np.ndarray:
    """-(Fx_{i+1/2} - Fx_{i-1/2})/dx - (Fv_{j+1/2} - Fv_{j-1/2})/dv."""
    return kernels.flux_divergence(Fx, Fv, mesh.dx, mesh.dv)


# ---------------------------------------------------------------------------
# velocity boundaries

def _extrapolation_weights(n_ghost: int) -> np.ndarray:
    """Cubic extrapolation through 4 equally spaced values onto the next
    n_ghost positions; row k gives the weights for position 4 + k."""
    nodes = np.arange(4.0)
    W = np.empty((n_ghost, 4))
    for k in range(n_ghost):
        x = 4.0 + k
        for a in range(4):
            others = [b for b in range(4) if b != a]
            W[k, a] = np.prod([(x - nodes[b]) / (nodes[a] - nodes[b]) for b in others])
    return W


def _extrapolate(inner: np.ndarray, W: np.ndarray) -> np.ndarray:
    # explicit sums keep the result independent of how many columns are passed
    out = np.empty((inner.shape[0], W.shape[0]))
    for k in range(W.shape[0]):
        out[:, k] = W[k, 0] * inner[:, 0] + W[k, 1] * inner[:, 1] + W[k, 2] * inner[:, 2] + W[k, 3] * inner[:, 3]
    return out


def background_cell_averages(fb: Callable[[np.ndarray], np.ndarray], mesh: PhaseMesh, j,
                             n_gauss: int = 3) -> np.ndarray:
    """Gauss-Legendre cell averages of a velocity profile on cells j."""
    xg, wg = np.polynomial.legendre.leggauss(n_gauss)
    vc = mesh.vbar(j)
    vals = sum(w * fb(vc + 0.5 * mesh.dv * x) for x, w in zip(xg, wg))
    return 0.5 * np.asarray(vals)


def apply_boundary_conditions(f: np.ndarray, E: np.ndarray, box: IndexBox, mesh: PhaseMesh,
                              background: np.ndarray | None = None, ghost: int = 3) -> None:
    """Fill ghost rows beyond the velocity limits, in place.

    Per x-column the characteristic a = accel_sign * E decides: where the
    v-motion enters the domain the ghosts take the background averages
    (`background` is a (2, ghost) array: rows below v_lo, then above v_hi,
    ordered outward), elsewhere they are cubic extrapolations of the last
    four interior cells.  Columns include the x-ghosts.
    """
    g = ghost
    W = _extrapolation_weights(g)
    a = mesh.accel_sign * np.asarray(E)
    if box.lo[1] == 0:
        inner = f[:, g:g + 4][:, ::-1]  # ordered towards the boundary
        ext = _extrapolate(inner, W)
        inflow = a > 0.0
        for k in range(g):
            col = g - 1 - k
            f[:, col] = ext[:, k]
            if background is not None:
                f[inflow, col] = background[0, k]
    if box.hi[1] == mesh.nv - 1:
        n = f.shape[1]
        inner = f[:, n - g - 4:n - g]
        ext = _extrapolate(inner, W)
        inflow = a < 0.0
        for k in range(g):
            col = n - g + k
            f[:, col] = ext[:, k]
            if background is not None:
                f[inflow, col] = background[1, k]


def boundary_background(fb: Callable, mesh: PhaseMesh, ghost: int = 3) -> np.ndarray:
    below = background_cell_averages(fb, mesh, -1 - np.arange(ghost))
    above = background_cell_averages(fb, mesh, mesh.nv + np.arange(ghost))
    return np.vstack([below, above])
