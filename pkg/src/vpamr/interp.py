"""Conservative high-order interpolation of cell averages.

Two prolongation operators are provided, both acting on five consecutive
coarse cell averages and producing R fine averages per coarse cell:

* a limited fifth-order WENO interpolant built from three quadratic
  candidates (used for ghost filling and regridding), and
* the unlimited quartic-reconstruction interpolant (used for reductions,
  where the data is assumed well resolved).

Both are renormalised so the mean of the R fine values equals the coarse
value exactly.  Multi-dimensional data is refined one dimension at a time,
dimension 0 first.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from fractions import Fraction

import numpy as np

from . import kernels

PAPER_IDEAL_WEIGHTS = (0.3, 0.6, 0.1)


class InterpCounter:
    """Counts 1-D interpolation stencil applications (one per coarse cell
    per refined dimension) and kernel calls."""

    def __init__(self):
        self.reset()

    def reset(self):
        self.cells = 0
        self.calls = 0

    def add(self, n_cells: int):
        self.cells += int(n_cells)
        self.calls += 1

    def snapshot(self) -> tuple:
        return self.cells, self.calls


COUNTER = InterpCounter()


# ---------------------------------------------------------------------------
# polynomial bookkeeping on the unit coarse cell [0, 1], stencil cells k-2..k+2

def _lagrange(nodes: Sequence[Fraction], m: int, x: Fraction) -> Fraction:
    out = Fraction(1)
    for n, xn in enumerate(nodes):
        if n != m:
            out *= (x - xn) / (nodes[m] - xn)
    return out


def _stencil_weights(offsets, R, s) -> np.ndarray:
    """Sub-cell average, as weights on the given (contiguous) cells, of the
    unique polynomial matching their averages.

    The primitive of that polynomial interpolates the running sums of the
    averages at the cell edges, so the weight on cell a is R times the
    change over the sub-cell of the Lagrange basis functions of all edges
    to its right.  Evaluated in exact rational arithmetic.
    """
    offsets = list(offsets)
    edges = [Fraction(k) for k in offsets] + [Fraction(offsets[-1] + 1)]
    lo, hi = Fraction(s, R), Fraction(s + 1, R)
    dL = [_lagrange(edges, m, hi) - _lagrange(edges, m, lo) for m in range(len(edges))]
    w = [R * sum(dL[a + 1:], Fraction(0)) for a in range(len(offsets))]
    return np.array([float(x) for x in w])


@lru_cache(maxsize=None)
def _candidate_matrix(R: int, s: int) -> np.ndarray:
    """Rows: right-biased, centred, left-biased quadratic candidates,
    expressed on the five cells -2..2."""
    C = np.zeros((3, 5))
    for r in range(3):
        offs = [k - r for k in range(3)]
        C[r, [o + 2 for o in offs]] = _stencil_weights(offs, R, s)
    return C


@dataclass(frozen=True)
class LinearInterpCoeffs:
    """b[s, j] for j = -2..2: weights producing fine average s from the
    five coarse averages."""

    R: int
    b: np.ndarray

    def check(self, tol: float = 1e-12) -> bool:
        rows = np.abs(self.b.sum(axis=1) - 1.0).max() <= tol
        target = np.array([0.0, 0.0, 1.0, 0.0, 0.0])
        cols = np.abs(self.b.mean(axis=0) - target).max() <= tol
        return bool(rows and cols)


@lru_cache(maxsize=None)
def _linear5(R: int) -> LinearInterpCoeffs:
    if R < 1:
        raise ValueError("refinement ratio must be >= 1")
    b = np.array([_stencil_weights(range(-2, 3), R, s) for s in range(R)])
    b.setflags(write=False)
    return LinearInterpCoeffs(R, b)


def linear5_coeffs(R: int) -> LinearInterpCoeffs:
    """Coefficients of the quartic-reconstruction interpolant for ratio R.

    Equivalent to averaging each of the five cell-average kernels, i.e.
    the derivatives of the Lagrange basis of the primitive function, over
    the fine sub-cell and scaling by R.
    """
    return _linear5(int(R))


@lru_cache(maxsize=None)
def subcell_ideal_weights(R: int) -> np.ndarray:
    """Linear weights under which the three candidates combine to the
    quartic interpolant on each sub-cell.

    Rows whose exact weights would be negative (e.g. the middle sub-cell
    for R = 3) fall back to the classical (3/10, 3/5, 1/10) split.
    """
    out = np.empty((R, 3))
    q = linear5_coeffs(R).b
    for s in range(R):
        C = _candidate_matrix(R, s)
        d, *_ = np.linalg.lstsq(C.T, q[s], rcond=None)
        if np.abs(C.T @ d - q[s]).max() > 1e-10 or (d < 0).any():
            d = np.array(PAPER_IDEAL_WEIGHTS)
        out[s] = d
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class WenoParams:
    """Parameters of the limited interpolant.

    ideal_weights='subcell' uses the sub-cell dependent linear weights that
    recover the fifth-order interpolant on smooth data; a 3-tuple imposes
    fixed weights on every sub-cell (the tuple must sum to one).
    """

    epsilon: float = 1e-6
    ideal_weights: object = "subcell"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not isinstance(self.ideal_weights, str):
            d = tuple(float(x) for x in self.ideal_weights)
            if len(d) != 3 or abs(sum(d) - 1.0) > 1e-14 or min(d) < 0:
                raise ValueError("fixed ideal weights must be 3 non-negative numbers summing to 1")
            object.__setattr__(self, "ideal_weights", d)
        elif self.ideal_weights != "subcell":
            raise ValueError(f"unknown ideal weight rule {self.ideal_weights!r}")

    def weights(self, R: int) -> np.ndarray:
        if self.ideal_weights == "subcell":
            return subcell_ideal_weights(int(R))
        return np.tile(np.asarray(self.ideal_weights), (int(R), 1))


DEFAULT_WENO = WenoParams()
PAPER_WENO = WenoParams(ideal_weights=PAPER_IDEAL_WEIGHTS)


def weno5_interp_1d(u, R: int, params: WenoParams | None = None) -> np.ndarray:
    """R fine averages inside the middle cell of five coarse averages."""
    params = params or DEFAULT_WENO
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (5,):
        raise ValueError("expected exactly five cell averages")
    if R == 1:
        return u[2:3].copy()
    COUNTER.add(1)
    return kernels.weno5_refine_axis(u, R, 0, params.epsilon, params.weights(R))


def linear5_interp_1d(u, R: int) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (5,):
        raise ValueError("expected exactly five cell averages")
    if R == 1:
        return u[2:3].copy()
    COUNTER.add(1)
    return kernels.linear5_refine_axis(u, R, 0, linear5_coeffs(R).b)


def refine_axis(u, R: int, axis: int, method: str = "weno", params: WenoParams | None = None) -> np.ndarray:
    """Refine every coarse cell along `axis`, consuming two stencil cells on
    each side of it (the output is 4 coarse cells shorter, times R)."""
    u = np.asarray(u, dtype=np.float64)
    if u.shape[axis] < 5:
        raise ValueError("insufficient ghost data: need two stencil cells per side")
    if R == 1:
        sl = [slice(None)] * u.ndim
        sl[axis] = slice(2, -2)
        return np.ascontiguousarray(u[tuple(sl)])
    COUNTER.add((u.shape[axis] - 4) * (u.size // u.shape[axis]))
    if method == "weno":
        params = params or DEFAULT_WENO
        return kernels.weno5_refine_axis(u, R, axis, params.epsilon, params.weights(R))
    if method == "linear":
        return kernels.linear5_refine_axis(u, R, axis, linear5_coeffs(R).b)
    raise ValueError(f"unknown interpolation method {method!r}")


def weno5_interp_nd(coarse, ratio: Sequence[int], params: WenoParams | None = None,
                    method: str = "weno") -> np.ndarray:
    """Refine a block of coarse averages carrying two stencil cells per side
    in every dimension; dimension 0 is refined first and the partially
    refined values feed the next dimension."""
    out = np.asarray(coarse, dtype=np.float64)
    if len(ratio) != out.ndim:
        raise ValueError("ratio length must match the data dimension")
    for d, R in enumerate(ratio):
        out = refine_axis(out, int(R), d, method, params)
    return out
