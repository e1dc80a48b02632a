"""Verification studies: convergence orders, reduction equivalence on
random hierarchies and the work scaling of the two reduction algorithms.

Everything here is deterministic for a given seed and returns plain data
so the tests and the command line share one implementation.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .. import interp, kernels
from ..data import CellField, build_masks
from ..field import cached_poisson, compute_E, solve_potential
from ..mesh import IndexBox, PatchHierarchy, check_proper_nesting, refine
from ..transfer import REDUCERS, MomentSpec, ReductionPlan, config_hierarchy_for


def fit_order(h, err) -> float:
    """Least-squares slope of log(err) against log(h)."""
    return float(np.polyfit(np.log(np.asarray(h, float)), np.log(np.asarray(err, float)), 1)[0])


def pairwise_orders(err) -> list:
    err = np.asarray(err, float)
    return [float(a) for a in np.log2(err[:-1] / err[1:])]


@dataclass
class ConvergenceResult:
    name: str
    n: list
    errors: list

    @property
    def order(self) -> float:
        return fit_order([1.0 / n for n in self.n], self.errors)

    @property
    def orders(self) -> list:
        return pairwise_orders(self.errors)

    def as_dict(self) -> dict:
        return {"name": self.name, "n": self.n, "errors": self.errors, "order": self.order,
                "pairwise": self.orders}


# ---------------------------------------------------------------------------
# exact cell averages of trigonometric functions

def _avg_sin(k, a, b):
    return (np.cos(k * a) - np.cos(k * b)) / (k * (b - a))


def _avg_cos(k, a, b):
    return (np.sin(k * b) - np.sin(k * a)) / (k * (b - a))


def _edges(n, length=2.0 * math.pi, lo=0.0, ghost=0):
    dx = length / n
    i = np.arange(-ghost, n + ghost + 1)
    e = lo + i * dx
    return e[:-1], e[1:], dx


def poisson_convergence(ns=(16, 32, 64, 128)) -> ConvergenceResult:
    """-phi'' = rho with phi = sin x + 0.3 cos(2x + 0.4) on [0, 2 pi)."""
    errs = []
    for n in ns:
        a, b, dx = _edges(n)
        phi = _avg_sin(1, a, b) + 0.3 * _avg_cos(2, a + 0.2, b + 0.2)
        rho = _avg_sin(1, a, b) + 1.2 * _avg_cos(2, a + 0.2, b + 0.2)
        phi_h = solve_potential(cached_poisson(n, dx), rho)
        errs.append(float(np.max(np.abs(phi_h - (phi - phi.mean())))))
    return ConvergenceResult("poisson", list(ns), errs)


def efield_convergence(ns=(16, 32, 64, 128)) -> ConvergenceResult:
    """Cell averages of phi' from cell averages of phi."""
    errs = []
    for n in ns:
        a, b, dx = _edges(n)
        phi = _avg_sin(1, a, b) + 0.3 * _avg_cos(2, a + 0.2, b + 0.2)
        dphi = _avg_cos(1, a, b) - 0.6 * _avg_sin(2, a + 0.2, b + 0.2)
        errs.append(float(np.max(np.abs(compute_E(phi, dx) - dphi))))
    return ConvergenceResult("efield", list(ns), errs)


def _avg2(a0, b0, a1, b1):
    """Cell averages of sin(x) cos(2y) + 0.5 cos(x + y) on a tensor grid."""
    s = np.outer(_avg_sin(1, a0, b0), _avg_cos(2, a1, b1))
    # cos(x+y) = cos x cos y - sin x sin y
    c = np.outer(_avg_cos(1, a0, b0), _avg_cos(1, a1, b1)) - np.outer(_avg_sin(1, a0, b0), _avg_sin(1, a1, b1))
    return s + 0.5 * c


def interp_convergence(ns=(16, 32, 64, 128), ratio=(2, 4), method="weno",
                       params: interp.WenoParams | None = None) -> ConvergenceResult:
    """2-D refinement of smooth averages against the exact fine averages."""
    errs = []
    for n in ns:
        a0, b0, _ = _edges(n, ghost=2)
        coarse = _avg2(a0, b0, a0, b0)
        fine = interp.weno5_interp_nd(coarse, ratio, params, method)
        f0, g0, _ = _edges(n * ratio[0])
        f1, g1, _ = _edges(n * ratio[1])
        errs.append(float(np.max(np.abs(fine - _avg2(f0, g0, f1, g1)))))
    return ConvergenceResult(f"interp-{method}", list(ns), errs)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def _streaming_average(n, t, ghost):
    """Exact x-averages (Gauss in v) of (2 + sin 2 pi (x - v t)) exp(-(v - 1/2)^2)
    on the unit square, v rows including `ghost` extra rows per side."""
    a, b, h = _edges(n, length=1.0)
    va, vb, _ = _edges(n, length=1.0, ghost=ghost)
    k = 2.0 * math.pi
    out = np.zeros((n, va.size))
    for q, w in zip(_GL_X, _GL_W):
        v = 0.5 * (va + vb) + 0.5 * h * q
        xs = (np.cos(k * (a[:, None] - v * t)) - np.cos(k * (b[:, None] - v * t))) / (k * h)
        out += 0.5 * w * (2.0 + xs) * np.exp(-(v - 0.5) ** 2)
    return out


def _rk4(f, rhs, dt, steps):
    for _ in range(steps):
        k1 = rhs(f)
        k2 = rhs(f + 0.5 * dt * k1)
        k3 = rhs(f + 0.5 * dt * k2)
        k4 = rhs(f + dt * k3)
        f = f + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return f


def _norm(e, norm: str) -> float:
    e = np.abs(e)
    return float(np.mean(e)) if norm == "l1" else float(np.max(e))


def advect_v(n, limiting=True, t_end=0.5, accel=0.5, cfl=0.4, eps=1e-6, norm="l1") -> float:
    """Error of f_t + a f_v = 0 (constant E = a, data independent of x),
    v periodic, through the phase-space flux kernel and RK4."""
    g, nx, k = 3, 6, 2.0 * math.pi
    h = 1.0 / n
    steps = int(math.ceil(t_end / (cfl * h / abs(accel))))
    dt = t_end / steps
    lo, hi, _ = _edges(n, length=1.0)

    def prof(t):
        return (2.0 + _avg_cos(k, lo - accel * t, hi - accel * t)
                + 0.5 * _avg_sin(2 * k, lo - accel * t, hi - accel * t))

    E = np.full(nx + 2 * g, accel)
    vb = np.zeros(n + 2 * g)

    def rhs(u):
        Fx, Fv = kernels.vlasov_fluxes(np.pad(u, g, mode="wrap"), E, vb, h, g, eps, limiting, 1.0)
        return kernels.flux_divergence(Fx, Fv, h, h)

    f = _rk4(np.tile(prof(0.0), (nx, 1)), rhs, dt, steps)
    return _norm(f - prof(t_end)[None, :], norm)


def advect_x(n, limiting=True, t_end=0.5, cfl=0.4, eps=1e-6, norm="l1") -> float:
    """Error of free streaming f_t + v f_x = 0 (E = 0) on the unit square,
    x periodic; every v-row moves at its own constant speed.  The v-ghost
    rows (used by the transverse flux correction) hold exact values."""
    g = 3
    h = 1.0 / n
    steps = int(math.ceil(t_end / (cfl * h)))
    dt = t_end / steps
    vbar = (np.arange(-g, n + g) + 0.5) * h
    E0 = np.zeros(n + 2 * g)

    def rhs(u, t):
        full = _streaming_average(n, t, g)
        full[:, g:-g] = u
        Fx, Fv = kernels.vlasov_fluxes(np.pad(full, ((g, g), (0, 0)), mode="wrap"), E0, vbar, h, g,
                                       eps, limiting, 1.0)
        return kernels.flux_divergence(Fx, Fv, h, h)

    u = _streaming_average(n, 0.0, g)[:, g:-g]
    t = 0.0
    for _ in range(steps):
        k1 = rhs(u, t)
        k2 = rhs(u + 0.5 * dt * k1, t + 0.5 * dt)
        k3 = rhs(u + 0.5 * dt * k2, t + 0.5 * dt)
        k4 = rhs(u + dt * k3, t + dt)
        u = u + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += dt
    return _norm(u - _streaming_average(n, t_end, g)[:, g:-g], norm)


ADVECTION_NS = (64, 128, 256, 512)


def advection_convergence(ns=ADVECTION_NS, limiting=True, part="v", norm="l1",
                          eps=1e-6) -> ConvergenceResult:
    """Constant-coefficient advection orders through the flux kernel: part
    "v" (constant E) or "x" (free streaming).

    With limiting on and a fixed epsilon the asymptotic range only starts
    around 100 cells per wavelength, hence the default resolutions."""
    fn = advect_v if part == "v" else advect_x
    errs = [fn(n, limiting=limiting, eps=eps, norm=norm) for n in ns]
    name = f"advection-{part}-{'limited' if limiting else 'unlimited'}-{norm}"
    return ConvergenceResult(name, list(ns), errs)


def convergence_suite() -> dict:
    out = {}
    for r in (poisson_convergence(), efield_convergence(), interp_convergence(),
              advection_convergence(limiting=True), advection_convergence(limiting=False),
              advection_convergence(ns=(16, 32, 64, 128), limiting=True, part="x"),
              advection_convergence(ns=(16, 32, 64, 128), limiting=False, part="x")):
        out[r.name] = r
    return out


# ---------------------------------------------------------------------------
# random hierarchies for the reduction studies

RATIO_CHOICES = ((2, 2), (2, 4), (4, 2), (4, 4))


def random_hierarchy(rng: np.random.Generator, num_levels: int | None = None,
                     max_boxes: int = 3) -> PatchHierarchy:
    """Properly nested 2-3 level phase-space hierarchy, periodic in x.

    Child boxes are drawn in coarse index space inside a parent box shrunk
    by two cells (so the coarse-fine stencils stay on the parent level) and
    refined, so every fine patch is aligned with its parent.
    """
    L = int(rng.integers(2, 4)) if num_levels is None else num_levels
    nx = int(rng.integers(10, 21))
    nv = int(rng.integers(10, 21))
    dom = IndexBox((0, 0), (nx - 1, nv - 1))
    ratios = [RATIO_CHOICES[int(rng.integers(len(RATIO_CHOICES)))] for _ in range(L - 1)]
    levels = [[dom]]
    for l in range(1, L):
        parents = levels[-1]
        boxes = []
        for _ in range(50):
            if len(boxes) >= max_boxes:
                break
            P = parents[int(rng.integers(len(parents)))].grow(-2)
            if P.empty or min(P.shape) < 2:
                continue
            lo = [int(rng.integers(P.lo[d], P.hi[d])) for d in range(2)]
            hi = [int(rng.integers(lo[d] + 1, min(P.hi[d], lo[d] + 6) + 1)) for d in range(2)]
            B = refine(IndexBox(tuple(lo), tuple(hi)), ratios[l - 1])
            if all(not B.grow(1).intersects(o) for o in boxes):
                boxes.append(B)
        if not boxes:
            break
        levels.append(boxes)
    h = PatchHierarchy(dom, ratios[:len(levels) - 1], periodic=(True, False), levels=levels)
    assert check_proper_nesting(h)
    return h


def random_phase_function(rng: np.random.Generator, kind: str):
    """Test data f(x, v) on the unit-period square (x periodic): "smooth"
    (positive, trigonometric plus a Gaussian), "signed" (zero-mean in x,
    so the velocity moment crosses zero) or "step" (piecewise constant)."""
    if kind == "signed":
        kx = int(rng.integers(1, 4))
        ph = rng.uniform(0, 2 * math.pi, 2)
        w = rng.uniform(0.5, 2.0)
        return lambda x, v: np.sin(2 * math.pi * kx * x + ph[0]) * (1.0 + 0.5 * np.cos(2 * math.pi * v + ph[1])) * w
    if kind == "smooth":
        kx = int(rng.integers(1, 4))
        a = rng.uniform(-1, 1, 3)
        ph = rng.uniform(0, 2 * math.pi, 2)
        return lambda x, v: (1.0 + a[0] * np.sin(2 * math.pi * kx * x + ph[0]) * np.cos(3 * v + ph[1])
                             + a[1] * np.exp(-4 * (v - a[2]) ** 2))
    x0, v0 = rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8)
    jump = rng.uniform(0.5, 2.0)
    return lambda x, v: 1.0 + jump * (((x % 1.0) > x0) ^ (v > v0)) + 0.1 * np.sin(2 * math.pi * x)


def fill_from_function(f: CellField, func) -> None:
    """Point values at cell centres of interiors and ghosts (x wraps)."""
    h = f.hierarchy
    g = f.ghost_width
    for l, p, arr in f.items():
        n = h.level_domain(l).shape
        i = np.arange(p.box.lo[0] - g, p.box.hi[0] + g + 1)
        j = np.arange(p.box.lo[1] - g, p.box.hi[1] + g + 1)
        x = (i + 0.5) / n[0]
        v = (j + 0.5) / n[1]
        arr[...] = func(x[:, None], v[None, :])


def brute_force_moment(plan: ReductionPlan, f: CellField, spec: MomentSpec, out: CellField | None = None) -> CellField:
    """Reference velocity moment, one composite cell at a time: each
    uncovered cell's five-cell x-stencil is refined to the finest
    configuration resolution and added to the cells it covers."""
    from ..transfer import _finish_reduction

    plan.ensure_valid()
    ph = plan.phase_h
    g = f.ghost_width
    masks = build_masks(ph)
    nfine = ph.level_domain(plan.finest).shape[0]
    total = np.zeros(nfine)
    for l, lev in enumerate(ph.levels):
        rx = ph.ratio_between(l, plan.finest)[0]
        dv = plan.dv(spec, l)
        for p in lev.patches:
            a = f.array(l, p.patch_id)
            m = masks.array(l, p.patch_id)
            for ii in range(p.box.shape[0]):
                for jj in range(p.box.shape[1]):
                    if m[ii, jj] == 0.0:
                        continue
                    col = a[g + ii - 2:g + ii + 3, g + jj]
                    vals = interp.linear5_interp_1d(col, rx)
                    k0 = (p.box.lo[0] + ii) * rx
                    total[k0:k0 + rx] += dv * vals
    partials = [total]
    saved = plan.partial_level
    plan.partial_level = [plan.total_level[0]]
    try:
        return _finish_reduction(plan, partials, spec, out)
    finally:
        plan.partial_level = saved


def _rel_err(a, b) -> tuple:
    d = np.abs(a - b)
    scale = np.maximum(np.abs(a), np.abs(b))
    big = scale > 1e-2 * max(float(np.max(scale)), 1e-300)
    rel = float(np.max(d[big] / scale[big])) if np.any(big) else 0.0
    absolute = float(np.max(d[~big])) if np.any(~big) else 0.0
    return rel, absolute


@dataclass
class EquivalenceReport:
    trials: int
    max_rel: float
    max_abs_small: float
    seconds: float
    levels: list

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def reduction_equivalence(trials: int = 100, seed: int = 2024) -> EquivalenceReport:
    """Compare mask, sub-patch and brute-force reductions on random
    hierarchies and random data; returns the worst discrepancies over
    all configuration levels."""
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    worst_rel = worst_abs = 0.0
    depth = []
    for k in range(trials):
        ph = random_hierarchy(rng)
        depth.append(ph.num_levels)
        ch = config_hierarchy_for(ph)
        plan = ReductionPlan(ph, ch)
        f = CellField(ph, 3, "f")
        fill_from_function(f, random_phase_function(rng, ("smooth", "step", "signed")[k % 3]))
        spec = MomentSpec(dv=1.0 / ph.domain_box.shape[1], offset=0.0, scale=1.0)
        outs = [REDUCERS["mask"](plan, f, spec), REDUCERS["subpatch"](plan, f, spec),
                brute_force_moment(plan, f, spec)]
        for l in range(ch.num_levels):
            vals = [o.interior(l, 0) for o in outs]
            for a, b in ((0, 1), (0, 2), (1, 2)):
                r, s = _rel_err(vals[a], vals[b])
                worst_rel = max(worst_rel, r)
                worst_abs = max(worst_abs, s)
    return EquivalenceReport(trials, worst_rel, worst_abs, time.perf_counter() - t0, depth)


def two_level_benchmark(N: int, ratio=(2, 2)):
    """N x N coarse domain with one fine patch over the middle half in x
    and a quarter in v."""
    dom = IndexBox((0, 0), (N - 1, N - 1))
    fine = refine(IndexBox((N // 4, 3 * N // 8), (3 * N // 4 - 1, 5 * N // 8 - 1)), ratio)
    return PatchHierarchy(dom, [ratio], periodic=(True, False), levels=[[dom], [fine]])


def reduction_work(ns=(64, 128, 256), seed: int = 7) -> dict:
    """1-D interpolation work (coarse cells refined, as counted by the
    interpolation kernels) and wall time of both reductions for N x N
    two-level benchmarks, with fitted exponents in N."""
    rng = np.random.default_rng(seed)
    res = {"N": list(ns), "mask": [], "subpatch": [], "mask_calls": [], "subpatch_calls": [],
           "mask_seconds": [], "subpatch_seconds": []}
    for N in ns:
        ph = two_level_benchmark(N)
        ch = config_hierarchy_for(ph)
        plan = ReductionPlan(ph, ch)
        f = CellField(ph, 3, "f")
        fill_from_function(f, random_phase_function(rng, "smooth"))
        spec = MomentSpec(dv=1.0 / N, offset=0.0, scale=1.0)
        for name in ("mask", "subpatch"):
            interp.COUNTER.reset()
            t0 = time.perf_counter()
            REDUCERS[name](plan, f, spec)
            res[f"{name}_seconds"].append(time.perf_counter() - t0)
            res[name].append(interp.COUNTER.cells)
            res[f"{name}_calls"].append(interp.COUNTER.calls)
    logN = np.log(np.asarray(ns, float))
    for name in ("mask", "subpatch"):
        res[f"{name}_exponent"] = float(np.polyfit(logN, np.log(res[name]), 1)[0])
    return res
