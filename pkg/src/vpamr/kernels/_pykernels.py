"""Vectorized numpy versions of the hot kernels.

These are the reference implementations; the compiled module mirrors them
operation for operation.
"""
import numpy as np

BACKEND = "numpy"

_C13_12 = 13.0 / 12.0


def weno5_refine_axis(u, R, axis, eps, dweights):
    """Conservative WENO5 cell-average refinement along one axis.

    `u` carries two stencil cells on each side of the refined range along
    `axis`; `dweights` has shape (R, 3) with the ideal weights of the
    right-biased, centered and left-biased candidates for each sub-cell.
    """
    u = np.moveaxis(np.asarray(u, dtype=np.float64), axis, 0)
    n = u.shape[0] - 4
    if n < 1:
        raise ValueError("need at least one cell plus two stencil cells per side")
    um2, um1, u0, up1, up2 = (u[k:k + n] for k in range(5))
    Dm2 = um1 - um2
    Dm1 = u0 - um1
    D0 = up1 - u0
    Dp1 = up2 - up1
    Lm1 = Dm1 - Dm2
    L0 = D0 - Dm1
    Lp1 = Dp1 - D0

    b0 = _C13_12 * Lp1 * Lp1 + 0.25 * (Dp1 - 3.0 * D0) ** 2
    b1 = _C13_12 * L0 * L0 + 0.25 * (D0 + Dm1) ** 2
    b2 = _C13_12 * Lm1 * Lm1 + 0.25 * (3.0 * Dm1 - Dm2) ** 2
    i0 = 1.0 / (eps + b0) ** 2
    i1 = 1.0 / (eps + b1) ** 2
    i2 = 1.0 / (eps + b2) ** 2

    A0 = u0 + (2.0 * Dp1 - 5.0 * D0) / 6.0
    A1 = u0 - (D0 + 2.0 * Dm1) / 6.0
    A2 = u0 - (4.0 * Dm1 - Dm2) / 6.0
    B0 = 2.0 * D0 - Dp1
    B1 = Dm1

    out = np.empty((n, R) + u.shape[1:])
    for s in range(R):
        P = (2.0 * s + 1.0) / (2.0 * R)
        Q = (3.0 * s * s + 3.0 * s + 1.0) / (6.0 * R * R)
        a0 = dweights[s][0] * i0
        a1 = dweights[s][1] * i1
        a2 = dweights[s][2] * i2
        c0 = A0 + B0 * P + Lp1 * Q
        c1 = A1 + B1 * P + L0 * Q
        c2 = A2 + B1 * P + Lm1 * Q
        out[:, s] = (a0 * c0 + a1 * c1 + a2 * c2) / (a0 + a1 + a2)
    defect = u0 - out.sum(axis=1) / R
    out += defect[:, None]
    out = out.reshape((n * R,) + u.shape[1:])
    return np.ascontiguousarray(np.moveaxis(out, 0, axis))


def linear5_refine_axis(u, R, axis, bcoef):
    """Unlimited quintic-stencil refinement; `bcoef` has shape (R, 5)."""
    u = np.moveaxis(np.asarray(u, dtype=np.float64), axis, 0)
    n = u.shape[0] - 4
    if n < 1:
        raise ValueError("need at least one cell plus two stencil cells per side")
    st = [u[k:k + n] for k in range(5)]
    out = np.empty((n, R) + u.shape[1:])
    for s in range(R):
        b = bcoef[s]
        out[:, s] = b[0] * st[0] + b[1] * st[1] + b[2] * st[2] + b[3] * st[3] + b[4] * st[4]
    defect = st[2] - out.sum(axis=1) / R
    out += defect[:, None]
    out = out.reshape((n * R,) + u.shape[1:])
    return np.ascontiguousarray(np.moveaxis(out, 0, axis))


def face_values(fm1, f0, fp1, fp2, upwind, eps, limiting):
    """Face average from two third-order candidates, larger weight upwind."""
    fl = (-fm1 + 5.0 * f0 + 2.0 * fp1) / 6.0
    fr = (2.0 * f0 + 5.0 * fp1 - fp2) / 6.0
    if not limiting:
        return 0.5 * fl + 0.5 * fr
    bl = _C13_12 * (fm1 - 2.0 * f0 + fp1) ** 2 + 0.25 * (fp1 - fm1) ** 2
    br = _C13_12 * (f0 - 2.0 * fp1 + fp2) ** 2 + 0.25 * (fp2 - f0) ** 2
    al = 0.5 / (eps + bl) ** 2
    ar = 0.5 / (eps + br) ** 2
    wl = al / (al + ar)
    wr = ar / (al + ar)
    wmax = np.maximum(wl, wr)
    wmin = np.minimum(wl, wr)
    pos = upwind > 0.0
    wL = np.where(pos, wmax, wmin)
    wR = np.where(pos, wmin, wmax)
    return wL * fl + wR * fr


def vlasov_fluxes(f, E, vbar, dv, g, eps, limiting, accel_sign):
    """Fourth-order face-averaged fluxes on one ghosted phase-space patch.

    f: (nx + 2g, nv + 2g); E: (nx + 2g,); vbar: (nv + 2g,).
    Returns Fx (nx + 1, nv) and Fv (nx, nv + 1) on the interior faces.
    """
    NX, NV = f.shape
    nx, nv = NX - 2 * g, NV - 2 * g
    # x-faces i+1/2 for i = g-1 .. g+nx-1 on rows g-1 .. g+nv
    rows = slice(g - 1, g + nv + 1)
    fx = f[:, rows]
    i0 = g - 1
    fm1 = fx[i0 - 1:i0 - 1 + nx + 1]
    f0 = fx[i0:i0 + nx + 1]
    fp1 = fx[i0 + 1:i0 + 2 + nx]
    fp2 = fx[i0 + 2:i0 + 3 + nx]
    vrow = vbar[rows]
    Gx = face_values(fm1, f0, fp1, fp2, np.broadcast_to(vrow, f0.shape), eps, limiting)
    Fx = vrow[None, 1:-1] * Gx[:, 1:-1] + (dv / 24.0) * (Gx[:, 2:] - Gx[:, :-2])

    # v-faces j+1/2 for j = g-1 .. g+nv-1 on columns g-1 .. g+nx
    cols = slice(g - 1, g + nx + 1)
    fv = f[cols, :]
    j0 = g - 1
    gm1 = fv[:, j0 - 1:j0 - 1 + nv + 1]
    g0 = fv[:, j0:j0 + nv + 1]
    gp1 = fv[:, j0 + 1:j0 + 2 + nv]
    gp2 = fv[:, j0 + 2:j0 + 3 + nv]
    Ecol = E[cols]
    a = accel_sign * Ecol
    Gv = face_values(gm1, g0, gp1, gp2, np.broadcast_to(a[:, None], g0.shape), eps, limiting)
    Fv = accel_sign * (Ecol[1:-1, None] * Gv[1:-1, :]
                       - (1.0 / 48.0) * (Ecol[2:, None] - Ecol[:-2, None]) * (Gv[2:, :] - Gv[:-2, :]))
    return np.ascontiguousarray(Fx), np.ascontiguousarray(Fv)


def flux_divergence(Fx, Fv, dx, dv):
    return -(Fx[1:, :] - Fx[:-1, :]) / dx - (Fv[:, 1:] - Fv[:, :-1]) / dv
