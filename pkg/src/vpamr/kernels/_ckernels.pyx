# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot kernels (see _pykernels for the reference)."""
import numpy as np
cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"

cdef double C13_12 = 13.0 / 12.0


cdef inline double sq(double x) nogil:
    return x * x


cdef void _weno_cell(double um2, double um1, double u0, double up1, double up2,
                     int R, double eps, const double[:, ::1] dw, double* out) noexcept nogil:
    cdef double Dm2 = um1 - um2
    cdef double Dm1 = u0 - um1
    cdef double D0 = up1 - u0
    cdef double Dp1 = up2 - up1
    cdef double Lm1 = Dm1 - Dm2
    cdef double L0 = D0 - Dm1
    cdef double Lp1 = Dp1 - D0
    cdef double b0 = C13_12 * Lp1 * Lp1 + 0.25 * sq(Dp1 - 3.0 * D0)
    cdef double b1 = C13_12 * L0 * L0 + 0.25 * sq(D0 + Dm1)
    cdef double b2 = C13_12 * Lm1 * Lm1 + 0.25 * sq(3.0 * Dm1 - Dm2)
    cdef double i0 = 1.0 / sq(eps + b0)
    cdef double i1 = 1.0 / sq(eps + b1)
    cdef double i2 = 1.0 / sq(eps + b2)
    cdef double A0 = u0 + (2.0 * Dp1 - 5.0 * D0) / 6.0
    cdef double A1 = u0 - (D0 + 2.0 * Dm1) / 6.0
    cdef double A2 = u0 - (4.0 * Dm1 - Dm2) / 6.0
    cdef double B0 = 2.0 * D0 - Dp1
    cdef double B1 = Dm1
    cdef double P, Q, a0, a1, a2, c0, c1, c2, total = 0.0
    cdef int s
    for s in range(R):
        P = (2.0 * s + 1.0) / (2.0 * R)
        Q = (3.0 * s * s + 3.0 * s + 1.0) / (6.0 * R * R)
        a0 = dw[s, 0] * i0
        a1 = dw[s, 1] * i1
        a2 = dw[s, 2] * i2
        c0 = A0 + B0 * P + Lp1 * Q
        c1 = A1 + B1 * P + L0 * Q
        c2 = A2 + B1 * P + Lm1 * Q
        out[s] = (a0 * c0 + a1 * c1 + a2 * c2) / (a0 + a1 + a2)
        total += out[s]
    cdef double defect = u0 - total / R
    for s in range(R):
        out[s] += defect


cdef void _lin_cell(double um2, double um1, double u0, double up1, double up2,
                    int R, const double[:, ::1] b, double* out) noexcept nogil:
    cdef int s
    cdef double total = 0.0
    for s in range(R):
        out[s] = b[s, 0] * um2 + b[s, 1] * um1 + b[s, 2] * u0 + b[s, 3] * up1 + b[s, 4] * up2
        total += out[s]
    cdef double defect = u0 - total / R
    for s in range(R):
        out[s] += defect


def _refine2d(u, int R, int axis, double eps, coef, bint weno):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] arr = np.ascontiguousarray(u, dtype=np.float64)
    cdef const double[:, ::1] c = np.ascontiguousarray(coef, dtype=np.float64)
    cdef double[:, ::1] a = arr
    cdef Py_ssize_t n, m, i, j, s
    cdef double buf[64]
    if R > 64:
        raise ValueError("refinement ratio too large")
    if axis == 0:
        n = a.shape[0] - 4
        m = a.shape[1]
    else:
        n = a.shape[1] - 4
        m = a.shape[0]
    if n < 1:
        raise ValueError("need at least one cell plus two stencil cells per side")
    cdef cnp.ndarray[cnp.float64_t, ndim=2] res
    if axis == 0:
        res = np.empty((n * R, m))
    else:
        res = np.empty((m, n * R))
    cdef double[:, ::1] o = res
    with nogil:
        if axis == 0:
            for i in range(n):
                for j in range(m):
                    if weno:
                        _weno_cell(a[i, j], a[i + 1, j], a[i + 2, j], a[i + 3, j], a[i + 4, j], R, eps, c, buf)
                    else:
                        _lin_cell(a[i, j], a[i + 1, j], a[i + 2, j], a[i + 3, j], a[i + 4, j], R, c, buf)
                    for s in range(R):
                        o[i * R + s, j] = buf[s]
        else:
            for j in range(m):
                for i in range(n):
                    if weno:
                        _weno_cell(a[j, i], a[j, i + 1], a[j, i + 2], a[j, i + 3], a[j, i + 4], R, eps, c, buf)
                    else:
                        _lin_cell(a[j, i], a[j, i + 1], a[j, i + 2], a[j, i + 3], a[j, i + 4], R, c, buf)
                    for s in range(R):
                        o[j, i * R + s] = buf[s]
    return res


def weno5_refine_axis(u, int R, int axis, double eps, dweights):
    u = np.asarray(u, dtype=np.float64)
    if u.ndim == 1:
        return _refine2d(u[:, None], R, 0, eps, dweights, True)[:, 0]
    if u.ndim != 2:
        raise ValueError("compiled kernels handle 1-D and 2-D arrays")
    return _refine2d(u, R, axis, eps, dweights, True)


def linear5_refine_axis(u, int R, int axis, bcoef):
    u = np.asarray(u, dtype=np.float64)
    if u.ndim == 1:
        return _refine2d(u[:, None], R, 0, 0.0, bcoef, False)[:, 0]
    if u.ndim != 2:
        raise ValueError("compiled kernels handle 1-D and 2-D arrays")
    return _refine2d(u, R, axis, 0.0, bcoef, False)


cdef inline double _face(double fm1, double f0, double fp1, double fp2, double upwind,
                         double eps, bint limiting) noexcept nogil:
    cdef double fl = (-fm1 + 5.0 * f0 + 2.0 * fp1) / 6.0
    cdef double fr = (2.0 * f0 + 5.0 * fp1 - fp2) / 6.0
    if not limiting:
        return 0.5 * fl + 0.5 * fr
    cdef double bl = C13_12 * sq(fm1 - 2.0 * f0 + fp1) + 0.25 * sq(fp1 - fm1)
    cdef double br = C13_12 * sq(f0 - 2.0 * fp1 + fp2) + 0.25 * sq(fp2 - f0)
    cdef double al = 0.5 / sq(eps + bl)
    cdef double ar = 0.5 / sq(eps + br)
    cdef double wl = al / (al + ar)
    cdef double wr = ar / (al + ar)
    cdef double wmax = wl if wl >= wr else wr
    cdef double wmin = wr if wl >= wr else wl
    if upwind > 0.0:
        return wmax * fl + wmin * fr
    return wmin * fl + wmax * fr


def face_values(fm1, f0, fp1, fp2, upwind, double eps, bint limiting):
    shape = np.broadcast(fm1, f0, fp1, fp2, upwind).shape
    cdef const double[::1] a = np.ascontiguousarray(np.broadcast_to(fm1, shape), dtype=np.float64).ravel()
    cdef const double[::1] b = np.ascontiguousarray(np.broadcast_to(f0, shape), dtype=np.float64).ravel()
    cdef const double[::1] c = np.ascontiguousarray(np.broadcast_to(fp1, shape), dtype=np.float64).ravel()
    cdef const double[::1] d = np.ascontiguousarray(np.broadcast_to(fp2, shape), dtype=np.float64).ravel()
    cdef const double[::1] w = np.ascontiguousarray(np.broadcast_to(upwind, shape), dtype=np.float64).ravel()
    res = np.empty(a.shape[0])
    cdef double[::1] o = res
    cdef Py_ssize_t k
    with nogil:
        for k in range(a.shape[0]):
            o[k] = _face(a[k], b[k], c[k], d[k], w[k], eps, limiting)
    return res.reshape(shape)


def vlasov_fluxes(f, E, vbar, double dv, int g, double eps, bint limiting, double accel_sign):
    cdef const double[:, ::1] F = np.ascontiguousarray(f, dtype=np.float64)
    cdef const double[::1] Ec = np.ascontiguousarray(E, dtype=np.float64)
    cdef const double[::1] vb = np.ascontiguousarray(vbar, dtype=np.float64)
    cdef Py_ssize_t NX = F.shape[0], NV = F.shape[1]
    cdef Py_ssize_t nx = NX - 2 * g, nv = NV - 2 * g
    cdef Py_ssize_t i, j, fi, fj
    Fx_arr = np.empty((nx + 1, nv))
    Fv_arr = np.empty((nx, nv + 1))
    cdef double[:, ::1] Fx = Fx_arr
    cdef double[:, ::1] Fv = Fv_arr
    # scratch rows of reconstructed face values
    Gx_arr = np.empty((nx + 1, nv + 2))
    Gv_arr = np.empty((nx + 2, nv + 1))
    cdef double[:, ::1] Gx = Gx_arr
    cdef double[:, ::1] Gv = Gv_arr
    cdef double c24 = dv / 24.0
    cdef double c48 = 1.0 / 48.0
    cdef double a
    with nogil:
        for fi in range(nx + 1):
            i = g - 1 + fi
            for fj in range(nv + 2):
                j = g - 1 + fj
                Gx[fi, fj] = _face(F[i - 1, j], F[i, j], F[i + 1, j], F[i + 2, j], vb[j], eps, limiting)
        for fi in range(nx + 1):
            for fj in range(nv):
                Fx[fi, fj] = vb[g + fj] * Gx[fi, fj + 1] + c24 * (Gx[fi, fj + 2] - Gx[fi, fj])
        for fi in range(nx + 2):
            i = g - 1 + fi
            a = accel_sign * Ec[i]
            for fj in range(nv + 1):
                j = g - 1 + fj
                Gv[fi, fj] = _face(F[i, j - 1], F[i, j], F[i, j + 1], F[i, j + 2], a, eps, limiting)
        for fi in range(nx):
            i = g + fi
            for fj in range(nv + 1):
                Fv[fi, fj] = accel_sign * (Ec[i] * Gv[fi + 1, fj]
                                           - c48 * (Ec[i + 1] - Ec[i - 1]) * (Gv[fi + 2, fj] - Gv[fi, fj]))
    return Fx_arr, Fv_arr


def flux_divergence(Fx, Fv, double dx, double dv):
    cdef const double[:, ::1] X = np.ascontiguousarray(Fx, dtype=np.float64)
    cdef const double[:, ::1] V = np.ascontiguousarray(Fv, dtype=np.float64)
    cdef Py_ssize_t nx = V.shape[0], nv = X.shape[1], i, j
    res = np.empty((nx, nv))
    cdef double[:, ::1] o = res
    with nogil:
        for i in range(nx):
            for j in range(nv):
                o[i, j] = -(X[i + 1, j] - X[i, j]) / dx - (V[i, j + 1] - V[i, j]) / dv
    return res
