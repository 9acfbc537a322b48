# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops. Same contracts as ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, INFINITY

cnp.import_array()

ATOM_L1 = 0
ATOM_SIMPLEX = 1

STATUS_CONVERGED = 0
STATUS_BUDGET = 1
STATUS_STALLED = 2

cdef double PURGE_TOL = 1e-12
cdef double RENORM_TOL = 1e-10


cpdef double line_search_quadratic(double a, double b, double gamma_max) noexcept nogil:
    cdef double g
    if a <= 0.0:
        return 0.0 if b >= 0.0 else gamma_max
    g = -b / (2.0 * a)
    if g < 0.0:
        return 0.0
    if g > gamma_max:
        return gamma_max
    return g


cdef inline void _gradient(const double[:, ::1] H, const double[::1] c, double eta,
                           const double[::1] center, const double[::1] z,
                           const double[::1] Hz, double[::1] g) noexcept nogil:
    cdef Py_ssize_t i, n = z.shape[0]
    for i in range(n):
        g[i] = Hz[i] + c[i] + eta * (z[i] - center[i])


cdef inline Py_ssize_t _lmo(const double[::1] g, int kind, double* sign) noexcept nogil:
    cdef Py_ssize_t i, j = 0, n = g.shape[0]
    cdef double best
    if kind == 0:
        best = fabs(g[0])
        for i in range(1, n):
            if fabs(g[i]) > best:
                best = fabs(g[i])
                j = i
        sign[0] = -1.0 if g[j] > 0 else 1.0
    else:
        best = g[0]
        for i in range(1, n):
            if g[i] < best:
                best = g[i]
                j = i
        sign[0] = 1.0
    return j


cdef inline double _dot(const double[::1] a, const double[::1] b) noexcept nogil:
    cdef Py_ssize_t i
    cdef double s = 0.0
    for i in range(a.shape[0]):
        s += a[i] * b[i]
    return s


def fw_atoms(const double[:, ::1] H, const double[::1] c, double eta, const double[::1] center,
             cnp.ndarray[cnp.float64_t, ndim=1] z_arr, cnp.ndarray[cnp.float64_t, ndim=1] Hz_arr,
             int kind, double radius, double tol, long max_iters, bint line_search):
    cdef double[::1] z = z_arr
    cdef double[::1] Hz = Hz_arr
    cdef Py_ssize_t n = z.shape[0], i, j
    cdef double[::1] g = np.empty(n)
    best_z_arr = z_arr.copy()
    cdef double[::1] best_z = best_z_arr
    cdef double sign, gap, gamma, dHd, dd, scale, best_gap = INFINITY
    cdef long t = 0
    cdef int status
    with nogil:
        while True:
            _gradient(H, c, eta, center, z, Hz, g)
            j = _lmo(g, kind, &sign)
            gap = _dot(g, z) - sign * radius * g[j]
            if gap < best_gap:
                best_gap = gap
                best_z[:] = z
            if gap <= tol:
                status = 0
                break
            if t >= max_iters:
                status = 1
                break
            if line_search:
                dHd = radius * radius * H[j, j] - 2.0 * sign * radius * Hz[j] + _dot(z, Hz)
                dd = radius * radius - 2.0 * sign * radius * z[j] + _dot(z, z)
                gamma = line_search_quadratic(0.5 * (dHd + eta * dd), -gap, 1.0)
            else:
                gamma = 2.0 / (t + 2.0)
            scale = gamma * sign * radius
            for i in range(n):
                z[i] *= 1.0 - gamma
                Hz[i] = (1.0 - gamma) * Hz[i] + scale * H[j, i]
            z[j] += scale
            t += 1
    return z_arr, Hz_arr, t, gap, status, best_z_arr, best_gap


cdef inline void _atom_coord(Py_ssize_t a, int kind, Py_ssize_t* j, double* s) noexcept nogil:
    if kind == 0:
        j[0] = a // 2
        s[0] = 1.0 if a % 2 == 0 else -1.0
    else:
        j[0] = a
        s[0] = 1.0


def pairwise_atoms(const double[:, ::1] H, const double[::1] c, double eta, const double[::1] center,
                   cnp.ndarray[cnp.float64_t, ndim=1] weights_arr,
                   cnp.ndarray[cnp.float64_t, ndim=1] z_arr, cnp.ndarray[cnp.float64_t, ndim=1] Hz_arr,
                   int kind, double radius, double tol, long max_iters):
    cdef double[::1] w = weights_arr
    cdef double[::1] z = z_arr
    cdef double[::1] Hz = Hz_arr
    cdef Py_ssize_t n = z.shape[0], n_atoms = w.shape[0], i, k, a, a_s, a_v, js, jv, jj
    cdef double[::1] g = np.empty(n)
    active_arr = np.flatnonzero(weights_arr > 0).astype(np.intp)
    cdef Py_ssize_t[::1] active = np.empty(n_atoms, dtype=np.intp)
    cdef Py_ssize_t n_active = active_arr.shape[0]
    for k in range(n_active):
        active[k] = active_arr[k]
    best_z_arr = z_arr.copy()
    cdef double[::1] best_z = best_z_arr
    cdef double ss, sv, sg, gap, gamma, dHd, dd, b, val, best_val, wsum, tot, best_gap = INFINITY
    cdef long t = 0
    cdef int status
    cdef bint rebuild
    with nogil:
        while True:
            _gradient(H, c, eta, center, z, Hz, g)
            js = _lmo(g, kind, &ss)
            a_s = (2 * js if ss > 0 else 2 * js + 1) if kind == 0 else js
            gap = _dot(g, z) - ss * radius * g[js]
            if gap < best_gap:
                best_gap = gap
                best_z[:] = z
            if gap <= tol:
                status = 0
                break
            if t >= max_iters:
                status = 1
                break

            a_v = -1
            best_val = -INFINITY
            wsum = 0.0
            for k in range(n_active):
                a = active[k]
                _atom_coord(a, kind, &jj, &sg)
                val = sg * radius * g[jj]
                wsum += w[a]
                if val > best_val or (val == best_val and a < a_v):
                    best_val = val
                    a_v = a
            if a_v == a_s:
                status = 2
                break
            _atom_coord(a_v, kind, &jv, &sv)

            if js != jv:
                dHd = radius * radius * (H[js, js] + H[jv, jv] - 2.0 * ss * sv * H[js, jv])
                dd = 2.0 * radius * radius
            else:
                dHd = 4.0 * radius * radius * H[js, js]
                dd = 4.0 * radius * radius
            b = radius * (ss * g[js] - sv * g[jv])
            gamma = line_search_quadratic(0.5 * (dHd + eta * dd), b, w[a_v])

            z[js] += gamma * ss * radius
            z[jv] -= gamma * sv * radius
            for i in range(n):
                Hz[i] += gamma * radius * (ss * H[js, i] - sv * H[jv, i])
            if w[a_s] == 0.0 and gamma > 0.0:
                active[n_active] = a_s
                n_active += 1
            w[a_s] += gamma
            w[a_v] -= gamma
            rebuild = False
            if w[a_v] < PURGE_TOL:
                rebuild = w[a_v] != 0.0
                w[a_v] = 0.0
                for k in range(n_active):
                    if active[k] == a_v:
                        active[k] = active[n_active - 1]
                        n_active -= 1
                        break
            if fabs(wsum - 1.0) > RENORM_TOL:
                tot = 0.0
                for k in range(n_active):
                    tot += w[active[k]]
                for k in range(n_active):
                    w[active[k]] /= tot
                rebuild = True
            if rebuild:
                for i in range(n):
                    z[i] = 0.0
                for k in range(n_active):
                    _atom_coord(active[k], kind, &jj, &sg)
                    z[jj] += w[active[k]] * sg * radius
                for i in range(n):
                    Hz[i] = _dot(H[i], z)
            t += 1
    return z_arr, Hz_arr, weights_arr, t, gap, status, best_z_arr, best_gap


def top_singular_pair(const double[:, ::1] G, long max_iters, double rtol):
    cdef Py_ssize_t rows = G.shape[0], cols = G.shape[1], i, k
    cdef double[::1] u = np.empty(rows)
    cdef double[::1] v = np.empty(cols)
    cdef double[::1] Gv = np.empty(rows)
    cdef double[::1] w = np.empty(cols)
    cdef double nrm, lam = 0.0, lam_new, acc, sigma
    cdef long it
    with nogil:
        nrm = 0.0
        for i in range(rows):
            u[i] = G[i, 0]
            nrm += u[i] * u[i]
        if nrm == 0.0:
            for i in range(rows):
                u[i] = 1.0
            nrm = rows
        nrm = sqrt(nrm)
        for i in range(rows):
            u[i] /= nrm
        _matT_vec(G, u, v)
        nrm = sqrt(_dot(v, v))
        if nrm == 0.0:
            for k in range(cols):
                v[k] = 1.0
            nrm = sqrt(<double>cols)
        for k in range(cols):
            v[k] /= nrm
        for it in range(max_iters):
            _mat_vec(G, v, Gv)
            _matT_vec(G, Gv, w)
            lam_new = _dot(v, w)
            nrm = sqrt(_dot(w, w))
            if nrm == 0.0:
                break
            for k in range(cols):
                v[k] = w[k] / nrm
            if fabs(lam_new - lam) <= rtol * fabs(lam_new):
                lam = lam_new
                break
            lam = lam_new
        _mat_vec(G, v, Gv)
        sigma = sqrt(_dot(Gv, Gv))
    if sigma == 0.0:
        return 0.0, np.zeros(rows), np.asarray(v)
    return sigma, np.asarray(Gv) / sigma, np.asarray(v)


cdef inline void _mat_vec(const double[:, ::1] G, const double[::1] v, double[::1] out) noexcept nogil:
    cdef Py_ssize_t i, k
    cdef double acc
    for i in range(G.shape[0]):
        acc = 0.0
        for k in range(G.shape[1]):
            acc += G[i, k] * v[k]
        out[i] = acc


cdef inline void _matT_vec(const double[:, ::1] G, const double[::1] u, double[::1] out) noexcept nogil:
    cdef Py_ssize_t i, k
    for k in range(G.shape[1]):
        out[k] = 0.0
    for i in range(G.shape[0]):
        for k in range(G.shape[1]):
            out[k] += G[i, k] * u[i]
