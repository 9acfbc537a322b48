"""Pure-Python/numpy implementations of the hot loops.

Mirrors ``_ckernels.pyx`` operation for operation. Used when the compiled
extension is not available or when ``DCGS_PURE_PYTHON=1``.

The atom kernels minimize

    phi(z) = 0.5 z'Hz + c'z + 0.5 eta ||z - center||^2

over an atom set whose vertices are ``sign * radius * e_j`` (l1 ball, atom id
``2j`` for ``+`` and ``2j+1`` for ``-``) or ``radius * e_j`` (simplex, atom id
``j``). ``Hz`` is carried along and updated in O(d) per step.
"""

import numpy as np

ATOM_L1 = 0
ATOM_SIMPLEX = 1

STATUS_CONVERGED = 0
STATUS_BUDGET = 1
STATUS_STALLED = 2

PURGE_TOL = 1e-12
RENORM_TOL = 1e-10


def _lmo_atom(g, kind):
    if kind == ATOM_L1:
        j = int(np.argmax(np.abs(g)))
        sign = -1.0 if g[j] > 0 else 1.0
        return j, sign, (2 * j if sign > 0 else 2 * j + 1)
    j = int(np.argmin(g))
    return j, 1.0, j


def _atom_coord(a, kind):
    if kind == ATOM_L1:
        return a // 2, (1.0 if a % 2 == 0 else -1.0)
    return a, 1.0


def line_search_quadratic(a, b, gamma_max):
    """Minimize ``a g^2 + b g`` over ``g in [0, gamma_max]`` (``a >= 0``)."""
    if a <= 0.0:
        return 0.0 if b >= 0.0 else gamma_max
    g = -b / (2.0 * a)
    if g < 0.0:
        return 0.0
    if g > gamma_max:
        return gamma_max
    return g


def fw_atoms(H, c, eta, center, z, Hz, kind, radius, tol, max_iters, line_search):
    """Frank-Wolfe on an atom set until the Wolfe gap drops to ``tol``.

    Returns ``(z, Hz, iterations, gap, status, best_z, best_gap)``; ``z`` and
    ``Hz`` are updated in place.
    """
    best_gap = np.inf
    best_z = z.copy()
    t = 0
    while True:
        g = Hz + c + eta * (z - center)
        j, sign, _ = _lmo_atom(g, kind)
        gap = float(g @ z) - sign * radius * g[j]
        if gap < best_gap:
            best_gap = gap
            best_z[:] = z
        if gap <= tol:
            return z, Hz, t, gap, STATUS_CONVERGED, best_z, best_gap
        if t >= max_iters:
            return z, Hz, t, gap, STATUS_BUDGET, best_z, best_gap
        if line_search:
            zHz = float(z @ Hz)
            zz = float(z @ z)
            dHd = radius * radius * H[j, j] - 2.0 * sign * radius * Hz[j] + zHz
            dd = radius * radius - 2.0 * sign * radius * z[j] + zz
            gamma = line_search_quadratic(0.5 * (dHd + eta * dd), -gap, 1.0)
        else:
            gamma = 2.0 / (t + 2.0)
        z *= 1.0 - gamma
        z[j] += gamma * sign * radius
        Hz *= 1.0 - gamma
        Hz += (gamma * sign * radius) * H[j]
        t += 1


def pairwise_atoms(H, c, eta, center, weights, z, Hz, kind, radius, tol, max_iters):
    """Pairwise Frank-Wolfe on an atom set.

    ``weights`` is the dense vector of atom weights (length = number of
    atoms); it must reproduce ``z``. Returns
    ``(z, Hz, weights, iterations, gap, status, best_z, best_gap)``.
    """
    active = [int(a) for a in np.flatnonzero(weights > 0)]
    best_gap = np.inf
    best_z = z.copy()
    t = 0
    while True:
        g = Hz + c + eta * (z - center)
        js, ss, a_s = _lmo_atom(g, kind)
        gap = float(g @ z) - ss * radius * g[js]
        if gap < best_gap:
            best_gap = gap
            best_z[:] = z
        if gap <= tol:
            return z, Hz, weights, t, gap, STATUS_CONVERGED, best_z, best_gap
        if t >= max_iters:
            return z, Hz, weights, t, gap, STATUS_BUDGET, best_z, best_gap

        # away atom: largest <g, atom> over the active set, lowest id on ties
        a_v = -1
        best_val = -np.inf
        wsum = 0.0
        for a in active:
            jj, sg = _atom_coord(a, kind)
            val = sg * radius * g[jj]
            wsum += weights[a]
            if val > best_val or (val == best_val and a < a_v):
                best_val = val
                a_v = a
        if a_v == a_s:
            return z, Hz, weights, t, gap, STATUS_STALLED, best_z, best_gap
        jv, sv = _atom_coord(a_v, kind)

        if js != jv:
            dHd = radius * radius * (H[js, js] + H[jv, jv] - 2.0 * ss * sv * H[js, jv])
            dd = 2.0 * radius * radius
        else:
            dHd = 4.0 * radius * radius * H[js, js]
            dd = 4.0 * radius * radius
        b = radius * (ss * g[js] - sv * g[jv])
        gamma = line_search_quadratic(0.5 * (dHd + eta * dd), b, weights[a_v])

        z[js] += gamma * ss * radius
        z[jv] -= gamma * sv * radius
        Hz += (gamma * radius * ss) * H[js]
        Hz -= (gamma * radius * sv) * H[jv]
        if weights[a_s] == 0.0 and gamma > 0.0:
            active.append(a_s)
        weights[a_s] += gamma
        weights[a_v] -= gamma
        rebuild = False
        if weights[a_v] < PURGE_TOL:
            rebuild = weights[a_v] != 0.0
            weights[a_v] = 0.0
            active.remove(a_v)
        if abs(wsum - 1.0) > RENORM_TOL:
            weights /= weights.sum()
            rebuild = True
        if rebuild:
            z[:] = 0.0
            for a in active:
                jj, sg = _atom_coord(a, kind)
                z[jj] += weights[a] * sg * radius
            Hz[:] = H @ z
        t += 1


def top_singular_pair(G, max_iters, rtol):
    """Power iteration on ``G^T G``; returns ``(sigma, u, v)`` with unit ``u``, ``v``."""
    rows, cols = G.shape
    u = G[:, 0].copy()
    nrm = np.linalg.norm(u)
    if nrm == 0.0:
        u = np.ones(rows)
        nrm = np.sqrt(rows)
    u /= nrm
    v = G.T @ u
    nrm = np.linalg.norm(v)
    if nrm == 0.0:
        v = np.ones(cols)
        nrm = np.sqrt(cols)
    v /= nrm
    lam = 0.0
    for _ in range(max_iters):
        Gv = G @ v
        w = G.T @ Gv
        lam_new = float(v @ w)
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            break
        v = w / nrm
        if abs(lam_new - lam) <= rtol * abs(lam_new):
            lam = lam_new
            break
        lam = lam_new
    Gv = G @ v
    sigma = float(np.linalg.norm(Gv))
    if sigma == 0.0:
        return 0.0, np.zeros(rows), v
    return sigma, Gv / sigma, v
