"""Compiled inner loops for the profiled LPPL objective and bounded simplex search.

Everything here works on plain float64 arrays so it can run with the GIL
released; the public wrappers live in :mod:`bubblescan.fitting`.
"""

import numpy as np
from numba import njit

# column order of the linear design: 1, f, f cos g, f sin g
N_LINEAR = 4
_DEGENERATE = 1e-12


@njit(cache=True, nogil=True)
def profile_sse(tau, y, tc, alpha, omega, work, coef):
    """Least-squares fit of (A, B, C1, C2) at fixed (tc, alpha, omega).

    Modified Gram-Schmidt on the design augmented with ``y``; ``work`` is an
    ``(n, 5)`` scratch buffer, ``coef`` receives the four coefficients.
    Columns that are numerically dependent on earlier ones get a zero
    coefficient. Returns the residual sum of squares, or ``inf`` when the
    design cannot be formed (``tc`` not beyond every ``tau``).
    """
    n = tau.shape[0]
    y0 = y[0]
    for i in range(n):
        d = tc - tau[i]
        if d <= 0.0:
            for k in range(N_LINEAR):
                coef[k] = 0.0
            return np.inf
        ld = np.log(d)
        f = np.exp(alpha * ld)
        g = omega * ld
        work[i, 0] = 1.0
        work[i, 1] = f
        work[i, 2] = f * np.cos(g)
        work[i, 3] = f * np.sin(g)
        # centring on y[0] keeps a constant series exactly in the intercept
        work[i, 4] = y[i] - y0

    r = np.zeros((N_LINEAR, N_LINEAR + 1))
    keep = np.ones(N_LINEAR, dtype=np.bool_)
    for j in range(N_LINEAR):
        # norm before orthogonalisation, used for the dependence test
        raw = 0.0
        for i in range(n):
            raw += work[i, j] * work[i, j]
        for p in range(j):
            if not keep[p]:
                continue
            dot = 0.0
            for i in range(n):
                dot += work[i, p] * work[i, j]
            r[p, j] = dot
            for i in range(n):
                work[i, j] -= dot * work[i, p]
        nrm = 0.0
        for i in range(n):
            nrm += work[i, j] * work[i, j]
        if raw == 0.0 or nrm <= _DEGENERATE * _DEGENERATE * raw:
            keep[j] = False
            continue
        nrm = np.sqrt(nrm)
        r[j, j] = nrm
        for i in range(n):
            work[i, j] /= nrm

    # project y (column 4) out of the kept orthonormal columns
    for p in range(N_LINEAR):
        if not keep[p]:
            continue
        dot = 0.0
        for i in range(n):
            dot += work[i, p] * work[i, 4]
        r[p, N_LINEAR] = dot
        for i in range(n):
            work[i, 4] -= dot * work[i, p]

    sse = 0.0
    for i in range(n):
        sse += work[i, 4] * work[i, 4]

    for j in range(N_LINEAR - 1, -1, -1):
        if not keep[j]:
            coef[j] = 0.0
            continue
        acc = r[j, N_LINEAR]
        for k in range(j + 1, N_LINEAR):
            acc -= r[j, k] * coef[k]
        coef[j] = acc / r[j, j]
    coef[0] += y0
    return sse


@njit(cache=True, nogil=True)
def _reflect_unit(u):
    # fold a coordinate back into [0, 1] by mirroring at the faces
    for _ in range(8):
        if u < 0.0:
            u = -u
        elif u > 1.0:
            u = 2.0 - u
        else:
            return u
    return min(max(u, 0.0), 1.0)


@njit(cache=True, nogil=True)
def _objective(u, lo, hi, tau, y, work, coef):
    tc = lo[0] + u[0] * (hi[0] - lo[0])
    alpha = lo[1] + u[1] * (hi[1] - lo[1])
    omega = lo[2] + u[2] * (hi[2] - lo[2])
    return profile_sse(tau, y, tc, alpha, omega, work, coef)


@njit(cache=True, nogil=True)
def nelder_mead_box(u0, lo, hi, tau, y, max_iter, ftol, xtol, step):
    """Nelder-Mead in the unit cube mapped onto the box ``[lo, hi]``.

    Trial points leaving the cube are mirrored back at its faces. Stops when
    both the spread of simplex objective values is at most ``ftol`` and every
    vertex lies within ``xtol`` (unit coordinates, sup-norm) of the best one.

    Returns ``(u_best, f_best, converged, iterations)``.
    """
    dim = u0.shape[0]
    n = tau.shape[0]
    work = np.empty((n, N_LINEAR + 1))
    coef = np.empty(N_LINEAR)

    sim = np.empty((dim + 1, dim))
    fs = np.empty(dim + 1)
    for k in range(dim):
        sim[0, k] = _reflect_unit(u0[k])
    for v in range(1, dim + 1):
        for k in range(dim):
            sim[v, k] = sim[0, k]
        sim[v, v - 1] = _reflect_unit(sim[0, v - 1] + step if sim[0, v - 1] + step <= 1.0
                                      else sim[0, v - 1] - step)
    for v in range(dim + 1):
        fs[v] = _objective(sim[v], lo, hi, tau, y, work, coef)

    centroid = np.empty(dim)
    xr = np.empty(dim)
    xe = np.empty(dim)
    xc = np.empty(dim)
    converged = False
    it = 0
    while it < max_iter:
        order = np.argsort(fs)
        sim = sim[order]
        fs = fs[order]

        fspread = 0.0
        xspread = 0.0
        for v in range(1, dim + 1):
            fspread = max(fspread, abs(fs[v] - fs[0]))
            for k in range(dim):
                xspread = max(xspread, abs(sim[v, k] - sim[0, k]))
        if fspread <= ftol and xspread <= xtol:
            converged = True
            break
        it += 1

        for k in range(dim):
            acc = 0.0
            for v in range(dim):
                acc += sim[v, k]
            centroid[k] = acc / dim
        for k in range(dim):
            xr[k] = _reflect_unit(2.0 * centroid[k] - sim[dim, k])
        fr = _objective(xr, lo, hi, tau, y, work, coef)

        if fr < fs[0]:
            for k in range(dim):
                xe[k] = _reflect_unit(3.0 * centroid[k] - 2.0 * sim[dim, k])
            fe = _objective(xe, lo, hi, tau, y, work, coef)
            if fe < fr:
                sim[dim] = xe
                fs[dim] = fe
            else:
                sim[dim] = xr
                fs[dim] = fr
            continue
        if fr < fs[dim - 1]:
            sim[dim] = xr
            fs[dim] = fr
            continue

        shrink = False
        if fr < fs[dim]:
            # outside contraction
            for k in range(dim):
                xc[k] = _reflect_unit(1.5 * centroid[k] - 0.5 * sim[dim, k])
            fc = _objective(xc, lo, hi, tau, y, work, coef)
            if fc <= fr:
                sim[dim] = xc
                fs[dim] = fc
            else:
                shrink = True
        else:
            for k in range(dim):
                xc[k] = 0.5 * centroid[k] + 0.5 * sim[dim, k]
            fc = _objective(xc, lo, hi, tau, y, work, coef)
            if fc < fs[dim]:
                sim[dim] = xc
                fs[dim] = fc
            else:
                shrink = True
        if shrink:
            for v in range(1, dim + 1):
                for k in range(dim):
                    sim[v, k] = sim[0, k] + 0.5 * (sim[v, k] - sim[0, k])
                fs[v] = _objective(sim[v], lo, hi, tau, y, work, coef)

    order = np.argsort(fs)
    best = sim[order[0]].copy()
    return best, fs[order[0]], converged, it


@njit(cache=True, nogil=True)
def multistart(starts, lo, hi, tau, y, max_iter, ftol, xtol, step):
    """Run :func:`nelder_mead_box` from every row of ``starts`` (unit coords).

    Returns per-start arrays ``(u_best, f_best, converged, iterations)``.
    """
    k = starts.shape[0]
    dim = starts.shape[1]
    us = np.empty((k, dim))
    fs = np.empty(k)
    conv = np.zeros(k, dtype=np.bool_)
    its = np.zeros(k, dtype=np.int64)
    for s in range(k):
        u, f, c, it = nelder_mead_box(starts[s], lo, hi, tau, y, max_iter, ftol, xtol, step)
        us[s] = u
        fs[s] = f
        conv[s] = c
        its[s] = it
    return us, fs, conv, its
