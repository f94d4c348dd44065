"""Compiled inner loops: QL eigenvalues, Householder reduction, Metropolis sweeps."""

import math

import numba
import numpy as np

_EPS = np.finfo(np.float64).eps
QL_MAX_ITER = 60


@numba.njit(cache=True, nogil=True)
def tql_eigenvalues(diag, offdiag):
    """Eigenvalues of a real symmetric tridiagonal matrix by implicit-shift QL.

    No eigenvector accumulation. Returns (sorted eigenvalues, ok flag).
    """
    n = diag.shape[0]
    d = diag.copy()
    e = np.zeros(n)
    for i in range(n - 1):
        e[i] = offdiag[i]
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= _EPS * dd:
                    break
                m += 1
            if m == l:
                break
            if it == QL_MAX_ITER:
                return np.sort(d), False
            it += 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            deflated = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    deflated = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            if deflated:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return np.sort(d), True


@numba.njit(cache=True, nogil=True)
def householder_tridiagonal(a):
    """Reduce a complex Hermitian matrix to real symmetric tridiagonal form.

    Works on a copy. The complex sub-diagonal is made real by a diagonal
    unitary similarity, i.e. only its moduli are kept.
    """
    n = a.shape[0]
    A = a.copy()
    diag = np.empty(n)
    off = np.empty(max(n - 1, 0))
    for k in range(n - 2):
        x = A[k + 1:, k].copy()
        xnorm = math.sqrt(np.sum(x.real ** 2 + x.imag ** 2))
        if xnorm == 0.0:
            off[k] = 0.0
            continue
        ax0 = abs(x[0])
        phase = x[0] / ax0 if ax0 > 0.0 else 1.0 + 0.0j
        alpha = -phase * xnorm
        v = x
        v[0] -= alpha
        vnorm = math.sqrt(np.sum(v.real ** 2 + v.imag ** 2))
        v /= vnorm
        sub = A[k + 1:, k + 1:]
        m = v.shape[0]
        w = np.zeros(m, dtype=np.complex128)
        for i in range(m):
            acc = 0.0j
            for j in range(m):
                acc += sub[i, j] * v[j]
            w[i] = acc
        c = np.vdot(v, w).real
        q = 2.0 * w - 2.0 * c * v
        for i in range(m):
            for j in range(m):
                sub[i, j] -= v[i] * np.conj(q[j]) + q[i] * np.conj(v[j])
        off[k] = abs(alpha)
    for i in range(n):
        diag[i] = A[i, i].real
    if n >= 2:
        off[n - 2] = abs(A[n - 1, n - 2])
    return diag, off


@numba.njit(cache=True, nogil=True)
def log_accept_ratio(x, i, y, n_weight, g, charge_pos, charge):
    """log of p(x with x_i -> y) / p(x) for the density

        prod_{a<b} |x_a - x_b|^2 exp(-N sum V(x_a)) prod_a |x_a - charge_pos|^charge.

    ``charge = 0`` is the plain ensemble; a positive charge tilts it by
    |det(charge_pos - X)|^charge.
    """
    xi = x[i]
    prod = 1.0
    logsum = 0.0
    for j in range(x.shape[0]):
        if j == i:
            continue
        prod *= abs((y - x[j]) / (xi - x[j]))
        if prod > 1e100 or prod < 1e-100:
            logsum += math.log(prod)
            prod = 1.0
    logsum += math.log(prod)
    dv = 0.5 * (y * y - xi * xi) + g * (y ** 4 - xi ** 4)
    out = 2.0 * logsum - n_weight * dv
    if charge != 0.0:
        out += charge * math.log(abs((y - charge_pos) / (xi - charge_pos)))
    return out


@numba.njit(cache=True, nogil=True)
def metropolis_sweeps(x, n_weight, g, charge_pos, charge, step, normals, uniforms, thin, out):
    """Single-eigenvalue random-walk Metropolis.

    ``normals``/``uniforms`` have shape (sweeps, M). Every ``thin``-th sweep
    the sorted state is written to the next row of ``out`` (if any rows are
    left). Returns the number of accepted moves.
    """
    sweeps, m = normals.shape
    accepted = 0
    row = 0
    for s in range(sweeps):
        for i in range(m):
            y = x[i] + step * normals[s, i]
            lr = log_accept_ratio(x, i, y, n_weight, g, charge_pos, charge)
            if lr >= 0.0 or uniforms[s, i] < math.exp(lr):
                x[i] = y
                accepted += 1
        if out.shape[0] > 0 and (s + 1) % thin == 0 and row < out.shape[0]:
            out[row, :] = np.sort(x)
            row += 1
    return accepted
