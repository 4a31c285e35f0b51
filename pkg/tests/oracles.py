"""Independent reference implementations used only by the tests."""
from __future__ import annotations

import mpmath as mp
import numpy as np

from nlsdirect.volterra import KernelKind, diagonal_values


def mp_multisoliton(A_diag, b, c, x, dps=50, printed=False):
    """-2 b* [e^{2xA*} + Q e^{-2xA} N]^{-1} c* for real diagonal A, in high precision.

    Q and N come from the closed form X_ij = conj(v_i) v_j / (a_i + a_j).
    With printed=True evaluates -2 c [e^{-2xA} + N e^{2xA*} Q]^{-1} b instead.
    """
    with mp.workdps(dps):
        a = [mp.mpf(v) for v in A_diag]
        bb = [mp.mpf(v) for v in b]
        cc = [mp.mpf(v) for v in c]
        n = len(a)
        Q = mp.matrix(n, n)
        N = mp.matrix(n, n)
        for i in range(n):
            for j in range(n):
                Q[i, j] = cc[i] * cc[j] / (a[i] + a[j])
                N[i, j] = bb[i] * bb[j] / (a[i] + a[j])
        x = mp.mpf(x)
        Ep = mp.diag([mp.exp(2 * x * ai) for ai in a])
        Em = mp.diag([mp.exp(-2 * x * ai) for ai in a])
        if printed:
            M = Em + N * Ep * Q
            v = mp.lu_solve(M, mp.matrix(bb))
            val = -2 * sum(cc[i] * v[i] for i in range(n))
        else:
            M = Ep + Q * Em * N
            v = mp.lu_solve(M, mp.matrix(cc))
            val = -2 * sum(bb[i] * v[i] for i in range(n))
        return float(val)


def naive_kbar_extended(pot, ext):
    """KBAR kernels on an extended node set by direct resummation.

    Rows r = -nx-ext..nx+ext, offsets j = 0..2nx+ext (node (x_r, x_r + 2jh)).
    Every right-hand side is re-summed from scratch, with the potential taken
    as zero outside [-L, L]. Returns (up, dn) arrays indexed [r + nx + ext, j].
    """
    n, h = pot.nx, pot.h
    R = 2 * (n + ext) + 1
    J = 2 * n + ext + 1
    u = np.zeros(R + J + 1)
    u[ext: ext + 2 * n + 1] = pot.samples
    up_d, dn_d = diagonal_values(pot, KernelKind.KBAR)
    up = np.zeros((R, J))
    dn = np.zeros((R, J))
    for r in range(-n - ext, n + ext + 1):
        row = r + n + ext
        if r < -n:
            up[row, 0] = up_d[0]
        elif r <= n:
            up[row, 0] = up_d[r + n]
            dn[row, 0] = dn_d[r + n]
    uk = lambda k: u[k + n + ext] if -n <= k <= n else 0.0
    for j in range(1, J):
        for r in range(n + ext, -n - ext - 1, -1):
            row = r + n + ext
            m = r + j
            ks = np.arange(max(r + 1, -n), n + 1)
            S = float(np.dot(u[ks + n + ext], dn[ks + n + ext, j])) if ks.size else 0.0
            ka = np.arange(max(r + 1, -n), min(m - 1, n) + 1)
            A = float(np.dot(u[ka + n + ext], up[ka + n + ext, m - ka])) if ka.size else 0.0
            if -n <= m <= n and m + n + ext < R:
                A += 0.5 * uk(m) * up[m + n + ext, 0]
            ur = uk(r)
            hh = 0.5 * h
            r1 = -h * S
            r2 = 0.5 * uk(m) + h * A
            det = 1.0 + (hh * ur) ** 2
            up[row, j] = (r1 - hh * ur * r2) / det
            dn[row, j] = (r2 + hh * ur * r1) / det
    return up, dn


def naive_marchenko_extended(pot, up, dn, ext):
    """Left Marchenko recursion on the extended field, alpha index m = 0..nx+ext."""
    n, h = pot.nx, pot.h
    H = 2 * h
    top = n + ext
    om = np.zeros(top + 1)
    for m in range(top, -1, -1):
        row = m + n + ext
        s = 0.0
        last = top - m
        for l in range(1, last + 1):
            w = 0.5 if l == last else 1.0
            s += w * up[row, l] * om[m + l]
        om[m] = (-dn[row, 0] - H * s) / (1.0 + 0.5 * H * up[row, 0])
    return om


def prony_roots(samples, M):
    """Roots of the Prony polynomial from the square linear-prediction system."""
    s = np.asarray(samples, dtype=float)
    H = np.array([[s[i + j] for j in range(M)] for i in range(M)])
    rhs = -np.array([s[i + M] for i in range(M)])
    p = np.linalg.solve(H, rhs)
    return np.roots(np.concatenate([[1.0], p[::-1]]))


def _trap(vals, step):
    vals = np.asarray(vals)
    if vals.size < 2:
        return 0.0 * step
    return step * (vals.sum() - 0.5 * vals[0] - 0.5 * vals[-1])


def naive_coefficients(pot, tri, lam):
    """a-coefficients by nested trapezoid sums over `query` lookups.

    Left (KBAR):  a1 = 1 - F-[P], a2 = -U+ - F+[G], a3 = U- + F-[G], a4 = 1 - F+[P]
    Right (M):    a1 = 1 + F+[P], a2 = U+ + F+[G], a3 = -U- - F-[G], a4 = 1 + F-[P]
    with F+-[f] = int e^{+-i lam z} f(z) dz and U+- = int e^{+-2i lam y} u(y) dy.
    """
    from nlsdirect.volterra import query
    n, h = pot.nx, pot.h
    H = 2 * h
    u = pot.samples
    left = tri.kind.is_left
    ys = np.arange(-n, n + 1)
    Up = _trap(np.exp(2j * lam * ys * h) * u, h)
    Um = _trap(np.exp(-2j * lam * ys * h) * u, h)
    # line profile: P(z_l), z_l = l H, l = 0..2n
    P = []
    for l in range(2 * n + 1):
        if left:
            vals = [u[i + n] * query(tri, i, i + 2 * l)[1] for i in ys]
        else:
            vals = [u[i + n] * query(tri, i, i - 2 * l)[1] for i in ys]
        P.append(_trap(vals, h))
    # anti profile: G(z_m), z_m = m H, m = -n..n
    G = []
    for m in range(-n, n + 1):
        if left:   # y from -L to z/2 = m h, partner z - y
            rows = np.arange(-n, m + 1)
            vals = [u[i + n] * query(tri, i, 2 * m - i)[0] for i in rows]
        else:      # y from z/2 to L
            rows = np.arange(m, n + 1)
            vals = [u[i + n] * query(tri, i, 2 * m - i)[0] for i in rows]
        G.append(_trap(vals, h))
    zl = H * np.arange(2 * n + 1)
    za = H * np.arange(-n, n + 1)
    Fp = lambda f, z: _trap(np.exp(1j * lam * z) * np.asarray(f), H)
    Fm = lambda f, z: _trap(np.exp(-1j * lam * z) * np.asarray(f), H)
    if left:
        return np.array([1 - Fm(P, zl), -Up - Fp(G, za), Um + Fm(G, za), 1 - Fp(P, zl)])
    return np.array([1 + Fp(P, zl), Up + Fp(G, za), -Um - Fm(G, za), 1 + Fm(P, zl)])
