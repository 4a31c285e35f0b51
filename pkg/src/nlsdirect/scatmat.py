"""Scattering-matrix coefficients by quadrature over the auxiliary kernels.

Left coefficients use the KBAR triangle (with K^up = -Kbar^dn and
K^dn = Kbar^up for real potentials), right coefficients the M triangle
(with Mbar^up = -M^dn and Mbar^dn = M^up). Each double integral splits into
an inner y-integral, computed once per triangle as a profile in z, and an
outer Fourier integral in z evaluated per lambda. All abscissas are grid
nodes, so no interpolation is involved.

    P_l(z) = int u(y) Kbar^dn(y, y + z) dy,              z in [0, 4L]
    G_l(z) = int_{-inf}^{z/2} u(y) Kbar^up(y, z - y) dy,  z in [-2L, 2L]
    P_r(z) = int u(y) M^dn(y, y - z) dy,                 z in [0, 4L]
    G_r(z) = int_{z/2}^{inf} u(y) M^up(y, z - y) dy,      z in [-2L, 2L]

The profiles vanish outside these windows.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit

from .errors import SpectralSingularityError
from .potential import PotentialGrid
from .quadrature import trapezoid_weights
from .volterra import KernelKind, KernelTriangle

DENOMINATOR_FLOOR = 1e-12


@njit(cache=True)
def _line_profile(u, field, starts):
    """P[l] = sum_p w_p u[p] field[p, l] with trapezoid weights over all rows."""
    n2 = u.size - 1
    out = np.zeros(n2 + 1)
    for p in range(n2 + 1):
        w = 0.5 if (p == 0 or p == n2) else 1.0
        base = starts[p]
        for l in range(n2 - p + 1):
            out[l] += w * u[p] * field[base + l]
    return out


@njit(cache=True)
def _anti_profile(u, field, starts):
    """G[m + nx] = trapezoid over rows k = -nx..m of u_k field(k, offset m - k)."""
    n2 = u.size - 1
    nx = n2 // 2
    out = np.zeros(n2 + 1)
    for m in range(-nx, nx + 1):
        top = m + nx
        if top == 0:
            continue
        s = 0.0
        for p in range(top + 1):
            w = 0.5 if (p == 0 or p == top) else 1.0
            s += w * u[p] * field[starts[p] + top - p]
        out[top] = s
    return out


@dataclass(frozen=True, eq=False)
class Profiles:
    """Inner integrals of one triangle, sampled at spacing H = 2h.

    line[l] at z = l*H, l = 0..2nx; anti[m + nx] at z = m*H, m = -nx..nx.
    """

    h: float
    line: np.ndarray
    anti: np.ndarray

    @property
    def z_line(self) -> np.ndarray:
        return 2.0 * self.h * np.arange(self.line.size)

    @property
    def z_anti(self) -> np.ndarray:
        nx = (self.anti.size - 1) // 2
        return 2.0 * self.h * np.arange(-nx, nx + 1)


def left_profiles(kbar: KernelTriangle) -> Profiles:
    if kbar.kind is not KernelKind.KBAR:
        raise ValueError(f"left coefficients need a KBAR triangle, got {kbar.kind.value}")
    u = np.ascontiguousarray(kbar.grid.samples)
    h = kbar.grid.h
    P = h * _line_profile(u, kbar.dn, kbar.starts)
    G = h * _anti_profile(u, kbar.up, kbar.starts)
    return Profiles(h, P, G)


def right_profiles(m: KernelTriangle) -> Profiles:
    if m.kind is not KernelKind.M:
        raise ValueError(f"right coefficients need an M triangle, got {m.kind.value}")
    # storage is in the mirrored orientation, so the same loops apply to u(-x);
    # the anti-diagonal profile comes out indexed by -z
    u = np.ascontiguousarray(m.grid.samples[::-1])
    h = m.grid.h
    P = h * _line_profile(u, m.dn, m.starts)
    G = h * _anti_profile(u, m.up, m.starts)[::-1]
    return Profiles(h, P, G)


def _fourier(values: np.ndarray, z: np.ndarray, lam: np.ndarray, sign: float) -> np.ndarray:
    """Trapezoid sum of e^{sign i lam z} values over the equispaced nodes z."""
    if values.size < 2:
        return np.zeros(lam.shape, dtype=complex)
    dz = z[1] - z[0]
    w = dz * trapezoid_weights(values.size) * values
    return np.exp(sign * 1j * np.outer(lam, z)) @ w


def _potential_ft(pot: PotentialGrid, lam: np.ndarray, sign: float) -> np.ndarray:
    """int e^{sign 2 i lam y} u(y) dy by the trapezoid rule on the grid."""
    return _fourier(np.asarray(pot.samples), pot.x, 2.0 * lam, sign)


def _left_from_profiles(pot, prof: Profiles, lam):
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    fp = _fourier(prof.line, prof.z_line, lam, +1.0)
    fm = _fourier(prof.line, prof.z_line, lam, -1.0)
    gp = _fourier(prof.anti, prof.z_anti, lam, +1.0)
    gm = _fourier(prof.anti, prof.z_anti, lam, -1.0)
    a1 = 1.0 - fm
    a2 = -_potential_ft(pot, lam, +1.0) - gp
    a3 = _potential_ft(pot, lam, -1.0) + gm
    a4 = 1.0 - fp
    return np.array([a1, a2, a3, a4])


def _right_from_profiles(pot, prof: Profiles, lam):
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    fp = _fourier(prof.line, prof.z_line, lam, +1.0)
    fm = _fourier(prof.line, prof.z_line, lam, -1.0)
    gp = _fourier(prof.anti, prof.z_anti, lam, +1.0)
    gm = _fourier(prof.anti, prof.z_anti, lam, -1.0)
    a1 = 1.0 + fp
    a2 = _potential_ft(pot, lam, +1.0) + gp
    a3 = -_potential_ft(pot, lam, -1.0) - gm
    a4 = 1.0 + fm
    return np.array([a1, a2, a3, a4])


def _shape(out: np.ndarray, lam):
    return out[:, 0] if np.ndim(lam) == 0 else out


def coefficients_left(pot: PotentialGrid, kbar: KernelTriangle, lam):
    """(a_l1, a_l2, a_l3, a_l4) at lam; an array lam gives shape (4, len(lam))."""
    return _shape(_left_from_profiles(pot, left_profiles(kbar), lam), lam)


def coefficients_right(pot: PotentialGrid, m: KernelTriangle, lam):
    """(a_r1, a_r2, a_r3, a_r4) at lam; an array lam gives shape (4, len(lam))."""
    return _shape(_right_from_profiles(pot, right_profiles(m), lam), lam)


@dataclass(frozen=True)
class ScatteringSample:
    """Coefficients and scattering entries at one real lambda.

    Discrepancies compare the left and right forms of T, L and R and are
    scaled by |T| (the reflection entries vanish for reflectionless data).
    """

    lam: float
    a_l: tuple
    a_r: tuple
    T: complex
    L: complex
    R: complex
    disc_T: float
    disc_L: float
    disc_R: float


def scattering_entries(a_l, a_r, lam: float = float("nan")) -> ScatteringSample:
    """T = 1/a_l4, L = a_l2/a_l4, R = -a_l3/a_l4 plus left/right discrepancies."""
    a_l = tuple(complex(v) for v in a_l)
    a_r = tuple(complex(v) for v in a_r)
    if abs(a_l[3]) <= DENOMINATOR_FLOOR or abs(a_r[0]) <= DENOMINATOR_FLOOR:
        raise SpectralSingularityError(
            f"vanishing denominator at lambda={lam}: |a_l4|={abs(a_l[3]):.3e}, "
            f"|a_r1|={abs(a_r[0]):.3e} (real spectral singularity nearby)")
    T = 1.0 / a_l[3]
    L = a_l[1] / a_l[3]
    R = -a_l[2] / a_l[3]
    Tr = 1.0 / a_r[0]
    Lr = -a_r[1] / a_r[0]
    Rr = a_r[2] / a_r[0]
    scale = abs(T)
    return ScatteringSample(float(lam), a_l, a_r, T, L, R,
                            abs(T - Tr) / scale, abs(L - Lr) / scale, abs(R - Rr) / scale)


def lambda_grid(lo: float = -5.0, hi: float = 5.0, count: int = 201) -> np.ndarray:
    if count < 1 or (count > 1 and not hi > lo):
        raise ValueError("lambda grid needs count >= 1 and max > min")
    return np.linspace(lo, hi, count)


def scan(pot: PotentialGrid, kbar: KernelTriangle, m: KernelTriangle, lambdas) -> list:
    """Scattering samples over a lambda grid (profiles computed once)."""
    lam = np.atleast_1d(np.asarray(lambdas, dtype=float))
    al = _left_from_profiles(pot, left_profiles(kbar), lam)
    ar = _right_from_profiles(pot, right_profiles(m), lam)
    return [scattering_entries(al[:, k], ar[:, k], lam[k]) for k in range(lam.size)]


_COLUMNS = (["lambda"]
            + [f"{p}_{s}{i}" for s in ("al", "ar") for i in range(1, 5) for p in ("re", "im")]
            + [f"{p}_{e}" for e in ("T", "L", "R") for p in ("re", "im")]
            + ["disc_T", "disc_L", "disc_R"])


def _row(s: ScatteringSample) -> list:
    vals = [s.lam]
    for z in s.a_l + s.a_r + (s.T, s.L, s.R):
        vals += [z.real, z.imag]
    vals += [s.disc_T, s.disc_L, s.disc_R]
    return vals


def write_csv(samples, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_COLUMNS)
        for s in samples:
            w.writerow([repr(float(v)) for v in _row(s)])
    return path


def write_json(samples, path) -> Path:
    path = Path(path)
    rows = [dict(zip(_COLUMNS, [float(v) for v in _row(s)])) for s in samples]
    path.write_text(json.dumps(rows, indent=1))
    return path


def summary(samples) -> dict:
    """Largest |R|, |L| and discrepancies over a scan."""
    return {
        "max_abs_R": max(abs(s.R) for s in samples),
        "max_abs_L": max(abs(s.L) for s in samples),
        "max_disc_T": max(s.disc_T for s in samples),
        "max_disc_L": max(s.disc_L for s in samples),
        "max_disc_R": max(s.disc_R for s in samples),
    }
