"""Left and right Marchenko kernels from solved auxiliary triangles.

For a reflectionless potential the left kernel solves

    Kbar^dn(x, y) + Om_l(x + y) + int_x^inf Kbar^up(x, z) Om_l(z + y) dz = 0,

which on the diagonal y = x is a backward recursion in alpha = 2x. The
samples live on the even lattice alpha_m = 2 m h (spacing H = 2h = 2L/nx),
m = 0..nx, and the recursion starts from the anchor Om_l(2L) = -Kbar^dn(L, L).
The right kernel is the mirror image, built from the M triangle.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.linalg as spla
from numba import njit

from .errors import StabilityError
from .potential import MultisolitonParams, PotentialGrid, SolitonParams
from .volterra import KernelKind, KernelTriangle


@dataclass(frozen=True, eq=False)
class MarchenkoKernel:
    """Samples of Om_l on [0, 2L] or Om_r on [-2L, 0].

    values[k] is the kernel at alpha_k = k*spacing (left) or -k*spacing
    (right), k = 0..nx, with spacing = 2L/nx. The kernel vanishes beyond
    the sampled interval.
    """

    side: str
    spacing: float
    values: np.ndarray

    def __post_init__(self):
        if self.side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")
        v = np.array(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def direction(self) -> int:
        return 1 if self.side == "left" else -1

    @property
    def alphas(self) -> np.ndarray:
        return self.direction * self.spacing * np.arange(self.values.size)

    def at(self, k: int) -> float:
        """Sample at lattice index k (alpha = direction*k*spacing); zero past the support."""
        if k < 0:
            raise IndexError("lattice index must be non-negative")
        return float(self.values[k]) if k < self.values.size else 0.0

    def to_csv(self, path) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["alpha", "omega"])
            for a, v in zip(self.alphas, self.values):
                w.writerow([repr(float(a)), repr(float(v))])
        return path

    def to_json(self, path) -> Path:
        path = Path(path)
        doc = {
            "side": self.side,
            "spacing": self.spacing,
            "alpha": [float(a) for a in self.alphas],
            "omega": [float(v) for v in self.values],
        }
        path.write_text(json.dumps(doc, indent=1))
        return path

    @classmethod
    def from_csv(cls, path, side: str | None = None) -> "MarchenkoKernel":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        alphas, values = data[:, 0], data[:, 1]
        if alphas.size < 2:
            raise ValueError(f"{path}: need at least two samples")
        step = alphas[1] - alphas[0]
        if side is None:
            side = "left" if step > 0 else "right"
        return cls(side=side, spacing=abs(float(step)), values=values)


@njit(cache=True)
def _march(up, dn, starts, nx, H):
    """Backward recursion on the packed triangle rows p = nx..2nx.

    (1 + H/2 up_mm) Om_m = -dn_mm - H sum_l w_l up_{m,l} Om_{m+l},
    trapezoid weights w_l = 1 except 1/2 at the last node. Returns the
    samples and the stability factors 1 + H/2 up_mm.
    """
    om = np.zeros(nx + 1)
    fac = np.zeros(nx + 1)
    for m in range(nx, -1, -1):
        p = m + nx
        base = starts[p]
        s = 0.0
        top = nx - m
        for l in range(1, top + 1):
            w = 0.5 if l == top else 1.0
            s += w * up[base + l] * om[m + l]
        f = 1.0 + 0.5 * H * up[base]
        fac[m] = f
        if f <= 0.0:
            return om, fac, m
        om[m] = (-dn[base] - H * s) / f
    return om, fac, -1


def _run(up, dn, starts, nx, H, label):
    om, fac, bad = _march(up, dn, starts, nx, H)
    if bad >= 0:
        raise StabilityError(
            f"{label} recursion unstable: stability factor {fac[bad]:.3e} <= 0 at "
            f"lattice index {bad}; use a smaller h (larger nx)")
    return om, fac


def recover_left(kbar: KernelTriangle, pot: PotentialGrid | None = None) -> MarchenkoKernel:
    """Om_l on [0, 2L] from the KBAR triangle.

    The anchor is Om_l(2L) = -Kbar^dn(L, L) = -u(L)/2. Raises StabilityError
    when 1 + h Kbar^up(x, x) <= 0 for some x >= 0.
    """
    if kbar.kind is not KernelKind.KBAR:
        raise ValueError(f"recover_left needs a KBAR triangle, got {kbar.kind.value}")
    if pot is not None and pot is not kbar.grid:
        if pot.nx != kbar.nx or not np.array_equal(pot.samples, kbar.grid.samples):
            raise ValueError("potential does not match the triangle's grid")
    nx = kbar.nx
    H = 2.0 * kbar.grid.h
    om, _ = _run(kbar.up, kbar.dn, kbar.starts, nx, H, "left Marchenko")
    return MarchenkoKernel(side="left", spacing=H, values=om)


def recover_right(m: KernelTriangle, pot: PotentialGrid | None = None) -> MarchenkoKernel:
    """Om_r on [-2L, 0] from the M triangle.

    Mirror of the left recursion:
    (1 + H/2 M^up_mm) Om_r = M^dn_mm - H sum_l w_l M^up_{m,l} Om_r,
    anchored at Om_r(-2L) = M^dn(-L, -L) = -u(-L)/2.
    """
    if m.kind is not KernelKind.M:
        raise ValueError(f"recover_right needs an M triangle, got {m.kind.value}")
    if pot is not None and pot is not m.grid:
        if pot.nx != m.nx or not np.array_equal(pot.samples, m.grid.samples):
            raise ValueError("potential does not match the triangle's grid")
    nx = m.nx
    H = 2.0 * m.grid.h
    om, _ = _run(m.up, -m.dn, m.starts, nx, H, "right Marchenko")
    return MarchenkoKernel(side="right", spacing=H, values=om)


def stability_factors(tri: KernelTriangle) -> np.ndarray:
    """1 + h*up(x, x) on the half line used by the recursion (index k = |alpha|/H)."""
    nx = tri.nx
    idx = tri.starts[nx: 2 * nx + 1]
    return 1.0 + tri.grid.h * tri.up[idx]


def relative_error(computed: MarchenkoKernel, reference: Callable) -> float:
    """max |computed - reference| / max |reference| over the sample points."""
    alphas = computed.alphas
    try:
        ref = np.asarray(reference(alphas), dtype=float)
        if ref.shape != alphas.shape:
            raise ValueError
    except (TypeError, ValueError):
        ref = np.array([float(reference(a)) for a in alphas])
    scale = np.abs(ref).max()
    if scale == 0.0:
        raise ValueError("reference kernel is identically zero on the support")
    return float(np.abs(computed.values - ref).max() / scale)


def multisoliton_left_kernel(params: MultisolitonParams) -> Callable:
    """Closed form Om_l(alpha) = c e^{-alpha A} b."""
    def f(alpha):
        a = np.atleast_1d(np.asarray(alpha, dtype=float))
        out = np.array([(params.c @ params.expm(-t) @ params.b)[0, 0] for t in a])
        out = out.real
        return out if np.ndim(alpha) else float(out[0])
    return f


def multisoliton_right_kernel(params: MultisolitonParams) -> Callable:
    """Closed form Om_r(alpha) = c Q^{-1} e^{alpha A*} N^{-1} b for alpha <= 0."""
    Qi = np.linalg.inv(params.Q)
    Ni = np.linalg.inv(params.N)
    Ah = params.A.conj().T
    diag = params.is_diagonal

    def expm_h(t):
        if diag:
            return np.diag(np.exp(t * np.diag(Ah)))
        return spla.expm(t * Ah)

    def f(alpha):
        a = np.atleast_1d(np.asarray(alpha, dtype=float))
        out = np.array([(params.c @ Qi @ expm_h(t) @ Ni @ params.b)[0, 0] for t in a])
        out = out.real
        return out if np.ndim(alpha) else float(out[0])
    return f


def soliton_left_kernel(params: SolitonParams) -> Callable:
    """Om_l(alpha) = c e^{-a alpha}; exact for the one-soliton when a = p."""
    if params.a != params.p:
        raise ValueError("the single-exponential kernel is exact only when a = p")

    def f(alpha):
        return params.c * np.exp(-params.a * np.asarray(alpha, dtype=float))
    return f


def fit_amplitude(kernel: MarchenkoKernel, rate: float) -> float:
    """Least-squares amplitude A of A e^{-rate |alpha|} against the samples."""
    basis = np.exp(-rate * np.abs(kernel.alphas))
    return float(basis @ kernel.values / (basis @ basis))
