"""Auxiliary Volterra kernels by anti-diagonal collocation.

Each kind is a pair of fields on a triangle of nodes. In the left
orientation (KBAR, K) the nodes are (x_r, x_r + 2jh) with r = -nx..nx and
j = 0..nx-r, i.e. x <= y and x + y <= 2L. One field is an integral along
the line of constant offset y - x towards +infinity (the "line" field), the
other an integral along the anti-diagonal x + y = const (the "anti" field).
The right kinds (M, MBAR) are the mirror image: nodes (x_r, x_r - 2jh) with
x + y >= -2L, integrals towards -infinity. They are computed by running the
left scheme on the reflected potential u(-x) and mapping signs back.

Integrals use the composite trapezoid rule. Each node then needs one 2x2
solve with determinant 1 + (h u/2)^2. Running partial sums along lines and
anti-diagonals keep the total cost at O(nx^2).

Only even offsets (y - x = 2jh) are computed: the anti-diagonal integral
from x to (x+y)/2 ends on a grid node exactly when y - x is an even multiple
of h, so the even sublattice is closed under the recursion.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit

from .errors import StabilityError
from .potential import PotentialGrid
from .quadrature import cumulative_simpson


class KernelKind(enum.Enum):
    """Which auxiliary pair a triangle holds."""

    KBAR = "KBAR"
    K = "K"
    M = "M"
    MBAR = "MBAR"

    @property
    def is_left(self) -> bool:
        return self in (KernelKind.KBAR, KernelKind.K)


# (line sign, anti source sign, anti integral sign) in the left orientation.
#   line(x, x+d) = s_line * int_x^inf u(z) anti(z, z+d) dz
#   anti(x, y)   = s_src * u(s/2)/2 + s_int * int_x^{s/2} u(z) line(z, s-z) dz
# KBAR: line = up, anti = dn.  K: line = dn, anti = up.
_SIGNS = {
    KernelKind.KBAR: (-1.0, 1.0, 1.0),
    KernelKind.K: (1.0, -1.0, -1.0),
}


def row_starts(nx: int) -> np.ndarray:
    """Offsets of each packed row; row p holds 2*nx - p + 1 entries."""
    lengths = 2 * nx + 1 - np.arange(2 * nx + 1)
    starts = np.zeros(2 * nx + 2, dtype=np.int64)
    np.cumsum(lengths, out=starts[1:])
    return starts


@njit(cache=True)
def _collocate(u, h, line_diag, anti_diag, s_line, s_src, s_int, starts):
    """Left-oriented collocation on the packed triangle.

    Row p corresponds to x_{p-nx}; entry j of a row is the node at offset 2jh.
    """
    n2 = u.size - 1
    total = starts[n2 + 1]
    line = np.zeros(total)
    anti = np.zeros(total)
    acc = np.zeros(n2 + 1)
    for p in range(n2 + 1):
        line[starts[p]] = line_diag[p]
        anti[starts[p]] = anti_diag[p]
        acc[p] = 0.5 * u[p] * line_diag[p]
    hh = 0.5 * h
    for j in range(1, n2 + 1):
        run = 0.0
        for p in range(n2 - j, -1, -1):
            m = p + j
            up_ = u[p]
            alpha = s_line * hh * up_
            beta = s_int * hh * up_
            det = 1.0 - alpha * beta
            r1 = s_line * h * run
            r2 = s_src * 0.5 * u[m] + s_int * h * acc[m]
            lv = (r1 + alpha * r2) / det
            av = (r2 + beta * r1) / det
            k = starts[p] + j
            line[k] = lv
            anti[k] = av
            acc[m] += up_ * lv
            run += up_ * av
    return line, anti


def _energy_from_right(u: np.ndarray, h: float) -> np.ndarray:
    """E[i] = int_{x_i}^{L} u^2 by cumulative Simpson from the right end."""
    return cumulative_simpson((u * u)[::-1], h)[::-1]


def _canonical(pot: PotentialGrid, kind: KernelKind):
    """Potential and base kind in the left orientation."""
    if kind.is_left:
        return np.ascontiguousarray(pot.samples), kind
    base = KernelKind.KBAR if kind is KernelKind.M else KernelKind.K
    return np.ascontiguousarray(pot.samples[::-1]), base


def _canonical_diagonals(u: np.ndarray, h: float, base: KernelKind):
    energy = -0.5 * _energy_from_right(u, h)
    half = 0.5 * u
    if base is KernelKind.KBAR:
        return energy, half.copy()           # line = up, anti = dn
    return energy, -half                     # line = dn, anti = up


def _to_updn(kind: KernelKind, line, anti):
    """Map canonical (line, anti) fields to the kind's (up, dn) values."""
    if kind is KernelKind.KBAR:
        return line, anti
    if kind is KernelKind.K:
        return anti, line
    if kind is KernelKind.M:
        return line, -anti
    return -anti, line                      # MBAR


def diagonal_values(pot: PotentialGrid, kind: KernelKind):
    """Bisector values (up_diag, dn_diag) indexed by i + nx, i = -nx..nx.

    Energies -1/2 int |u|^2 use cumulative Simpson from the endpoint where
    the integral is empty (x = L for left kinds, x = -L for right kinds).
    """
    u, base = _canonical(pot, kind)
    line_d, anti_d = _canonical_diagonals(u, pot.h, base)
    up, dn = _to_updn(kind, line_d, anti_d)
    if not kind.is_left:
        up, dn = up[::-1], dn[::-1]
    return np.ascontiguousarray(up), np.ascontiguousarray(dn)


@dataclass(frozen=True, eq=False)
class KernelTriangle:
    """Solved (up, dn) pair of one kind on its computational triangle.

    Storage is packed by rows in the kind's orientation. For left kinds row
    p holds x_{p-nx} and entry j the node (x, x + 2jh); for right kinds row
    p holds x_{nx-p} and entry j the node (x, x - 2jh). Row p has 2nx - p + 1
    entries, so only the triangle itself is stored.

    `ext_up`, `ext_dn` are the values on the row adjacent to the
    unbounded side (x = -L for left kinds, x = L for right kinds), indexed by
    offset. They give the kernels outside [-L, L], where the line field is
    constant along each offset line and the anti field constant along each
    anti-diagonal.
    """

    kind: KernelKind
    grid: PotentialGrid
    up: np.ndarray
    dn: np.ndarray
    starts: np.ndarray

    @property
    def nx(self) -> int:
        return self.grid.nx

    @property
    def ext_up(self) -> np.ndarray:
        return self.up[: 2 * self.nx + 1]

    @property
    def ext_dn(self) -> np.ndarray:
        return self.dn[: 2 * self.nx + 1]

    def _row_index(self, i: int) -> int:
        return i + self.nx if self.kind.is_left else self.nx - i

    def row(self, i: int):
        """(up, dn) along offsets 0..len-1 for the row at grid index i in [-nx, nx]."""
        if abs(i) > self.nx:
            raise IndexError(f"row index {i} outside [-{self.nx}, {self.nx}]")
        p = self._row_index(i)
        a, b = self.starts[p], self.starts[p + 1]
        return self.up[a:b], self.dn[a:b]

    def diagonal(self):
        """(up, dn) on the bisector, indexed by i + nx."""
        idx = self.starts[:-1]
        up, dn = self.up[idx], self.dn[idx]
        if not self.kind.is_left:
            up, dn = up[::-1], dn[::-1]
        return up, dn

    def query(self, i: int, j: int):
        """Kernel pair at the grid node (x_i, y_j), y_j = j*h; see `query`."""
        return query(self, i, j)

    def max_abs(self) -> float:
        return float(max(np.abs(self.up).max(), np.abs(self.dn).max()))


def solve_auxiliary(pot: PotentialGrid, kind: KernelKind) -> KernelTriangle:
    """Solve one auxiliary Volterra pair on its triangle.

    Nodes are visited by increasing distance from the bisector and, within
    each anti-diagonal family, from the x + y = 2L edge inwards, so every
    right-hand side only involves values already computed.
    """
    kind = KernelKind(kind)
    u, base = _canonical(pot, kind)
    h = pot.h
    line_d, anti_d = _canonical_diagonals(u, h, base)
    s_line, s_src, s_int = _SIGNS[base]
    # the 2x2 determinant is 1 - s_line*s_int*(h u/2)^2 = 1 + (h u/2)^2 >= 1
    assert s_line * s_int < 0
    starts = row_starts(pot.nx)
    line, anti = _collocate(u, h, line_d, anti_d, s_line, s_src, s_int, starts)
    if not (np.all(np.isfinite(line)) and np.all(np.isfinite(anti))):
        raise StabilityError(
            f"{kind.value} kernels overflowed at h={h:.3g}; use a smaller h (larger nx)")
    up, dn = _to_updn(kind, line, anti)
    up.setflags(write=False)
    dn.setflags(write=False)
    return KernelTriangle(kind=kind, grid=pot, up=up, dn=dn, starts=starts)


def _line_is_up(kind: KernelKind) -> bool:
    return kind in (KernelKind.KBAR, KernelKind.M)


def query(tri: KernelTriangle, i: int, j: int):
    """Kernel pair (up, dn) at the grid node (x_i, y_j) with x_i = i*h, y_j = j*h.

    Values come from the triangle when the node is inside it, from the
    extension constants in the unbounded region beyond x = -L (left kinds)
    or x = L (right kinds), and are (0, 0) on the vanishing part of the
    support. The node must satisfy y >= x for left kinds (y <= x for right
    kinds) and i + j must be even.
    """
    n = tri.nx
    if (i + j) % 2:
        raise ValueError(f"node ({i}, {j}) is off the even collocation lattice")
    if not tri.kind.is_left:
        i, j = -i, -j
    if j < i:
        raise ValueError(f"node outside the domain of {tri.kind.value} (needs y on the far side of x)")
    d = (j - i) // 2
    s = i + j
    if i > n or s > 2 * n:
        return 0.0, 0.0
    if i >= -n:
        k = tri.starts[i + n] + d
        return float(tri.up[k]), float(tri.dn[k])
    # unbounded side: line field depends on the offset only, anti field on the sum only
    line_val = 0.0
    if d <= 2 * n:
        line_val = _line_value(tri, d)
    anti_val = 0.0
    if s >= -2 * n:
        anti_val = _anti_value(tri, (s + 2 * n) // 2)
    if _line_is_up(tri.kind):
        return line_val, anti_val
    return anti_val, line_val


def _line_value(tri: KernelTriangle, d: int) -> float:
    return float((tri.up if _line_is_up(tri.kind) else tri.dn)[d])


def _anti_value(tri: KernelTriangle, j0: int) -> float:
    return float((tri.dn if _line_is_up(tri.kind) else tri.up)[j0])


def dump_triangle(tri: KernelTriangle, path) -> Path:
    """Write a triangle for inspection as .npz (binary) or .json.

    Both formats store the kind, L, nx, the packed row starts and the packed
    up/dn values; see the README for the index map.
    """
    path = Path(path)
    meta = {
        "kind": tri.kind.value,
        "L": tri.grid.L,
        "nx": tri.nx,
        "orientation": "left" if tri.kind.is_left else "right",
    }
    if path.suffix.lower() == ".json":
        doc = dict(meta)
        doc["row_starts"] = tri.starts.tolist()
        doc["up"] = [float(v) for v in tri.up]
        doc["dn"] = [float(v) for v in tri.dn]
        path.write_text(json.dumps(doc))
    else:
        with open(path, "wb") as fh:
            np.savez(fh, up=tri.up, dn=tri.dn, row_starts=tri.starts,
                     meta=np.array(json.dumps(meta, sort_keys=True)))
    return path
