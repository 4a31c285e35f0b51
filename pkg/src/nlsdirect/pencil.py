"""Matrix-pencil identification of monomial-exponential sums.

A series s_k = S(alpha0 + direction*k*delta), k = 0..2N-1, is modelled as

    s_k = sum_j sum_{s < m_j} c_{js} k^s z_j^k.

The nodes z_j are the generalized eigenvalues of the Hankel pencil
(S1 - z S0), reduced through the SVD of S0. Coefficients follow from a
least-squares Casorati system, and the nodes map to decay exponents
s_j = -log(z_j)/delta, bound states i*s_j and norming constants.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from numpy.polynomial import Polynomial
from scipy.linalg import hankel

from .errors import RankError
from .marchenko import MarchenkoKernel

ZERO_FLOOR = 1e-14
DEFAULT_ORDER_TOL = 1e-8
DEFAULT_CLUSTER_EPS = 1e-6
DEFAULT_N = 15
DEFAULT_DELTA = 1.0


class PencilWarning(UserWarning):
    """Conditioning or rejection notice from the identification chain."""


@dataclass(frozen=True, eq=False)
class SampleSeries:
    """Equispaced samples s_k = S(alpha0 + direction*k*delta)."""

    values: np.ndarray
    delta: float
    alpha0: float = 0.0
    direction: int = 1

    def __post_init__(self):
        v = np.array(self.values)
        if not np.iscomplexobj(v):
            v = v.astype(float)
        if v.ndim != 1 or v.size < 4 or v.size % 2:
            raise ValueError(f"series length must be even and >= 4, got {v.size}")
        if not self.delta > 0:
            raise ValueError("sampling spacing delta must be positive")
        if self.direction not in (1, -1):
            raise ValueError("direction must be +1 or -1")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    @property
    def N(self) -> int:
        return self.values.size // 2

    def shifted(self, k0: int) -> "SampleSeries":
        """Series whose first sample is the current sample k0 (length kept even)."""
        v = self.values[k0:]
        v = v[: v.size - v.size % 2]
        return SampleSeries(v, self.delta, self.alpha0 + self.direction * k0 * self.delta,
                            self.direction)

    @classmethod
    def from_kernel(cls, kernel: MarchenkoKernel, stride: int | None = None,
                    N: int | None = None) -> "SampleSeries":
        """Every `stride`-th Marchenko sample from alpha = 0, 2N of them.

        Defaults give delta close to 1 and N = 15 where the support allows.
        """
        if stride is None:
            stride = max(1, int(round(DEFAULT_DELTA / kernel.spacing)))
        if stride < 1:
            raise ValueError("stride must be >= 1")
        avail = kernel.values[::stride]
        if N is None:
            N = min(DEFAULT_N, avail.size // 2)
        if 2 * N > avail.size:
            raise ValueError(
                f"need {2 * N} samples at stride {stride}, only {avail.size} available")
        return cls(avail[: 2 * N], stride * kernel.spacing, 0.0, kernel.direction)


@dataclass(frozen=True)
class ExpTerm:
    node: complex
    multiplicity: int
    coeffs: tuple


@dataclass(frozen=True, eq=False)
class ExponentialSumModel:
    """Identified nodes, multiplicities and coefficients of a series."""

    terms: tuple
    delta: float
    alpha0: float = 0.0
    direction: int = 1
    residual: float = 0.0
    warnings: tuple = ()

    @property
    def M(self) -> int:
        return sum(t.multiplicity for t in self.terms)

    @property
    def nodes(self):
        return [(t.node, t.multiplicity) for t in self.terms]

    def evaluate(self, k) -> np.ndarray:
        """Model value at sample indices k (arrays allowed)."""
        k = np.asarray(k, dtype=float)
        out = np.zeros(k.shape, dtype=complex)
        for t in self.terms:
            zk = t.node ** k
            for s, c in enumerate(t.coeffs):
                out += c * _kpow(k, s) * zk
        return out


def _kpow(k: np.ndarray, s: int) -> np.ndarray:
    # 0**0 is taken as 1
    return np.ones_like(k) if s == 0 else k ** s


def build_hankel(series: SampleSeries, N: int, M: int):
    """S0[i, j] = s_{i+j}, S1[i, j] = s_{i+j+1} for i < N, j < M."""
    if M > N:
        raise ValueError("need M <= N")
    if N < 1 or M < 1:
        raise ValueError("N and M must be positive")
    s = series.values
    if N + M > s.size:
        raise ValueError(f"N + M = {N + M} exceeds the {s.size} available samples")
    S0 = hankel(s[:N], s[N - 1: N + M - 1])
    S1 = hankel(s[1: N + 1], s[N: N + M])
    return S0, S1


def estimate_order(series: SampleSeries, N: int | None = None,
                   tol: float = DEFAULT_ORDER_TOL) -> int:
    """Number of singular values of the N x N Hankel above tol * sigma_1."""
    if N is None:
        N = series.N
    if N > series.N:
        raise ValueError("N must not exceed half the series length")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if np.abs(series.values).max() < ZERO_FLOOR:
        return 0
    S0, _ = build_hankel(series, N, N)
    sv = np.linalg.svd(S0, compute_uv=False)
    return int(np.count_nonzero(sv > tol * sv[0]))


def _sorted_nodes(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    order = np.lexsort((np.angle(z), -np.abs(z)))
    return z[order]


def solve_pencil(S0: np.ndarray, S1: np.ndarray) -> np.ndarray:
    """Generalized eigenvalues of S1 - z S0 via the SVD S0 = U Sigma V*."""
    U, sv, Vh = np.linalg.svd(S0, full_matrices=False)
    if sv.size == 0 or sv[0] == 0 or sv[-1] / sv[0] < 1e-12:
        raise RankError("S0 is numerically rank deficient; re-estimate the order M")
    red = (U.conj().T @ S1 @ Vh.conj().T) / sv[:, None]
    return _sorted_nodes(np.linalg.eigvals(red))


def cluster_multiplicities(eigs, eps: float = DEFAULT_CLUSTER_EPS):
    """Greedy grouping of eigenvalues closer than eps (relative).

    Returns (centroid, size) pairs in the order clusters are first met.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    clusters: list[list[complex]] = []
    for z in _sorted_nodes(np.atleast_1d(eigs)):
        for cl in clusters:
            c = np.mean(cl)
            if abs(z - c) <= eps * max(abs(c), abs(z)):
                cl.append(z)
                break
        else:
            clusters.append([z])
    return [(complex(np.mean(cl)), len(cl)) for cl in clusters]


def casorati(nodes, count: int) -> np.ndarray:
    """Columns k^s z_j^k, k = 0..count-1, s = 0..m_j-1."""
    k = np.arange(count, dtype=float)
    cols = []
    for z, m in nodes:
        zk = complex(z) ** k
        for s in range(int(m)):
            cols.append(_kpow(k, s) * zk)
    return np.column_stack(cols) if cols else np.zeros((count, 0), dtype=complex)


def recover_coefficients(nodes, series: SampleSeries, rows: int | None = None) -> ExponentialSumModel:
    """Least-squares coefficients for the given nodes.

    Uses sample rows k = 0..rows-1 (all samples by default). A condition
    number above 1e12 attaches a warning to the model.
    """
    nodes = [(complex(z), int(m)) for z, m in nodes]
    if not nodes:
        raise ValueError("at least one node is required")
    M = sum(m for _, m in nodes)
    rows = len(series) if rows is None else int(rows)
    if rows < M or rows > len(series):
        raise ValueError(f"need between {M} and {len(series)} rows, got {rows}")
    C = casorati(nodes, rows)
    rhs = series.values[:rows].astype(complex)
    coef, *_ = np.linalg.lstsq(C, rhs, rcond=None)
    notes = []
    cond = np.linalg.cond(C)
    if not np.isfinite(cond) or cond > 1e12:
        msg = f"Casorati matrix is ill-conditioned (cond = {cond:.2e})"
        warnings.warn(msg, PencilWarning, stacklevel=2)
        notes.append(msg)
    terms, pos = [], 0
    for z, m in nodes:
        terms.append(ExpTerm(z, m, tuple(complex(c) for c in coef[pos: pos + m])))
        pos += m
    model = ExponentialSumModel(tuple(terms), series.delta, series.alpha0, series.direction,
                                0.0, tuple(notes))
    residual = float(np.linalg.norm(model.evaluate(np.arange(len(series))) - series.values))
    return replace(model, residual=residual)


def identify(series: SampleSeries, N: int | None = None, order: int | None = None,
             tol: float = DEFAULT_ORDER_TOL, eps: float = DEFAULT_CLUSTER_EPS) -> ExponentialSumModel:
    """Order estimate, pencil, clustering and coefficients in one call.

    A series below the zero floor gives an empty model.
    """
    if N is None:
        N = series.N
    M = estimate_order(series, N, tol) if order is None else int(order)
    if M == 0:
        return ExponentialSumModel((), series.delta, series.alpha0, series.direction,
                                   float(np.linalg.norm(series.values)), ())
    if M > N:
        raise RankError(f"order {M} exceeds the Hankel size N = {N}")
    S0, S1 = build_hankel(series, N, M)
    nodes = cluster_multiplicities(solve_pencil(S0, S1), eps)
    return recover_coefficients(nodes, series)


@dataclass(frozen=True, eq=False)
class SpectralData:
    """Bound states, multiplicities and norming constants.

    exponents s_j are decay rates: the left kernel behaves like e^{-s_j alpha}.
    bound_states are i*s_j. norming_left[j][s] multiplies alpha^s/s! e^{-s_j alpha};
    norming_right[j][s] multiplies alpha^s/s! e^{s_j alpha} (alpha <= 0).
    """

    exponents: tuple
    multiplicities: tuple
    norming_left: tuple
    norming_right: tuple | None = None
    warnings: tuple = ()
    diagnostics: dict = field(default_factory=dict)

    @property
    def bound_states(self) -> tuple:
        return tuple(1j * s for s in self.exponents)

    def to_dict(self) -> dict:
        cz = lambda z: {"re": float(np.real(z)), "im": float(np.imag(z))}
        doc = {
            "exponents": [cz(s) for s in self.exponents],
            "bound_states": [cz(b) for b in self.bound_states],
            "multiplicities": [int(m) for m in self.multiplicities],
            "norming_left": [[cz(g) for g in row] for row in self.norming_left],
            "norming_right": None if self.norming_right is None else
            [[cz(g) for g in row] for row in self.norming_right],
            "warnings": list(self.warnings),
        }
        if self.diagnostics:
            doc["diagnostics"] = self.diagnostics
        return doc

    def to_json(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True))
        return path

    @classmethod
    def from_dict(cls, doc: dict) -> "SpectralData":
        zc = lambda d: complex(d["re"], d["im"])
        right = doc.get("norming_right")
        return cls(
            exponents=tuple(zc(d) for d in doc["exponents"]),
            multiplicities=tuple(int(m) for m in doc["multiplicities"]),
            norming_left=tuple(tuple(zc(g) for g in row) for row in doc["norming_left"]),
            norming_right=None if right is None else tuple(tuple(zc(g) for g in row) for row in right),
            warnings=tuple(doc.get("warnings", ())),
            diagnostics=dict(doc.get("diagnostics", {})),
        )


def _norming(term: ExpTerm, model: ExponentialSumModel) -> tuple:
    """Constants Gamma_s with sum_s c_s k^s z^k = e^{-d s_j alpha} sum_s Gamma_s alpha^s/s!.

    Here d = model.direction and k = d (alpha - alpha0)/delta.
    """
    d, a0, dl = model.direction, model.alpha0, model.delta
    rate = -np.log(complex(term.node)) / dl
    k_of_alpha = Polynomial([-d * a0 / dl, d / dl])
    poly = Polynomial([0.0])
    for s, c in enumerate(term.coeffs):
        poly = poly + c * k_of_alpha ** s
    scale = np.exp(d * rate * a0)
    coef = np.zeros(term.multiplicity, dtype=complex)
    coef[: poly.coef.size] = poly.coef[: term.multiplicity]
    return tuple(complex(math.factorial(s) * coef[s] * scale) for s in range(term.multiplicity))


def to_spectral_data(left: ExponentialSumModel, right: ExponentialSumModel | None = None,
                     match_tol: float = 1e-6) -> SpectralData:
    """Map identified models to exponents, bound states and norming constants.

    Terms with Re s_j <= 0 are dropped with a warning. A right model must
    carry the same exponents as the left one (relative match_tol).
    """
    if not left.terms:
        raise ValueError("left model is empty")
    notes = list(left.warnings)
    exps, mults, gl, kept = [], [], [], []
    for t in left.terms:
        s = -np.log(complex(t.node)) / left.delta
        if s.real <= 0:
            msg = f"rejected non-decaying term with exponent {s:.6g}"
            warnings.warn(msg, PencilWarning, stacklevel=2)
            notes.append(msg)
            continue
        exps.append(complex(s))
        mults.append(t.multiplicity)
        gl.append(_norming(t, left))
        kept.append(s)
    gr = None
    if right is not None:
        notes.extend(right.warnings)
        rmap = []
        for t in right.terms:
            rmap.append((complex(-np.log(complex(t.node)) / right.delta), t))
        gr = []
        for s, m in zip(exps, mults):
            match = [t for rs, t in rmap if abs(rs - s) <= match_tol * abs(s)]
            if len(match) != 1 or match[0].multiplicity != m:
                raise ValueError(f"right model has no unique node matching exponent {s:.6g}")
            gr.append(_norming(match[0], right))
        gr = tuple(gr)
    return SpectralData(tuple(exps), tuple(mults), tuple(gl), gr, tuple(notes))


def nodes_for_spacing(spectral: SpectralData, delta: float):
    """Nodes e^{-s_j delta} with multiplicities, for refitting on another series."""
    return [(complex(np.exp(-s * delta)), m) for s, m in zip(spectral.exponents, spectral.multiplicities)]
