"""Initial potentials: one-soliton, multisoliton and tabulated data.

All potentials are real and are sampled on the uniform grid
x_i = i*h, i = -nx..nx, with h = L/nx.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Union

import numpy as np
import scipy.linalg as spla

DEFAULT_TRUNCATION_TOL = 1e-12
_EXP_LIMIT = 700.0


class TruncationWarning(UserWarning):
    """Endpoint samples are larger than the truncation tolerance."""


@dataclass(frozen=True)
class SolitonParams:
    """Parameters of u(x) = -2c e^{-2ax} / (1 + c^2/(4p^2) e^{-4px})."""

    c: float = 2.0
    a: float = 1.0
    p: float = 1.0

    def __post_init__(self):
        if self.p == 0:
            raise ValueError("soliton shape parameter p must be nonzero")
        if not self.a > 0:
            raise ValueError("soliton decay parameter a must be positive")


def eval_soliton(params: SolitonParams, x):
    """Evaluate the one-soliton profile at scalar or array `x`."""
    xa = np.asarray(x, dtype=float)
    c, a, p = float(params.c), float(params.a), float(params.p)
    if c == 0.0:
        out = np.zeros_like(xa)
        return float(out) if out.ndim == 0 else out
    k = c * c / (4.0 * p * p)
    e1 = -2.0 * a * xa
    e2 = -4.0 * p * xa
    safe = (np.abs(e1) < _EXP_LIMIT) & (e2 < _EXP_LIMIT)
    with np.errstate(over="ignore", under="ignore"):
        direct = -2.0 * c * np.exp(np.where(safe, e1, 0.0)) / (
            1.0 + k * np.exp(np.where(safe, e2, 0.0)))
        # log form: the denominator dominates, the value underflows to 0 when tiny
        logged = -2.0 * c * np.exp(e1 - np.logaddexp(0.0, math.log(k) + e2))
    out = np.where(safe, direct, logged)
    return float(out) if out.ndim == 0 else out


def _residual_ok(res: np.ndarray, rhs: np.ndarray, rtol: float = 1e-12) -> bool:
    scale = max(np.linalg.norm(rhs), np.finfo(float).tiny)
    return np.linalg.norm(res) <= rtol * scale


def solve_lyapunov(A, rhs, side: str) -> np.ndarray:
    """Solve XA + A*X = rhs (side="left") or AX + XA* = rhs (side="right").

    Requires every eigenvalue of A to have positive real part, which makes the
    Sylvester operator nonsingular.
    """
    A = np.atleast_2d(np.asarray(A))
    rhs = np.atleast_2d(np.asarray(rhs))
    if A.shape[0] != A.shape[1] or rhs.shape != A.shape:
        raise ValueError("A and rhs must be square matrices of the same size")
    if np.any(np.linalg.eigvals(A).real <= 0):
        raise ValueError("Lyapunov solve needs eigenvalues of A with positive real part")
    if side == "left":
        X = spla.solve_continuous_lyapunov(A.conj().T, rhs)
        res = X @ A + A.conj().T @ X - rhs
    elif side == "right":
        X = spla.solve_continuous_lyapunov(A, rhs)
        res = A @ X + X @ A.conj().T - rhs
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    if not np.all(np.isfinite(X)) or not _residual_ok(res, rhs):
        raise np.linalg.LinAlgError("Lyapunov solve is ill-conditioned; residual too large")
    if not np.iscomplexobj(A) and not np.iscomplexobj(rhs):
        X = X.real
    return X


@dataclass(frozen=True)
class MultisolitonParams:
    """Triplet (A, b, c) with cached Lyapunov solutions Q and N.

    `branch` selects the formula used for x < 0. "analytic" (default)
    continues the x >= 0 expression, which gives a reflectionless potential.
    "printed" uses the alternative left-half formula
    -2c [e^{-2xA} + N e^{2xA*} Q]^{-1} b.
    """

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    branch: str = "analytic"
    Q: np.ndarray = field(init=False, repr=False)
    N: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A))
        b = np.asarray(self.b).reshape(-1, 1)
        c = np.asarray(self.c).reshape(1, -1)
        n = A.shape[0]
        if A.shape != (n, n) or b.shape[0] != n or c.shape[1] != n:
            raise ValueError("A must be n x n, b an n-vector and c an n-vector")
        if self.branch not in ("analytic", "printed"):
            raise ValueError("branch must be 'analytic' or 'printed'")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        Q = solve_lyapunov(A, c.conj().T @ c, "left")
        N = solve_lyapunov(A, b @ b.conj().T, "right")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "N", N)

    @property
    def rate(self) -> float:
        """Largest real part in the spectrum of A."""
        return float(np.max(np.linalg.eigvals(self.A).real))

    @property
    def is_diagonal(self) -> bool:
        return np.count_nonzero(self.A - np.diag(np.diag(self.A))) == 0

    def expm(self, t: float) -> np.ndarray:
        """e^{tA}, exact for diagonal A, scaling-and-squaring otherwise."""
        if self.is_diagonal:
            return np.diag(np.exp(t * np.diag(self.A)))
        return spla.expm(t * self.A)


# exponent span below which the x < 0 bracket is solved without factoring out Q, N
_DIRECT_SPAN = 6.0


def _ctr(M):
    return M.conj().T


def eval_multisoliton(params: MultisolitonParams, x: float) -> float:
    """Evaluate -2 b* [e^{2xA*} + Q e^{-2xA} N]^{-1} c* at a scalar x.

    Each branch is rewritten so that only decaying exponentials appear; the
    result is algebraically the same matrix expression.
    """
    x = float(x)
    A, b, c, Q, N = params.A, params.b, params.c, params.Q, params.N
    eye = np.eye(A.shape[0])
    try:
        if x >= 0:
            E = params.expm(-x)
            Eh = _ctr(E)
            core = eye + (Eh @ Q @ E) @ (E @ N @ Eh)
            val = -2.0 * (_ctr(b) @ Eh @ np.linalg.solve(core, Eh @ _ctr(c)))
        elif params.branch == "analytic" and -2.0 * x * params.rate <= _DIRECT_SPAN:
            # near zero the growing exponentials are mild and the Q, N inverses cost more digits
            core = params.expm(2.0 * x).conj().T + Q @ params.expm(-2.0 * x) @ N
            val = -2.0 * (_ctr(b) @ np.linalg.solve(core, _ctr(c)))
        elif params.branch == "analytic":
            F = params.expm(x)
            Fh = _ctr(F)
            Qi = np.linalg.inv(Q)
            Ni = np.linalg.inv(N)
            core = eye + (F @ Qi @ Fh) @ (Fh @ Ni @ F)
            val = -2.0 * (_ctr(b) @ Ni @ F @ np.linalg.solve(core, F @ Qi @ _ctr(c)))
        else:
            G = params.expm(x)
            Gh = _ctr(G)
            core = eye + (G @ N @ Gh) @ (Gh @ Q @ G)
            val = -2.0 * (c @ G @ np.linalg.solve(core, G @ b))
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"singular bracket matrix at x={x}; invalid multisoliton parameters") from exc
    v = complex(val[0, 0])
    if abs(v.imag) > 1e-12 * max(1.0, abs(v.real)):
        raise ValueError("multisoliton parameters give a complex potential; only real potentials are supported")
    return v.real


def test1_params(c: float = 2.0, a: float = 1.0, p: float = 1.0) -> SolitonParams:
    """Default one-soliton parameters."""
    return SolitonParams(c=c, a=a, p=p)


def test2_params(branch: str = "analytic") -> MultisolitonParams:
    """Four-soliton parameters A = diag(1,2,3,4), b = (1,2,-2,-1), c = (2,1,1,2)."""
    return MultisolitonParams(
        A=np.diag([1.0, 2.0, 3.0, 4.0]),
        b=np.array([1.0, 2.0, -2.0, -1.0]),
        c=np.array([2.0, 1.0, 1.0, 2.0]),
        branch=branch,
    )


@dataclass(frozen=True)
class PotentialGrid:
    """Real potential sampled at x_i = i*h, i = -nx..nx.

    `samples[i + nx]` holds u(x_i). `truncation` is max(|u(-L)|, |u(L)|).
    """

    L: float
    nx: int
    samples: np.ndarray
    truncation_tol: float = DEFAULT_TRUNCATION_TOL

    def __post_init__(self):
        if not (isinstance(self.nx, (int, np.integer)) and self.nx >= 2):
            raise ValueError(f"nx must be an integer >= 2, got {self.nx!r}")
        if not self.L > 0:
            raise ValueError("L must be positive")
        s = np.array(self.samples, dtype=float)
        if s.shape != (2 * self.nx + 1,):
            raise ValueError(f"expected {2 * self.nx + 1} samples, got shape {s.shape}")
        if not np.all(np.isfinite(s)):
            raise ValueError("potential samples must be finite")
        if not self.truncation_tol > 0:
            raise ValueError("truncation tolerance must be positive")
        s.setflags(write=False)
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "L", float(self.L))
        object.__setattr__(self, "samples", s)

    @property
    def h(self) -> float:
        return self.L / self.nx

    @property
    def x(self) -> np.ndarray:
        return grid_nodes(self.L, self.nx)

    @property
    def truncation(self) -> float:
        return float(max(abs(self.samples[0]), abs(self.samples[-1])))

    def u(self, i: int) -> float:
        """Sample at grid index i in -nx..nx; zero outside the support."""
        if abs(i) > self.nx:
            return 0.0
        return float(self.samples[i + self.nx])


def grid_nodes(L: float, nx: int) -> np.ndarray:
    """Nodes x_i = i*L/nx with the endpoints pinned to exactly -L and L."""
    x = np.arange(-nx, nx + 1) * (L / nx)
    x[0], x[-1] = -L, L
    x[nx] = 0.0
    return x


def load_table(path) -> np.ndarray:
    """Read a tabulated potential: two-column text (x, u) or a JSON array of pairs."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        data = np.asarray(json.loads(path.read_text()), dtype=float)
    else:
        data = np.loadtxt(path, delimiter=None, ndmin=2, comments="#")
    if data.ndim != 2 or data.shape[1] != 2 or data.shape[0] < 2:
        raise ValueError(f"{path}: expected a table of (x, u) pairs")
    return data


def _resample_table(table: np.ndarray, x: np.ndarray) -> np.ndarray:
    order = np.argsort(table[:, 0], kind="stable")
    tx, tu = table[order, 0], table[order, 1]
    if tx[0] > x[0] or tx[-1] < x[-1]:
        raise ValueError(
            f"table covers [{tx[0]}, {tx[-1]}] which does not contain [{x[0]}, {x[-1]}]")
    out = np.interp(x, tx, tu)
    # copy exact node matches so tabulated grids round-trip bit for bit
    pos = np.clip(np.searchsorted(tx, x), 0, tx.size - 1)
    hit = tx[pos] == x
    out[hit] = tu[pos[hit]]
    return out


PotentialModel = Union[None, str, SolitonParams, MultisolitonParams, np.ndarray, Callable]


def tabulate(model: PotentialModel, L: float, nx: int,
             truncation_tol: float = DEFAULT_TRUNCATION_TOL) -> PotentialGrid:
    """Sample a potential model on the grid over [-L, L].

    `model` may be None or "zero", a SolitonParams, a MultisolitonParams, an
    (m, 2) table of (x, u) pairs, a path to such a table, or a callable.
    Tables are resampled by linear interpolation. A TruncationWarning is
    issued when an endpoint sample exceeds `truncation_tol`.
    """
    if not L > 0:
        raise ValueError("L must be positive")
    if not (isinstance(nx, (int, np.integer)) and nx >= 2):
        raise ValueError(f"nx must be an integer >= 2, got {nx!r}")
    x = grid_nodes(float(L), int(nx))
    if model is None or (isinstance(model, str) and model == "zero"):
        u = np.zeros_like(x)
    elif isinstance(model, SolitonParams):
        u = eval_soliton(model, x)
    elif isinstance(model, MultisolitonParams):
        u = np.array([eval_multisoliton(model, t) for t in x])
    elif isinstance(model, (str, Path)):
        u = _resample_table(load_table(model), x)
    elif isinstance(model, np.ndarray):
        u = _resample_table(np.asarray(model, dtype=float), x)
    elif callable(model):
        u = np.array([float(model(t)) for t in x])
    else:
        raise TypeError(f"unsupported potential model {type(model).__name__}")
    grid = PotentialGrid(L=L, nx=nx, samples=u, truncation_tol=truncation_tol)
    if grid.truncation > truncation_tol:
        warnings.warn(
            f"endpoint magnitude {grid.truncation:.3e} exceeds truncation tolerance "
            f"{truncation_tol:.1e}; increase L", TruncationWarning, stacklevel=2)
    return grid
