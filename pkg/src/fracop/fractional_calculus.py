r"""Discrete fractional calculus on (possibly non-uniform) time grids.

All operators act on :class:`GridFunction` trajectories whose values are
interpolated piecewise linearly between grid nodes.  Weakly singular kernels
:math:`(t - s)^{\beta - 1}` are integrated exactly against that interpolant
(product integration), so no accuracy is lost as :math:`s \to t`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.special import gamma as _gamma

from .errors import DomainError

__all__ = [
    "FractionalOrder",
    "TimeGrid",
    "GridFunction",
    "riemann_liouville_integral",
    "caputo_l1",
    "numerical_laplace",
    "power_weighted_integral",
]

# rows of the dense product-integration matrices built per block
_ROW_BLOCK = 512


@dataclass(frozen=True)
class FractionalOrder:
    """Order ``alpha`` of the Caputo derivative, strictly inside (0, 1)."""

    alpha: float

    def __post_init__(self) -> None:
        a = float(self.alpha)
        if not (0.0 < a < 1.0) or not math.isfinite(a):
            raise DomainError(f"fractional order must lie in (0, 1), got {self.alpha!r}")
        object.__setattr__(self, "alpha", a)

    @property
    def gamma_1_minus(self) -> float:
        return math.gamma(1.0 - self.alpha)

    @property
    def gamma_2_minus(self) -> float:
        return math.gamma(2.0 - self.alpha)

    def __float__(self) -> float:
        return self.alpha


def as_order(order: FractionalOrder | float) -> FractionalOrder:
    return order if isinstance(order, FractionalOrder) else FractionalOrder(float(order))


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing time nodes starting at ``0``."""

    nodes: np.ndarray

    def __post_init__(self) -> None:
        t = np.asarray(self.nodes, dtype=float).copy()
        if t.ndim != 1 or t.size < 2:
            raise DomainError("a time grid needs at least two nodes")
        if t[0] != 0.0:
            raise DomainError("the first grid node must be 0")
        if not np.all(np.diff(t) > 0):
            raise DomainError("grid nodes must be strictly increasing")
        t.setflags(write=False)
        object.__setattr__(self, "nodes", t)

    @classmethod
    def uniform(cls, T: float, n: int) -> TimeGrid:
        """``n`` equal steps on ``[0, T]``."""
        return cls(np.linspace(0.0, T, n + 1))

    @classmethod
    def graded(cls, T: float, n: int, r: float = 2.0) -> TimeGrid:
        """Nodes ``T (k/n)**r``, clustered at ``t = 0`` for ``r > 1``."""
        if r < 1:
            raise DomainError("grading exponent must be >= 1")
        return cls(T * (np.arange(n + 1) / n) ** r)

    @classmethod
    def geometric(cls, t_first: float, T: float, n: int) -> TimeGrid:
        """``0`` followed by ``n`` log-spaced nodes from ``t_first`` to ``T``."""
        if not 0 < t_first < T:
            raise DomainError("need 0 < t_first < T")
        return cls(np.concatenate([[0.0], np.geomspace(t_first, T, n)]))

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def T(self) -> float:
        return float(self.nodes[-1])

    def __len__(self) -> int:
        return self.nodes.size

    def refine(self) -> TimeGrid:
        """Insert the midpoint of every step."""
        t = self.nodes
        out = np.empty(2 * t.size - 1)
        out[0::2] = t
        out[1::2] = 0.5 * (t[:-1] + t[1:])
        return TimeGrid(out)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """A state-vector valued trajectory sampled on a :class:`TimeGrid`.

    ``values`` has shape ``(len(grid), N)``; one-dimensional input is read as a
    scalar trajectory (``N = 1``).
    """

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] != len(self.grid):
            raise DomainError(
                f"values must have shape ({len(self.grid)}, N), got {np.shape(self.values)}"
            )
        if not np.issubdtype(v.dtype, np.inexact):
            v = v.astype(float)
        object.__setattr__(self, "values", v)

    @classmethod
    def sample(cls, grid: TimeGrid, fn: Callable[[float], np.ndarray]) -> GridFunction:
        return cls(grid, np.array([np.atleast_1d(fn(t)) for t in grid.nodes]))

    @property
    def t(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def __add__(self, other: GridFunction) -> GridFunction:
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other: GridFunction) -> GridFunction:
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, c: complex) -> GridFunction:
        return GridFunction(self.grid, c * self.values)

    __rmul__ = __mul__

    def sup_norm(self) -> float:
        """``max_t ||v(t)||_2``."""
        return float(np.max(np.linalg.norm(self.values, axis=1)))

    def to_csv(self, path: str | Path) -> None:
        """Write ``t, v_0, ..., v_{N-1}``; complex entries become ``.re``/``.im`` pairs."""
        is_complex = np.iscomplexobj(self.values)
        header = ["t"]
        for j in range(self.dim):
            header += [f"v_{j}.re", f"v_{j}.im"] if is_complex else [f"v_{j}"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for t, row in zip(self.t, self.values):
                if is_complex:
                    cells = [x for z in row for x in (z.real, z.imag)]
                else:
                    cells = list(row)
                w.writerow([_fmt(t)] + [_fmt(x) for x in cells])

    @classmethod
    def from_csv(cls, path: str | Path) -> GridFunction:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], np.array(rows[1:], dtype=float)
        grid = TimeGrid(body[:, 0])
        data = body[:, 1:]
        if len(header) > 1 and header[1].endswith(".re"):
            data = data[:, 0::2] + 1j * data[:, 1::2]
        return cls(grid, data)


def _fmt(x: float) -> str:
    return repr(float(x))


def _pow_diff(A: np.ndarray, B: np.ndarray, p: float) -> np.ndarray:
    """``A**p - B**p`` for ``A > B >= 0`` without cancellation when ``B ~ A``."""
    with np.errstate(divide="ignore", invalid="ignore"):
        # A**p - B**p = -A**p expm1(p log(B/A)), log(B/A) = log1p(-(A-B)/A)
        ratio = np.where(A > 0, (A - B) / np.where(A > 0, A, 1.0), 0.0)
        out = -np.power(A, p) * np.expm1(p * np.log1p(-ratio))
    return np.where(B > 0, out, np.power(A, p))


def _check_finite(v: GridFunction) -> None:
    if not np.all(np.isfinite(v.values)):
        raise DomainError("trajectory contains non-finite values")


def riemann_liouville_integral(v: GridFunction, beta: float) -> GridFunction:
    r"""Product-integration approximation of :math:`J^\beta v` at every node.

    ``v`` is interpolated piecewise linearly and each sub-integral
    :math:`\int (t_i - s)^{\beta-1}\,(\text{linear})\,ds` is evaluated in
    closed form, so constants and linear functions are integrated exactly.
    """
    if not (0.0 < beta <= 1.0):
        raise DomainError(f"beta must lie in (0, 1], got {beta}")
    _check_finite(v)
    t = v.t
    n = t.size
    h = np.diff(t)
    out = np.zeros_like(v.values, dtype=np.result_type(v.values, float))
    scale = 1.0 / _gamma(beta)
    for start in range(1, n, _ROW_BLOCK):
        rows = np.arange(start, min(n, start + _ROW_BLOCK))
        ti = t[rows][:, None]
        A = ti - t[None, :-1]
        B = ti - t[None, 1:]
        active = B >= -0.0
        A = np.where(active, A, 1.0)
        B = np.where(active, np.maximum(B, 0.0), 0.0)
        i0 = _pow_diff(A, B, beta) / beta
        # integral of (t_i - s)^(beta-1) (t_{k+1} - s) / h over the interval
        w_left = (_pow_diff(A, B, beta + 1) / (beta + 1) - B * i0) / h
        w_right = i0 - w_left
        w_left = np.where(active, w_left, 0.0)
        w_right = np.where(active, w_right, 0.0)
        out[rows] = w_left @ v.values[:-1] + w_right @ v.values[1:]
    return GridFunction(v.grid, scale * out)


def caputo_l1(u: GridFunction, order: FractionalOrder | float) -> GridFunction:
    r"""L1 discretization of the Caputo derivative of order ``alpha``.

    :math:`u'` is replaced by per-interval difference quotients and the weight
    :math:`(t - s)^{-\alpha}` is integrated exactly on each interval.  The value
    at ``t = 0`` is set to ``0`` by convention.
    """
    alpha = as_order(order).alpha
    _check_finite(u)
    t = u.t
    n = t.size
    du = np.diff(u.values, axis=0) / np.diff(t)[:, None]
    out = np.zeros_like(u.values, dtype=np.result_type(u.values, float))
    p = 1.0 - alpha
    for start in range(1, n, _ROW_BLOCK):
        rows = np.arange(start, min(n, start + _ROW_BLOCK))
        ti = t[rows][:, None]
        A = ti - t[None, :-1]
        B = ti - t[None, 1:]
        active = B >= 0.0
        A = np.where(active, A, 1.0)
        B = np.where(active, np.maximum(B, 0.0), 0.0)
        W = np.where(active, _pow_diff(A, B, p), 0.0)
        out[rows] = W @ du
    return GridFunction(u.grid, out / _gamma(2.0 - alpha))


def _phi0(z: np.ndarray) -> np.ndarray:
    """``int_0^1 exp(-z x) (1 - x) dx``."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 0.5
    zs = np.where(small, 1.0, z)
    out = (zs - 1.0 + np.exp(-zs)) / zs**2
    ser = np.zeros_like(z)
    term = np.full_like(z, 0.5)
    for k in range(18):
        ser += term
        term = term * (-z) / (k + 3)
    return np.where(small, ser, out)


def _phi1(z: np.ndarray) -> np.ndarray:
    """``int_0^1 exp(-z x) x dx``."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 0.5
    zs = np.where(small, 1.0, z)
    out = (1.0 - (1.0 + zs) * np.exp(-zs)) / zs**2
    # sum_k (-z)^k (k + 1) / (k + 2)!
    ser = np.zeros_like(z)
    fact = np.ones_like(z) * 0.5  # (-z)^k / (k+2)!
    for k in range(18):
        ser += (k + 1) * fact
        fact = fact * (-z) / (k + 3)
    return np.where(small, ser, out)


def numerical_laplace(u: GridFunction, lam: complex) -> tuple[np.ndarray, float]:
    r"""Truncated Laplace transform :math:`\int_0^T e^{-\lambda t} u(t)\,dt`.

    ``u`` is interpolated piecewise linearly and integrated exactly against the
    exponential.  Returns ``(value, tail_bound)`` where
    ``tail_bound = exp(-Re(lam) T) * sup||u|| / Re(lam)`` bounds the neglected
    part of the integral if ``u`` stays below its sampled supremum after ``T``.
    """
    lam = complex(lam)
    if not lam.real > 0:
        raise DomainError("numerical Laplace transform needs Re(lambda) > 0")
    _check_finite(u)
    t = u.t
    h = np.diff(t)
    z = lam * h
    decay = np.exp(-lam * t[:-1]) * h
    w0 = decay * _phi0(z)
    w1 = decay * _phi1(z)
    value = w0 @ u.values[:-1] + w1 @ u.values[1:]
    tail = math.exp(-lam.real * t[-1]) * u.sup_norm() / lam.real
    return value, tail


def power_weighted_integral(v: GridFunction, p: float) -> GridFunction:
    r"""Cumulative :math:`\int_0^{t_i} \xi^{p}\, v(\xi)\, d\xi` for ``p > -1``.

    The weight is integrated exactly against the piecewise-linear interpolant
    of ``v``; this is how integrals of kernels behaving like :math:`\xi^{\alpha-1}`
    at the origin are evaluated (``v`` then holds :math:`\xi^{1-\alpha}K(\xi)`).
    """
    if p <= -1:
        raise DomainError("exponent must exceed -1")
    _check_finite(v)
    t = v.t
    a, b = t[:-1], t[1:]
    h = b - a
    m0 = _pow_diff(b, a, p + 1) / (p + 1)
    m1 = _pow_diff(b, a, p + 2) / (p + 2)
    w_left = (b * m0 - m1) / h
    w_right = (m1 - a * m0) / h
    pieces = w_left[:, None] * v.values[:-1] + w_right[:, None] * v.values[1:]
    out = np.zeros_like(v.values, dtype=np.result_type(v.values, float))
    out[1:] = np.cumsum(pieces, axis=0)
    return GridFunction(v.grid, out)
