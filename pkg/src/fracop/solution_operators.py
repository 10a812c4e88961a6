r"""Solution operators as contour integrals against resolvent solves.

For an operator ``A`` and order ``alpha`` every operator here has the form

.. math::  \frac{1}{2\pi i}\int_\Gamma w(\lambda, t)\,(\lambda^\alpha - A)^{-1} a\, d\lambda

with the scalar weight ``w`` depending on the kind:

==========  ==================================================
``G``       ``exp(lam t) lam**(alpha-1)``
``K``       ``exp(lam t)``
``Gprime``  ``exp(lam t) lam**alpha``
``dJtauG``  ``t**(tau-1) E_{1,tau}(lam t) lam**(alpha-1)``
``JbetaG``  ``t**beta E_{1,beta+1}(lam t) lam**(alpha-1)``
==========  ==================================================

The Mittag-Leffler weights decay only algebraically along the rays.  Beyond
the truncation radius the exponential part of ``E_{1,tau}`` is negligible and
what remains is its asymptotic series, a function analytic to the right of
the path and ``O(lam**-2)`` at infinity.  Its two ray tails therefore equal
minus its integral over the arc ``|lam| = rho_max``, which is added as a
correction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.special import rgamma

from .contour import (
    ContourPath,
    build_fixed_path,
    build_paper_path,
    pairwise_sum,
    select_epsilon,
    truncation_radius,
)
from .errors import DomainError
from .fractional_calculus import FractionalOrder, as_order
from .mittag_leffler import ml
from .operators import SectorialOperator

__all__ = [
    "QuadratureConfig",
    "OperatorWeight",
    "apply_G",
    "apply_K",
    "apply_Gprime",
    "apply_dJtauG",
    "apply_JbetaG",
    "apply_operator",
    "operator_trajectory",
    "fixed_path_for",
]

KINDS = ("G", "K", "Gprime", "dJtauG", "JbetaG")
_TWO_PI_I = 2j * math.pi
# output times handled per matrix product in operator_trajectory
_TIME_BLOCK = 1024


@dataclass(frozen=True)
class QuadratureConfig:
    """Contour quadrature settings.

    ``path`` is ``"paper"`` (arc radius ``1/t``) or ``"fixed"`` (arc radius
    from :func:`select_epsilon`).  ``gamma=None`` uses the operator's sector.
    """

    path: str = "paper"
    tol: float = 1e-13
    n_ray: int = 48
    n_arc: int = 32
    gamma: float | None = None
    tail_arc_nodes: int = 48

    def __post_init__(self) -> None:
        if self.path not in ("paper", "fixed"):
            raise DomainError(f"unknown path type {self.path!r}")
        if not 0 < self.tol < 1:
            raise DomainError("tol must lie in (0, 1)")


DEFAULT_QUAD = QuadratureConfig()


@dataclass(frozen=True)
class OperatorWeight:
    """Which member of the operator family to evaluate."""

    kind: str
    param: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise DomainError(f"unknown operator kind {self.kind!r}")
        if self.kind == "dJtauG" and not (self.param is not None and 0 < self.param <= 1):
            raise DomainError("dJtauG needs tau in (0, 1]")
        if self.kind == "JbetaG" and not (self.param is not None and 0 <= self.param <= 1):
            raise DomainError("JbetaG needs beta in [0, 1]")

    @property
    def ml_index(self) -> float | None:
        """Second Mittag-Leffler parameter for the weighted kinds."""
        if self.kind == "dJtauG":
            return float(self.param)
        if self.kind == "JbetaG":
            return float(self.param) + 1.0
        return None

    @property
    def time_power(self) -> float:
        if self.kind == "dJtauG":
            return float(self.param) - 1.0
        if self.kind == "JbetaG":
            return float(self.param)
        return 0.0


def _scalar_weight(kind: OperatorWeight, lam: np.ndarray, alpha: float) -> np.ndarray:
    if kind.kind == "K":
        return np.ones_like(lam)
    if kind.kind == "Gprime":
        return lam**alpha
    return lam ** (alpha - 1)


@lru_cache(maxsize=64)
def _unit_paper_path(gamma: float, tol: float, n_ray: int, n_arc: int) -> ContourPath:
    return build_paper_path(1.0, gamma, tol, n_ray, n_arc)


@lru_cache(maxsize=64)
def _unit_ml_values(b: float, gamma: float, tol: float, n_ray: int, n_arc: int) -> np.ndarray:
    # on the t-scaled path lam * t does not depend on t, so E_{1,b}(lam t) is cached
    path = _unit_paper_path(gamma, tol, n_ray, n_arc)
    vals = ml((1.0, b), path.nodes)
    vals.setflags(write=False)
    return vals


def _asymptotic_coefficients(b: float, modulus: float) -> np.ndarray:
    """Coefficients ``c_k`` of ``E_{1,b}(w) ~ sum_k c_k w**-k`` cut at the smallest term."""
    k = np.arange(1, 121)
    c = -rgamma(b - k)
    mag = np.abs(c) * np.exp(-k * math.log(modulus))
    nz = np.flatnonzero(mag)
    if nz.size == 0:
        return np.zeros(0)
    pair = np.maximum(mag[:-1], mag[1:])
    stop = int(np.argmin(pair))
    return c[:stop]


def _resolve(op: SectorialOperator, lam: np.ndarray, alpha: float, a: np.ndarray) -> np.ndarray:
    return op.solve_many(lam**alpha, a)


def _gamma(op: SectorialOperator, quad: QuadratureConfig) -> float:
    return float(quad.gamma) if quad.gamma is not None else op.sector.gamma


def _tail_arc(rho: float, gamma: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    x, wx = np.polynomial.legendre.leggauss(n)
    theta = gamma * x
    nodes = rho * np.exp(1j * theta)
    return nodes, 1j * nodes * gamma * wx


def fixed_path_for(op: SectorialOperator, times: np.ndarray, quad: QuadratureConfig = DEFAULT_QUAD) -> ContourPath:
    """Fixed path serving all positive ``times``."""
    times = np.asarray(times, dtype=float)
    pos = times[times > 0]
    if pos.size == 0:
        raise DomainError("need at least one positive time")
    gamma = _gamma(op, quad)
    eps = select_epsilon(float(pos.max()), op.spectrum_hint())
    rho_max = truncation_radius(float(pos.min()), gamma, quad.tol)
    return build_fixed_path(eps, gamma, rho_max, None, quad.n_arc)


def operator_trajectory(op: SectorialOperator, order: FractionalOrder | float, kind: OperatorWeight | str,
                        times: np.ndarray, a: np.ndarray, quad: QuadratureConfig = DEFAULT_QUAD,
                        path: ContourPath | None = None) -> np.ndarray:
    """Evaluate one operator of the family at many times on a single fixed path.

    One resolvent solve per path node is shared by every time.  Returns an
    array of shape ``(len(times),) + a.shape``, complex.  At ``t = 0`` only
    ``G`` and ``JbetaG`` are defined (``a`` and ``a`` resp. ``0``).
    """
    alpha = as_order(order).alpha
    kind = kind if isinstance(kind, OperatorWeight) else OperatorWeight(kind)
    times = np.asarray(times, dtype=float)
    a = np.asarray(a)
    pos = times > 0
    if path is None:
        path = fixed_path_for(op, times, quad)
    lam = path.nodes
    X = _resolve(op, lam, alpha, a)  # (n_nodes, N[, m])
    Xf = X.reshape(X.shape[0], -1)
    tp = times[pos]
    base = path.weights * _scalar_weight(kind, lam, alpha)
    b = kind.ml_index
    out_pos = np.empty((tp.size, Xf.shape[1]), dtype=complex)
    for start in range(0, tp.size, _TIME_BLOCK):
        tb = tp[start:start + _TIME_BLOCK]
        lt = tb[:, None] * lam[None, :]
        E = np.exp(lt) if b is None else ml((1.0, b), lt)
        M = E * base[None, :] * (tb ** kind.time_power)[:, None]
        out_pos[start:start + _TIME_BLOCK] = (M @ Xf) / _TWO_PI_I
    if b is not None and kind.ml_index != 1.0:
        out_pos += _tail_correction_many(op, alpha, kind, tp, a, path.rho_max, path.gamma,
                                         quad.tail_arc_nodes).reshape(out_pos.shape)
    out = np.zeros((times.size, Xf.shape[1]), dtype=complex)
    out[pos] = out_pos
    zero = ~pos
    if np.any(zero):
        if kind.kind == "G":
            out[zero] = a.reshape(-1)
        elif kind.kind == "JbetaG":
            out[zero] = a.reshape(-1) if kind.param == 0 else 0.0
        else:
            raise DomainError(f"{kind.kind} is singular at t = 0")
    return out.reshape((times.size,) + a.shape)


def _tail_correction_many(op, alpha, kind, times, a, rho, gamma, n_arc):
    """Minus the arc integral of the algebraic part, for each time (shape ``(n_t, N*m)``)."""
    b = kind.ml_index
    nodes, w = _tail_arc(rho, gamma, n_arc)
    X = _resolve(op, nodes, alpha, a).reshape(n_arc, -1)
    coeff = _asymptotic_coefficients(b, rho * float(np.min(times)))
    if coeff.size == 0:
        return np.zeros((times.size, X.shape[1]), dtype=complex)
    k = np.arange(1, coeff.size + 1)
    base = w * nodes ** (alpha - 1)
    # sum_k c_k (lam t)^-k for each (t, node)
    lt = times[:, None] * nodes[None, :]
    alg = np.zeros(lt.shape, dtype=complex)
    for kk, ck in zip(k[::-1], coeff[::-1]):
        alg = (alg + ck) / lt  # Horner in 1 / (lam t)
    M = alg * base[None, :] * (times ** kind.time_power)[:, None]
    return -(M @ X) / _TWO_PI_I


def apply_operator(op: SectorialOperator, order: FractionalOrder | float, kind: OperatorWeight | str,
                   t: float, a: np.ndarray, quad: QuadratureConfig = DEFAULT_QUAD,
                   real_output: bool = True) -> np.ndarray:
    """Evaluate one operator of the family at a single time ``t > 0``."""
    alpha = as_order(order).alpha
    kind = kind if isinstance(kind, OperatorWeight) else OperatorWeight(kind)
    if not t > 0:
        raise DomainError("t must be positive")
    a = np.asarray(a)
    if quad.path == "fixed":
        out = operator_trajectory(op, alpha, kind, np.array([t]), a, quad)[0]
    else:
        gamma = _gamma(op, quad)
        unit = _unit_paper_path(gamma, quad.tol, quad.n_ray, quad.n_arc)
        lam = unit.nodes / t
        w = unit.weights / t
        base = w * _scalar_weight(kind, lam, alpha)
        b = kind.ml_index
        if b is None:
            E = np.exp(unit.nodes)
        else:
            E = _unit_ml_values(b, gamma, quad.tol, quad.n_ray, quad.n_arc)
        coef = base * E * t**kind.time_power
        X = _resolve(op, lam, alpha, a)
        shaped = coef.reshape((-1,) + (1,) * a.ndim)
        out = pairwise_sum(shaped * X) / _TWO_PI_I
        if b is not None and b != 1.0:
            corr = _tail_correction_many(op, alpha, kind, np.array([t]), a, unit.rho_max / t,
                                         gamma, quad.tail_arc_nodes)
            out = out + corr.reshape(a.shape)
    if real_output and not np.iscomplexobj(a) and _is_real_operator(op):
        return out.real
    return out


def _is_real_operator(op: SectorialOperator) -> bool:
    mu = op.spectrum_hint()
    if mu is not None:
        return not np.iscomplexobj(mu) or bool(np.all(np.asarray(mu).imag == 0))
    return not np.iscomplexobj(op.to_dense())


def apply_G(op, order, t, a, quad: QuadratureConfig = DEFAULT_QUAD):
    """``G(t) a``: the solution at time ``t`` of the homogeneous problem."""
    return apply_operator(op, order, "G", t, a, quad)


def apply_K(op, order, t, a, quad: QuadratureConfig = DEFAULT_QUAD):
    """``K(t) a``, the Duhamel kernel, via the exponential weight."""
    return apply_operator(op, order, "K", t, a, quad)


def apply_Gprime(op, order, t, a, quad: QuadratureConfig = DEFAULT_QUAD):
    """Time derivative ``G'(t) a``."""
    return apply_operator(op, order, "Gprime", t, a, quad)


def apply_dJtauG(op, order, tau, t, a, quad: QuadratureConfig = DEFAULT_QUAD):
    """``d/dt J^tau G(t) a`` via the Mittag-Leffler weight."""
    return apply_operator(op, order, OperatorWeight("dJtauG", tau), t, a, quad)


def apply_JbetaG(op, order, beta, t, a, quad: QuadratureConfig = DEFAULT_QUAD):
    """Fractional integral ``J^beta G(t) a`` via the Mittag-Leffler weight."""
    return apply_operator(op, order, OperatorWeight("JbetaG", beta), t, a, quad)


def with_path(quad: QuadratureConfig, path: str) -> QuadratureConfig:
    return replace(quad, path=path)
