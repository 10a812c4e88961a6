r"""Two-parameter Mittag-Leffler function :math:`E_{a_1,a_2}(z)`.

Three evaluation methods are combined, each accepted only when its own error
estimate is small enough:

* the Taylor series with compensated summation, accepted when it is well
  conditioned (roundoff bounded by ``eps * sum |terms|``);
* the large-``|z|`` expansion, algebraic terms ``-z**-k / Gamma(a2 - a1 k)``
  plus the exponential residues from the roots of ``s**a1 = z``, truncated at
  its smallest term;
* inversion of the Laplace transform ``s**(a1-a2) / (s**a1 - z)`` on a
  parabolic Hankel contour with the poles subtracted analytically.

Everything is vectorized over ``z``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, rgamma

from .errors import DomainError, NonFiniteError, ToleranceError
from .fractional_calculus import GridFunction, TimeGrid, riemann_liouville_integral

__all__ = [
    "MLParams",
    "ml",
    "ml_with_error",
    "ml_methods",
    "ml_frac_integral_identity",
    "ml_sector_bound_margin",
]

EPS = np.finfo(float).eps

# series is tried while |z|**(1/a1) stays below this (larger means too many terms)
_SERIES_REACH = 80.0
_SERIES_MAX_TERMS = 1200
# asymptotic expansion length and acceptance level
_ASYM_TERMS = 80
_ASYM_ACCEPT = 1e-15
# parabolic contour s = mu (1 + iu)^2, u = h k, |k| <= n
_PARABOLA = (3.0, 0.08, 60)
_PARABOLA_ALT_MU = 4.1


@dataclass(frozen=True)
class MLParams:
    """Parameters ``(a1, a2)`` of :math:`E_{a_1,a_2}`, both positive."""

    a1: float
    a2: float

    def __post_init__(self) -> None:
        for name in ("a1", "a2"):
            v = float(getattr(self, name))
            if not (v > 0 and math.isfinite(v)):
                raise DomainError(f"{name} must be a positive finite number, got {v!r}")
            object.__setattr__(self, name, v)


def _params(p: MLParams | tuple[float, float]) -> MLParams:
    return p if isinstance(p, MLParams) else MLParams(*p)


def _series(a: float, b: float, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Neumaier-compensated Taylor sum and its error estimate."""
    r = np.abs(z)
    logr = np.log(np.where(r > 0, r, 1.0))
    unit = np.where(r > 0, z / np.where(r > 0, r, 1.0), 1.0)
    total = np.zeros(z.shape, complex)
    comp = np.zeros(z.shape, complex)
    abs_sum = np.zeros(z.shape)
    phase = np.ones(z.shape, complex)
    peak_k = max(r.max(initial=0.0), 1.0) ** (1.0 / a) / a
    for k in range(_SERIES_MAX_TERMS):
        mag = np.exp(k * logr - gammaln(a * k + b)) if k else np.full(z.shape, rgamma(b))
        term = mag * phase
        # Neumaier step, applied to real and imaginary parts together
        s = total + term
        big = np.abs(total.real) >= np.abs(term.real)
        comp_re = np.where(big, (total.real - s.real) + term.real, (term.real - s.real) + total.real)
        big = np.abs(total.imag) >= np.abs(term.imag)
        comp_im = np.where(big, (total.imag - s.imag) + term.imag, (term.imag - s.imag) + total.imag)
        comp += comp_re + 1j * comp_im
        total = s
        abs_sum += mag
        phase = phase * unit
        if k > peak_k and np.all(mag <= EPS * 1e-3 * abs_sum):
            trunc = mag
            break
    else:
        trunc = mag
    value = total + comp
    err = 4 * EPS * abs_sum + trunc
    return value, err


def _principal_roots(a: float, z: np.ndarray):
    """Roots of ``s**a = z`` on the principal sheet, with residue weights."""
    r = np.abs(z) ** (1.0 / a)
    th = np.angle(z)
    jmax = int(math.ceil(a / 2)) + 1
    for j in range(-jmax, jmax + 1):
        phi = (th + 2 * np.pi * j) / a
        w = np.where(np.abs(phi) < np.pi, 1.0, np.where(np.abs(phi) == np.pi, 0.5, 0.0))
        if np.any(w > 0):
            yield r * np.exp(1j * phi), w


def _residues(a: float, b: float, z: np.ndarray) -> np.ndarray:
    out = np.zeros(z.shape, complex)
    with np.errstate(over="ignore", invalid="ignore"):
        for s0, w in _principal_roots(a, z):
            contrib = w * (1.0 / a) * s0 ** (1.0 - b) * np.exp(s0)
            out += np.where(w > 0, contrib, 0.0)
    return out


def _asymptotic(a: float, b: float, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Large-``|z|`` expansion truncated by the smallest-term rule."""
    k = np.arange(1, _ASYM_TERMS + 2)
    coef = rgamma(b - a * k)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        inv = 1.0 / z[:, None]
        terms = -coef[None, :] * inv ** k[None, :]
    mag = np.abs(terms)
    m = np.maximum(mag[:, :-1], mag[:, 1:])
    # stop before the first index where the pairwise magnitude is minimal
    stop = np.argmin(m, axis=1)
    idx = np.arange(_ASYM_TERMS)[None, :]
    alg = np.sum(np.where(idx < stop[:, None], terms[:, :-1], 0.0), axis=1)
    err = m[np.arange(z.size), stop]
    value = alg + _residues(a, b, z)
    return value, err


def _parabola_nodes(mu: float):
    _, h, n = _PARABOLA
    u = h * np.arange(-n, n + 1)
    s = mu * (1 + 1j * u) ** 2
    ds = 2j * mu * (1 + 1j * u)
    return s, ds, h


def _contour(a: float, b: float, z: np.ndarray, mu: float) -> tuple[np.ndarray, np.ndarray]:
    s, ds, h = _parabola_nodes(mu)
    S = s[None, :]
    f = S ** (a - b) / (S**a - z[:, None])
    for s0, w in _principal_roots(a, z):
        R = np.where(w > 0, w * (1.0 / a) * s0 ** (1.0 - b), 0.0)
        f = f - R[:, None] / (S - s0[:, None])
    contrib = (h / (2j * np.pi)) * np.exp(S) * f * ds[None, :]
    value = np.sum(contrib, axis=1) + _residues(a, b, z)
    err = 16 * EPS * np.sum(np.abs(contrib), axis=1) + 1e-15 * np.abs(value)
    return value, err


def _contour_safe(a: float, b: float, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Contour evaluation, moving the parabola away from nearby poles."""
    mu0 = _PARABOLA[0]
    s, _, _ = _parabola_nodes(mu0)
    near = np.zeros(z.shape, bool)
    for s0, w in _principal_roots(a, z):
        d = np.min(np.abs(s[None, :] - s0[:, None]), axis=1)
        near |= (w > 0) & (d < 1e-2 * np.maximum(np.abs(s0), 1.0))
    value = np.empty(z.shape, complex)
    err = np.empty(z.shape)
    for mask, mu in ((~near, mu0), (near, _PARABOLA_ALT_MU)):
        if np.any(mask):
            value[mask], err[mask] = _contour(a, b, z[mask], mu)
    return value, err


def _evaluate(a: float, b: float, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    value = np.zeros(z.shape, complex)
    err = np.full(z.shape, np.inf)
    todo = np.ones(z.shape, bool)

    zero = z == 0
    value[zero] = rgamma(b)
    err[zero] = 0.0
    todo &= ~zero

    reach = np.abs(z) ** (1.0 / a) <= _SERIES_REACH
    cand = todo & reach
    if np.any(cand):
        v, e = _series(a, b, z[cand])
        ok = e <= 1e-13 * np.abs(v)
        idx = np.flatnonzero(cand)[ok]
        value[idx], err[idx] = v[ok], e[ok]
        todo[idx] = False

    if np.any(todo):
        idx = np.flatnonzero(todo)
        v, e = _asymptotic(a, b, z[idx])
        with np.errstate(invalid="ignore"):
            ok = (e <= _ASYM_ACCEPT * np.abs(v)) | (e == 0)
        value[idx[ok]], err[idx[ok]] = v[ok], e[ok]
        todo[idx[ok]] = False

    if np.any(todo):
        idx = np.flatnonzero(todo)
        v, e = _contour_safe(a, b, z[idx])
        value[idx], err[idx] = v, e
    return value, err


def ml_with_error(params: MLParams | tuple[float, float], z):
    """Return ``(E(z), absolute error estimate)``; shapes follow ``z``."""
    p = _params(params)
    z_arr = np.asarray(z)
    if not np.all(np.isfinite(z_arr)):
        raise DomainError("Mittag-Leffler argument must be finite")
    flat = z_arr.astype(complex).ravel()
    value, err = _evaluate(p.a1, p.a2, flat)
    if not np.all(np.isfinite(value)):
        bad = flat[~np.isfinite(value)][0]
        raise NonFiniteError(f"E_{{{p.a1:g},{p.a2:g}}}({bad}) overflows the double range")
    value = value.reshape(z_arr.shape)
    err = err.reshape(z_arr.shape)
    if not np.iscomplexobj(z_arr):
        value = value.real
    if value.ndim == 0:
        return value[()], float(err)
    return value, err


def ml(params: MLParams | tuple[float, float], z, tol: float | None = None):
    """Evaluate :math:`E_{a_1,a_2}(z)`.

    Real input gives real output.  When ``tol`` is given, a
    :class:`ToleranceError` is raised if the relative error estimate of any
    entry exceeds it; the worst estimate is stored on the exception.
    """
    value, err = ml_with_error(params, z)
    if tol is not None:
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = np.where(err == 0, 0.0, err / np.abs(value))
        worst = float(np.max(rel))
        if not worst <= tol:
            raise ToleranceError(
                f"Mittag-Leffler accuracy {tol:g} not reached (estimate {worst:.3g})", worst
            )
    return value


def ml_methods(params: MLParams | tuple[float, float], z) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Value and error estimate of each evaluation method separately.

    Keys are ``"series"``, ``"asymptotic"`` and ``"contour"``; no acceptance
    test is applied, so entries outside a method's range may be poor.  Used to
    check that the methods agree where their ranges overlap.
    """
    p = _params(params)
    flat = np.asarray(z, dtype=complex).ravel()
    shape = np.shape(z)
    out = {}
    for name, fn in (("series", _series), ("asymptotic", _asymptotic), ("contour", _contour_safe)):
        with np.errstate(all="ignore"):
            v, e = fn(p.a1, p.a2, flat)
        out[name] = (v.reshape(shape), e.reshape(shape))
    return out


def ml_frac_integral_identity(
    tau: float, lam: complex, t: float, n_nodes: int = 4096
) -> tuple[complex, complex]:
    r"""Both sides of :math:`J^\tau(e^{\lambda s})(t) = t^\tau E_{1,\tau+1}(\lambda t)`.

    The left side uses product integration on a uniform grid of ``n_nodes``
    nodes, the right side the Mittag-Leffler evaluator.
    """
    if t <= 0:
        raise DomainError("t must be positive")
    if not 0 < tau <= 1:
        raise DomainError("tau must lie in (0, 1]")
    grid = TimeGrid.uniform(t, n_nodes - 1)
    samples = GridFunction(grid, np.exp(complex(lam) * grid.nodes))
    lhs = complex(riemann_liouville_integral(samples, tau).values[-1, 0])
    rhs = complex(t**tau * ml((1.0, tau + 1.0), complex(lam) * t))
    return lhs, rhs


def ml_sector_bound_margin(tau: float, sigma: float, samples) -> float:
    r"""``sup |E_{1,tau}(lambda t)| (1 + |lambda t|)`` over ``(t, lambda)`` samples.

    Every ``lambda`` must satisfy ``sigma <= |arg lambda| <= pi``; this is the
    sector where the quantity is known to stay bounded.
    """
    if not 0 < tau <= 1:
        raise DomainError("tau must lie in (0, 1]")
    if not np.pi / 2 < sigma < np.pi:
        raise DomainError("sigma must lie in (pi/2, pi)")
    pairs = np.asarray(list(samples), dtype=complex).reshape(-1, 2)
    t = pairs[:, 0].real
    lam = pairs[:, 1]
    if np.any(t < 0):
        raise DomainError("sample times must be non-negative")
    arg = np.abs(np.angle(lam))
    bad = (lam != 0) & (arg < sigma * (1 - 1e-14))
    if np.any(bad):
        raise DomainError(f"{int(bad.sum())} sample(s) lie outside the sector |arg| >= sigma")
    z = lam * t
    return float(np.max(np.abs(ml((1.0, tau), z)) * (1 + np.abs(z))))
