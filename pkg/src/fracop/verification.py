r"""Independent oracles and checks of the quantitative estimates.

* :func:`eigen_expansion_solution` solves a self-adjoint problem mode by mode
  with Mittag-Leffler kernels, independently of the contour machinery.
* :func:`check_estimate_slope` fits log-log slopes of operator norms such as
  ``||(-A)^beta G(t)||`` and compares them with the predicted exponents.
* The remaining ``check_*`` functions compare the two sides of identities
  that the solution operators satisfy, under grid refinement.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from .errors import DomainError, HypothesisError, UnsupportedOperatorError
from .evolution import DuhamelSolver, ForcingTerm, residual_sup, solve_linear
from .fractional_calculus import (
    GridFunction,
    TimeGrid,
    as_order,
    caputo_l1,
    numerical_laplace,
    power_weighted_integral,
)
from .mittag_leffler import ml_with_error
from .operators import DiagonalOperator, SectorialOperator, fractional_power_apply
from .solution_operators import DEFAULT_QUAD, OperatorWeight, QuadratureConfig, operator_trajectory

__all__ = [
    "SlopeFit",
    "EstimateReport",
    "fit_slope",
    "eigen_expansion_solution",
    "expected_slope",
    "probe_norms",
    "check_estimate_slope",
    "check_bound_stability",
    "check_decay",
    "check_laplace_identity",
    "check_holder_regularity",
    "holder_sweep",
    "check_duhamel_identity",
    "check_residual_order",
    "check_integral_identity",
    "check_cross_representation",
    "check_oracle_agreement",
    "bump_forcing",
    "full_support_vector",
    "default_window",
]

PROBES = ("G", "Gprime", "K", "dJtauG", "JbetaG", "decay")
R2_MIN = 0.99
SLOPE_BAND = 0.05


@dataclass
class SlopeFit:
    """Least-squares line through ``(log t, log value)``."""

    window: tuple[float, float]
    slope: float
    r2: float
    expected: float | None = None
    band: float = SLOPE_BAND
    intercept: float = 0.0
    ts: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)
    values: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)
    name: str = ""

    @property
    def decades(self) -> float:
        return math.log10(self.window[1] / self.window[0])

    @property
    def passed(self) -> bool:
        if self.expected is None or self.r2 < R2_MIN:
            return False
        return abs(self.slope - self.expected) <= self.band

    @property
    def one_sided(self) -> bool:
        """Slope at least the bound's exponent (what an upper bound allows)."""
        return self.expected is not None and self.slope >= self.expected - self.band

    @property
    def verdict(self) -> str:
        if self.r2 < R2_MIN or self.decades < 2:
            return "inconclusive"
        return "pass" if self.passed else "fail"

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "window": [float(self.window[0]), float(self.window[1])],
            "slope": float(self.slope),
            "r2": float(self.r2),
            "expected": None if self.expected is None else float(self.expected),
            "band": float(self.band),
            "one_sided_ok": bool(self.one_sided),
            "verdict": self.verdict,
        }

    def to_csv(self, path: str | Path) -> None:
        _write_rows(path, ["t", "value"], zip(self.ts, self.values))


@dataclass
class EstimateReport:
    """Outcome of one check.  Unstable results are never reported as pass or fail."""

    name: str
    value: float
    stable: bool
    passed: bool
    samples: list[dict[str, Any]] = field(default_factory=list)
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        if not self.stable:
            return "inconclusive"
        return "pass" if self.passed else "fail"

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "value": _jsonable(self.value),
            "stable": bool(self.stable),
            "verdict": self.verdict,
            "samples": [{k: _jsonable(v) for k, v in row.items()} for row in self.samples],
            "details": {k: _jsonable(v) for k, v in self.details.items()},
        }

    def to_csv(self, path: str | Path) -> None:
        if not self.samples:
            _write_rows(path, ["value"], [[self.value]])
            return
        keys = list(self.samples[0])
        _write_rows(path, keys, ([row[k] for k in keys] for row in self.samples))


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        return float(v) if math.isfinite(v) else str(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


def _write_rows(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])


def fit_slope(ts: np.ndarray, values: np.ndarray, expected: float | None = None,
              band: float = SLOPE_BAND, name: str = "") -> SlopeFit:
    """Fit ``log(values) = slope * log(ts) + c``; R² is computed on the log data."""
    ts = np.asarray(ts, dtype=float)
    values = np.asarray(values, dtype=float)
    if ts.size < 3 or np.any(ts <= 0) or np.any(values <= 0):
        raise DomainError("slope fits need at least three positive samples")
    x, y = np.log(ts), np.log(values)
    A = np.stack([x, np.ones_like(x)], axis=1)
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - (slope * x + icpt)
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(res**2)) / ss if ss > 0 else 0.0
    return SlopeFit((float(ts.min()), float(ts.max())), float(slope), r2, expected, band,
                    float(icpt), ts, values, name)


# ---------------------------------------------------------------------------
# eigen-expansion oracle


def _mode_kernels(alpha: float, mu: np.ndarray, x: np.ndarray):
    """``k1 = x^a E_{a,a+1}(mu x^a)`` and ``k2 = x^{a+1} E_{a,a+2}(mu x^a)`` per mode and lag.

    These are the first and second antiderivatives of the relaxation kernel
    ``x^{a-1} E_{a,a}(mu x^a)``.  Returns arrays ``(n_modes, len(x))`` and the
    largest error estimate.
    """
    xa = x**alpha
    z = mu[:, None] * xa[None, :]
    e1, r1 = ml_with_error((alpha, alpha + 1), z)
    e2, r2 = ml_with_error((alpha, alpha + 2), z)
    k1 = xa[None, :] * e1
    k2 = (x * xa)[None, :] * e2
    err = np.maximum(xa[None, :] * r1, (x * xa)[None, :] * r2)
    return k1, k2, err


def eigen_expansion_solution(op: SectorialOperator, order, a: np.ndarray, F: ForcingTerm | None,
                             grid: TimeGrid) -> tuple[GridFunction, np.ndarray]:
    r"""Reference solution from the eigendecomposition ``A = Phi diag(mu) Phi^T``.

    Each mode obeys :math:`u_k(t) = E_{\alpha,1}(\mu_k t^\alpha) a_k +
    \int_0^t (t-s)^{\alpha-1} E_{\alpha,\alpha}(\mu_k (t-s)^\alpha) F_k(s)\,ds`.
    The convolution treats ``F`` as piecewise linear and integrates the kernel
    exactly through its antiderivatives.  On uniform grids the kernel tables
    depend only on the lag, which keeps the cost at ``O(n)`` evaluations.

    Returns the trajectory and a per-mode error budget built from the
    Mittag-Leffler error estimates.
    """
    if not op.has_eigh:
        raise UnsupportedOperatorError("the eigen-expansion oracle needs an eigendecomposition")
    alpha = as_order(order).alpha
    mu, phi = op.eigh()
    a = np.asarray(a)
    t = grid.nodes
    n = t.size
    ah = phi.T @ a
    e0, r0 = ml_with_error((alpha, 1.0), mu[:, None] * (t**alpha)[None, :])
    coef = (e0 * ah[:, None]).T  # (n, N)
    budget = np.max(r0, axis=1) * np.abs(ah)

    F = F or ForcingTerm.zero()
    Fs = F.sample(grid, op.dim)
    if np.any(Fs):
        Fh = Fs @ phi  # (n, N) in the eigenbasis
        h = grid.steps
        uniform = np.allclose(h, h[0], rtol=1e-12, atol=0)
        conv = np.zeros((n, op.dim), dtype=np.result_type(Fh, float))
        if uniform:
            lags = h[0] * np.arange(n)
            k1, k2, err = _mode_kernels(alpha, mu, lags)
            # interval [t_j, t_j+1] seen from t_i has x_a = (i-j-1) h, x_b = (i-j) h
            dk1 = k1[:, 1:] - k1[:, :-1]  # index d = i - j - 1
            dk2 = k2[:, 1:] - k2[:, :-1]
            w_right = (dk2 - h[0] * k1[:, :-1]) / h[0]
            w_left = dk1 - w_right
            for i in range(1, n):
                d = i - 1 - np.arange(i)  # lags for j = 0..i-1
                conv[i] = np.sum(w_left[:, d].T * Fh[:i] + w_right[:, d].T * Fh[1:i + 1], axis=0)
            budget = budget + 4 * np.max(err, axis=1) * np.max(np.abs(Fh), axis=0) * n
        else:
            max_err = np.zeros(op.dim)
            for i in range(1, n):
                xa = t[i] - t[1:i + 1]
                xb = t[i] - t[:i]
                k1, k2, err = _mode_kernels(alpha, mu, np.concatenate([xa, xb]))
                k1a, k1b = k1[:, :i], k1[:, i:]
                k2a, k2b = k2[:, :i], k2[:, i:]
                hh = h[:i]
                w_right = (k2b - k2a - hh * k1a) / hh
                w_left = (k1b - k1a) - w_right
                conv[i] = np.sum(w_left.T * Fh[:i] + w_right.T * Fh[1:i + 1], axis=0)
                max_err = np.maximum(max_err, np.max(err, axis=1))
            budget = budget + 4 * max_err * np.max(np.abs(Fh), axis=0) * n
        coef = coef + conv
    u = coef @ phi.T
    if np.isrealobj(a) and np.isrealobj(Fs) and np.isrealobj(mu):
        u = np.real(u)
    return GridFunction(grid, u), budget


# ---------------------------------------------------------------------------
# slope probes


def full_support_vector(op: SectorialOperator) -> np.ndarray:
    """``sum_k phi_k / k``, normalized: every eigenmode present with slow decay."""
    _, phi = op.eigh()
    v = phi @ (1.0 / np.arange(1, op.dim + 1))
    return v / np.linalg.norm(v)


def expected_slope(probe: str, alpha: float, beta: float = 0.0, tau: float | None = None) -> float:
    """Exponent of ``t`` in the bound that a probe is compared with."""
    if probe == "G":
        return -alpha * beta
    if probe == "Gprime":
        return -alpha * beta - 1.0
    if probe == "K":
        return alpha * (1.0 - beta) - 1.0
    if probe == "dJtauG":
        if tau is None:
            raise DomainError("dJtauG needs tau")
        return tau - alpha * beta - 1.0
    if probe == "JbetaG":
        return beta
    if probe == "decay":
        return -alpha
    raise DomainError(f"unknown probe {probe!r}")


def _probe_weight(probe: str, beta: float, tau: float | None) -> tuple[OperatorWeight, float]:
    """Operator kind and the power of ``-A`` applied to it."""
    if probe in ("G", "Gprime", "K", "decay"):
        return OperatorWeight("G" if probe == "decay" else probe), (0.0 if probe == "decay" else beta)
    if probe == "dJtauG":
        return OperatorWeight("dJtauG", tau), beta
    if probe == "JbetaG":
        return OperatorWeight("JbetaG", beta), 0.0
    raise DomainError(f"unknown probe {probe!r}")


def default_window(op: SectorialOperator, alpha: float, slowest: bool = False) -> tuple[float, float]:
    """Fit window from the mode time scales ``tau_k = |mu_k|**(-1/alpha)``.

    By default ``[10 tau_N, tau_1 / 10]``: the fastest mode has relaxed and
    the slowest has not, so some mode has ``|mu| t^alpha ~ 1`` and saturates
    the bound.  With ``slowest=True`` the norm is carried by the slowest mode
    (probes whose scalar profile peaks at ``mu t^alpha = 0``) and the window is
    the three decades below ``|mu_1| t^alpha = 0.01``.
    """
    mu = op.spectrum_hint()
    if mu is None:
        raise UnsupportedOperatorError("default window needs the spectrum")
    m = np.abs(mu)
    if slowest:
        hi = (0.01 / float(m.min())) ** (1 / alpha)
        return 1e-3 * hi, hi
    return 10 * float(m.max()) ** (-1 / alpha), float(m.min()) ** (-1 / alpha) / 10


def _carried_by_slowest(probe: str, power: float) -> bool:
    return power == 0 and probe in ("G", "K", "dJtauG", "JbetaG")


def _apply_power(op: SectorialOperator, beta: float, X: np.ndarray) -> np.ndarray:
    if beta == 0:
        return X
    if op.has_eigh:
        return fractional_power_apply(op, beta, X)
    if beta == 1:
        return -op.apply(X)
    raise UnsupportedOperatorError("fractional powers need an eigendecomposition")


def probe_norms(probe: str, op: SectorialOperator, order, ts: np.ndarray, beta: float = 0.0,
                tau: float | None = None, a: np.ndarray | None = None,
                quad: QuadratureConfig = DEFAULT_QUAD) -> np.ndarray:
    """``||(-A)^beta X(t) a||`` per time, or the operator norm when ``a`` is None.

    For self-adjoint operators the operator norm of a function of ``A`` is the
    largest modulus over the spectrum, so the contour integral is evaluated on
    the diagonalized operator; otherwise the full matrix ``X(t)`` is formed and
    its spectral norm taken.
    """
    alpha = as_order(order).alpha
    ts = np.asarray(ts, dtype=float)
    kind, power = _probe_weight(probe, beta, tau)
    if a is None:
        if op.is_self_adjoint and op.has_eigh:
            mu, _ = op.eigh()
            diag = DiagonalOperator(mu, op.sector.gamma)
            vals = operator_trajectory(diag, alpha, kind, ts, np.ones(op.dim), quad).real
            return np.max(np.abs(mu)[None, :] ** power * np.abs(vals), axis=1)
        X = operator_trajectory(op, alpha, kind, ts, np.eye(op.dim, dtype=complex), quad)
        out = np.empty(ts.size)
        for i, Xi in enumerate(X):
            out[i] = np.linalg.norm(_apply_power(op, power, Xi), 2)
        return out
    Y = operator_trajectory(op, alpha, kind, ts, np.asarray(a), quad)
    Z = _apply_power(op, power, Y.T).T
    return np.linalg.norm(Z, axis=1)


def check_estimate_slope(probe: str, op: SectorialOperator, order, beta: float = 0.0,
                         tau: float | None = None, window: tuple[float, float] | None = None,
                         n_t: int = 25, a: np.ndarray | None = None,
                         quad: QuadratureConfig = DEFAULT_QUAD) -> SlopeFit:
    """Fit the small-time slope of a probe and compare it with the bound's exponent.

    ``a=None`` uses the worst case over unit vectors (operator norm), which
    saturates every bound; a given ``a`` probes that vector only.
    """
    alpha = as_order(order).alpha
    if probe not in PROBES:
        raise DomainError(f"unknown probe {probe!r}")
    if probe not in ("JbetaG", "decay") and not (beta in (0, 1) or op.has_eigh):
        raise UnsupportedOperatorError("fractional beta needs a self-adjoint operator")
    if window is None:
        window = (10.0, 1e3) if probe == "decay" else default_window(
            op, alpha, _carried_by_slowest(probe, _probe_weight(probe, beta, tau)[1]))
    lo, hi = window
    if not 0 < lo < hi:
        raise DomainError("window must satisfy 0 < t_min < t_max")
    ts = np.geomspace(lo, hi, n_t)
    vals = probe_norms(probe, op, alpha, ts, beta, tau, a, quad)
    name = f"{probe}(beta={beta:g}" + (f", tau={tau:g})" if tau is not None else ")")
    return fit_slope(ts, vals, expected_slope(probe, alpha, beta, tau), name=name)


def check_bound_stability(probe: str, op: SectorialOperator, order, beta: float = 0.0,
                          tau: float | None = None, t_range: tuple[float, float] | None = None,
                          per_decade: int = 6, n_t: int | None = None, a: np.ndarray | None = None,
                          rel: float = 0.1,
                          quad: QuadratureConfig = DEFAULT_QUAD) -> EstimateReport:
    """Sup of ``t^{-p} ||probe(t)||`` over a range and over the range extended one decade down.

    ``p`` is the bound's exponent.  A finite sup that moves by at most ``rel``
    when the range is extended is the numerical form of a bound with a
    constant; growth signals the bound is violated.

    The default range is ``[lo, 1]`` with ``lo`` at most ``1e-4`` and at most
    the bottom of the slowest mode's window, so every mode passes through the
    peak of its scalar profile inside the range.  Ending earlier mistakes the
    slow ``t^alpha`` approach to that peak for growth.  ``n_t`` overrides
    the ``per_decade`` sampling density.
    """
    alpha = as_order(order).alpha
    p = expected_slope(probe, alpha, beta, tau)
    if t_range is None:
        lo = 1e-4
        if op.spectrum_hint() is not None:
            lo = min(lo, default_window(op, alpha, slowest=True)[0])
        t_range = (lo, 1.0)
    lo, hi = t_range
    if n_t is None:
        n_t = max(8, int(round(per_decade * math.log10(10 * hi / lo))) + 1)
    ts = np.geomspace(lo / 10, hi, n_t)
    vals = probe_norms(probe, op, alpha, ts, beta, tau, a, quad)
    norm = 1.0 if a is None else float(np.linalg.norm(a))
    q = vals / ts**p / norm
    base = float(np.max(q[ts >= lo * (1 - 1e-12)]))
    ext = float(np.max(q))
    stable = bool(np.isfinite(ext) and ext <= base * (1 + rel))
    samples = [{"t": float(t), "normalized": float(v)} for t, v in zip(ts, q)]
    return EstimateReport(f"bound-{probe}(beta={beta:g})", base, stable, stable, samples,
                          {"sup_range": base, "sup_extended": ext, "exponent": p,
                           "t_range": [float(lo), float(hi)]})


def check_decay(op: SectorialOperator, order, a: np.ndarray | None = None,
                window: tuple[float, float] = (10.0, 1e3), n_t: int = 30,
                quad: QuadratureConfig = DEFAULT_QUAD) -> SlopeFit:
    """Large-time slope of ``||G(t) a||``; expected ``-alpha``."""
    if a is None:
        a = full_support_vector(op) if op.has_eigh else np.ones(op.dim) / math.sqrt(op.dim)
    return check_estimate_slope("decay", op, order, window=window, n_t=n_t, a=a, quad=quad)


# ---------------------------------------------------------------------------
# identities


def check_laplace_identity(op: SectorialOperator, order, a: np.ndarray, lambdas: Sequence[complex],
                           T_big: float = 60.0, n: int = 8000, t_first: float = 1e-14,
                           target: float = 1e-5, quad: QuadratureConfig = DEFAULT_QUAD) -> EstimateReport:
    r"""Compare the numerical Laplace transform of ``G(.)a`` with ``lam^{a-1}(lam^a - A)^{-1} a``.

    ``G`` is sampled on a geometric grid from ``t_first`` to ``T_big``.  The
    neglected tail must stay below ``0.1 * target`` relative to the exact
    value, otherwise the verdict is inconclusive and the ``T_big`` that would
    suffice is reported.
    """
    alpha = as_order(order).alpha
    a = np.asarray(a)
    grid = TimeGrid.geometric(t_first, T_big, n)
    u = GridFunction(grid, operator_trajectory(op, alpha, "G", grid.nodes, a, quad).real
                     if np.isrealobj(a) else operator_trajectory(op, alpha, "G", grid.nodes, a, quad))
    samples = []
    worst = 0.0
    stable = True
    needed = T_big
    for lam in lambdas:
        lam = complex(lam)
        value, tail = numerical_laplace(u, lam)
        ref = lam ** (alpha - 1) * op.resolvent_solve(lam**alpha, a)
        scale = float(np.linalg.norm(ref))
        dev = float(np.linalg.norm(value - ref)) / scale
        worst = max(worst, dev)
        tail_rel = tail / scale
        if tail_rel > 0.1 * target:
            stable = False
            needed = max(needed, math.log(u.sup_norm() / (lam.real * 0.1 * target * scale)) / lam.real)
        samples.append({"re_lambda": lam.real, "im_lambda": lam.imag, "rel_dev": dev, "tail_rel": tail_rel})
    details = {"T_big": T_big, "nodes": n, "target": target}
    if not stable:
        details["T_big_required"] = needed
    return EstimateReport("laplace-identity", worst, stable, worst <= target, samples, details)


def bump_forcing(T: float, b: np.ndarray) -> tuple[Callable[[float], np.ndarray], Callable[[float], np.ndarray]]:
    """``F(t) = t^2 (T - t)^2 b`` and its derivative; ``F`` vanishes at both ends."""
    b = np.asarray(b)

    def F(t: float) -> np.ndarray:
        return t**2 * (T - t) ** 2 * b

    def dF(t: float) -> np.ndarray:
        return (2 * t * (T - t) ** 2 - 2 * t**2 * (T - t)) * b

    return F, dF


def check_duhamel_identity(op: SectorialOperator, order, F: Callable[[float], np.ndarray],
                           dF: Callable[[float], np.ndarray], grid: TimeGrid, refinements: int = 2,
                           quad: QuadratureConfig = DEFAULT_QUAD) -> EstimateReport:
    r"""Caputo derivative of ``int K(t-s) F(s) ds`` against ``int G(t-s) F'(s) ds``.

    The left side uses the L1 scheme on the convolution computed through the
    contour; the right side convolves with ``G`` directly.  Needs ``F(0) = 0``.
    The sup difference must shrink under each refinement.
    """
    if np.any(np.asarray(F(0.0)) != 0):
        raise HypothesisError("the identity needs F(0) = 0")
    alpha = as_order(order).alpha
    errs = []
    g = grid
    for level in range(refinements + 1):
        solver = DuhamelSolver(op, alpha, g, quad)
        Fs = np.array([np.broadcast_to(F(t), (op.dim,)) for t in g.nodes])
        dFs = np.array([np.broadcast_to(dF(t), (op.dim,)) for t in g.nodes])
        W = solver.convolve(Fs, "K")
        lhs = caputo_l1(GridFunction(g, W.real), alpha).values
        rhs = solver.convolve(dFs, "G").real
        errs.append(float(np.max(np.linalg.norm(lhs - rhs, axis=1))))
        if level < refinements:
            g = g.refine()
    decreasing = all(errs[i + 1] < errs[i] for i in range(len(errs) - 1)) or errs[-1] < 1e-12
    samples = [{"level": i, "sup_error": e} for i, e in enumerate(errs)]
    return EstimateReport("duhamel-identity", errs[-1], True, decreasing, samples)


def check_residual_order(op: SectorialOperator, order, a: np.ndarray, F: ForcingTerm | None,
                         T: float = 1.0, n0: int = 128, refinements: int = 2,
                         grading: float | None = None, t_skip: float = 0.0,
                         quad: QuadratureConfig = DEFAULT_QUAD) -> EstimateReport:
    """Residual ``L1(u - a) - A u - F`` of ``solve_linear`` under grid halvings.

    Grids are graded with exponent ``(2 - alpha) / alpha`` by default (the
    standard choice for the L1 scheme against the weak singularity at
    ``t = 0``).  Nodes before ``t_skip`` are left out of the sup.  Passes when
    every empirical order is at least ``1 - alpha``.
    """
    alpha = as_order(order).alpha
    r = (2 - alpha) / alpha if grading is None else grading
    a = np.asarray(a)
    F = F or ForcingTerm.zero()
    res = []
    for level in range(refinements + 1):
        g = TimeGrid.graded(T, n0 * 2**level, r)
        rep = solve_linear(op, alpha, a, F, g, quad)
        Fs = F.sample(g, op.dim)
        skip = max(1, int(np.searchsorted(g.nodes, t_skip)))
        res.append(residual_sup(op, alpha, rep.trajectory, a, Fs, skip=skip))
    orders = [math.log2(res[i] / res[i + 1]) for i in range(len(res) - 1)]
    passed = all(o >= 1 - alpha for o in orders)
    samples = [{"n": n0 * 2**i, "residual": x} for i, x in enumerate(res)]
    return EstimateReport("residual-order", min(orders), True, passed, samples,
                          {"orders": orders, "required": 1 - alpha, "grading": r})


def check_integral_identity(op: SectorialOperator, order, a: np.ndarray, T: float = 1.0,
                            n_nodes: int = 4096, levels: int = 3, grading: float | None = None,
                            target: float | None = None,
                            quad: QuadratureConfig = DEFAULT_QUAD) -> EstimateReport:
    r"""Discrepancy of :math:`A\int_0^t K(\xi)a\,d\xi = G(t)a - a` on refined grids.

    ``K`` is singular like :math:`\xi^{\alpha-1}` at the origin, so the
    integral weights :math:`\xi^{\alpha-1}` exactly against the piecewise
    linear interpolant of :math:`\xi^{1-\alpha}K(\xi)a` (whose value at 0 is
    :math:`a/\Gamma(\alpha)`).  Grids are graded with exponent ``3/alpha`` by
    default so that stiff modes are resolved.  The sup discrepancy is taken
    over the nodes; it is reported for ``n_nodes / 2**j``, ``j < levels``.
    """
    alpha = as_order(order).alpha
    r = 3.0 / alpha if grading is None else grading
    a = np.asarray(a)
    errs = []
    sizes = [n_nodes // 2 ** (levels - 1 - j) for j in range(levels)]
    for n in sizes:
        g = TimeGrid.graded(T, n - 1, r)
        t = g.nodes
        K = operator_trajectory(op, alpha, "K", t[1:], a, quad)
        Gt = operator_trajectory(op, alpha, "G", t[1:], a, quad)
        if np.isrealobj(a):
            K, Gt = K.real, Gt.real
        v = np.empty((t.size, op.dim), dtype=K.dtype)
        v[0] = a / math.gamma(alpha)
        v[1:] = t[1:, None] ** (1 - alpha) * K
        integral = power_weighted_integral(GridFunction(g, v), alpha - 1).values
        lhs = op.apply(integral.T).T
        rhs = np.empty_like(v)
        rhs[0] = 0.0
        rhs[1:] = Gt - a
        errs.append(float(np.max(np.linalg.norm(lhs - rhs, axis=1))) / float(np.linalg.norm(a)))
    decreasing = all(errs[i + 1] < errs[i] for i in range(len(errs) - 1))
    passed = decreasing and (target is None or errs[-1] <= target)
    samples = [{"nodes": n, "discrepancy": e} for n, e in zip(sizes, errs)]
    return EstimateReport("integral-identity", errs[-1], True, passed, samples,
                          {"grading": r, "target": target})


def check_cross_representation(op: SectorialOperator, order, a: np.ndarray,
                               ts: np.ndarray | None = None, target: float = 1e-7,
                               quad: QuadratureConfig = DEFAULT_QUAD) -> EstimateReport:
    """``K(t) a`` from the exponential weight against the Mittag-Leffler weight with ``tau = alpha``."""
    alpha = as_order(order).alpha
    ts = np.geomspace(1e-3, 1e3, 20) if ts is None else np.asarray(ts, dtype=float)
    a = np.asarray(a)
    k_exp = operator_trajectory(op, alpha, "K", ts, a, quad)
    k_ml = operator_trajectory(op, alpha, OperatorWeight("dJtauG", alpha), ts, a, quad)
    rel = np.linalg.norm(k_exp - k_ml, axis=1) / np.linalg.norm(k_ml, axis=1)
    worst = float(np.max(rel))
    samples = [{"t": float(t), "rel_diff": float(r)} for t, r in zip(ts, rel)]
    return EstimateReport("K-cross-representation", worst, True, worst <= target, samples,
                          {"target": target})


def check_oracle_agreement(op: SectorialOperator, order, a: np.ndarray, F: ForcingTerm | None,
                           grid: TimeGrid, target: float = 1e-6,
                           quad: QuadratureConfig = DEFAULT_QUAD) -> EstimateReport:
    """Relative sup difference between ``solve_linear`` and the eigen-expansion oracle."""
    rep = solve_linear(op, order, a, F, grid, quad)
    ref, budget = eigen_expansion_solution(op, order, a, F, grid)
    diff = np.linalg.norm(rep.trajectory.values - ref.values, axis=1)
    rel = float(np.max(diff)) / float(np.max(np.linalg.norm(ref.values, axis=1)))
    samples = [{"t": float(t), "abs_diff": float(d)} for t, d in zip(grid.nodes, diff)]
    return EstimateReport("oracle-agreement", rel, True, rel <= target, samples,
                          {"target": target, "oracle_budget": float(np.max(budget))})


# ---------------------------------------------------------------------------
# Hölder probe


def _holder_quotients(grid: TimeGrid, V: np.ndarray, sigma: float, min_lag: float,
                      max_lag: float = math.inf) -> float:
    """``max ||V(s) - V(t)|| / |s - t|^sigma`` over node pairs with lag in ``[min_lag, max_lag]``."""
    t = grid.nodes
    best = 0.0
    for i in range(t.size - 1):
        lag = t[i + 1:] - t[i]
        sel = (lag >= min_lag * (1 - 1e-12)) & (lag <= max_lag * (1 + 1e-12))
        if not np.any(sel):
            continue
        diff = np.linalg.norm(V[i + 1:][sel] - V[i], axis=1)
        best = max(best, float(np.max(diff / lag[sel] ** sigma)))
    return best


def check_holder_regularity(op: SectorialOperator, order, sigma: float,
                            F: Callable[[float], np.ndarray], grid: TimeGrid, refinements: int = 2,
                            rel: float = 0.1, quad: QuadratureConfig = DEFAULT_QUAD,
                            _cache: dict | None = None) -> EstimateReport:
    """Hölder quotient of ``A u`` for ``u = solve_linear(0, F)`` under refinement.

    The quotient is the max over node pairs ``|s - t| >= 4h`` (``h`` the
    largest step); it is stable when it moves by at most ``rel`` per
    refinement.  A local variant restricted to lags ``<= 64 h`` is reported
    alongside, since the global maximum is often attained by distant pairs.
    """
    if not 0 < sigma < 1:
        raise DomainError("sigma must lie in (0, 1)")
    F0 = np.asarray(F(0.0))
    if np.any(np.abs(F0) > 0):
        raise HypothesisError("the Hölder estimate assumes F(0) = 0")
    alpha = as_order(order).alpha
    cache = {} if _cache is None else _cache
    H, H_loc, hs = [], [], []
    g = grid
    for level in range(refinements + 1):
        key = len(g)
        if key not in cache:
            rep = solve_linear(op, alpha, np.zeros(op.dim), ForcingTerm.from_callable(F), g, quad)
            cache[key] = (g, op.apply(rep.trajectory.values.T).T)
        g, AU = cache[key]
        h = float(np.max(g.steps))
        H.append(_holder_quotients(g, AU, sigma, 4 * h))
        H_loc.append(_holder_quotients(g, AU, sigma, 4 * h, 64 * h))
        hs.append(h)
        if level < refinements:
            g = g.refine()
    if H[0] == 0:
        changes = [0.0] * refinements
    else:
        changes = [abs(H[i + 1] - H[i]) / H[i] for i in range(refinements)]
    stable = all(c <= rel for c in changes)
    samples = [{"h": h, "H": x, "H_local": y} for h, x, y in zip(hs, H, H_loc)]
    details = {"sigma": sigma, "changes": changes, "theory_covers": sigma < 1 - alpha}
    return EstimateReport(f"holder(sigma={sigma:g})", H[-1], stable, stable, samples, details)


def holder_sweep(op: SectorialOperator, order, F: Callable[[float], np.ndarray], grid: TimeGrid,
                 sigmas: Sequence[float] = tuple(np.round(np.arange(1, 10) / 10, 1)),
                 refinements: int = 2, quad: QuadratureConfig = DEFAULT_QUAD
                 ) -> tuple[list[EstimateReport], float | None]:
    """Run the Hölder probe for each ``sigma``; also return the largest stable one."""
    cache: dict = {}
    reports = [check_holder_regularity(op, order, float(s), F, grid, refinements, quad=quad, _cache=cache)
               for s in sigmas]
    stable = [float(s) for s, r in zip(sigmas, reports) if r.stable]
    return reports, (max(stable) if stable else None)
