r"""Solvers for :math:`\partial_t^\alpha (u - a) = A u + F`.

The mild solution is :math:`u(t) = G(t)a + \int_0^t K(t-s) F(s)\,ds`.  The
convolution is moved inside the contour integral:

.. math::
   \int_0^t K(t-s)F(s)\,ds = \frac{1}{2\pi i}\int_\Gamma (\lambda^\alpha - A)^{-1}
   \Big[\int_0^t e^{\lambda(t-s)} F(s)\,ds\Big] d\lambda .

For piecewise-linear ``F`` the inner integral ``Psi_i`` obeys the exact
one-step update ``Psi_{i+1} = e^z Psi_i + h (p(z) F_i + q(z) F_{i+1})`` with
``z = lam h``, which never forms large intermediate values.  For large
``|lam|`` it behaves like ``-F_i/lam - m_{i-1}/lam**2`` (``m`` the slopes); that
algebraic part integrates to zero over the infinite path, so on the truncated
path its contribution equals the integral over the arc ``|lam| = rho_max``
closing the path on the right, where it is evaluated instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import gamma as gamma_fn

from .contour import ContourPath, build_fixed_path, select_epsilon, truncation_radius
from .errors import (
    BallViolationError,
    ContractionError,
    DomainError,
    NonConvergenceError,
)
from .fractional_calculus import FractionalOrder, GridFunction, TimeGrid, as_order, caputo_l1
from .operators import SectorialOperator, fractional_power_apply
from .solution_operators import (
    DEFAULT_QUAD,
    QuadratureConfig,
    _is_real_operator,
    _tail_arc,
    operator_trajectory,
)

__all__ = [
    "ForcingTerm",
    "NonlinearForcing",
    "SolveReport",
    "DuhamelSolver",
    "solve_linear",
    "solve_shifted",
    "solve_semilinear",
    "residual_sup",
]

_TWO_PI_I = 2j * math.pi
# time steps per block of resolvent solves in the Duhamel recursion
_BLOCK = 256


@dataclass(frozen=True)
class ForcingTerm:
    """Forcing given as samples on a grid or as a callable ``t -> vector``."""

    samples: GridFunction | None = None
    fn: Callable[[float], np.ndarray] | None = None

    @classmethod
    def zero(cls) -> ForcingTerm:
        return cls()

    @classmethod
    def from_callable(cls, fn: Callable[[float], np.ndarray]) -> ForcingTerm:
        return cls(fn=fn)

    @classmethod
    def from_grid(cls, v: GridFunction) -> ForcingTerm:
        return cls(samples=v)

    @property
    def is_zero(self) -> bool:
        return self.samples is None and self.fn is None

    def sample(self, grid: TimeGrid, dim: int) -> np.ndarray:
        if self.is_zero:
            return np.zeros((len(grid), dim))
        if self.samples is not None:
            if len(self.samples.grid) != len(grid) or not np.array_equal(self.samples.t, grid.nodes):
                raise DomainError("forcing samples live on a different grid")
            vals = self.samples.values
        else:
            vals = np.array([np.broadcast_to(np.asarray(self.fn(t)), (dim,)) for t in grid.nodes])
        if vals.shape != (len(grid), dim):
            raise DomainError(f"forcing has shape {vals.shape}, expected {(len(grid), dim)}")
        if not np.all(np.isfinite(vals)):
            raise DomainError("forcing contains non-finite samples")
        return vals


@dataclass(frozen=True)
class NonlinearForcing:
    """State-dependent forcing ``(t, u) -> F`` with its ball radius ``M`` and constant ``C(M)``.

    The Lipschitz bound is meant in the graph norm ``||(-A)^gamma v||``; it is
    only declared, the solver monitors the contraction empirically.
    """

    fn: Callable[[float, np.ndarray], np.ndarray]
    M: float = math.inf
    C_M: float = math.inf

    def __call__(self, t: float, u: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(t, u))


@dataclass
class SolveReport:
    """Trajectory and iteration diagnostics of a solve."""

    trajectory: GridFunction
    iterations: int = 1
    increments: list[float] = field(default_factory=list)
    ratios: list[float] = field(default_factory=list)
    rho_hat: float | None = None
    theoretical: list[float] = field(default_factory=list)
    residual: float | None = None
    notes: list[str] = field(default_factory=list)
    converged: bool = True

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "increments": [float(x) for x in self.increments],
            "ratios": [float(x) for x in self.ratios],
            "rho_hat": None if self.rho_hat is None else float(self.rho_hat),
            "theoretical_factors": [float(x) for x in self.theoretical],
            "residual_sup": None if self.residual is None else float(self.residual),
            "converged": self.converged,
            "notes": list(self.notes),
        }


class DuhamelSolver:
    """Homogeneous part and Duhamel convolution on one fixed contour path.

    The path is built once for ``(op, grid)`` and reused for every forcing,
    which is what Picard iterations need.
    """

    def __init__(self, op: SectorialOperator, order: FractionalOrder | float, grid: TimeGrid,
                 quad: QuadratureConfig = DEFAULT_QUAD, path: ContourPath | None = None) -> None:
        self.op = op
        self.alpha = as_order(order).alpha
        self.grid = grid
        self.quad = quad
        gamma = quad.gamma if quad.gamma is not None else op.sector.gamma
        if path is None:
            eps = select_epsilon(grid.T, op.spectrum_hint())
            rho_max = truncation_radius(float(np.min(grid.steps)), gamma, quad.tol)
            path = build_fixed_path(eps, gamma, rho_max, None, quad.n_arc)
        self.path = path
        self._lam = path.nodes
        self._lam_alpha = path.nodes**self.alpha
        self._arc, self._arc_w = _tail_arc(path.rho_max, path.gamma, quad.tail_arc_nodes)
        self._arc_alpha = self._arc**self.alpha

    def homogeneous(self, a: np.ndarray) -> np.ndarray:
        """``G(t_i) a`` at every node, complex array ``(n_t, N)``."""
        return operator_trajectory(self.op, self.alpha, "G", self.grid.nodes, a, self.quad, self.path)

    def convolve(self, F: np.ndarray, kernel: str = "K") -> np.ndarray:
        """``int_0^{t_i} K(t_i - s) F(s) ds`` for piecewise-linear samples ``F`` ``(n_t, N)``.

        ``kernel="G"`` convolves with ``G`` instead (extra weight ``lam**(alpha-1)``).
        """
        F = np.asarray(F)
        n_t, N = F.shape
        out = np.zeros((n_t, N), dtype=complex)
        if not np.any(F):
            return out
        h = self.grid.steps
        m = np.diff(F, axis=0) / h[:, None]
        lam, arc = self._lam, self._arc
        w, arc_w = self.path.weights, self._arc_w
        if kernel == "G":
            w = w * lam ** (self.alpha - 1)
            arc_w = arc_w * arc ** (self.alpha - 1)
        elif kernel != "K":
            raise DomainError(f"unknown convolution kernel {kernel!r}")
        # algebraic part on the closing arc: R F_i / lam + R m_{i-1} / lam**2
        RF_arc = self.op.solve_many(self._arc_alpha, F[1:].T)  # (n_arc, N, n_t - 1)
        Rm_arc = self.op.solve_many(self._arc_alpha, m.T)
        alg = RF_arc / arc[:, None, None] + Rm_arc / arc[:, None, None] ** 2
        out[1:] = np.einsum("j,jnk->kn", arc_w, alg)

        phi = np.zeros((lam.size, N), dtype=complex)
        R_prev = self.op.solve_many(self._lam_alpha, F[0])
        for start in range(0, n_t - 1, _BLOCK):
            stop = min(n_t - 1, start + _BLOCK)
            Y = self.op.solve_many(self._lam_alpha, F[start + 1:stop + 1].T)  # (n_nodes, N, block)
            Z = lam[:, None] * h[None, start:stop]
            E = np.exp(Z)
            P, Q = _step_weights(Z)
            for i in range(start, stop):
                j = i - start
                R_next = Y[:, :, j]
                phi = E[:, j, None] * phi + h[i] * (P[:, j, None] * R_prev + Q[:, j, None] * R_next)
                out[i + 1] += w @ phi
                R_prev = R_next
        return out / _TWO_PI_I

    def solve(self, a: np.ndarray, F: np.ndarray) -> np.ndarray:
        return self.homogeneous(a) + self.convolve(F)


def _step_weights(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``p(z) = int_0^1 y e^{zy} dy`` and ``q(z) = int_0^1 (1-y) e^{zy} dy``."""
    small = np.abs(z) < 0.5
    zs = np.where(small, 1.0, z)
    ez = np.exp(zs)
    p = (zs * ez - ez + 1.0) / zs**2
    q = (ez - 1.0 - zs) / zs**2
    if np.any(small):
        zz = z[small]
        ps = np.zeros_like(zz)
        qs = np.zeros_like(zz)
        term = np.ones_like(zz)  # z^k / k!
        for k in range(16):
            ps += term / (k + 2)
            qs += term / ((k + 1) * (k + 2))
            term = term * zz / (k + 1)
        p[small] = ps
        q[small] = qs
    return p, q


def _realify(values: np.ndarray, op: SectorialOperator, *inputs: np.ndarray) -> np.ndarray:
    if _is_real_operator(op) and not any(np.iscomplexobj(x) for x in inputs):
        return values.real
    return values


def residual_sup(op: SectorialOperator, order: FractionalOrder | float, u: GridFunction,
                 a: np.ndarray, F: np.ndarray, skip: int = 1) -> float:
    """``max_i ||D^alpha(u - a)(t_i) - A u(t_i) - F(t_i)||`` over nodes ``i >= skip`` (L1 scheme)."""
    shifted = GridFunction(u.grid, u.values - np.asarray(a)[None, :])
    d = caputo_l1(shifted, order).values
    r = d - op.apply(u.values.T).T - F
    return float(np.max(np.linalg.norm(r[skip:], axis=1)))


def solve_linear(op: SectorialOperator, order: FractionalOrder | float, a: np.ndarray,
                 F: ForcingTerm | None, grid: TimeGrid, quad: QuadratureConfig = DEFAULT_QUAD,
                 compute_residual: bool = False) -> SolveReport:
    """``u(t_i) = G(t_i) a + int_0^{t_i} K(t_i - s) F(s) ds`` on every grid node."""
    a = np.asarray(a)
    if not np.all(np.isfinite(a)):
        raise DomainError("initial value must be finite")
    F = F or ForcingTerm.zero()
    Fs = F.sample(grid, op.dim)
    solver = DuhamelSolver(op, order, grid, quad)
    u = _realify(solver.solve(a, Fs), op, a, Fs)
    traj = GridFunction(grid, u)
    rep = SolveReport(traj)
    if compute_residual:
        rep.residual = residual_sup(op, order, traj, a, Fs)
    return rep


def solve_shifted(op0: SectorialOperator, c0: float, order: FractionalOrder | float, a: np.ndarray,
                  F: ForcingTerm | None, grid: TimeGrid, tol: float = 1e-10, max_iter: int = 50,
                  quad: QuadratureConfig = DEFAULT_QUAD) -> SolveReport:
    """Picard iteration for ``A = A0 + c0`` using only the solution operators of ``A0``.

    ``u_0 = G a + K*F`` and ``u_{n+1} = G a + K*(c0 u_n + F)``.  The report
    lists the sup-norm increments and the factors
    ``(c0 T**alpha)**n / Gamma(n alpha + 1)`` that bound their decay.
    """
    alpha = as_order(order).alpha
    a = np.asarray(a)
    F = F or ForcingTerm.zero()
    Fs = F.sample(grid, op0.dim)
    solver = DuhamelSolver(op0, alpha, grid, quad)
    hom = solver.homogeneous(a)
    u = hom + solver.convolve(Fs)
    increments: list[float] = []
    theory: list[float] = []
    T = grid.T
    it = 0
    converged = c0 == 0
    while not converged:
        if it >= max_iter:
            raise NonConvergenceError(f"no convergence in {max_iter} Picard iterations", increments)
        u_new = hom + solver.convolve(c0 * u + Fs)
        inc = float(np.max(np.linalg.norm(u_new - u, axis=1)))
        increments.append(inc)
        n = len(increments)
        theory.append(float((abs(c0) * T**alpha) ** n / gamma_fn(n * alpha + 1)))
        u = u_new
        it += 1
        converged = inc <= tol
    ratios = [increments[i + 1] / increments[i] for i in range(len(increments) - 1) if increments[i] > 0]
    traj = GridFunction(grid, _realify(u, op0, a, Fs))
    return SolveReport(traj, iterations=it + 1, increments=increments, ratios=ratios,
                       rho_hat=max(ratios) if ratios else None, theoretical=theory)


def _ball_norms(op: SectorialOperator, gamma_exp: float, u: np.ndarray) -> tuple[np.ndarray, bool]:
    """``||(-A)^gamma u(t_i)||`` per node; falls back to the plain norm without eigenpairs."""
    if op.has_eigh:
        v = fractional_power_apply(op, gamma_exp, u.T).T
        return np.linalg.norm(v, axis=1), True
    return np.linalg.norm(u, axis=1), False


def solve_semilinear(op: SectorialOperator, order: FractionalOrder | float, a: np.ndarray,
                     F: NonlinearForcing, gamma_exp: float, grid: TimeGrid, tol: float = 1e-10,
                     max_iter: int = 100, quad: QuadratureConfig = DEFAULT_QUAD,
                     initial: np.ndarray | None = None) -> SolveReport:
    """Picard iteration for the mild solution ``u = G a + K*F(u)``.

    The nonlinearity is sampled at grid nodes and interpolated linearly.  Each
    iterate must stay in the ball ``||(-A)^gamma u|| <= M``; the empirical
    contraction ratio ``rho_hat`` must stay below one.  The default initial
    guess is ``G(.) a``; ``initial`` overrides it with a ``(n_t, N)`` array.
    """
    if not 0 <= gamma_exp < 1:
        raise DomainError("gamma_exp must lie in [0, 1)")
    alpha = as_order(order).alpha
    a = np.asarray(a)
    solver = DuhamelSolver(op, alpha, grid, quad)
    hom = solver.homogeneous(a)
    real = _is_real_operator(op) and not np.iscomplexobj(a)
    u = hom.copy() if initial is None else np.asarray(initial, dtype=complex).copy()
    notes = []
    increments: list[float] = []
    ratios: list[float] = []
    t = grid.nodes
    exact_norm = True
    for it in range(1, max_iter + 1):
        norms, exact_norm = _ball_norms(op, gamma_exp, u.real if real else u)
        if np.max(norms) > F.M:
            raise BallViolationError(
                f"iterate {it - 1} leaves the ball: max ||(-A)^gamma u|| = {np.max(norms):.4g} > M = {F.M:.4g}"
            )
        uu = u.real if real else u
        Fs = np.array([F(ti, ui) for ti, ui in zip(t, uu)])
        if not np.all(np.isfinite(Fs)):
            raise DomainError("nonlinear forcing produced non-finite values")
        u_new = hom + solver.convolve(Fs)
        inc = float(np.max(np.linalg.norm(u_new - u, axis=1)))
        increments.append(inc)
        if len(increments) >= 2 and increments[-2] > 0:
            ratios.append(inc / increments[-2])
        u = u_new
        if inc <= tol:
            break
        if len(ratios) >= 3 and all(r >= 1 for r in ratios[-3:]):
            raise ContractionError(
                "Picard map is not contracting on this interval; try a smaller T", ratios
            )
    else:
        raise NonConvergenceError(f"no convergence in {max_iter} Picard iterations", increments)
    if not exact_norm:
        notes.append("no eigendecomposition: ball checked in the plain l2 norm")
    rho_hat = max(ratios) if ratios else (0.0 if increments and increments[0] <= tol else None)
    if rho_hat is not None and rho_hat >= 1:
        raise ContractionError("observed contraction ratio >= 1; try a smaller T", ratios)
    traj = GridFunction(grid, u.real if real else u)
    return SolveReport(traj, iterations=len(increments), increments=increments, ratios=ratios,
                       rho_hat=rho_hat, notes=notes)
