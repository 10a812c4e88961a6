r"""Integration paths for inverse-Laplace type contour integrals.

A path consists of the lower ray :math:`\rho e^{-i\gamma}` (traversed inward),
an arc of radius ``r`` from angle :math:`-\gamma` to :math:`+\gamma`, and the
upper ray :math:`\rho e^{i\gamma}` (traversed outward).  Rays are cut at
``rho_max``, where :math:`|e^{\lambda t}| \le e^{-\rho t \delta}` has fallen
below the requested tolerance.

Two builders are provided: a time-dependent path with arc radius ``1/t`` and a
fixed path with a small arc radius ``epsilon`` that serves a whole time grid.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import DomainError, NonFiniteError

__all__ = [
    "ContourPath",
    "build_paper_path",
    "build_fixed_path",
    "close_path",
    "contour_integrate",
    "pairwise_sum",
    "select_epsilon",
    "truncation_radius",
]

RAY_LOWER, ARC, RAY_UPPER, CLOSING = 0, 1, 2, 3
SEGMENT_NAMES = {RAY_LOWER: "ray-lower", ARC: "arc", RAY_UPPER: "ray-upper", CLOSING: "closing"}

# nodes per unit of log(rho) on fixed-path rays
PANEL_NODES = 16
PANEL_WIDTH = 0.5


@dataclass(frozen=True, eq=False)
class ContourPath:
    """Quadrature nodes and weights with ``int f dlambda ~= sum_j w_j f(lambda_j)``."""

    nodes: np.ndarray
    weights: np.ndarray
    segments: np.ndarray
    gamma: float
    radius: float
    rho_max: float

    def __post_init__(self) -> None:
        for name in ("nodes", "weights", "segments"):
            arr = np.array(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return self.nodes.size

    @property
    def delta(self) -> float:
        return -math.cos(self.gamma)

    def scaled(self, factor: float) -> ContourPath:
        """Path with every node and weight multiplied by ``factor > 0``."""
        return ContourPath(self.nodes * factor, self.weights * factor, self.segments,
                           self.gamma, self.radius * factor, self.rho_max * factor)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["segment", "re_lambda", "im_lambda", "re_w", "im_w"])
            for seg, lam, wt in zip(self.segments, self.nodes, self.weights):
                w.writerow([SEGMENT_NAMES[int(seg)], repr(float(lam.real)), repr(float(lam.imag)),
                            repr(float(wt.real)), repr(float(wt.imag))])


def _check_gamma(gamma: float) -> None:
    if not math.pi / 2 < gamma < math.pi:
        raise DomainError(f"gamma must lie in (pi/2, pi), got {gamma}")


def truncation_radius(t: float, gamma: float, tol: float) -> float:
    """``ln(1/tol) / (t delta)``: beyond it ``|exp(lambda t)| < tol`` on the rays."""
    if not 0 < tol < 1:
        raise DomainError("tol must lie in (0, 1)")
    if t <= 0:
        raise DomainError("t must be positive")
    return math.log(1.0 / tol) / (t * -math.cos(gamma))


def _rays_and_arc(r: float, rho_max: float, gamma: float, s_nodes: np.ndarray,
                  s_weights: np.ndarray, n_arc: int) -> ContourPath:
    """Assemble a path from log-variable ray nodes ``rho = r e^s`` and an arc rule."""
    rho = r * np.exp(s_nodes)
    drho = rho * s_weights
    up = np.exp(1j * gamma)
    down = np.exp(-1j * gamma)
    # lower ray runs inward: reverse node order and negate the orientation
    lower_nodes = (rho * down)[::-1]
    lower_w = -(drho * down)[::-1]
    x, wx = np.polynomial.legendre.leggauss(n_arc)
    theta = gamma * x
    arc_nodes = r * np.exp(1j * theta)
    arc_w = 1j * arc_nodes * gamma * wx
    nodes = np.concatenate([lower_nodes, arc_nodes, rho * up])
    weights = np.concatenate([lower_w, arc_w, drho * up])
    segs = np.concatenate([
        np.full(rho.size, RAY_LOWER), np.full(n_arc, ARC), np.full(rho.size, RAY_UPPER)
    ])
    return ContourPath(nodes, weights, segs, gamma, r, rho_max)


def build_paper_path(t: float, gamma: float = 3 * math.pi / 4, tol: float = 1e-12,
                     n_ray: int = 48, n_arc: int = 32, substitution: str = "log") -> ContourPath:
    """Time-dependent path with arc radius ``1/t``.

    Ray nodes are Gauss-Legendre points in ``s`` after ``rho = e^s / t``
    (``substitution="log"``), or in ``rho`` itself (``"linear"``, kept for
    comparison).  Since ``lambda t`` at the nodes does not depend on ``t``,
    ``build_paper_path(t)`` is ``build_paper_path(1)`` scaled by ``1/t``.
    """
    _check_gamma(gamma)
    rho_max = truncation_radius(t, gamma, tol)
    r = 1.0 / t
    if rho_max <= r:
        raise DomainError("tolerance too loose: truncation radius inside the arc")
    x, wx = np.polynomial.legendre.leggauss(n_ray)
    if substitution == "log":
        S = math.log(rho_max / r)
        s = 0.5 * S * (x + 1)
        ws = 0.5 * S * wx
    elif substitution == "linear":
        rho = r + 0.5 * (rho_max - r) * (x + 1)
        s = np.log(rho / r)
        ws = 0.5 * (rho_max - r) * wx / rho
    else:
        raise DomainError(f"unknown substitution {substitution!r}")
    return _rays_and_arc(r, rho_max, gamma, s, ws, n_arc)


def _panel_rule(S: float, width: float, per_panel: int) -> tuple[np.ndarray, np.ndarray]:
    n_panels = max(1, math.ceil(S / width - 1e-9))
    edges = np.linspace(0.0, S, n_panels + 1)
    x, wx = np.polynomial.legendre.leggauss(per_panel)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    s = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    ws = (half[:, None] * wx[None, :]).ravel()
    return s, ws


def build_fixed_path(epsilon: float, gamma: float = 3 * math.pi / 4, rho_max: float = 1e3,
                     n_ray: int | None = None, n_arc: int = 32) -> ContourPath:
    """Time-independent path with arc radius ``epsilon``.

    Rays use composite Gauss-Legendre panels in ``s = log(rho / epsilon)``.
    By default each panel has width 0.5 and 16 nodes; ``n_ray`` instead fixes
    the total node count per ray, spread evenly over the panels.
    """
    _check_gamma(gamma)
    if not 0 < epsilon < rho_max:
        raise DomainError("need 0 < epsilon < rho_max")
    S = math.log(rho_max / epsilon)
    n_panels = max(1, math.ceil(S / PANEL_WIDTH - 1e-9))
    per_panel = PANEL_NODES if n_ray is None else max(2, math.ceil(n_ray / n_panels))
    s, ws = _panel_rule(S, PANEL_WIDTH, per_panel)
    return _rays_and_arc(epsilon, rho_max, gamma, s, ws, n_arc)


def select_epsilon(T: float, eigenvalues: np.ndarray | None = None) -> float:
    """Arc radius ``min(1/T, min|mu| / 10)`` for fixed paths serving ``[0, T]``."""
    eps = 1.0 / T
    if eigenvalues is not None and len(eigenvalues):
        eps = min(eps, float(np.min(np.abs(eigenvalues))) / 10)
    return eps


def close_path(path: ContourPath, n_close: int = 64) -> ContourPath:
    """Append the arc of radius ``rho_max`` through the negative axis.

    The result is a closed loop winding once counter-clockwise around the
    origin, used to test the quadrature against Cauchy's formula.
    """
    x, wx = np.polynomial.legendre.leggauss(n_close)
    a, b = path.gamma, 2 * math.pi - path.gamma
    theta = 0.5 * (b - a) * (x + 1) + a
    nodes = path.rho_max * np.exp(1j * theta)
    w = 1j * nodes * 0.5 * (b - a) * wx
    return ContourPath(
        np.concatenate([path.nodes, nodes]),
        np.concatenate([path.weights, w]),
        np.concatenate([path.segments, np.full(n_close, CLOSING)]),
        path.gamma, path.radius, path.rho_max,
    )


def pairwise_sum(values: np.ndarray) -> np.ndarray:
    """Sum along axis 0 by a fixed binary-tree order (schedule independent)."""
    v = np.asarray(values)
    if v.shape[0] == 0:
        return np.zeros(v.shape[1:], dtype=v.dtype)
    while v.shape[0] > 1:
        if v.shape[0] % 2:
            v = np.concatenate([v[:-2], (v[-2] + v[-1])[None]], axis=0)
            if v.shape[0] == 1:
                break
        v = v[0::2] + v[1::2]
    return v[0]


def worker_count() -> int:
    """Thread cap from ``FRACOP_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("FRACOP_THREADS", "1")))
    except ValueError:
        return 1


def contour_integrate(path: ContourPath, f: Callable[[complex], np.ndarray],
                      workers: int | None = None) -> np.ndarray:
    """``sum_j w_j f(lambda_j)``; callers apply any ``1/(2 pi i)`` prefactor.

    ``f`` may be evaluated concurrently on several threads; the reduction order
    is fixed, so results do not depend on the schedule.
    """
    workers = worker_count() if workers is None else workers
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            vals = list(pool.map(f, path.nodes))
    else:
        vals = [f(lam) for lam in path.nodes]
    vals = [np.asarray(v) for v in vals]
    for j, v in enumerate(vals):
        if not np.all(np.isfinite(v)):
            raise NonFiniteError(f"integrand is not finite at node {j} (lambda={path.nodes[j]!r})")
    stacked = np.stack(vals).astype(complex)
    w = path.weights.reshape((-1,) + (1,) * (stacked.ndim - 1))
    return pairwise_sum(w * stacked)
