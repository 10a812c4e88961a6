"""Recovering the initial value from interior observations of the homogeneous problem.

The observation map sends ``a`` to the samples ``u(t_i)[omega]`` of
``u(t) = G(t) a``.  Its matrix is assembled from the contour evaluation of
``G(t_i)`` against the identity, and inverted by Tikhonov-regularized least
squares through the SVD so that small singular values stay visible.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .errors import DomainError, IllPosedError
from .fractional_calculus import GridFunction, as_order
from .operators import SectorialOperator
from .solution_operators import DEFAULT_QUAD, QuadratureConfig, operator_trajectory

__all__ = [
    "ObservationSpec",
    "ObservationData",
    "ObservationMap",
    "observe",
    "observation_map",
    "reconstruct_initial",
    "l_curve",
    "default_obs_times",
    "middle_third",
]

SIGMA_FLOOR = 1e-10


def default_obs_times(T: float, n: int, span: float = 1e-6) -> np.ndarray:
    """``n`` log-spaced times in ``[span T, T]``."""
    return np.geomspace(span * T, T, n)


def middle_third(dim: int) -> np.ndarray:
    """Indices of the middle third of ``0..dim-1``."""
    lo, hi = dim // 3, dim - dim // 3
    return np.arange(lo, hi)


@dataclass(frozen=True, eq=False)
class ObservationSpec:
    """Observed state indices ``omega``, observation times and relative noise level."""

    omega: np.ndarray
    obs_times: np.ndarray
    noise_level: float = 0.0

    def __post_init__(self) -> None:
        om = np.asarray(self.omega, dtype=int).ravel()
        ts = np.asarray(self.obs_times, dtype=float).ravel()
        if om.size == 0:
            raise DomainError("omega must not be empty")
        if np.unique(om).size != om.size:
            raise DomainError("omega has repeated indices")
        if ts.size == 0 or np.any(ts <= 0):
            raise DomainError("observation times must be positive")
        if np.any(np.diff(ts) <= 0):
            raise DomainError("observation times must be strictly increasing")
        if not self.noise_level >= 0:
            raise DomainError("noise level must be non-negative")
        object.__setattr__(self, "omega", om)
        object.__setattr__(self, "obs_times", ts)

    def validate(self, dim: int) -> None:
        if np.any(self.omega < 0) or np.any(self.omega >= dim):
            raise DomainError(f"omega indices must lie in [0, {dim})")

    def to_dict(self) -> dict[str, Any]:
        return {
            "omega": self.omega.tolist(),
            "obs_times": [float(t) for t in self.obs_times],
            "noise_level": float(self.noise_level),
        }


@dataclass
class ObservationData:
    """Observed values ``(n_times, |omega|)`` and where they came from."""

    values: np.ndarray
    spec: ObservationSpec
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def vector(self) -> np.ndarray:
        return self.values.reshape(-1)


def observe(u: GridFunction, spec: ObservationSpec, seed: int | None = 0) -> ObservationData:
    """Restrict ``u`` to ``omega`` at the observation times and add seeded noise.

    The times must be nodes of ``u``'s grid.  Noise is i.i.d. Gaussian with
    standard deviation ``noise_level * max |observation|``.
    """
    spec.validate(u.dim)
    t = u.t
    idx = np.searchsorted(t, spec.obs_times)
    ok = (idx < t.size) & (t[np.minimum(idx, t.size - 1)] == spec.obs_times)
    if not np.all(ok):
        raise DomainError("observation times must be grid nodes")
    clean = u.values[idx][:, spec.omega]
    return _noisy(clean, spec, seed)


def _noisy(clean: np.ndarray, spec: ObservationSpec, seed: int | None) -> ObservationData:
    values = np.array(clean, copy=True)
    scale = float(np.max(np.abs(clean))) if clean.size else 0.0
    if spec.noise_level > 0:
        rng = np.random.default_rng(seed)
        values = values + spec.noise_level * scale * rng.standard_normal(values.shape)
    meta = {
        "seed": seed,
        "noise_level": spec.noise_level,
        "noise_scale": scale,
        "clean_sha256": hashlib.sha256(np.ascontiguousarray(clean).tobytes()).hexdigest(),
    }
    return ObservationData(values, spec, meta)


@dataclass
class ObservationMap:
    """Matrix of ``a -> vec(u(t_i)[omega])`` with its SVD."""

    matrix: np.ndarray
    U: np.ndarray
    singular_values: np.ndarray
    Vt: np.ndarray
    spec: ObservationSpec

    @property
    def sigma_min(self) -> float:
        return float(self.singular_values[-1])

    @property
    def rank(self) -> int:
        s = self.singular_values
        return int(np.sum(s > SIGMA_FLOOR * s[0])) if s[0] > 0 else 0

    def apply(self, a: np.ndarray) -> np.ndarray:
        return self.matrix @ a

    def simulate(self, a: np.ndarray, seed: int | None = 0) -> ObservationData:
        """Observations of the solution with initial value ``a``."""
        clean = (self.matrix @ a).reshape(self.spec.obs_times.size, self.spec.omega.size)
        return _noisy(clean, self.spec, seed)


def observation_map(op: SectorialOperator, order, spec: ObservationSpec,
                    quad: QuadratureConfig = DEFAULT_QUAD) -> ObservationMap:
    """Assemble the observation matrix; column ``j`` observes the solution from ``e_j``.

    ``G(t_i)`` is applied to all basis vectors at once.  The singular values
    are padded with zeros up to ``N`` when there are fewer rows than unknowns.
    """
    spec.validate(op.dim)
    alpha = as_order(order).alpha
    X = operator_trajectory(op, alpha, "G", spec.obs_times, np.eye(op.dim), quad)  # (n_t, N, N)
    if not np.iscomplexobj(op.to_dense()):
        X = X.real
    M = X[:, spec.omega, :].reshape(-1, op.dim)
    if M.shape[0] >= op.dim:
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
    else:
        U, s, Vt = np.linalg.svd(M, full_matrices=True)
        pad = op.dim - s.size
        s = np.concatenate([s, np.zeros(pad)])
        U = np.concatenate([U, np.zeros((U.shape[0], pad))], axis=1)
    return ObservationMap(M, U, s, Vt, spec)


def reconstruct_initial(omap: ObservationMap, data: ObservationData, reg: float = 0.0
                        ) -> tuple[np.ndarray, dict[str, Any]]:
    """``argmin ||M a - d||^2 + reg ||a||^2`` through the SVD of ``M``.

    ``reg = 0`` is refused with :class:`IllPosedError` when the smallest
    singular value is below ``1e-10``.
    """
    if not reg >= 0:
        raise DomainError("reg must be non-negative")
    s = omap.singular_values
    if reg == 0 and omap.sigma_min < SIGMA_FLOOR:
        raise IllPosedError(
            f"smallest singular value {omap.sigma_min:.3g} < {SIGMA_FLOOR:g}; regularization is required"
        )
    d = data.vector
    coef = omap.U.T @ d
    with np.errstate(divide="ignore", invalid="ignore"):
        filt = np.where(s > 0, s / (s**2 + reg), 0.0)
    a_hat = omap.Vt.T @ (filt * coef)
    resid = omap.matrix @ a_hat - d
    diag = {
        "residual_norm": float(np.linalg.norm(resid)),
        "solution_norm": float(np.linalg.norm(a_hat)),
        "data_norm": float(np.linalg.norm(d)),
        "reg": float(reg),
        "sigma_min": omap.sigma_min,
        "sigma_max": float(s[0]),
        "rank": omap.rank,
        "singular_values": [float(x) for x in s],
        # discrepancy principle value: residual against the expected noise size
        "discrepancy": float(np.linalg.norm(resid))
        - data.spec.noise_level * data.metadata.get("noise_scale", 0.0) * np.sqrt(d.size),
    }
    return a_hat, diag


def l_curve(omap: ObservationMap, data: ObservationData, regs: Sequence[float],
            truth: np.ndarray | None = None) -> list[dict[str, float]]:
    """Residual and solution norms (and error, if ``truth`` is known) per ``reg``."""
    rows = []
    for reg in regs:
        a_hat, diag = reconstruct_initial(omap, data, float(reg))
        row = {"reg": float(reg), "residual_norm": diag["residual_norm"],
               "solution_norm": diag["solution_norm"]}
        if truth is not None:
            row["rel_error"] = float(np.linalg.norm(a_hat - truth) / np.linalg.norm(truth))
        rows.append(row)
    return rows
