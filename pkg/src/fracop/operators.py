"""Finite-dimensional sectorial operators and their resolvents.

Every operator exposes ``apply`` and ``resolvent_solve``; self-adjoint
instances additionally expose an orthonormal eigendecomposition, which is
what fractional powers and the spectral reference solutions use.
Resolvent paths always run in complex arithmetic because contour nodes are
complex.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal, lu_factor, lu_solve, solve_banded

from .errors import DomainError, NearSingularError, UnsupportedOperatorError

__all__ = [
    "SectorSpec",
    "SectorialOperator",
    "DiagonalOperator",
    "DirichletLaplacian1D",
    "VariableElliptic1D",
    "MatrixOperator",
    "ShiftedOperator",
    "SectorReport",
    "resolvent_solve",
    "verify_sector_bound",
    "fractional_power_apply",
    "operator_from_config",
]

DEFAULT_GAMMA = 3 * math.pi / 4
BACKWARD_TOL = 1e-12
# exact SVD up to this size, power iteration beyond
SVD_LIMIT = 256


@dataclass(frozen=True)
class SectorSpec:
    """Sector half-angle ``gamma`` and resolvent constant ``c_bound``.

    ``delta = -cos(gamma)`` controls how fast ``exp(lambda t)`` decays along the
    rays of the integration path.
    """

    gamma: float = DEFAULT_GAMMA
    c_bound: float = 1.0

    def __post_init__(self) -> None:
        if not (math.pi / 2 < self.gamma < math.pi):
            raise DomainError(f"sector angle must lie in (pi/2, pi), got {self.gamma}")
        if not self.c_bound > 0:
            raise DomainError("c_bound must be positive")

    @property
    def delta(self) -> float:
        return -math.cos(self.gamma)

    def contains(self, lam: np.ndarray, slack: float = 1e-14) -> np.ndarray:
        lam = np.asarray(lam, dtype=complex)
        return (lam != 0) & (np.abs(np.angle(lam)) <= self.gamma * (1 + slack))


def _normal_c_bound(gamma: float) -> float:
    # sup over |arg lam| <= gamma of |lam| / |lam - mu| for mu <= 0
    return 1.0 / math.sin(gamma)


class SectorialOperator:
    """Interface shared by all concrete operators."""

    dim: int
    sector: SectorSpec

    # --- required -----------------------------------------------------------
    def apply(self, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _solve(self, z: complex, b: np.ndarray) -> np.ndarray:
        """Raw solve of ``(z I - A) x = b`` for ``b`` of shape ``(N,)`` or ``(N, m)``."""
        raise NotImplementedError

    def to_dense(self) -> np.ndarray:
        return self.apply(np.eye(self.dim))

    # --- optional -----------------------------------------------------------
    @property
    def is_self_adjoint(self) -> bool:
        return False

    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues (ascending magnitude) and orthonormal eigenvectors as columns."""
        raise UnsupportedOperatorError(f"{type(self).__name__} has no eigendecomposition")

    @property
    def has_eigh(self) -> bool:
        try:
            self.eigh()
        except UnsupportedOperatorError:
            return False
        return True

    def spectrum_hint(self) -> np.ndarray | None:
        """Eigenvalues if cheaply known, used for near-singularity checks."""
        try:
            return self.eigh()[0]
        except UnsupportedOperatorError:
            return None

    @cached_property
    def norm2(self) -> float:
        """Spectral norm of ``A``."""
        mu = self.spectrum_hint()
        if mu is not None and self.is_self_adjoint:
            return float(np.max(np.abs(mu)))
        return _spectral_norm(self.apply, lambda v: self.to_dense().conj().T @ v, self.dim)

    def resolvent_solve(self, z: complex, b: np.ndarray) -> np.ndarray:
        return resolvent_solve(self, z, b)

    def solve_many(self, zs: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Stack of ``(z_j I - A)^{-1} b`` over the points ``zs``."""
        if self.is_self_adjoint and self.has_eigh:
            return _spectral_solve_many(self, zs, b)
        return np.stack([resolvent_solve(self, z, b) for z in np.ravel(zs)])


def resolvent_solve(op: SectorialOperator, z: complex, b: np.ndarray, check: bool = True) -> np.ndarray:
    """Solve ``(z I - A) x = b`` with a backward-error check.

    Raises :class:`NearSingularError` when ``z`` is within ``1e-12 |mu|`` of a
    known eigenvalue, or when the solve fails its backward-error bound
    ``||(z - A)x - b|| <= 1e-12 (|z| + ||A||) ||x||``.
    """
    z = complex(z)
    b = np.asarray(b)
    mu = op.spectrum_hint()
    if mu is not None:
        gap = np.abs(z - mu)
        if np.any(gap <= 1e-12 * np.maximum(np.abs(mu), 1e-300)):
            raise NearSingularError(f"z={z} coincides with an eigenvalue")
    try:
        x = op._solve(z, b.astype(complex))
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NearSingularError(f"resolvent solve failed at z={z}: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise NearSingularError(f"resolvent solve at z={z} produced non-finite values")
    if check:
        r = z * x - op.apply(x) - b
        scale = BACKWARD_TOL * (abs(z) + op.norm2)
        rn = np.linalg.norm(r, axis=0)
        xn = np.linalg.norm(x, axis=0)
        if np.any(rn > scale * xn + 1e-300):
            raise NearSingularError(
                f"backward error {float(np.max(rn / np.maximum(xn, 1e-300))):.2e} too large at z={z}"
            )
    return x


# points per chunk in batched spectral solves
_Z_CHUNK = 64


def _spectral_solve_many(op: SectorialOperator, zs: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Batched resolvent solves in the orthonormal eigenbasis of a self-adjoint ``op``.

    Applies the same eigenvalue-gap and backward-error checks as
    :func:`resolvent_solve`, vectorized over ``zs``.
    """
    zs = np.asarray(zs, dtype=complex).ravel()
    b = np.asarray(b)
    mu, phi = op.eigh()
    d = zs[:, None] - mu[None, :]
    if np.any(np.abs(d) <= 1e-12 * np.maximum(np.abs(mu), 1e-300)[None, :]):
        raise NearSingularError("a resolvent point coincides with an eigenvalue")
    cols = b.reshape(op.dim, -1)
    bh = phi.T @ cols  # (N, m)
    out = np.empty((zs.size, op.dim, cols.shape[1]), dtype=complex)
    scale_a = op.norm2
    for start in range(0, zs.size, _Z_CHUNK):
        sl = slice(start, start + _Z_CHUNK)
        X = np.matmul(phi, bh[None] / d[sl, :, None])  # (chunk, N, m)
        flat = X.transpose(1, 0, 2).reshape(op.dim, -1)
        AX = np.asarray(op.apply(flat)).reshape(op.dim, X.shape[0], -1).transpose(1, 0, 2)
        r = zs[sl, None, None] * X - AX - cols[None]
        rn = np.linalg.norm(r, axis=1)
        xn = np.linalg.norm(X, axis=1)
        bound = BACKWARD_TOL * (np.abs(zs[sl]) + scale_a)[:, None] * xn + 1e-300
        if not np.all(np.isfinite(X)) or np.any(rn > bound):
            raise NearSingularError("batched resolvent solve failed its backward-error check")
        out[sl] = X
    return out.reshape((zs.size,) + b.shape)


# ---------------------------------------------------------------------------
# concrete operators


class DiagonalOperator(SectorialOperator):
    """``A = diag(mu)``; the exactly solvable reference instance."""

    def __init__(self, eigenvalues: Sequence[complex], gamma: float = DEFAULT_GAMMA) -> None:
        mu = np.asarray(eigenvalues)
        if mu.ndim != 1 or mu.size == 0:
            raise DomainError("eigenvalues must be a non-empty vector")
        if np.iscomplexobj(mu) and np.all(mu.imag == 0):
            mu = mu.real
        mu = mu.astype(complex if np.iscomplexobj(mu) else float)
        sector = SectorSpec(gamma, _normal_c_bound(gamma))
        inside = (mu == 0) | (np.abs(np.angle(mu.astype(complex))) < gamma)
        if np.any(inside):
            raise DomainError("eigenvalues must lie outside the sector |arg| < gamma and be non-zero")
        self.mu = mu
        self.mu.setflags(write=False)
        self.dim = mu.size
        self.sector = sector

    @property
    def is_self_adjoint(self) -> bool:
        return not np.iscomplexobj(self.mu)

    def apply(self, v):
        v = np.asarray(v)
        return self.mu * v if v.ndim == 1 else self.mu[:, None] * v

    def _solve(self, z, b):
        d = z - self.mu
        return b / d if b.ndim == 1 else b / d[:, None]

    def eigh(self):
        return self.mu, np.eye(self.dim)

    def solve_many(self, zs, b):
        zs = np.asarray(zs, dtype=complex).ravel()
        d = zs[:, None] - self.mu[None, :]
        if np.any(np.abs(d) <= 1e-12 * np.abs(self.mu)[None, :]):
            raise NearSingularError("a resolvent point coincides with an eigenvalue")
        b = np.asarray(b)
        return b[None] / (d if b.ndim == 1 else d[:, :, None])

    def spectrum_hint(self):
        return self.mu

    def to_dense(self):
        return np.diag(self.mu)

    def __repr__(self) -> str:
        return f"DiagonalOperator(dim={self.dim})"


class _Tridiagonal(SectorialOperator):
    """Symmetric tridiagonal operator given by diagonal and off-diagonal."""

    diag: np.ndarray
    off: np.ndarray

    @property
    def is_self_adjoint(self) -> bool:
        return True

    def apply(self, v):
        v = np.asarray(v)
        out = self.diag.reshape((-1,) + (1,) * (v.ndim - 1)) * v
        off = self.off.reshape((-1,) + (1,) * (v.ndim - 1))
        out[:-1] += off * v[1:]
        out[1:] += off * v[:-1]
        return out

    def _solve(self, z, b):
        ab = np.zeros((3, self.dim), dtype=complex)
        ab[0, 1:] = -self.off
        ab[1] = z - self.diag
        ab[2, :-1] = -self.off
        return solve_banded((1, 1), ab, b, check_finite=False)

    def to_dense(self):
        return np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)

    @cached_property
    def _eig(self):
        mu, phi = eigh_tridiagonal(self.diag, self.off)
        order = np.argsort(np.abs(mu), kind="stable")
        mu, phi = mu[order], phi[:, order]
        # fix eigenvector signs so the decomposition is reproducible
        sgn = np.sign(phi[np.argmax(np.abs(phi), axis=0), np.arange(self.dim)])
        phi = phi * sgn
        mu.setflags(write=False)
        phi.setflags(write=False)
        return mu, phi

    def eigh(self):
        return self._eig


class DirichletLaplacian1D(_Tridiagonal):
    """Second-difference Laplacian on ``n`` interior nodes of (0, 1), Dirichlet ends."""

    def __init__(self, n: int, gamma: float = DEFAULT_GAMMA) -> None:
        if n < 1:
            raise DomainError("need at least one interior node")
        self.dim = int(n)
        self.h = 1.0 / (n + 1)
        self.x = self.h * np.arange(1, n + 1)
        self.diag = np.full(n, -2.0 / self.h**2)
        self.off = np.full(n - 1, 1.0 / self.h**2)
        self.sector = SectorSpec(gamma, _normal_c_bound(gamma))

    @cached_property
    def _eig(self):
        k = np.arange(1, self.dim + 1)
        mu = -(4.0 / self.h**2) * np.sin(k * np.pi * self.h / 2) ** 2
        phi = np.sqrt(2 * self.h) * np.sin(np.pi * np.outer(self.x, k))
        mu.setflags(write=False)
        phi.setflags(write=False)
        return mu, phi

    def __repr__(self) -> str:
        return f"DirichletLaplacian1D(n={self.dim})"


class VariableElliptic1D(_Tridiagonal):
    """``A v = (a v')' + c v`` on (0, 1) with Dirichlet ends.

    ``a`` is sampled at the ``n + 1`` cell midpoints and must stay positive;
    ``c`` is sampled at the ``n`` interior nodes and must be ``<= 0`` so that
    zero stays in the resolvent set.
    """

    def __init__(self, a: Sequence[float] | float, c: Sequence[float] | float = 0.0,
                 n: int | None = None, gamma: float = DEFAULT_GAMMA) -> None:
        if n is None:
            if np.ndim(a) == 0:
                raise DomainError("n is required when a is a scalar")
            n = len(a) - 1
        a_arr = np.broadcast_to(np.asarray(a, dtype=float), (n + 1,)).copy()
        c_arr = np.broadcast_to(np.asarray(c, dtype=float), (n,)).copy()
        if np.any(a_arr <= 0):
            raise DomainError("diffusion coefficient must be positive")
        if np.any(c_arr > 0):
            raise DomainError("reaction coefficient must be <= 0")
        self.dim = int(n)
        self.h = 1.0 / (n + 1)
        self.x = self.h * np.arange(1, n + 1)
        self.a, self.c = a_arr, c_arr
        self.diag = -(a_arr[:-1] + a_arr[1:]) / self.h**2 + c_arr
        self.off = a_arr[1:-1] / self.h**2
        self.sector = SectorSpec(gamma, _normal_c_bound(gamma))

    def __repr__(self) -> str:
        return f"VariableElliptic1D(n={self.dim})"


class MatrixOperator(SectorialOperator):
    """A dense matrix; the resolvent constant is fitted by a sector sweep."""

    def __init__(self, matrix: np.ndarray, gamma: float = DEFAULT_GAMMA,
                 c_bound: float | None = None) -> None:
        m = np.asarray(matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DomainError("matrix must be square")
        self.matrix = m.copy()
        self.matrix.setflags(write=False)
        self.dim = m.shape[0]
        ev = np.linalg.eigvals(m)
        if np.any((ev == 0) | (np.abs(np.angle(ev)) < gamma)):
            raise DomainError("matrix has eigenvalues inside the sector or at 0")
        self._sym = bool(np.allclose(m, m.conj().T, rtol=0, atol=1e-14 * max(1.0, np.abs(m).max())))
        if c_bound is None:
            if self._sym:
                c_bound = _normal_c_bound(gamma)
            else:
                probe = SectorSpec(gamma)
                rays = _default_sweep(probe.gamma * 0.999, -3, 6, 13)
                c_bound = verify_sector_bound(self, gamma, rays).sup
        self.sector = SectorSpec(gamma, float(c_bound))

    @property
    def is_self_adjoint(self) -> bool:
        return self._sym

    def apply(self, v):
        return self.matrix @ v

    def _solve(self, z, b):
        lu = lu_factor(z * np.eye(self.dim) - self.matrix, check_finite=False)
        return lu_solve(lu, b, check_finite=False)

    def to_dense(self):
        return np.array(self.matrix)

    @cached_property
    def _eig(self):
        mu, phi = np.linalg.eigh(self.matrix)
        order = np.argsort(np.abs(mu), kind="stable")
        return mu[order], phi[:, order]

    def eigh(self):
        if not self._sym:
            raise UnsupportedOperatorError("non-symmetric matrix has no orthonormal eigenbasis")
        return self._eig

    def __repr__(self) -> str:
        return f"MatrixOperator(dim={self.dim})"


class ShiftedOperator(SectorialOperator):
    """``A0 + c0 I``; sectorial only if the shifted spectrum stays outside the sector."""

    def __init__(self, base: SectorialOperator, c0: float) -> None:
        self.base = base
        self.c0 = float(c0)
        self.dim = base.dim
        self.sector = base.sector
        mu = base.spectrum_hint()
        if mu is not None:
            shifted = mu + self.c0
            if np.any((shifted == 0) | (np.abs(np.angle(shifted.astype(complex))) < self.sector.gamma)):
                raise DomainError("shifted operator is not sectorial with 0 in its resolvent set")

    @property
    def is_self_adjoint(self) -> bool:
        return self.base.is_self_adjoint

    def apply(self, v):
        return self.base.apply(v) + self.c0 * np.asarray(v)

    def _solve(self, z, b):
        return self.base._solve(z - self.c0, b)

    def solve_many(self, zs, b):
        return self.base.solve_many(np.asarray(zs, dtype=complex) - self.c0, b)

    def eigh(self):
        mu, phi = self.base.eigh()
        return mu + self.c0, phi

    def to_dense(self):
        return self.base.to_dense() + self.c0 * np.eye(self.dim)

    def __repr__(self) -> str:
        return f"ShiftedOperator({self.base!r}, c0={self.c0})"


# ---------------------------------------------------------------------------
# norms and sector sweeps


def _spectral_norm(matvec, rmatvec, n: int, steps: int = 50, tol: float = 1e-8) -> float:
    """Largest singular value by power iteration on ``B^H B``."""
    rng = np.random.default_rng(12345)
    x = rng.standard_normal(n) + 0j
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(steps):
        y = matvec(x)
        new = float(np.linalg.norm(y))
        x = rmatvec(y)
        nx = np.linalg.norm(x)
        if nx == 0:
            return 0.0
        x = x / nx
        if abs(new - est) <= tol * new:
            return new
        est = new
    return est


def _dual(x: np.ndarray, p: float) -> np.ndarray:
    """Vector attaining the dual norm: ``<dual(x), x> = ||x||_p`` with ``||dual||_q = 1``."""
    ax = np.abs(x)
    nrm = np.linalg.norm(x, p)
    if nrm == 0:
        return np.zeros_like(x)
    phase = np.where(ax > 0, x / np.where(ax > 0, ax, 1), 0)
    return phase * (ax / nrm) ** (p - 1)


def _p_norm(B: np.ndarray, p: float, steps: int = 50, tol: float = 1e-8) -> float:
    """Matrix norm induced by the vector ``l^p`` norm."""
    if p == 2:
        return float(np.linalg.svd(B, compute_uv=False)[0])
    if p == 1:
        return float(np.max(np.sum(np.abs(B), axis=0)))
    if np.isinf(p):
        return float(np.max(np.sum(np.abs(B), axis=1)))
    # Boyd's power method for general p; start from the best column
    q = p / (p - 1)
    col = np.argmax(np.linalg.norm(B, p, axis=0))
    x = np.zeros(B.shape[1], dtype=complex)
    x[col] = 1.0
    est = 0.0
    for _ in range(steps):
        y = B @ x
        new = float(np.linalg.norm(y, p))
        z = B.conj().T @ _dual(y, p)
        x_new = _dual(z, q)
        if abs(new - est) <= tol * new:
            est = new
            break
        est, x = new, x_new
    return est


def _resolvent_norm(op: SectorialOperator, lam: complex, p: float) -> float:
    n = op.dim
    if p == 2 and n > SVD_LIMIT:
        mv = lambda v: op._solve(lam, v)  # noqa: E731
        if op.is_self_adjoint:
            rmv = lambda v: op._solve(np.conj(lam), v)  # noqa: E731
        else:
            dense_h = (lam * np.eye(n) - op.to_dense()).conj().T
            rmv = lambda v: np.linalg.solve(dense_h, v)  # noqa: E731
        return _spectral_norm(mv, rmv, n)
    R = resolvent_solve(op, lam, np.eye(n), check=False)
    return _p_norm(R, p)


def _default_sweep(gamma: float, lo: int, hi: int, per_ray: int) -> np.ndarray:
    """Samples on rays ``arg = 0, +-gamma/2, +-gamma`` with moduli ``10**lo .. 10**hi``."""
    mods = np.logspace(lo, hi, per_ray)
    angles = np.array([0.0, gamma / 2, -gamma / 2, gamma, -gamma])
    return (mods[:, None] * np.exp(1j * angles)[None, :]).ravel()


@dataclass
class SectorReport:
    """Outcome of a resolvent-bound sweep ``s(lam) = |lam| ||(lam - A)^-1||``."""

    gamma: float
    p: float
    samples: np.ndarray
    values: np.ndarray
    sup: float
    sup_extended: float
    stable: bool
    passed: bool = field(init=False)

    def __post_init__(self) -> None:
        self.passed = bool(self.stable and np.isfinite(self.sup))

    def to_dict(self) -> dict[str, Any]:
        return {
            "gamma": self.gamma,
            "p": "inf" if np.isinf(self.p) else self.p,
            "n_samples": int(self.samples.size),
            "sup": self.sup,
            "sup_extended": self.sup_extended,
            "stable": self.stable,
            "passed": self.passed,
        }


def verify_sector_bound(op: SectorialOperator, gamma: float, lambda_samples: Sequence[complex],
                        p: float = 2, rel_band: float = 0.10) -> SectorReport:
    """Sweep ``|lam| ||(lam - A)^-1||_p`` over samples in the closed sector ``|arg| <= gamma``.

    The sweep is repeated with every modulus scaled by 10 and by 1/10; the
    bound is reported stable when the supremum moves by at most ``rel_band``.
    """
    lam = np.asarray(lambda_samples, dtype=complex).ravel()
    if lam.size == 0:
        raise DomainError("no samples given")
    if p not in (1, 2, 4) and not np.isinf(p):
        raise DomainError("p must be one of 1, 2, 4, inf")
    spec = SectorSpec(gamma)
    if not np.all(spec.contains(lam)):
        raise DomainError("sample outside the sector |arg lambda| <= gamma")

    def sweep(points):
        return np.array([abs(l) * _resolvent_norm(op, l, p) for l in points])

    vals = sweep(lam)
    ext = sweep(np.concatenate([lam * 10.0, lam / 10.0]))
    sup = float(np.max(vals))
    sup_ext = float(max(sup, np.max(ext)))
    stable = bool(abs(sup_ext - sup) <= rel_band * sup)
    return SectorReport(gamma, p, lam, vals, sup, sup_ext, stable)


def fractional_power_apply(op: SectorialOperator, beta: float, v: np.ndarray) -> np.ndarray:
    """``(-A)**beta v`` through the eigendecomposition; ``v`` may hold columns."""
    if not 0 <= beta <= 1:
        raise DomainError("beta must lie in [0, 1]")
    mu, phi = op.eigh()
    v = np.asarray(v)
    if beta == 0:
        return v.copy()
    w = (-mu.astype(complex)) ** beta if np.iscomplexobj(mu) else (-mu) ** beta
    coef = phi.conj().T @ v
    coef = coef * (w if v.ndim == 1 else w[:, None])
    return phi @ coef


# ---------------------------------------------------------------------------
# configuration


def _complex_list(values) -> np.ndarray:
    out = []
    for v in values:
        if isinstance(v, (list, tuple)):
            out.append(complex(v[0], v[1]))
        else:
            out.append(v)
    return np.asarray(out)


def operator_from_config(cfg: dict[str, Any]) -> SectorialOperator:
    """Build an operator from a config block such as ``{"type": "laplacian1d", "n": 64}``.

    Recognized types: ``diagonal`` (``eigenvalues``; complex entries as
    ``[re, im]``), ``laplacian1d`` (``n``), ``elliptic1d`` (``n``, ``a``,
    ``c``; scalars or sample lists), ``matrix`` (``rows``).  Every type accepts
    ``gamma`` and an optional ``shift`` ``c0`` producing ``A + c0 I``.
    """
    kind = cfg.get("type")
    gamma = float(cfg.get("gamma", DEFAULT_GAMMA))
    if kind == "diagonal":
        op: SectorialOperator = DiagonalOperator(_complex_list(cfg["eigenvalues"]), gamma)
    elif kind == "laplacian1d":
        op = DirichletLaplacian1D(int(cfg["n"]), gamma)
    elif kind == "elliptic1d":
        op = VariableElliptic1D(cfg.get("a", 1.0), cfg.get("c", 0.0), int(cfg["n"]), gamma)
    elif kind == "matrix":
        op = MatrixOperator(np.asarray(cfg["rows"], dtype=float), gamma)
    else:
        raise DomainError(f"unknown operator type {kind!r}")
    shift = float(cfg.get("shift", 0.0))
    if shift:
        op = ShiftedOperator(op, shift)
    return op
