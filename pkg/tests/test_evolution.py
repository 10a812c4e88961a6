import math

import numpy as np
import pytest

from fracop.errors import (
    BallViolationError,
    ContractionError,
    DomainError,
    NonConvergenceError,
)
from fracop.evolution import (
    DuhamelSolver,
    ForcingTerm,
    NonlinearForcing,
    residual_sup,
    solve_linear,
    solve_semilinear,
    solve_shifted,
)
from fracop.fractional_calculus import GridFunction, TimeGrid
from fracop.mittag_leffler import ml
from fracop.operators import DiagonalOperator, DirichletLaplacian1D, ShiftedOperator
from fracop.solution_operators import apply_G
from fracop.verification import eigen_expansion_solution

SCALAR = DiagonalOperator([-1.0])


def test_homogeneous_is_G(rng):
    op = DirichletLaplacian1D(16)
    a = rng.standard_normal(16)
    g = TimeGrid.graded(1.0, 20, 2.0)
    u = solve_linear(op, 0.5, a, None, g).trajectory.values
    np.testing.assert_array_equal(u[0], a)
    for t, row in zip(g.nodes[1:], u[1:]):
        assert np.linalg.norm(row - apply_G(op, 0.5, t, a)) <= 1e-9 * np.linalg.norm(a)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.8])
def test_constant_forcing_scalar_oracle(alpha):
    g = TimeGrid.graded(2.0, 64, 2.0)
    rep = solve_linear(SCALAR, alpha, np.zeros(1), ForcingTerm.from_callable(lambda t: np.ones(1)), g)
    u = rep.trajectory.values[1:, 0]
    t = g.nodes[1:]
    exact = t**alpha * ml((alpha, alpha + 1), -(t**alpha)).real
    assert np.max(np.abs(u - exact) / np.abs(exact)) <= 1e-7


def test_laplacian_sine_forcing_oracle(rng):
    op = DirichletLaplacian1D(64)
    a = rng.standard_normal(64)
    b = rng.standard_normal(64)
    F = ForcingTerm.from_callable(lambda t: math.sin(t) * b)
    g = TimeGrid.uniform(1.0, 200)
    u = solve_linear(op, 0.5, a, F, g).trajectory.values
    ref, budget = eigen_expansion_solution(op, 0.5, a, F, g)
    assert np.max(np.abs(u - ref.values)) <= 1e-6 * np.max(np.abs(ref.values))


def test_superposition(rng):
    op = DirichletLaplacian1D(20)
    a = rng.standard_normal(20)
    b = rng.standard_normal(20)
    F = ForcingTerm.from_callable(lambda t: np.cos(3 * t) * b)
    g = TimeGrid.graded(1.0, 40, 2.0)
    full = solve_linear(op, 0.6, a, F, g).trajectory.values
    hom = solve_linear(op, 0.6, a, None, g).trajectory.values
    inh = solve_linear(op, 0.6, np.zeros(20), F, g).trajectory.values
    assert np.max(np.abs(full - hom - inh)) <= 1e-11 * np.max(np.abs(full))


def test_forcing_validation(rng):
    g = TimeGrid.uniform(1.0, 4)
    with pytest.raises(DomainError):
        solve_linear(SCALAR, 0.5, np.ones(1), ForcingTerm.from_callable(lambda t: np.array([np.nan])), g)
    with pytest.raises(DomainError):
        solve_linear(SCALAR, 0.5, np.array([np.inf]), None, g)
    other = TimeGrid.uniform(2.0, 4)
    with pytest.raises(DomainError):
        solve_linear(SCALAR, 0.5, np.ones(1), ForcingTerm.from_grid(GridFunction(other, np.ones(5))), g)
    with pytest.raises(DomainError):
        DuhamelSolver(SCALAR, 0.5, g).convolve(np.ones((5, 1)), kernel="H")


def test_sampled_forcing_equals_callable():
    g = TimeGrid.graded(1.0, 30, 1.5)
    fn = lambda t: np.array([t**2])  # noqa: E731
    a = solve_linear(SCALAR, 0.5, np.ones(1), ForcingTerm.from_callable(fn), g).trajectory.values
    samples = GridFunction(g, g.nodes**2)
    b = solve_linear(SCALAR, 0.5, np.ones(1), ForcingTerm.from_grid(samples), g).trajectory.values
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("case", ["forced-matrix", "scalar-initial"])
def test_residual_decreases_under_refinement(case, rng):
    alpha = 0.5
    if case == "forced-matrix":
        op = DirichletLaplacian1D(16)
        a = np.zeros(16)
        b = rng.standard_normal(16)
        F = ForcingTerm.from_callable(lambda t: math.sin(t) * b)
    else:
        op, a, F = SCALAR, np.ones(1), None
    res = []
    for n in (32, 64, 128):
        g = TimeGrid.graded(1.0, n, (2 - alpha) / alpha)
        u = solve_linear(op, alpha, a, F, g).trajectory
        Fs = (F or ForcingTerm.zero()).sample(g, op.dim)
        # with a != 0 the L1 start-up defect pins the first nodes; measure from t = 0.1 on
        skip = 1 if case == "forced-matrix" else int(np.searchsorted(g.nodes, 0.1))
        res.append(residual_sup(op, alpha, u, a, Fs, skip=skip))
    assert res[2] < res[1] < res[0]
    assert min(math.log2(res[0] / res[1]), math.log2(res[1] / res[2])) >= 1 - alpha


def test_shifted_c0_zero_is_linear(rng):
    op = DirichletLaplacian1D(12)
    a = rng.standard_normal(12)
    g = TimeGrid.graded(1.0, 20, 2.0)
    rep = solve_shifted(op, 0.0, 0.5, a, None, g)
    assert rep.iterations == 1 and rep.increments == []
    np.testing.assert_array_equal(rep.trajectory.values, solve_linear(op, 0.5, a, None, g).trajectory.values)


def test_shifted_scalar_closed_form():
    # c0 u_n is treated as piecewise linear, so the error is second order in the step
    errs = []
    for n in (64, 128):
        g = TimeGrid.graded(1.0, n, 3.0)
        rep = solve_shifted(DiagonalOperator([-2.0]), 1.0, 0.5, np.ones(1), None, g, tol=1e-12)
        exact = ml((0.5, 1.0), -(g.nodes**0.5)).real
        errs.append(np.max(np.abs(rep.trajectory.values[:, 0] - exact)))
    assert errs[1] <= 1e-5 and math.log2(errs[0] / errs[1]) >= 1.8
    # super-geometric decay of the increments
    assert rep.ratios[-1] < rep.ratios[0]
    assert len(rep.theoretical) == len(rep.increments)
    assert all(x >= 0 for x in rep.theoretical)


def test_shifted_matches_assembled(rng):
    base = DirichletLaplacian1D(12)
    a = rng.standard_normal(12)
    b = rng.standard_normal(12)
    F = ForcingTerm.from_callable(lambda t: t * b)
    diffs = []
    for n in (64, 128):
        g = TimeGrid.graded(1.0, n, 3.0)
        pic = solve_shifted(base, 3.0, 0.5, a, F, g, tol=1e-12).trajectory.values
        lin = solve_linear(ShiftedOperator(base, 3.0), 0.5, a, F, g).trajectory.values
        diffs.append(np.max(np.abs(pic - lin)))
    # grid-limited agreement that improves at second order
    assert diffs[1] <= 2e-4 and math.log2(diffs[0] / diffs[1]) >= 1.5


def test_shifted_nonconvergence():
    g = TimeGrid.graded(1.0, 16, 2.0)
    with pytest.raises(NonConvergenceError) as exc:
        solve_shifted(DiagonalOperator([-2.0]), 1.0, 0.5, np.ones(1), None, g, tol=1e-14, max_iter=2)
    assert len(exc.value.history) == 2


def test_semilinear_zero_forcing(rng):
    op = DirichletLaplacian1D(10)
    a = rng.standard_normal(10)
    g = TimeGrid.graded(0.5, 20, 3.0)
    rep = solve_semilinear(op, 0.5, a, NonlinearForcing(lambda t, u: np.zeros_like(u)), 0.0, g)
    assert rep.iterations == 1 and rep.rho_hat == 0.0
    np.testing.assert_allclose(rep.trajectory.values, solve_linear(op, 0.5, a, None, g).trajectory.values,
                               atol=1e-14)


def test_semilinear_forced_identity():
    # A = -1 and F(u) = u cancel, so the solution stays at a
    g = TimeGrid.graded(0.5, 40, 3.0)
    rep = solve_semilinear(SCALAR, 0.5, np.array([0.7]), NonlinearForcing(lambda t, u: u), 0.0, g, tol=1e-12)
    assert np.max(np.abs(rep.trajectory.values - 0.7)) <= 1e-9
    assert rep.rho_hat < 1


def _sin_problem():
    op = DirichletLaplacian1D(12)
    x = op.x
    a = np.sin(np.pi * x) + 0.3 * np.sin(3 * np.pi * x)
    F = NonlinearForcing(lambda t, u: np.sin(u), M=1e3, C_M=1.0)
    return op, a, F


def test_semilinear_uniqueness_surrogate():
    op, a, F = _sin_problem()
    g = TimeGrid.graded(0.5, 40, 3.0)
    tol = 1e-10
    one = solve_semilinear(op, 0.5, a, F, 0.25, g, tol=tol).trajectory.values
    guess = np.tile(a * 1.5, (len(g), 1))
    two = solve_semilinear(op, 0.5, a, F, 0.25, g, tol=tol, initial=guess).trajectory.values
    assert np.max(np.linalg.norm(one - two, axis=1)) <= 2 * tol * 10


def test_semilinear_stability_in_a(rng):
    op, a, F = _sin_problem()
    g = TimeGrid.graded(0.5, 30, 3.0)
    base = solve_semilinear(op, 0.5, a, F, 0.0, g).trajectory.values
    ratios = []
    for _ in range(4):
        d = 0.05 * rng.standard_normal(12)
        other = solve_semilinear(op, 0.5, a + d, F, 0.0, g).trajectory.values
        ratios.append(np.max(np.linalg.norm(other - base, axis=1)) / np.linalg.norm(d))
    assert max(ratios) < 10


def test_ball_violation():
    op, a, _ = _sin_problem()
    g = TimeGrid.graded(0.5, 10, 3.0)
    F = NonlinearForcing(lambda t, u: np.sin(u), M=0.1)
    with pytest.raises(BallViolationError):
        solve_semilinear(op, 0.5, a, F, 0.0, g)


def test_contraction_failure():
    g = TimeGrid.graded(10.0, 20, 2.0)
    F = NonlinearForcing(lambda t, u: 5.0 * u)
    with pytest.raises(ContractionError) as exc:
        solve_semilinear(SCALAR, 0.5, np.ones(1), F, 0.0, g, max_iter=50)
    assert all(r >= 1 for r in exc.value.ratios[-3:])


def test_semilinear_argument_checks():
    g = TimeGrid.uniform(1.0, 4)
    F = NonlinearForcing(lambda t, u: u)
    with pytest.raises(DomainError):
        solve_semilinear(SCALAR, 0.5, np.ones(1), F, 1.0, g)
    with pytest.raises(DomainError):
        solve_semilinear(SCALAR, 0.5, np.ones(1), NonlinearForcing(lambda t, u: u * np.nan), 0.0, g)
    with pytest.raises(NonConvergenceError):
        solve_semilinear(SCALAR, 0.5, np.ones(1), NonlinearForcing(lambda t, u: 0.5 * u), 0.0, g,
                         tol=1e-15, max_iter=2)


def test_report_dict():
    g = TimeGrid.graded(1.0, 16, 2.0)
    rep = solve_shifted(DiagonalOperator([-2.0]), 1.0, 0.5, np.ones(1), None, g)
    d = rep.to_dict()
    assert d["converged"] and d["iterations"] == rep.iterations
    assert d["increments"][-1] <= 1e-10
