import numpy as np
import pytest

from fracop.errors import DomainError, IllPosedError
from fracop.fractional_calculus import TimeGrid
from fracop.evolution import solve_linear
from fracop.inverse import (
    ObservationSpec,
    default_obs_times,
    l_curve,
    middle_third,
    observation_map,
    observe,
    reconstruct_initial,
)
from fracop.operators import DirichletLaplacian1D
from fracop.solution_operators import apply_G


def test_spec_validation():
    with pytest.raises(DomainError):
        ObservationSpec([], [0.1])
    with pytest.raises(DomainError):
        ObservationSpec([1, 1], [0.1])
    with pytest.raises(DomainError):
        ObservationSpec([1], [0.0, 0.1])
    with pytest.raises(DomainError):
        ObservationSpec([1], [0.2, 0.1])
    with pytest.raises(DomainError):
        ObservationSpec([1], [0.1], noise_level=-1)
    with pytest.raises(DomainError):
        ObservationSpec([9], [0.1]).validate(8)
    assert ObservationSpec([2, 3], [0.5]).to_dict() == {"omega": [2, 3], "obs_times": [0.5], "noise_level": 0.0}


def test_helpers():
    np.testing.assert_array_equal(middle_third(32), np.arange(10, 22))
    t = default_obs_times(2.0, 5)
    assert t[0] == pytest.approx(2e-6) and t[-1] == 2.0
    assert np.allclose(np.diff(np.log(t)), np.log(t[1] / t[0]))


def test_small_case_injective():
    op = DirichletLaplacian1D(8)
    spec = ObservationSpec([3, 4], default_obs_times(1.0, 16))
    omap = observation_map(op, 0.5, spec)
    assert omap.matrix.shape == (32, 8)
    assert omap.sigma_min > 0 and omap.rank == 8


def test_single_time_rank_deficient():
    op = DirichletLaplacian1D(8)
    spec = ObservationSpec([3, 4], [0.5])
    omap = observation_map(op, 0.5, spec)
    assert omap.rank <= 2 and omap.singular_values.size == 8 and omap.sigma_min == 0
    data = omap.simulate(np.ones(8))
    with pytest.raises(IllPosedError):
        reconstruct_initial(omap, data, 0.0)
    a_hat, diag = reconstruct_initial(omap, data, 1e-6)
    assert diag["rank"] <= 2
    with pytest.raises(DomainError):
        reconstruct_initial(omap, data, -1.0)


def test_more_times_do_not_lower_sigma_min():
    op = DirichletLaplacian1D(8)
    times = default_obs_times(1.0, 24)
    prev = 0.0
    for k in (4, 8, 16, 24):
        s = observation_map(op, 0.5, ObservationSpec([3, 4], times[:k])).sigma_min
        assert s >= prev * (1 - 1e-9)
        prev = s


def test_full_omega_single_time_round_trip(rng):
    op = DirichletLaplacian1D(8)
    a = rng.standard_normal(8)
    spec = ObservationSpec(np.arange(8), [0.01])
    omap = observation_map(op, 0.5, spec)
    a_hat, diag = reconstruct_initial(omap, omap.simulate(a), 0.0)
    assert np.linalg.norm(a_hat - a) <= 1e-8 * np.linalg.norm(a)


def test_observation_linearity(rng):
    op = DirichletLaplacian1D(12)
    g = TimeGrid.graded(1.0, 30, 2.0)
    spec = ObservationSpec([4, 5, 6], g.nodes[[5, 12, 30]])
    omap = observation_map(op, 0.5, spec)
    a = rng.standard_normal(12)
    u = solve_linear(op, 0.5, a, None, g).trajectory
    direct = observe(u, spec, seed=None).vector
    assert np.linalg.norm(direct - omap.apply(a)) <= 1e-9 * np.linalg.norm(direct)


def test_observe_errors_and_noise(rng):
    op = DirichletLaplacian1D(6)
    g = TimeGrid.uniform(1.0, 10)
    u = solve_linear(op, 0.5, rng.standard_normal(6), None, g).trajectory
    with pytest.raises(DomainError):
        observe(u, ObservationSpec([1], [0.15]), seed=0)
    clean = observe(u, ObservationSpec([1, 2], [0.5, 1.0]), seed=0)
    np.testing.assert_array_equal(clean.values, u.values[[5, 10]][:, [1, 2]])
    spec = ObservationSpec([1, 2], [0.5, 1.0], noise_level=0.01)
    one = observe(u, spec, seed=7)
    two = observe(u, spec, seed=7)
    assert np.array_equal(one.values, two.values) and not np.array_equal(one.values, clean.values)
    assert one.metadata["clean_sha256"] == clean.metadata["clean_sha256"]
    assert not np.array_equal(observe(u, spec, seed=8).values, one.values)


def test_zero_data_gives_zero():
    op = DirichletLaplacian1D(8)
    omap = observation_map(op, 0.5, ObservationSpec([3, 4], default_obs_times(1.0, 8)))
    a_hat, _ = reconstruct_initial(omap, omap.simulate(np.zeros(8)), 1e-6)
    assert np.all(a_hat == 0)


def test_middle_third_reconstruction():
    op = DirichletLaplacian1D(32)
    a = np.sin(np.pi * op.x) + 0.5 * np.sin(2 * np.pi * op.x)
    spec = ObservationSpec(middle_third(32), default_obs_times(1.0, 32))
    omap = observation_map(op, 0.5, spec)
    assert omap.sigma_min > 0
    a_hat, diag = reconstruct_initial(omap, omap.simulate(a), 1e-12)
    assert np.linalg.norm(a_hat - a) / np.linalg.norm(a) <= 5e-2
    assert diag["sigma_max"] >= diag["sigma_min"]


def test_l_curve_rows():
    op = DirichletLaplacian1D(16)
    a = np.sin(np.pi * op.x)
    spec = ObservationSpec(middle_third(16), default_obs_times(1.0, 16), noise_level=0.01)
    omap = observation_map(op, 0.5, spec)
    data = omap.simulate(a, seed=3)
    rows = l_curve(omap, data, [1e-8, 1e-5, 1e-2], truth=a)
    assert [r["reg"] for r in rows] == [1e-8, 1e-5, 1e-2]
    res = [r["residual_norm"] for r in rows]
    sol = [r["solution_norm"] for r in rows]
    # Tikhonov: residual grows and solution norm shrinks with reg
    assert res == sorted(res) and sol == sorted(sol, reverse=True)
    assert all("rel_error" in r for r in rows)


def test_matrix_matches_G(rng):
    op = DirichletLaplacian1D(6)
    spec = ObservationSpec([0, 5], [0.1, 0.4])
    omap = observation_map(op, 0.5, spec)
    a = rng.standard_normal(6)
    exp = np.concatenate([apply_G(op, 0.5, t, a)[[0, 5]] for t in (0.1, 0.4)])
    np.testing.assert_allclose(omap.apply(a), exp, rtol=1e-9, atol=1e-12)
