import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fracop.errors import DomainError
from fracop.fractional_calculus import (
    FractionalOrder,
    GridFunction,
    TimeGrid,
    as_order,
    caputo_l1,
    numerical_laplace,
    power_weighted_integral,
    riemann_liouville_integral,
)
from fracop.mittag_leffler import ml


def test_order_validation():
    for bad in (0.0, 1.0, -0.2, 1.5, float("nan")):
        with pytest.raises(DomainError):
            FractionalOrder(bad)
    assert as_order(0.4).alpha == 0.4


def test_grid_validation():
    with pytest.raises(DomainError):
        TimeGrid(np.array([0.0]))
    with pytest.raises(DomainError):
        TimeGrid(np.array([0.1, 0.5]))
    with pytest.raises(DomainError):
        TimeGrid(np.array([0.0, 0.5, 0.5]))
    g = TimeGrid.graded(2.0, 8, 3.0)
    assert g.nodes[0] == 0 and g.T == 2.0 and len(g) == 9
    r = g.refine()
    assert np.array_equal(r.nodes[::2], g.nodes)


def test_gridfunction_shapes():
    g = TimeGrid.uniform(1.0, 4)
    with pytest.raises(DomainError):
        GridFunction(g, np.zeros((3, 2)))
    assert GridFunction(g, np.zeros(5)).dim == 1


def test_csv_roundtrip(tmp_path):
    g = TimeGrid.graded(1.0, 7, 2.0)
    v = GridFunction(g, np.random.default_rng(1).standard_normal((8, 3)) * (1 + 0.5j))
    v.to_csv(tmp_path / "v.csv")
    w = GridFunction.from_csv(tmp_path / "v.csv")
    assert np.array_equal(w.values, v.values)
    assert np.array_equal(w.t, v.t)


@pytest.mark.parametrize("k", [0, 1])
@pytest.mark.parametrize("beta", [0.3, 0.5, 1.0])
def test_rl_power_rule_exact(k, beta):
    g = TimeGrid.graded(2.0, 40, 2.0)
    v = GridFunction(g, g.nodes**k)
    w = riemann_liouville_integral(v, beta).values[:, 0]
    exact = math.gamma(k + 1) / math.gamma(k + 1 + beta) * g.nodes ** (k + beta)
    np.testing.assert_allclose(w, exact, rtol=1e-12, atol=1e-15)


def test_rl_quadratic_second_order():
    errs = []
    for n in (32, 64, 128):
        g = TimeGrid.uniform(1.0, n)
        w = riemann_liouville_integral(GridFunction(g, g.nodes**2), 0.5).values[:, 0]
        exact = 2 / math.gamma(3.5) * g.nodes**2.5
        errs.append(np.max(np.abs(w - exact)))
    assert math.log2(errs[0] / errs[1]) > 1.9 and math.log2(errs[1] / errs[2]) > 1.9


def test_rl_zero_and_range():
    g = TimeGrid.uniform(1.0, 8)
    assert np.all(riemann_liouville_integral(GridFunction(g, np.zeros(9)), 0.4).values == 0)
    with pytest.raises(DomainError):
        riemann_liouville_integral(GridFunction(g, np.zeros(9)), 0.0)
    with pytest.raises(DomainError):
        riemann_liouville_integral(GridFunction(g, np.zeros(9)), 1.2)


def test_rl_semigroup():
    errs = []
    for n in (64, 128, 256):
        g = TimeGrid.uniform(1.0, n)
        v = GridFunction(g, np.cos(3 * g.nodes))
        two = riemann_liouville_integral(riemann_liouville_integral(v, 0.3), 0.4)
        one = riemann_liouville_integral(v, 0.7)
        errs.append(float(np.max(np.abs(two.values - one.values))))
    assert errs[2] < errs[1] < errs[0]


@given(st.floats(0.1, 0.9), st.floats(-3, 3), st.integers(0, 2**31))
def test_linearity(alpha, c, seed):
    rng = np.random.default_rng(seed)
    g = TimeGrid.graded(1.0, 16, 1.5)
    u, v = rng.standard_normal((2, 17, 2))
    U, V = GridFunction(g, u), GridFunction(g, v)
    for op in (lambda f: caputo_l1(f, alpha), lambda f: riemann_liouville_integral(f, alpha)):
        lhs = op(U + c * V).values
        rhs = op(U).values + c * op(V).values
        np.testing.assert_allclose(lhs, rhs, rtol=1e-11, atol=1e-11)


def test_caputo_constant_is_zero():
    g = TimeGrid.graded(1.0, 20, 2.0)
    assert np.all(caputo_l1(GridFunction(g, np.full(21, 3.0)), 0.5).values == 0)


def test_caputo_power_order():
    alpha = 0.5
    errs = []
    for n in (64, 128, 256):
        g = TimeGrid.uniform(1.0, n)
        d = caputo_l1(GridFunction(g, g.nodes**2), alpha).values[1:, 0]
        exact = 2 / math.gamma(3 - alpha) * g.nodes[1:] ** (2 - alpha)
        errs.append(np.max(np.abs(d - exact)))
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert min(orders) >= 2 - alpha - 0.1


def test_caputo_t_alpha_converges():
    alpha = 0.5
    errs = []
    for n in (64, 256, 1024):
        g = TimeGrid.uniform(1.0, n)
        d = caputo_l1(GridFunction(g, g.nodes**alpha), alpha).values[-1, 0]
        errs.append(abs(d - math.gamma(1 + alpha)))
    assert errs[2] < errs[1] < errs[0]


def test_inverse_pair():
    alpha = 0.4
    errs = []
    for n in (64, 128, 256):
        g = TimeGrid.uniform(1.0, n)
        w = GridFunction(g, np.abs(g.nodes - 0.3) + g.nodes)  # Lipschitz
        back = caputo_l1(riemann_liouville_integral(w, alpha), alpha)
        # the first steps carry an O(1) error from the t^alpha start; look away from 0
        away = g.nodes >= 0.5
        errs.append(float(np.max(np.abs(back.values[away] - w.values[away]))))
    assert errs[2] < errs[1] < errs[0]
    assert math.log2(errs[0] / errs[2]) / 2 >= 1 - alpha


def test_relaxation_residual_converges():
    # E_a(-mu t^a) solves D^a(u - 1) = -mu u
    alpha, mu = 0.6, 2.0
    res = []
    for n in (64, 128, 256):
        g = TimeGrid.graded(1.0, n, (2 - alpha) / alpha)
        u = ml((alpha, 1.0), -mu * g.nodes**alpha)
        d = caputo_l1(GridFunction(g, u - 1.0), alpha).values[1:, 0]
        res.append(np.max(np.abs(d + mu * u[1:])))
    assert res[2] < res[1] < res[0]


def test_laplace_examples():
    g = TimeGrid.uniform(40.0, 4000)
    one, tail = numerical_laplace(GridFunction(g, np.ones(g.nodes.size)), 1.0)
    assert one[0] == pytest.approx(1 - math.exp(-40), rel=1e-12)
    assert tail == pytest.approx(math.exp(-40))
    T = 30.0
    g = TimeGrid.uniform(T, 3000)
    v, _ = numerical_laplace(GridFunction(g, np.exp(-g.nodes)), 1.0)
    assert v[0] == pytest.approx((1 - math.exp(-2 * T)) / 2, rel=1e-5)
    with pytest.raises(DomainError):
        numerical_laplace(GridFunction(g, np.ones(g.nodes.size)), -1 + 1j)


def test_laplace_of_relaxation():
    alpha, lam = 0.5, 2.0
    g = TimeGrid.geometric(1e-12, 60.0, 6000)
    u = ml((alpha, 1.0), -g.nodes**alpha)
    v, tail = numerical_laplace(GridFunction(g, u), lam)
    exact = lam ** (alpha - 1) / (lam**alpha + 1)
    assert abs(v[0] - exact) <= 1e-5 * exact
    assert tail < 1e-40


def test_power_weighted_integral_exact_for_linear():
    g = TimeGrid.graded(1.5, 30, 2.5)
    p = -0.6
    v = GridFunction(g, 2.0 + 3.0 * g.nodes)
    w = power_weighted_integral(v, p).values[:, 0]
    t = g.nodes
    exact = 2.0 * t ** (p + 1) / (p + 1) + 3.0 * t ** (p + 2) / (p + 2)
    np.testing.assert_allclose(w, exact, rtol=1e-13, atol=1e-15)
    with pytest.raises(DomainError):
        power_weighted_integral(v, -1.0)
