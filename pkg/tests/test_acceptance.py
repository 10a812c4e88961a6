"""Acceptance gate: one test group per criterion, each recording a PASS/FAIL line.

The lines are printed in the "acceptance criteria" section of the pytest
terminal summary (see ``conftest.py``).
"""

import cmath
import math
import time

import numpy as np
import pytest

from fracop import cli
from fracop.evolution import ForcingTerm, NonlinearForcing, solve_semilinear, solve_shifted
from fracop.fractional_calculus import TimeGrid
from fracop.inverse import (ObservationSpec, default_obs_times, l_curve, middle_third, observation_map,
                            reconstruct_initial)
from fracop.mittag_leffler import ml, ml_methods
from fracop.operators import DiagonalOperator, DirichletLaplacian1D
from fracop.solution_operators import apply_G, apply_K
from fracop.verification import (check_cross_representation, check_decay, check_estimate_slope,
                                 check_integral_identity, check_laplace_identity, check_oracle_agreement,
                                 check_residual_order, holder_sweep)

ALPHAS = (0.3, 0.5, 0.8)
SCALAR = DiagonalOperator([-1.0])


@pytest.fixture(scope="module")
def lap64():
    return DirichletLaplacian1D(64)


# 1 ---------------------------------------------------------------------------

def test_c01_scalar_oracle(oracles, record):
    worst_g = worst_k = 0.0
    for row in oracles["scalar"]:
        a, t = row["alpha"], row["t"]
        g = apply_G(SCALAR, a, t, np.ones(1))[0]
        k = apply_K(SCALAR, a, t, np.ones(1))[0]
        worst_g = max(worst_g, abs(g - row["G"]))
        worst_k = max(worst_k, abs(k - row["K"]) / abs(row["K"]))
    ok = worst_g <= 1e-10 and worst_k <= 1e-8 and len(oracles["scalar"]) == 60
    record(1, ok, f"max |G-E| = {worst_g:.2e} (<= 1e-10), max rel K = {worst_k:.2e} (<= 1e-8)")
    assert ok


# 2 ---------------------------------------------------------------------------

def test_c02_matrix_oracle(lap64, record):
    rng = np.random.default_rng(2)
    a, b = rng.standard_normal(64), rng.standard_normal(64)
    F = ForcingTerm.from_callable(lambda t: math.sin(t) * b)
    t0 = time.perf_counter()
    rep = check_oracle_agreement(lap64, 0.5, a, F, TimeGrid.uniform(1.0, 256))
    wall = time.perf_counter() - t0
    ok = rep.value <= 1e-6 and wall <= 10.0
    record(2, ok, f"rel sup diff = {rep.value:.2e} (<= 1e-6), {wall:.1f} s (<= 10 s)")
    assert ok


# 3 ---------------------------------------------------------------------------

def test_c03_laplace_identity(lap64, record):
    a = np.random.default_rng(3).standard_normal(64)
    rep = check_laplace_identity(lap64, 0.5, a, [1.0, 2.0, 4.0, 2 + 2j, 8.0])
    ok = rep.stable and rep.value <= 1e-5
    record(3, ok, f"max rel deviation = {rep.value:.2e} over 5 lambdas (<= 1e-5)")
    assert ok


# 4 ---------------------------------------------------------------------------

# G and J^beta G at beta = 0 have a zero exponent: the norm tends to a
# constant, a flat line cannot reach R^2 >= 0.99 on a log-log fit.
_ZERO_SLOPE = {("G", 0.0), ("JbetaG", 0.0)}


def _c4_cases():
    for alpha in ALPHAS:
        for probe in ("G", "K", "Gprime", "dJtauG", "JbetaG"):
            for beta in (0.0, 0.5, 1.0):
                marks = []
                if (probe, beta) in _ZERO_SLOPE:
                    marks = [pytest.mark.xfail(strict=True, reason="zero exponent: R^2 of a flat fit is undefined")]
                yield pytest.param(probe, beta, alpha, marks=marks, id=f"{probe}-b{beta}-a{alpha}")


@pytest.mark.parametrize("probe,beta,alpha", list(_c4_cases()))
def test_c04_smoothing_slopes(probe, beta, alpha, lap64, record):
    tau = 0.5 if probe == "dJtauG" else None
    fit = check_estimate_slope(probe, lap64, alpha, beta, tau)
    ok = fit.verdict == "pass"
    if not ok:
        record(4, False, f"{probe} beta={beta} alpha={alpha}: slope {fit.slope:.3f} vs {fit.expected:.3f}, "
                         f"R^2 {fit.r2:.3f}")
    else:
        record(4, True, f"{probe} beta={beta} alpha={alpha}: slope {fit.slope:.3f}")
    assert ok


# 5 ---------------------------------------------------------------------------

@pytest.mark.parametrize("alpha", ALPHAS)
def test_c05_decay(alpha, record):
    fits = [check_decay(DiagonalOperator([-1.0]), alpha), check_decay(DirichletLaplacian1D(32), alpha)]
    ok = all(abs(f.slope + alpha) <= 0.05 and f.verdict == "pass" for f in fits)
    record(5, ok, f"alpha={alpha}: slopes {fits[0].slope:.3f} (scalar), {fits[1].slope:.3f} (laplacian)")
    assert ok


# 6 ---------------------------------------------------------------------------

@pytest.mark.parametrize("alpha", ALPHAS)
def test_c06_residual_order(alpha, lap64, record):
    b = np.random.default_rng(6).standard_normal(64)
    F = ForcingTerm.from_callable(lambda t: math.sin(t) * b)
    rep = check_residual_order(lap64, alpha, np.zeros(64), F, n0=128)
    orders = rep.details["orders"]
    decreasing = all(s["residual"] > t["residual"] for s, t in zip(rep.samples, rep.samples[1:]))
    ok = rep.passed and decreasing
    record(6, ok, f"alpha={alpha}: orders {orders[0]:.2f}, {orders[1]:.2f} (>= {1 - alpha:.1f})")
    assert ok


# 7 ---------------------------------------------------------------------------

@pytest.mark.parametrize("alpha", ALPHAS)
def test_c07_cross_representation(alpha, record):
    rep = check_cross_representation(SCALAR, alpha, np.ones(1), np.geomspace(1e-3, 1e3, 20))
    ok = rep.value <= 1e-7
    record(7, ok, f"alpha={alpha}: max rel = {rep.value:.2e} (<= 1e-7)")
    assert ok


# 8 ---------------------------------------------------------------------------

@pytest.mark.parametrize("alpha", ALPHAS)
def test_c08_integral_identity(alpha, record):
    s = check_integral_identity(SCALAR, alpha, np.ones(1), n_nodes=4096, target=1e-5)
    a = np.random.default_rng(8).standard_normal(32)
    m = check_integral_identity(DirichletLaplacian1D(32), alpha, a, n_nodes=4096, target=1e-4)
    ok = s.passed and m.passed
    record(8, ok, f"alpha={alpha}: scalar {s.value:.1e} (<= 1e-5), N=32 {m.value:.1e} (<= 1e-4), "
                  f"both decreasing")
    assert ok


# 9 ---------------------------------------------------------------------------

@pytest.mark.parametrize("alpha", ALPHAS)
def test_c09_shifted_picard(alpha, record):
    g = TimeGrid.graded(1.0, 512, (2 - alpha) / alpha)
    rep = solve_shifted(DiagonalOperator([-2.0]), 1.0, alpha, np.ones(1), None, g, tol=1e-12)
    exact = ml((alpha, 1.0), -(g.nodes**alpha)).real
    err = float(np.max(np.abs(rep.trajectory.values[:, 0] - exact)))
    monotone = bool(np.all(np.diff(rep.ratios[2:]) < 0))
    ok = err <= 1e-6 and rep.iterations <= 25 and monotone
    record(9, ok, f"alpha={alpha}: error {err:.1e} (<= 1e-6), {rep.iterations} iterations (<= 25), "
                  f"ratios monotone after 3: {monotone}")
    assert ok


# 10 --------------------------------------------------------------------------

def test_c10_semilinear(record):
    op = DirichletLaplacian1D(32)
    a = np.sin(np.pi * op.x) + 0.5 * np.sin(3 * np.pi * op.x)
    F = NonlinearForcing(lambda t, u: np.sin(u), M=1e3, C_M=1.0)
    tol = 1e-10
    g = TimeGrid.graded(0.5, 64, 3.0)
    r1 = solve_semilinear(op, 0.5, a, F, 0.25, g, tol=tol)
    r2 = solve_semilinear(op, 0.5, a, F, 0.25, g, tol=tol, initial=np.tile(-a, (len(g), 1)))
    r3 = solve_semilinear(op, 0.5, a, F, 0.25, g.refine(), tol=tol)
    guesses = float(np.max(np.abs(r1.trajectory.values - r2.trajectory.values)))
    halving = float(np.max(np.abs(r3.trajectory.values[::2] - r1.trajectory.values)))
    ok = (r1.converged and r2.converged and r1.rho_hat < 1 and guesses <= 2 * tol and halving <= 1e-4)
    record(10, ok, f"rho_hat = {r1.rho_hat:.3f} (< 1), guesses differ {guesses:.1e} (<= {2 * tol:g}), "
                   f"halving {halving:.1e} (<= 1e-4)")
    assert ok


# 11 --------------------------------------------------------------------------

def test_c11_holder(record):
    op = DirichletLaplacian1D(32)
    b = np.random.default_rng(11).standard_normal(32)
    sigmas = [round(0.1 * k, 1) for k in range(1, 10)]
    reports, _ = holder_sweep(op, 0.5, lambda t: math.sin(t) * b, TimeGrid.uniform(1.0, 128),
                              sigmas=sigmas, refinements=2)
    by_sigma = dict(zip(sigmas, reports))
    target = by_sigma[0.3]
    ok = len(reports) == 9 and target.stable and all(c <= 0.1 for c in target.details["changes"])
    record(11, ok, f"sigma=0.3 changes {[round(c, 4) for c in target.details['changes']]} (<= 10%), "
                   f"report for {len(reports)} sigmas")
    assert ok


# 12 --------------------------------------------------------------------------

def test_c12_inverse(record):
    op = DirichletLaplacian1D(32)
    a = np.sin(np.pi * op.x) + 0.5 * np.sin(2 * np.pi * op.x)
    spec = ObservationSpec(middle_third(32), default_obs_times(1.0, 32))
    omap = observation_map(op, 0.5, spec)
    # sigma_min sits below the unregularized floor, so a negligible Tikhonov term is used
    a_hat, _ = reconstruct_initial(omap, omap.simulate(a), 1e-12)
    err = float(np.linalg.norm(a_hat - a) / np.linalg.norm(a))
    noisy = ObservationSpec(spec.omega, spec.obs_times, noise_level=0.01)
    omap_n = observation_map(op, 0.5, noisy)
    rows = l_curve(omap_n, omap_n.simulate(a, seed=12), np.geomspace(1e-10, 1e-1, 10), truth=a)
    ok = omap.sigma_min > 0 and err <= 5e-2 and len(rows) == 10
    best = min(r["rel_error"] for r in rows)
    record(12, ok, f"sigma_min = {omap.sigma_min:.1e} (> 0), rel error {err:.1e} (<= 5e-2); "
                   f"1% noise L-curve: {len(rows)} rows, best rel error {best:.2f}")
    assert ok


# 13 --------------------------------------------------------------------------

def test_c13_mittag_leffler(record):
    rng = np.random.default_rng(13)
    z = 30 * np.sqrt(rng.uniform(0, 1, 100)) * np.exp(1j * rng.uniform(-math.pi, math.pi, 100))
    got = ml((1.0, 1.0), z)
    ref = np.array([cmath.exp(w) for w in z])
    exp_err = float(np.max(np.abs(got - ref) / np.abs(ref)))

    zero_err = 0.0
    for a1 in (0.3, 0.5, 0.8, 1.0, 1.7):
        for a2 in (0.2, 0.5, 1.0, 1.5, 2.5):
            zero_err = max(zero_err, abs(complex(ml((a1, a2), 0.0)) - 1 / math.gamma(a2)) * math.gamma(a2))

    cross = 0.0
    for a1, a2 in [(0.5, 1.0), (0.3, 1.0), (0.8, 0.8), (0.6, 1.6)]:
        r = rng.uniform(8, 40, 200)
        w = r * np.exp(1j * rng.uniform(-math.pi, math.pi, 200))
        methods = ml_methods((a1, a2), w)
        names = list(methods)
        for i, p in enumerate(names):
            for q in names[i + 1:]:
                (vp, ep), (vq, eq) = methods[p], methods[q]
                scale = np.maximum(np.abs(vp), 1e-300)
                sel = (ep <= 1e-12 * scale) & (eq <= 1e-12 * scale) & np.isfinite(vp) & np.isfinite(vq)
                if np.any(sel):
                    rel = np.abs(vp[sel] - vq[sel]) / np.maximum(np.abs(vq[sel]), 1e-300)
                    cross = max(cross, float(rel.max()))
    ok = exp_err <= 1e-12 and zero_err <= 1e-14 and cross <= 1e-9
    record(13, ok, f"E11 vs exp {exp_err:.1e} (<= 1e-12), E(0) {zero_err:.1e} (<= 1e-14), "
                   f"crossover {cross:.1e} (<= 1e-9)")
    assert ok


# 14 --------------------------------------------------------------------------

_RUNS = [
    ["ml", "--a1", "0.5", "--a2", "1", "--z", "-1", "--z", "2+1j"],
    ["solve", "--op", "laplacian1d", "--n", "16", "--alpha", "0.5", "--grid-n", "32", "--forcing", "sin",
     "--initial", "random", "--residual", "--oracle"],
    ["semilinear", "--op", "laplacian1d", "--n", "8", "--alpha", "0.5", "--T", "0.5", "--grid-n", "16"],
    ["verify", "--suite", "cross", "--op", "laplacian1d", "--n", "8", "--alpha", "0.5"],
    ["verify", "--suite", "slopes", "--op", "laplacian1d", "--n", "16", "--alpha", "0.5", "--betas", "0.5"],
    ["invert", "--op", "laplacian1d", "--n", "8", "--noise", "0.01", "--reg", "1e-6"],
]


def _artifacts(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())
            if p.suffix in (".csv", ".json") and p.name != "manifest.json"}


def test_c14_determinism(tmp_path, capsys, record):
    mismatched, files = [], 0
    for k, args in enumerate(_RUNS):
        dirs = [tmp_path / f"{k}-{rep}" for rep in (0, 1)]
        for d in dirs:
            cli.main([*args, "--seed", "14", "--out", str(d)])
        capsys.readouterr()
        a, b = _artifacts(dirs[0]), _artifacts(dirs[1])
        files += len(a)
        if not a or a != b:
            mismatched.append(args[0])
    ok = not mismatched
    record(14, ok, f"{files} CSV/JSON artifacts from {len(_RUNS)} runs byte-identical"
           if ok else f"differences in {mismatched}")
    assert ok
