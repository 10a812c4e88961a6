"""Smoothing rates of the solution operators on the 1D Dirichlet Laplacian.

Each line fits a log-log slope of ||(-A)^beta X(t) a|| over the window where
the bound is active and compares it with the predicted exponent.  Zero
exponents (G and J^beta G at beta = 0) show a flat norm, so their fit quality
is poor by construction.

    python3 demos/smoothing.py
"""

from fracop.operators import DirichletLaplacian1D
from fracop.verification import check_decay, check_estimate_slope

op = DirichletLaplacian1D(64)
alpha = 0.5
print(f"{'probe':>8} {'beta':>5} {'window':>22} {'slope':>8} {'expected':>8} {'R^2':>6}  verdict")
for probe in ("G", "K", "Gprime", "dJtauG", "JbetaG"):
    for beta in (0.0, 0.5, 1.0):
        fit = check_estimate_slope(probe, op, alpha, beta, 0.5 if probe == "dJtauG" else None)
        lo, hi = fit.window
        print(f"{probe:>8} {beta:5.1f} [{lo:9.2e}, {hi:9.2e}] {fit.slope:8.3f} {fit.expected:8.3f} "
              f"{fit.r2:6.3f}  {fit.verdict}")

fit = check_decay(op, alpha)
print(f"\nlarge-time decay on [10, 1e3]: slope {fit.slope:.3f}, expected {-alpha}")
