"""Scalar fractional relaxation: the contour solver against the Mittag-Leffler closed form.

For A = -1 the solution of the homogeneous problem is u(t) = E_{alpha,1}(-t^alpha).
It decays like t^(-alpha) instead of exponentially; the last column shows
u(t) * t^alpha * Gamma(1 - alpha) approaching 1.

    python3 demos/relaxation.py
"""

import math

import numpy as np

from fracop.mittag_leffler import ml
from fracop.operators import DiagonalOperator
from fracop.solution_operators import apply_G

op = DiagonalOperator([-1.0])
for alpha in (0.3, 0.5, 0.8):
    print(f"alpha = {alpha}")
    print(f"{'t':>10} {'contour':>22} {'closed form':>22} {'|diff|':>9} {'tail ratio':>10}")
    for t in np.geomspace(1e-3, 1e3, 7):
        u = apply_G(op, alpha, t, np.ones(1))[0]
        exact = ml((alpha, 1.0), -t**alpha).real
        tail = u * t**alpha * math.gamma(1 - alpha)
        print(f"{t:10.3g} {u:22.16g} {exact:22.16g} {abs(u - exact):9.1e} {tail:10.4f}")
    print()
