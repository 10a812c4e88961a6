"""Recovering the initial value from observations on the middle third of the interval.

Without noise the observation matrix is injective but badly conditioned.
With 1% noise the table walks the regularization parameter and shows
the usual trade-off between residual and solution norm.

    python3 demos/inverse.py
"""

import numpy as np

from fracop.inverse import (ObservationSpec, default_obs_times, l_curve, middle_third, observation_map,
                            reconstruct_initial)
from fracop.operators import DirichletLaplacian1D

op = DirichletLaplacian1D(32)
a = np.sin(np.pi * op.x) + 0.5 * np.sin(2 * np.pi * op.x)
times = default_obs_times(1.0, 32)

omap = observation_map(op, 0.5, ObservationSpec(middle_third(32), times))
s = omap.singular_values
print(f"singular values: max {s[0]:.3e}, min {s[-1]:.3e}, condition {s[0] / s[-1]:.1e}")
a_hat, _ = reconstruct_initial(omap, omap.simulate(a), 1e-12)
print(f"noiseless reconstruction error {np.linalg.norm(a_hat - a) / np.linalg.norm(a):.1e}")

noisy = observation_map(op, 0.5, ObservationSpec(middle_third(32), times, noise_level=0.01))
data = noisy.simulate(a, seed=1)
print(f"\n{'reg':>9} {'residual':>10} {'norm':>8} {'error':>7}")
for row in l_curve(noisy, data, np.geomspace(1e-10, 1e-1, 10), truth=a):
    print(f"{row['reg']:9.1e} {row['residual_norm']:10.3e} {row['solution_norm']:8.3f} {row['rel_error']:7.3f}")
