"""
Transport noise and the Biot-Savart kernel
==========================================

The noise fields sigma_k are divergence free, their covariance is c times the
identity on the diagonal, and the Stratonovich-to-Ito correction vanishes.
The truncated kernel K_N is odd and divergence free.
"""

import numpy as np

from stoch_euler.noise_model import covariance, make_basis, strat_drift_correction
from stoch_euler.torus_kernel import build_kernel_table, kernel_eval

basis = make_basis(beta=4.0, cutoff=8)
print(f"{basis.size} noise modes, c = {basis.c:.10f}, sum ||sigma_k||_C1^2 = {basis.c1_sum:.4f}")

x = np.random.default_rng(0).uniform(0, 2 * np.pi, size=(5, 2))
a = covariance(basis, x, x)
print("a(x, x) - c I, max over 5 points:", np.abs(a - basis.c * np.eye(2)).max())
print("Stratonovich correction, max:", np.abs(strat_drift_correction(basis, x)).max())

# the kernel is odd: K(-x) = -K(x)
pts = np.array([[0.5, 0.0], [0.3, 1.2], [-2.0, 0.7]])
print("K(x) + K(-x):", np.abs(kernel_eval(pts, 32) + kernel_eval(-pts, 32)).max())

# the particle solver reads K from an interpolation table
table = build_kernel_table(256, 8)
print("table vs direct sum:", np.abs(table(pts) - kernel_eval(pts, 8)).max())
