"""
The regularized nonlinear term
==============================

For a smooth density, <N(xi), phi> computed from the symmetrized pair kernel
F_phi agrees with the classical <xi, u . grad phi>.  For a vortex sheet the
classical form is undefined, but N(mu) is still finite and continuous along
mollifications of the sheet.
"""

from stoch_euler.measures import CurveSpec, mollify, sample_vortex_sheet
from stoch_euler.nonlinear import TestFunction, continuity_experiment, n_bound_check
from stoch_euler.verify import oracle_error, rough_datum

phi = TestFunction.trig((0, 1), "sin")
for n in (64, 128, 256):
    err, ref = oracle_error(rough_datum(n), phi)
    print(f"grid {n:3d}: |N - classical| / |classical| = {err / ref:.2e}")

sheet = sample_vortex_sheet(CurveSpec("segment", start=(1.5, 2.0), end=(3.5, 2.8)), 512, 1.0)
psi = TestFunction.trig((1, 1), "sin")
print("bound |N| / (||mu||^2 ||phi||_C2):", f"{n_bound_check(sheet, psi, 32).ratio:.2e}")

eps = (0.4, 0.2, 0.1, 0.05)
rep = continuity_experiment([mollify(sheet, e, 128) for e in eps], sheet, psi, 32)
for (i, d, delta) in rep.rows():
    print(f"eps={eps[i]:<5} weak-* distance {d:.2e}   |N(mu_eps) - N(mu)| {delta:.2e}")
