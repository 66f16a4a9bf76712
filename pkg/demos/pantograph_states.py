"""Pantograph equations behind the free-particle coherent states.

The retarded equation has an entire solution given by its Taylor series.
The advanced equation is marched inward from an asymptotic seed and decays
as a power of x.  Its normalizable solutions come from a momentum integral.
"""

import numpy as np

from selfsim.pantograph import (
    PantographProblem,
    analytic_series,
    fit_decay_exponent,
    free_cs_quadrature,
    generalized_residual,
    march_advanced,
    march_retarded,
    norm_integral,
    residual,
)

p = PantographProblem(1.0, 0.5)
g = march_retarded(p, 5.0, 0.01)
print(f"retarded: march vs series max gap {np.max(np.abs(g.values - analytic_series(1.0, 0.5, g.x))):.1e}")

adv = PantographProblem(2.0, 0.5, 1.0, kind="advanced")
a = march_advanced(adv, 0.05, 400.0, 0.02)
_, rel = residual(adv, a)
print(f"advanced: residual {rel.max():.1e}, predicted exponent {adv.kappa:.4f}, fitted {fit_decay_exponent(a, 50, 200):.4f}")

x = np.linspace(-20, 20, 401)
psi = free_cs_quadrature(2.0, 0.5, [1.0], 0, x)
print(f"momentum-integral state: residual {generalized_residual(2.0, 0.5, [1.0], 0, x).max():.1e}")
print(f"  grid norm^2 {np.sum(np.abs(psi) ** 2) * (x[1] - x[0]):.4f} (window [-20, 20])")
print(f"  squared norm before normalization {norm_integral(2.0, 0.5, [1.0]):.6f}, 4 ln 4 = {4 * np.log(4):.6f}")
