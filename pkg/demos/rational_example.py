"""A q = 1 example with two factorizations of one rational potential.

Both rational chains give the same Hamiltonian, with levels 0, 3, 4, 5, ...
The third-order lowering operators differ: one has three normalizable zero
modes, the other two.
"""

import numpy as np

from selfsim.chain import closed_forms, hamdek
from selfsim.coherent import exam_ode_residual, hamdek_coherent, hamdek_towers
from selfsim.grid import GridFunction
from selfsim.spectral import Ladder, algebra_residuals, discretize, lowest_eigenpairs

x = np.linspace(-14, 14, 5601)
rep, vecs = lowest_eigenpairs(discretize(GridFunction.from_samples(x, hamdek(x))), 22)
E = rep.eigenvalues
print("lowest levels:", np.round(E[:6], 4))

xs = np.linspace(-12, 12, 4000)
gap = np.max(np.abs(Ladder(closed_forms("piv_rational_A")).potential(xs)
                    - Ladder(closed_forms("piv_rational_B")).potential(xs)))
print(f"potentials from the two chains differ by {gap:.1e}")

for which, name in (("exam1", "piv_rational_A"), ("exam2", "piv_rational_B")):
    alg = algebra_residuals(closed_forms(name), vecs[:6], E[:6])
    print(f"\n{name}: algebra residual {alg.max_residual:.1e}, towers {hamdek_towers(which, E[:8])}")
    res = [exam_ode_residual(which, vecs[i], 0.0) for i in range(5)]
    print("  zero-mode test (third-order equation at alpha = 0):", " ".join(f"{r:.0e}" for r in res))
    for n in (10, 15, 20):
        st = hamdek_coherent(which, vecs[:n], E[:n], 2.5)
        print(f"  alpha = 2.5 with {n} levels: residual {exam_ode_residual(which, st, 2.5):.1e}")
