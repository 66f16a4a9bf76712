"""q-coherent states of the geometric-spectrum potential.

Fock-space eigenstates of the lowering operator exist only for
|alpha|^2 < nu.  The same state is then built on a grid, once by summing
eigenvectors and once by marching the delay equation it satisfies.
"""

import math

import numpy as np

from selfsim.chain import ChainParams, march_delay, solve_series
from selfsim.coherent import (
    asymptotic_exponent,
    coordinate_cs,
    eigen_residual,
    harmonic_limit_check,
    march_coherent,
    qcoherent_fock,
)
from selfsim.pantograph import fit_decay_exponent
from selfsim.spectral import discretize, lowest_eigenpairs

q, omega = 0.5, 1.0
nu = omega / (1 - q * q)

print("normalization constant approaching the window edge |alpha|^2 = nu")
for frac in (0.5, 0.9, 0.99, 0.999):
    st = qcoherent_fock(math.sqrt(frac * nu), q, omega)
    print(f"  |alpha|^2/nu = {frac:<6} |C|^-2 = {st.norm_const:12.4f}  levels kept {st.nmax + 1}")

alpha = 0.3 * math.sqrt(nu)
st = qcoherent_fock(alpha, q, omega)
print(f"\nalpha = {alpha:.4f}: Fock eigen-residual {eigen_residual(st, q, omega):.1e}")

grid = march_delay(solve_series(ChainParams(1, q, (omega,)), 120), 80.0, 0.01)
_, vecs = lowest_eigenpairs(discretize(grid.potential()), 10)
cs = coordinate_cs(grid, vecs, alpha)
print(f"synthesized from 10 eigenvectors: residual {cs.residual:.1e}")

m = march_coherent(grid, alpha, 80.0)
overlap = abs(np.vdot(cs.psi.values, m.values)) * m.dx / (cs.psi.norm() * m.norm())
print(f"marched solution: overlap with the synthesized state {overlap:.7f}")
print(f"tail exponent: fitted {fit_decay_exponent(m, 10, 80):.3f}, predicted {asymptotic_exponent(alpha, q, nu):.3f}")

print("\nq -> 1 with N towers: distance to root-of-unity superpositions")
for N in (1, 2, 3):
    rep = harmonic_limit_check(0.9, N)
    print(f"  N = {N}: eps = 1e-1 .. 1e-7 -> {rep.distance[0]:.1e} .. {rep.distance[-1]:.1e}, slope {rep.rate:.2f}")
