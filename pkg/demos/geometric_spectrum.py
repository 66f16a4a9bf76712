"""A self-similar potential with a geometric spectrum.

Builds the one-chain potential at q = 0.5, omega = 1 from its Taylor
series, marches it out to |x| = 40 and diagonalizes the finite-difference
Hamiltonian.  The levels fall by q^2 = 0.25 each step and accumulate at 0.
"""

import numpy as np

from selfsim.chain import ChainParams, march_delay, solve_series
from selfsim.spectral import discretize, lowest_eigenpairs, verify_geometric

q, omega = 0.5, 1.0
sol = solve_series(ChainParams(1, q, (omega,)), order=120)
print("f(x) = sum c_k x^k, first odd coefficients:", np.round(sol.coeffs[0][1:8:2], 8))
print("nu = omega/(1-q^2) =", sol.nu)

grid = march_delay(sol, 40.0, step=0.01)
_, res = grid.residual(0.0, 40.0)
print(f"chain residual on [0, 40]: {np.max(np.abs(res)):.2e}")

u = grid.potential()
print(f"u(0) = {u.values[np.argmin(np.abs(u.x))]:.12f}  (2 omega/(q^4-1) = {2 * omega / (q**4 - 1):.12f})")

rep, _ = lowest_eigenpairs(discretize(u), 3)
fit = verify_geometric(rep, q, 1)
for n, E in enumerate(rep.eigenvalues):
    print(f"E_{n} = {E:+.8f}   model {-sol.nu * q ** (2 * n):+.8f}   rel. error {fit.per_level_residual[n]:.1e}")
# deeper levels live beyond |x| = 40 and need a wider grid
