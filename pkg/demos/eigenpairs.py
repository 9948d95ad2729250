"""Principal and second eigenpairs of the discrete p-Laplacian.

Inverse iteration on the mesh is compared with the closed form
(p - 1) (k pi_p / L)^p and with the shooting oracle, for a few exponents.
"""

import numpy as np

from descflow import eigen_first, eigen_second_1d, make_mesh
from descflow.cli import analytic_eigenvalue
from descflow.multistart import count_nodes
from descflow.oracle import shoot_eigenvalue

mesh = make_mesh(199)
print(f"{'p':>4} {'lam1_h':>12} {'closed form':>12} {'shooting':>12} {'lam2_h/lam1_h':>14}")
for p in (1.5, 2.0, 3.0, 4.0):
    e1 = eigen_first(p, mesh)
    e2 = eigen_second_1d(p, mesh, first=e1)
    exact = analytic_eigenvalue(p, 1.0)
    shot = shoot_eigenvalue(p, 1.0, 0, (0.1, 1e3))
    print(f"{p:4.1f} {e1.lam:12.6f} {exact:12.6f} {shot:12.6f} {e2.lam / e1.lam:14.6f}"
          f"   (2^p = {2 ** p:g})")
    assert np.all(e1.u > 0) and count_nodes(e2.u) == 1

# the discrete eigenvalue converges at second order
for n in (24, 49, 99, 199, 399):
    lam = eigen_first(2.0, make_mesh(n)).lam
    print(f"n={n:4d}  lam1_h - pi^2 = {lam - np.pi ** 2:+.3e}")
