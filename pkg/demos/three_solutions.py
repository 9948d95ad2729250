"""Positive, negative and sign-changing solutions for a superlinear potential.

The spectral parameter sits at half the principal eigenvalue, so the origin
is a strict local minimum of the energy and the basin boundary of its
attraction region separates small from large starts.  The driver finds the
boundary along rays in the plane of the first two eigenfunctions, tracks it
to the one-signed saddles and sweeps the plane for the sign-changing one.
"""

import numpy as np

from descflow import Problem, eigen_first, jump_derivative, make_mesh, smooth_power
from descflow.multistart import count_nodes, find_three
from descflow.oracle import shoot

mesh = make_mesh(199)
lam = 0.5 * eigen_first(2.0, mesh).lam

for spec in (smooth_power(q=4), jump_derivative()):
    prob = Problem(mesh, 2.0, lam, spec)
    records, report = find_three(prob)
    print(f"\n{spec.kind}: {report['flows']} flows, {report['steps']} steps, "
          f"largest energy increase {report['max_energy_increase']:.1e}")
    for name, rec in records.items():
        sign = 1.0 if rec.u[0] > 0 else -1.0
        sh = shoot(prob, count_nodes(rec.u), sign=sign)
        gap = np.max(np.abs(rec.u - sh.at(mesh.x)))
        print(f"  {name:<14} phi={rec.phi:12.6f}  residual={rec.residual:.1e}  "
              f"nodes={count_nodes(rec.u)}  max|u|={np.abs(rec.u).max():.5f}  vs shooting {gap:.1e}")
    print(f"  mirror gap {np.max(np.abs(records['positive'].u + records['negative'].u)):.1e}")
