"""What a single descending flow does from starts along the principal mode.

Small multiples fall back to the origin, large ones escape to negative
energy, and the escape radius found by bisection separates the two.  Starts
just inside and just outside the radius linger near the positive saddle
before deciding, which is what the edge tracking in the driver exploits.
"""

import numpy as np

from descflow import FlowConfig, Problem, eigen_first, integrate, make_mesh, norm_w1p, smooth_power
from descflow.functional import residual_m
from descflow.multistart import ray_escape_radius

mesh = make_mesh(199)
e1 = eigen_first(2.0, mesh)
prob = Problem(mesh, 2.0, 0.5 * e1.lam, smooth_power())
u1 = e1.u / norm_w1p(e1.u, 2.0, mesh)
cfg = FlowConfig()

for t in (0.5, 2.0, 5.0, 8.0, 20.0):
    tr = integrate(prob, t * u1, cfg)
    print(f"t={t:5.1f}  {tr.status:<22} steps={tr.steps:3d}  phi {tr.states[0].phi:9.4f} -> {tr.final.phi:10.4f}")

ray = ray_escape_radius(prob, u1, cfg, bisect_tol=1e-12)
print(f"\nescape radius t* = {ray.t_star:.12f} after {len(ray.history)} probes, verified={ray.verified}")
for dt in (-1e-9, 1e-9):
    tr = integrate(prob, (ray.t_star + dt) * u1, cfg)
    res = [residual_m(prob, s.u) for s in tr.states]
    i = int(np.argmin(res))
    print(f"t* {dt:+.0e}: {tr.status:<22} closest approach residual {res[i]:.2e} at flow time {tr.states[i].t:.1f}")
