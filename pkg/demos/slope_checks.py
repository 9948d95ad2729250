"""Constrained slope versus free slope on small piecewise-quadratic models.

For a model on R^2 or R^3 the free slope m is the distance from 0 to the
subdifferential box and the slope constrained to the nonnegative orthant is
an inf-sup computed by brute force.  Under the Schauder condition the
constrained slope is bounded below by min(1/2, m) m.
"""

import numpy as np

from descflow.oracle import SmallProblem, brute_m, brute_mP, outwardly_directed, schauder_holds
from descflow.suites import slope_equivalence, slope_inequality

sp = SmallProblem(np.diag([0.5, 1.0]), b=[0.8, 0.3], c=[0.2, 0.0], k=[0.6, 0.0])
print(f"{'x':>14} {'m':>8} {'m_P':>8} {'bound':>8}  schauder outward")
for x in ([0.0, 0.0], [0.6, 0.0], [0.0, 0.3], [1.6, 0.3], [2.0, 2.0]):
    m, mp = brute_m(sp, x), brute_mP(sp, x)
    print(f"{str(x):>14} {m:8.4f} {mp:8.4f} {min(0.5, m) * m:8.4f}  {schauder_holds(sp, x)!s:>8} "
          f"{outwardly_directed(sp, x)!s:>7}")

rng = np.random.default_rng(0)
for res in (slope_equivalence(rng, 500), slope_inequality(rng, 500)):
    print(f"{res['name']}: {res['samples']} samples, {res['violations']} violations, margin {res['margin']:.2e}")

# without the hypotheses the two slopes can disagree: the minimizer over the
# orthant sits on its boundary while the free gradient is still nonzero
sp2 = SmallProblem(np.eye(2), b=[-0.5, 0.4])
x = [0.0, 0.4]
print(f"\nboundary minimizer {x}: m={brute_m(sp2, x):.4f}  m_P={brute_mP(sp2, x):.4f}  "
      f"outward={outwardly_directed(sp2, x)}  schauder={schauder_holds(sp2, x)}")
