"""Frozen reference values computed once, outside the package.

Constants come from closed forms evaluated with mpmath at 30 digits; the
boundary value solutions come from scipy.integrate.solve_bvp (collocation,
tol 1e-9), which shares no code with the shooting oracle in the package.
They are hard-coded so a regression in the package cannot move them.
"""

PI2 = 9.86960440108935861883
FOUR_PI2 = 39.4784176043574344753
# (p - 1) pi_p^p for p = 3, pi_p = 2 pi / (p sin(pi / p))
LAMBDA1_P3 = 28.2887619760025554158

# integrals of sin(pi x) on (0, 1)
W12_NORM_SIN = 2.22144146907918312351      # pi / sqrt(2)
L2_NORM_SIN = 0.707106781186547524401       # 1 / sqrt(2)
# energy of sin(pi x) with p = 2, j = s^4 / 4: pi^2 / 4 - 3 / 32, then with lam = 5
PHI_SIN_LAM0 = 2.37365110027233965471
PHI_SIN_LAM5 = 1.12365110027233965471

# -u'' = 5 u + u^3, u(0) = u(1) = 0 (solve_bvp)
BVP_POSITIVE_SLOPE = 7.426127707096917
BVP_POSITIVE_MAX = 2.575194545550353
BVP_ONE_NODE_SLOPE = 37.13833010381238
BVP_ONE_NODE_MAX = 6.910788012051245
