"""Energy functional of the Dirichlet inclusion and its subdifferential selections.

    phi(u) = (1/p) ||u'||_p^p - (lam/p) |u|_p^p - sum_i h j(x_i, u_i)

The subdifferential is represented by the nodal box
A_h(u) - lam |u|^(p-2) u - [lo_i, hi_i], with [lo_i, hi_i] the Clarke interval of
j(x_i, .) at u_i.  Residuals are measured in the mass-weighted Euclidean norm
(h sum r_i^2)^(1/2) of the strong nodal form.
"""

from dataclasses import dataclass

import numpy as np

from .grid import Mesh, as_gridfn, norm_lr, norm_w1p
from scipy.linalg import solve_banded

from .plap import apply_plap, plap_jacobian_banded
from .potential import PotentialSpec, clarke_bounds, f_prime, j_eval

__all__ = ["Problem", "RULES", "phi", "smooth_part", "select_w", "subdiff_element",
           "residual_m", "residual_vector", "norm_h", "newton_polish"]

RULES = ("min_norm", "midpoint", "lower", "upper")


@dataclass(frozen=True)
class Problem:
    mesh: Mesh
    p: float
    lam: float
    spec: PotentialSpec

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError(f"need p > 1, got p={self.p}")
        if not self.lam >= 0:
            raise ValueError(f"spectral parameter must be nonnegative, got {self.lam}")

    def with_lam(self, lam):
        return Problem(self.mesh, self.p, lam, self.spec)


def norm_h(r, m):
    return float(np.sqrt(m.h * np.dot(r, r)))


def _phi_p(u, p):
    return np.sign(u) * np.abs(u) ** (p - 1.0)


def phi(prob, u):
    m = prob.mesh
    u = as_gridfn(u, m)
    p = prob.p
    return (norm_w1p(u, p, m) ** p / p
            - prob.lam * norm_lr(u, p, m) ** p / p
            - m.h * float(np.sum(j_eval(prob.spec, m.x, u))))


def smooth_part(prob, u):
    """A_h(u) - lam |u|^(p-2) u, the single-valued part of the residual."""
    return apply_plap(u, prob.p, prob.mesh) - prob.lam * _phi_p(u, prob.p)


def select_w(prob, u, rule="min_norm"):
    """Pointwise element of the Clarke interval of j at every node.

    ``min_norm`` clamps the smooth part onto the interval, which minimizes the
    nodal residual; the other rules pick the midpoint or an endpoint.
    """
    lo, hi = clarke_bounds(prob.spec, np.asarray(u, dtype=float))
    if rule == "min_norm":
        return np.clip(smooth_part(prob, u), lo, hi)
    if rule == "midpoint":
        return 0.5 * (lo + hi)
    if rule == "lower":
        return np.array(lo, dtype=float)
    if rule == "upper":
        return np.array(hi, dtype=float)
    raise ValueError(f"unknown selection rule {rule!r}; expected one of {RULES}")


def subdiff_element(prob, u, w):
    """Nodal residual g(u, w) = A_h(u) - lam |u|^(p-2) u - w."""
    return smooth_part(prob, u) - np.asarray(w, dtype=float)


def residual_vector(prob, u):
    """Minimal-magnitude nodal residual over all admissible selections."""
    s = smooth_part(prob, u)
    lo, hi = clarke_bounds(prob.spec, np.asarray(u, dtype=float))
    return s - np.clip(s, lo, hi)


def residual_m(prob, u):
    """Discrete slope m(u): min over selections of the weighted norm of g(u, w)."""
    return norm_h(residual_vector(prob, u), prob.mesh)


def newton_polish(prob, u0, tol=1e-10, max_iter=30):
    """Local Newton solve of A_h(u) - lam |u|^(p-2) u - f(u) = 0 started near a critical point.

    f is the smooth branch of j' selected by the current nodal values (the
    interval midpoint at breakpoints), so the iteration is Newton on whichever
    smooth piece each node sits in.  Steps are damped on the residual norm.
    Returns (u, residual_m(u), converged).
    """
    m, p = prob.mesh, prob.p
    u = np.array(u0, dtype=float)

    def F(v):
        lo, hi = clarke_bounds(prob.spec, v)
        return smooth_part(prob, v) - 0.5 * (lo + hi)

    r = F(u)
    res = residual_m(prob, u)
    for _ in range(max_iter):
        if res <= tol:
            return u, res, True
        sym = plap_jacobian_banded(u, p, m)
        with np.errstate(divide="ignore", invalid="ignore"):
            diag = sym[1] - prob.lam * (p - 1.0) * np.abs(u) ** (p - 2.0) - f_prime(prob.spec, u)
        ab = np.zeros((3, m.n))
        ab[0, 1:] = sym[0, 1:]
        ab[1] = diag
        ab[2, :-1] = sym[0, 1:]
        if not np.all(np.isfinite(ab)):
            break
        try:
            step = solve_banded((1, 1), ab, -r)
        except (np.linalg.LinAlgError, ValueError):
            break
        alpha, rn = 1.0, norm_h(r, m)
        while alpha > 1e-4:
            trial = u + alpha * step
            r_t = F(trial)
            if norm_h(r_t, m) < (1 - 1e-4 * alpha) * rn:
                break
            alpha *= 0.5
        else:
            break
        u, r = trial, r_t
        res = residual_m(prob, u)
    return u, res, res <= tol
