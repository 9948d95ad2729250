"""Discrete Dirichlet p-Laplacian: application, inverse solve, first two eigenpairs."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded, solveh_banded
from scipy.optimize import brentq

from .grid import as_gridfn, grad, norm_lr, norm_w1p

__all__ = ["ConvergenceError", "NewtonOpts", "EigenPair", "apply_plap", "inverse_plap",
           "plap_jacobian_banded", "inverse_plap_flux", "rayleigh_quotient", "eigen_first", "eigen_second_1d",
           "eigen_residual", "reflect"]


class ConvergenceError(RuntimeError):
    def __init__(self, msg, residual=None):
        super().__init__(msg if residual is None else f"{msg} (residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class NewtonOpts:
    tol: float = 1e-10
    max_iter: int = 200
    armijo: float = 1e-4
    max_backtracks: int = 40
    eps_schedule: tuple = (1e-2, 1e-4, 1e-8, 0.0)

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("Newton tolerance must be positive")


@dataclass(frozen=True)
class EigenPair:
    lam: float
    u: np.ndarray
    residual: float = float("nan")
    iterations: int = 0


def _norm_h(r, h):
    return float(np.sqrt(h * np.dot(r, r)))


def _flux(g, p, eps):
    if p == 2:
        return g
    if eps == 0.0:
        return np.sign(g) * np.abs(g) ** (p - 1.0)
    return (g * g + eps * eps) ** ((p - 2.0) / 2.0) * g


def apply_plap(u, p, m, eps_reg=0.0):
    """Nodal values of -(|u'|^2 + eps^2)^((p-2)/2) u' differenced back to the nodes.

    For p = 2 this is the usual second difference -(u[i-1] - 2 u[i] + u[i+1]) / h^2.
    """
    if not p > 1:
        raise ValueError(f"p-Laplacian needs p > 1, got p={p}")
    F = _flux(grad(u, m), p, eps_reg)
    return -np.diff(F) / m.h


def plap_jacobian_banded(u, p, m, eps_reg=0.0, floor=0.0):
    """Upper banded form (2, n) of the symmetric tridiagonal Jacobian of apply_plap."""
    g = grad(u, m)
    if p == 2:
        c = np.ones_like(g)
    else:
        s = g * g + eps_reg * eps_reg
        with np.errstate(divide="ignore", invalid="ignore"):
            c = s ** ((p - 4.0) / 2.0) * ((p - 1.0) * g * g + eps_reg * eps_reg)
        c = np.where(np.isfinite(c), c, 0.0)
        if floor > 0:
            c = np.maximum(c, floor)
    h2 = m.h * m.h
    ab = np.zeros((2, m.n))
    ab[1] = (c[:-1] + c[1:]) / h2
    ab[0, 1:] = -c[1:-1] / h2
    return ab


@lru_cache(maxsize=16)
def _laplacian_factor(n, L):
    h = L / (n + 1)
    ab = np.zeros((2, n))
    ab[1] = 2.0 / (h * h)
    ab[0, 1:] = -1.0 / (h * h)
    return cholesky_banded(ab)


def _solve_laplacian(f, m):
    return cho_solve_banded((_laplacian_factor(m.n, m.L), False), f)


def inverse_plap(f, p, m, opts=None):
    """Solve apply_plap(u) = f with homogeneous Dirichlet data.

    p = 2 is a cached Cholesky solve.  Otherwise damped Newton on the
    gradient-regularized operator, with the regularization driven to zero along
    ``opts.eps_schedule`` and the final residual measured unregularized.  A
    frozen-coefficient (Kacanov) step replaces Newton when line search stalls.
    """
    opts = opts or NewtonOpts()
    f = as_gridfn(f, m)
    if not p > 1:
        raise ValueError(f"p-Laplacian needs p > 1, got p={p}")
    if p == 2:
        return _solve_laplacian(f, m)
    fnorm = _norm_h(f, m.h)
    if fnorm == 0.0:
        return np.zeros(m.n)

    u = _solve_laplacian(f, m)
    a_u = _norm_h(apply_plap(u, p, m), m.h)
    if a_u > 0:
        u = u * (fnorm / a_u) ** (1.0 / (p - 1.0))

    for level, eps in enumerate(opts.eps_schedule):
        last = level == len(opts.eps_schedule) - 1
        target = opts.tol * max(1.0, fnorm) if last else 1e-6 * max(1.0, fnorm)
        u, res, _ = _newton(u, f, p, m, eps, target, opts)
    target = max(opts.tol * max(1.0, fnorm), _roundoff_floor(u, f, p, m, 0.0))
    if res <= target:
        return u
    # Newton stalls for strongly singular p; the 1-D flux quadrature is exact.
    u = inverse_plap_flux(f, p, m)
    res = _norm_h(apply_plap(u, p, m) - f, m.h)
    if res > max(target, _roundoff_floor(u, f, p, m, 0.0)):
        raise ConvergenceError(f"inverse p-Laplacian (p={p}) did not converge", res)
    return u


def inverse_plap_flux(f, p, m):
    """Exact 1-D inverse by integrating the flux.

    The discrete equation fixes the cell fluxes up to one constant,
    F_k = F_0 - h * (f_1 + ... + f_k); the constant is the root of the monotone
    condition that the cell gradients phi_p'(F_k) sum to zero (u vanishes at L).
    """
    f = as_gridfn(f, m)
    h = m.h
    S = np.concatenate(([0.0], h * np.cumsum(f)))
    e = 1.0 / (p - 1.0)

    def grads(F0):
        F = F0 - S
        return np.sign(F) * np.abs(F) ** e

    lo, hi = float(S.min()), float(S.max())
    if lo == hi:
        return np.zeros(m.n)
    F0 = brentq(lambda c: float(np.sum(grads(c))), lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps,
                maxiter=500)
    g = grads(F0)
    return h * np.cumsum(g)[:-1]


def _newton(u, f, p, m, eps, target, opts):
    h = m.h
    r = apply_plap(u, p, m, eps) - f
    res = _norm_h(r, h)
    for it in range(opts.max_iter):
        if res <= max(target, _roundoff_floor(u, f, p, m, eps)):
            return u, res, it
        gmax = float(np.max(np.abs(grad(u, m)))) if m.n else 1.0
        floor = 1e-12 * max(1.0, gmax) ** max(p - 2.0, 0.0)
        ab = plap_jacobian_banded(u, p, m, eps if eps > 0 else 1e-9 * max(gmax, 1e-300), floor)
        try:
            step = -solveh_banded(ab, r)
        except np.linalg.LinAlgError:
            step = None
        accepted = False
        if step is not None and np.all(np.isfinite(step)):
            alpha = 1.0
            for _ in range(opts.max_backtracks):
                trial = u + alpha * step
                r_t = apply_plap(trial, p, m, eps) - f
                res_t = _norm_h(r_t, h)
                if res_t <= (1.0 - opts.armijo * alpha) * res:
                    u, r, res = trial, r_t, res_t
                    accepted = True
                    break
                alpha *= 0.5
        if not accepted:
            u_new = _kacanov_step(u, f, p, m, eps)
            r_new = apply_plap(u_new, p, m, eps) - f
            res_new = _norm_h(r_new, h)
            if not res_new < res:
                return u, res, it + 1
            u, r, res = u_new, r_new, res_new
    return u, res, opts.max_iter


def _roundoff_floor(u, f, p, m, eps=0.0):
    """Residual level below which the strong-form residual is rounding noise.

    Gradients carry an absolute error of a few ulps of max|u| / h; the flux map
    amplifies it by its slope, which is unbounded near g = 0 when p < 2.
    """
    tiny = np.finfo(float).eps
    g = grad(u, m)
    F = np.abs(_flux(g, p, eps))
    dg = 8 * tiny * max(float(np.max(np.abs(u))), 1e-300) / m.h
    if p == 2:
        dF = np.full_like(g, dg)
    else:
        with np.errstate(divide="ignore"):
            slope = (p - 1.0) * np.abs(g) ** (p - 2.0) * dg
        dF = np.minimum(slope, 2 * dg ** (p - 1.0)) if p < 2 else slope + dg ** (p - 1.0)
    scale = (F[:-1] + F[1:]) * tiny / m.h + (dF[:-1] + dF[1:]) / m.h + tiny * np.abs(f)
    return 8 * _norm_h(scale, m.h)


def _kacanov_step(u, f, p, m, eps):
    g = grad(u, m)
    a = (g * g + max(eps, 1e-12) ** 2) ** ((p - 2.0) / 2.0)
    h2 = m.h * m.h
    ab = np.zeros((2, m.n))
    ab[1] = (a[:-1] + a[1:]) / h2
    ab[0, 1:] = -a[1:-1] / h2
    return solveh_banded(ab, f)


def rayleigh_quotient(u, p, m):
    return norm_w1p(u, p, m) ** p / norm_lr(u, p, m) ** p


def eigen_residual(lam, u, p, m):
    r = apply_plap(u, p, m) - lam * np.sign(u) * np.abs(u) ** (p - 1.0)
    return _norm_h(r, m.h)


def reflect(u):
    """The mirror map u(x) -> u(L - x) on nodal values."""
    return np.asarray(u)[::-1]


def _inverse_iteration(u, p, m, opts, project=None, rq_tol=1e-10, res_tol=5e-9, max_iter=500):
    opts = NewtonOpts(min(opts.tol, 1e-11), opts.max_iter, opts.armijo, opts.max_backtracks,
                      opts.eps_schedule)
    u = u / norm_lr(u, p, m)
    lam_prev = rayleigh_quotient(u, p, m)
    for it in range(1, max_iter + 1):
        v = inverse_plap(lam_prev * np.sign(u) * np.abs(u) ** (p - 1.0), p, m, opts)
        if project is not None:
            v = project(v)
        u = v / norm_lr(v, p, m)
        lam = rayleigh_quotient(u, p, m)
        res = eigen_residual(lam, u, p, m)
        floor = _roundoff_floor(u, lam * np.sign(u) * np.abs(u) ** (p - 1.0), p, m)
        if abs(lam - lam_prev) <= rq_tol * lam and res <= max(res_tol, floor):
            return EigenPair(lam, u, res, it)
        lam_prev = lam
    raise ConvergenceError(f"inverse iteration (p={p}) did not settle in {max_iter} steps",
                           eigen_residual(lam, u, p, m))


def eigen_first(p, m, opts=None):
    """Principal eigenpair by normalized inverse iteration, |u|_p = 1 and u > 0."""
    if not p > 1:
        raise ValueError(f"p-Laplacian needs p > 1, got p={p}")
    opts = opts or NewtonOpts()
    u0 = np.sin(np.pi * m.x / m.L)
    pair = _inverse_iteration(u0, p, m, opts)
    u = pair.u if pair.u.sum() > 0 else -pair.u
    return EigenPair(pair.lam, u, pair.residual, pair.iterations)


def eigen_second_1d(p, m, opts=None, first=None):
    """Second eigenpair of the 1-D problem.

    The start is the two-bump reflection of the principal profile,
    u1(2x) on (0, L/2) and -u1(2x - L) on (L/2, L); inverse iteration restricted
    to functions odd about L/2 then converges to the exact discrete pair, whose
    eigenvalue tends to 2^p lambda_1 under refinement.
    """
    if not p > 1:
        raise ValueError(f"p-Laplacian needs p > 1, got p={p}")
    opts = opts or NewtonOpts()
    first = first or eigen_first(p, m, opts)
    xf = m.x_full
    prof = np.concatenate(([0.0], first.u, [0.0]))
    x = m.x
    left = x < m.L / 2
    u0 = np.where(left, np.interp(2 * x, xf, prof), -np.interp(2 * x - m.L, xf, prof))

    def project(v):
        return 0.5 * (v - reflect(v))

    pair = _inverse_iteration(project(u0), p, m, opts, project=project)
    u = pair.u if pair.u[0] > 0 else -pair.u
    return EigenPair(pair.lam, u, pair.residual, pair.iterations)
