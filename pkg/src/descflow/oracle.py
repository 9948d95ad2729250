"""Independent checks: a shooting solver for the 1-D boundary value problem and
brute-force slope computations for tiny finite-dimensional model functionals.

Shooting integrates the first-order system for (u, v) with v = |u'|^(p-2) u',

    u' = |v|^(1/(p-1)) sign(v),    v' = -lam |u|^(p-2) u - f(u),

from u(0) = 0, v(0) = |s|^(p-2) s, and bisects the slope s until the (k+1)-th
zero lands on x = L.  Crossings of the breakpoints of f are located as events
and integration restarts on the new smooth piece.
"""

import json
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .potential import f_left, f_right

__all__ = ["ShootingError", "ShootingResult", "shoot", "shoot_eigenvalue", "SmallProblem",
           "brute_m", "brute_mP", "inner_sup", "outwardly_directed", "schauder_holds",
           "check_invariance_condition", "report_json"]


class ShootingError(RuntimeError):
    pass


@dataclass
class ShootingResult:
    s0: float
    x: np.ndarray
    u: np.ndarray
    boundary_miss: float
    node_count: int

    def at(self, xq):
        """Solution values at the query points (linear interpolation of the dense sample)."""
        return np.interp(xq, self.x, self.u)


def _phi_q(v, q):
    return np.sign(v) * np.abs(v) ** (q - 1.0)


def _piece_f(spec, bps, k):
    """f restricted to piece k, extended past its ends by the one-sided limits."""
    lo = bps[k - 1] if k > 0 else -np.inf
    hi = bps[k] if k < len(bps) else np.inf

    def f(u):
        if u <= lo:
            return float(f_right(spec, lo))
        if u >= hi:
            return float(f_left(spec, hi))
        return float(f_right(spec, u))
    return f


def _integrate(p, lam, spec, L, s, x_eval=None, stop_after=None, rtol=1e-11, atol=1e-13):
    """Integrate the IVP on [0, L]; returns (x, u, zeros) with zeros the interior roots of u.

    Only the two breakpoints bounding the current piece are watched, each in the
    direction that leaves the piece, so a restart sitting on a breakpoint does
    not re-trigger.  With ``stop_after`` integration ends at that many zeros.
    """
    bps = list(spec.breakpoints) if spec is not None else []
    pp = p / (p - 1.0)
    y = np.array([0.0, _phi_q(s, p)])
    x0 = 0.0
    xs, us, zeros = [0.0], [0.0], []
    k = int(np.searchsorted(bps, 0.0, side="right"))
    if k > 0 and bps[k - 1] == 0.0 and s < 0:
        k -= 1
    for _ in range(10000):
        f = _piece_f(spec, bps, k) if spec is not None else (lambda u: 0.0)

        def rhs(x, y, f=f):
            return [_phi_q(y[1], pp), -lam * _phi_q(y[0], p) - f(y[0])]

        def zero_ev(x, y):
            return y[0]

        events, kinds = [zero_ev], [None]
        if k < len(bps):
            def up(x, y, b=bps[k]):
                return y[0] - b
            up.terminal, up.direction = True, 1
            events.append(up)
            kinds.append(k + 1)
        if k > 0:
            def down(x, y, b=bps[k - 1]):
                return y[0] - b
            down.terminal, down.direction = True, -1
            events.append(down)
            kinds.append(k - 1)
        t_eval = None if x_eval is None else x_eval[(x_eval > x0) & (x_eval <= L)]
        sol = solve_ivp(rhs, (x0, L), y, method="DOP853", rtol=rtol, atol=atol, events=events,
                        t_eval=t_eval)
        if sol.status == -1:
            raise ShootingError(f"IVP integration failed: {sol.message}")
        xs.extend(sol.t.tolist())
        us.extend(sol.y[0].tolist())
        for xz in sol.t_events[0]:
            if 0.0 < xz < L and (not zeros or xz > zeros[-1]):
                zeros.append(float(xz))
        if stop_after is not None and len(zeros) >= stop_after:
            break
        if sol.status != 1:
            break
        xb, i = min((sol.t_events[j][0], j) for j in range(1, len(events)) if len(sol.t_events[j]))
        y = np.array([sol.y_events[i][0][0], sol.y_events[i][0][1]])
        k = kinds[i]
        x0 = float(xb)
        if x_eval is None:
            xs.append(x0)
            us.append(float(y[0]))
    return np.array(xs), np.array(us), zeros


def _zero_crossings(u):
    s = np.sign(u)
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def _reached(p, lam, spec, L, s, k):
    """True when the (k+1)-th zero of the shot from slope s lies in (0, L]."""
    x, u, zeros = _integrate(p, lam, spec, L, s, stop_after=k + 1)
    if len(zeros) >= k + 1:
        return True
    if len(zeros) < k:
        return False
    return (-1) ** k * np.sign(s) * u[-1] <= 0.0


def shoot(prob, target_nodes=0, slope_bracket=(1e-3, 1e3), sign=1.0, xtol=1e-13, max_iter=200):
    """Bisect the initial slope so that u(L) = 0 with ``target_nodes`` interior zeros.

    ``sign`` picks positive (+1) or negative (-1) initial slopes.  The bracket is
    checked first: its lower end must not reach the (k+1)-th zero and its upper
    end must.  The returned dense sample lives on a fine uniform grid.
    """
    p, lam, spec, L = prob.p, prob.lam, prob.spec, prob.mesh.L
    k = int(target_nodes)
    lo, hi = (sign * abs(v) for v in slope_bracket)
    r_lo, r_hi = _reached(p, lam, spec, L, lo, k), _reached(p, lam, spec, L, hi, k)
    if r_lo or not r_hi:
        raise ShootingError(f"slope bracket [{lo}, {hi}] does not straddle a solution with {k} nodes "
                            f"(reached at ends: {r_lo}, {r_hi})")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if abs(hi - lo) <= xtol * max(1.0, abs(mid)) or mid in (lo, hi):
            break
        if _reached(p, lam, spec, L, mid, k):
            hi = mid
        else:
            lo = mid
    s0 = 0.5 * (lo + hi)
    xg = np.linspace(0.0, L, 4001)
    x, u, _ = _integrate(p, lam, spec, L, s0, x_eval=xg)
    order = np.argsort(x, kind="stable")
    x, u = x[order], u[order]
    keep = np.concatenate(([True], np.diff(x) > 0))
    x, u = x[keep], u[keep]
    return ShootingResult(s0, x, u, abs(float(u[-1])), _zero_crossings(u[1:-1]))


def shoot_eigenvalue(p, L=1.0, k=0, bracket=None, xtol=1e-13):
    """Eigenvalue of the Dirichlet p-Laplacian whose eigenfunction has k interior zeros.

    The problem is homogeneous, so the slope is fixed at 1 and lambda is bisected.
    """
    lo, hi = bracket if bracket is not None else (1e-6, 1e6)

    def reached(lam):
        return _reached(p, lam, None, L, 1.0, k)

    if reached(lo) or not reached(hi):
        raise ShootingError(f"eigenvalue bracket [{lo}, {hi}] does not straddle mode {k}")
    while hi - lo > xtol * hi:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if reached(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class SmallProblem:
    """phi(x) = 1/2 x.Q x - b.x + sum_i c_i |x_i - k_i| on R^dim, cone = nonnegative orthant.

    Its Clarke subdifferential is the box Q x - b + [c_i * sign], with the sign
    widened to [-1, 1] where x_i = k_i.  With Euclidean duality the gradient and
    the subgradient live in the same space.
    """

    Q: tuple
    b: tuple
    c: tuple = None
    k: tuple = None

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        dim = Q.shape[0]
        if Q.shape != (dim, dim) or dim not in (1, 2, 3):
            raise ValueError("SmallProblem supports square Q of dimension 1 to 3")
        if not np.allclose(Q, Q.T):
            raise ValueError("Q must be symmetric")
        object.__setattr__(self, "Q", tuple(map(tuple, Q)))
        for name in ("b", "c", "k"):
            v = getattr(self, name)
            v = np.zeros(dim) if v is None else np.asarray(v, dtype=float).reshape(dim)
            object.__setattr__(self, name, tuple(v))

    @property
    def dim(self):
        return len(self.b)

    def value(self, x):
        x = np.asarray(x, float)
        Q, b, c, k = (np.asarray(v) for v in (self.Q, self.b, self.c, self.k))
        return float(0.5 * x @ Q @ x - b @ x + np.sum(c * np.abs(x - k)))

    def box(self, x):
        """(lo, hi) of the subdifferential at x."""
        x = np.asarray(x, float)
        Q, b, c, k = (np.asarray(v) for v in (self.Q, self.b, self.c, self.k))
        g = Q @ x - b
        sg = np.sign(x - k)
        at = x == k
        lo = g + np.where(at, -np.abs(c), c * sg)
        hi = g + np.where(at, np.abs(c), c * sg)
        return lo, hi


def brute_m(sp, x):
    """Minimal Euclidean norm over the subdifferential box: clamp 0 onto the box."""
    lo, hi = sp.box(x)
    return float(np.linalg.norm(np.clip(0.0, lo, hi)))


def inner_sup(a, x):
    """sup { <a, z> : z <= x componentwise, |z| <= 1 } for x in the orthant, vectorized over rows of a.

    With y = x - z this is the inner supremum of the constrained slope over
    cone points y in the unit ball around x.  The maximizer is
    z_i = min(x_i, tau a_i) with tau fixed by |z| = 1, or, when a >= 0, z_i = x_i
    on a_i > 0 if that point already lies inside the ball.
    """
    a = np.atleast_2d(np.asarray(a, float))
    x = np.asarray(x, float)
    pos = a > 0
    free = np.where(pos, x, 0.0)
    unconstrained = np.all(a >= 0, axis=1) & (np.sum(free * free, axis=1) < 1.0)
    out = np.sum(a * free, axis=1)
    # tau bisection for the rows where the ball constraint binds
    rows = ~unconstrained
    if np.any(rows):
        ar = a[rows]
        lo = np.zeros(ar.shape[0])
        hi = np.ones(ar.shape[0])
        for _ in range(200):
            z = np.minimum(x, hi[:, None] * ar)
            big = np.sum(z * z, axis=1) >= 1.0
            if np.all(big):
                break
            hi = np.where(big, hi, 2 * hi)
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            z = np.minimum(x, mid[:, None] * ar)
            big = np.sum(z * z, axis=1) >= 1.0
            hi = np.where(big, mid, hi)
            lo = np.where(big, lo, mid)
        z = np.minimum(x, hi[:, None] * ar)
        z = z / np.maximum(np.linalg.norm(z, axis=1), 1.0)[:, None]
        out[rows] = np.sum(ar * z, axis=1)
    return out


def _axis_grid(lo, hi, pts):
    return np.array([lo]) if lo == hi else np.linspace(lo, hi, pts)


def brute_mP(sp, x, pts=101, zoom=3):
    """Constrained slope: inf over the subdifferential box of the exact inner supremum.

    The box is gridded with ``pts`` points per nondegenerate coordinate; when
    three coordinates are nondegenerate the grid is coarser and zoomed
    ``zoom`` times around the best cell.  The clamp point and the box corners
    are always included.
    """
    x = np.asarray(x, float)
    if np.any(x < 0):
        raise ValueError("brute_mP needs a point of the nonnegative orthant")
    lo, hi = sp.box(x)
    nd = int(np.sum(lo < hi))
    fixed = [np.clip(0.0, lo, hi)] + [np.where(np.array(bits, bool), hi, lo)
                                     for bits in np.ndindex(*([2] * len(lo)))]
    best = float(np.min(inner_sup(np.array(fixed), x)))
    if nd == 0 or best == 0.0:
        # the supremum is never negative (take y = x), so zero is already the infimum
        return best
    n_pts = pts if nd <= 2 else 21
    rounds = 1 if nd <= 2 else zoom + 1
    clo, chi = lo.copy(), hi.copy()
    for _ in range(rounds):
        axes = [_axis_grid(l, h, n_pts) for l, h in zip(clo, chi)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(lo))
        vals = inner_sup(grid, x)
        i = int(np.argmin(vals))
        best = min(best, float(vals[i]))
        centre = grid[i]
        width = (chi - clo) / (n_pts - 1)
        clo = np.maximum(lo, centre - width)
        chi = np.minimum(hi, centre + width)
    return best


def outwardly_directed(sp, x):
    """No nonzero subgradient lies in the inward normal cone of the orthant at x.

    At a point of the orthant the inward normal cone is {z : z_i = 0 where
    x_i > 0, z_i >= 0 where x_i = 0}; interior points pass trivially.
    """
    x = np.asarray(x, float)
    lo, hi = sp.box(x)
    on = x == 0
    if not np.any(on):
        return True
    # coordinates off the boundary must admit zero, boundary ones a nonnegative value
    if np.any((~on) & ((lo > 0) | (hi < 0))):
        return True
    if np.any(on & (hi < 0)):
        return True
    return not np.any(on & (hi > 0))


def schauder_holds(sp, x):
    """(I - subgradient)(x) stays in the orthant for every element of the box."""
    lo, hi = sp.box(x)
    return bool(np.all(np.asarray(x, float) - hi >= 0.0))


def check_invariance_condition(sp, samples):
    """Per-sample verdicts of the Schauder and outwardly-directed conditions on the orthant."""
    rows = []
    for x in samples:
        s = schauder_holds(sp, x)
        o = outwardly_directed(sp, x)
        rows.append({"x": [float(v) for v in x], "schauder": s, "outward": o,
                     "implication_ok": (not s) or o})
    return {"samples": rows, "implication_holds": all(r["implication_ok"] for r in rows),
            "premise_count": sum(r["schauder"] for r in rows)}


def report_json(checks):
    """Serialize a list of {name, sample, verdict, margin} dicts deterministically."""
    return json.dumps(checks, sort_keys=True, default=lambda o: o.tolist() if hasattr(o, "tolist") else float(o))
