"""Locate three critical points on the boundary of the origin's basin of attraction.

Under the mountain-pass geometry (lam below the principal eigenvalue, superlinear
potential) the origin is a strict local minimum and every ray from it leaves the
basin once.  Ray bisection finds a pair of states straddling the basin boundary;
the boundary is invariant under the flow, so flowing both states together and
re-bisecting on the segment between them whenever they separate keeps the pair
on the boundary while the flow carries it down to a critical point (edge
tracking).  Started inside the positive cone the pair stays there and converges
to the positive solution; the negative one is its mirror.  Directions in the
plane spanned by the first two eigenfunctions that lead to the positive and to
the negative solution are separated by directions whose boundary flow ends at a
sign-changing critical point, which a bisection on the direction angle finds.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .flow import FlowConfig, classify_sign, field_terms, flow_step, integrate, _state
from .functional import newton_polish, phi, residual_m
from .grid import norm_w1p
from .plap import eigen_first, eigen_second_1d

__all__ = ["PlanePoint", "SolutionRecord", "RayResult", "EdgeResult", "MultistartConfig",
           "BranchFailure", "plane_point", "ray_escape_radius", "track_edge", "find_three",
           "driver_report", "count_nodes", "principal_pair"]


class BranchFailure(RuntimeError):
    def __init__(self, branch, msg, evidence=None):
        super().__init__(f"{branch} branch: {msg}")
        self.branch = branch
        self.evidence = evidence or {}


@dataclass(frozen=True)
class MultistartConfig:
    """Search parameters.

    ``bisect_tol`` is the absolute resolution of ray bisection, ``edge_sep`` the
    W^(1,p) separation at which an edge pair is re-bisected, ``n_theta`` the
    number of sweep directions, ``theta_depth`` the number of angle halvings
    used to resolve a positive/negative transition and ``reseed_rounds`` the
    number of times the bracket is re-seeded from the two nearest boundary
    trajectories.
    """

    bisect_tol: float = 1e-12
    margin_factor: float = 10.0
    t_min: float = 1e-6
    t_cap: float = 1e6
    edge_sep: float = 1e-9
    sweep_tol: float = 1e-10
    sweep_sep: float = 1e-6
    polish_below: float = 1e-2
    edge_rounds: int = 400
    edge_steps: int = 5000
    n_theta: int = 64
    theta_depth: int = 48
    reseed_rounds: int = 12
    sign_tol: float = 1e-12

    def __post_init__(self):
        if not self.bisect_tol > 0:
            raise ValueError("bisect_tol must be positive")
        if not 0 < self.t_min < self.t_cap:
            raise ValueError("need 0 < t_min < t_cap")
        if self.n_theta < 4:
            raise ValueError("need at least 4 sweep directions")


@dataclass
class PlanePoint:
    a: float
    b: float
    u: np.ndarray


@dataclass
class SolutionRecord:
    u: np.ndarray
    sign: str
    phi: float
    residual: float
    provenance: dict = field(default_factory=dict)

    def to_dict(self, with_u=True):
        d = {"sign": self.sign, "phi": self.phi, "residual": self.residual,
             "provenance": self.provenance, "nodes": int(count_nodes(self.u))}
        if with_u:
            d["u"] = self.u.tolist()
        return d


@dataclass
class RayResult:
    t_star: float
    t_lo: float
    t_hi: float
    history: list
    verified: bool


@dataclass
class EdgeResult:
    u: np.ndarray
    converged: bool
    rounds: int
    steps: int
    outcome: str
    closest: np.ndarray = None
    closest_residual: float = np.inf


class _Stats:
    """Accumulates per-step energy changes over every flow the driver runs."""

    def __init__(self):
        self.max_increase = -np.inf
        self.flows = 0
        self.steps = 0

    def absorb(self, trace):
        self.flows += 1
        self.steps += trace.steps
        self.max_increase = max(self.max_increase, trace.max_increase)

    def step(self, d):
        self.steps += 1
        self.max_increase = max(self.max_increase, d)


def count_nodes(u, tol=0.0):
    """Number of sign changes of the nodal values, zero nodes skipped."""
    s = np.sign(np.where(np.abs(u) <= tol, 0.0, u))
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def plane_point(a, b, u1, u2, prob):
    u = a * u1 + b * u2
    return PlanePoint(float(a), float(b), u / norm_w1p(u, prob.p, prob.mesh))


def _captured(prob, u, cfg, stats):
    tr = integrate(prob, u, cfg, record=False)
    stats.absorb(tr)
    return tr.status == "reached_origin_basin", tr


def ray_escape_radius(prob, direction, cfg, bisect_tol=1e-12, t_min=1e-6, t_cap=1e6, stats=None):
    """Radius t* where the ray t -> t * direction leaves the basin of the origin.

    Doubling brackets the flip of the predicate "the flow from t * direction is
    captured by the origin", bisection then narrows the bracket below
    ``bisect_tol`` and both ends are re-checked.
    """
    stats = stats or _Stats()
    u = direction.u if isinstance(direction, PlanePoint) else np.asarray(direction, float)
    history = []

    def pred(t):
        cap, tr = _captured(prob, t * u, cfg, stats)
        history.append({"t": t, "captured": cap, "status": tr.status})
        return cap

    if not pred(t_min):
        raise BranchFailure("ray", f"start t={t_min} is not captured by the origin",
                            {"history": history})
    lo, hi = t_min, None
    t = max(1.0, t_min)
    while t <= t_cap:
        if pred(t):
            lo = t
            t *= 2.0
        else:
            hi = t
            break
    if hi is None:
        raise BranchFailure("ray", f"no escape below t_cap={t_cap}; lam may not lie below the "
                            "principal eigenvalue", {"history": history})
    while hi - lo > bisect_tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if pred(mid):
            lo = mid
        else:
            hi = mid
    t_star = 0.5 * (lo + hi)
    radius = t_star * norm_w1p(u, prob.p, prob.mesh)
    if radius < 2.0 * cfg.origin_radius:
        # the flip sits on the capture ball itself: there is no basin to leave
        raise BranchFailure("ray", f"escape radius {radius:.3g} is at the origin-capture radius; "
                            "lam may not lie below the principal eigenvalue", {"history": history})
    verified = pred(t_star - bisect_tol) and not pred(t_star + bisect_tol)
    return RayResult(t_star, lo, hi, history, verified)


def _segment_bisect(prob, a, b, cfg, tol, stats):
    """Shrink the segment [a, b] (a captured, b escaped) to width ~ bisect_tol."""
    width = norm_w1p(b - a, prob.p, prob.mesh)
    s_lo, s_hi = 0.0, 1.0
    target = tol * max(1.0, norm_w1p(a, prob.p, prob.mesh))
    while (s_hi - s_lo) * width > target:
        s = 0.5 * (s_lo + s_hi)
        if s <= s_lo or s >= s_hi:
            break
        c = a + s * (b - a)
        cap, tr = _captured(prob, c, cfg, stats)
        if tr.status == "critical_point":
            return c, c, tr.final.u
        if cap:
            s_lo = s
        else:
            s_hi = s
    return a + s_lo * (b - a), a + s_hi * (b - a), None


def _one_signed(u, tol):
    if np.all(u >= -tol):
        return "positive"
    if np.all(u <= tol):
        return "negative"
    return None


def track_edge(prob, a, b, cfg, ms, stats=None, stop_on_sign=False, sep=None, tol=None):
    """Follow the basin boundary from the straddling pair (a captured, b escaped).

    Returns an EdgeResult whose ``u`` is the critical point reached (residual <=
    cfg.eps_crit) when ``converged``.  ``outcome`` is the sign class of the first
    one-signed boundary state or, for a mixed critical point, ``sign_changing``.
    With ``stop_on_sign`` tracking ends as soon as the outcome is one-signed.
    ``closest`` is the mixed-sign boundary state of smallest residual seen.
    """
    stats = stats or _Stats()
    m, p = prob.mesh, prob.p
    sep = ms.edge_sep if sep is None else sep
    tol = ms.bisect_tol if tol is None else tol
    outcome = None
    closest, closest_res = None, np.inf
    total = 0
    for rnd in range(ms.edge_rounds):
        a, b, hit = _segment_bisect(prob, a, b, cfg, tol, stats)
        if hit is not None:
            sign = classify_sign(hit, ms.sign_tol)
            return EdgeResult(hit, True, rnd, total, outcome or _outcome_of(sign), closest, closest_res)
        ta, tb = field_terms(prob, a, cfg), field_terms(prob, b, cfg)
        sa = _state(prob, 0.0, a, ta[3], cfg)
        sb = _state(prob, 0.0, b, tb[3], cfg)
        for _ in range(ms.edge_steps):
            if outcome is None:
                outcome = _one_signed(sa.u, ms.sign_tol)
                if outcome and stop_on_sign:
                    return EdgeResult(sa.u, False, rnd, total, outcome, closest, closest_res)
            for st in (sa, sb):
                if st.residual <= cfg.eps_crit and norm_w1p(st.u, p, m) >= cfg.origin_radius:
                    sign = classify_sign(st.u, ms.sign_tol)
                    return EdgeResult(st.u, True, rnd, total, outcome or _outcome_of(sign),
                                      closest, closest_res)
            if outcome is None and sa.residual < closest_res:
                closest, closest_res = sa.u, sa.residual
            if norm_w1p(sb.u - sa.u, p, m) > sep:
                break
            na, dta, _ = flow_step(prob, sa, cfg, ta)
            nb, dtb, _ = flow_step(prob, sb, cfg, tb)
            if dta == 0.0 or dtb == 0.0:
                break
            stats.step(na.phi - sa.phi)
            stats.step(nb.phi - sb.phi)
            total += 1
            sa, sb = na, nb
            ta, tb = field_terms(prob, sa.u, cfg), field_terms(prob, sb.u, cfg)
            sa.residual, sb.residual = ta[3], tb[3]
        a, b = sa.u, sb.u
        if not _captured(prob, a, cfg, stats)[0] or _captured(prob, b, cfg, stats)[0]:
            # the pair no longer straddles; fall back to the last known order
            if _captured(prob, b, cfg, stats)[0]:
                a, b = b, a
            else:
                return EdgeResult(a, False, rnd, total, outcome or "lost", closest, closest_res)
    return EdgeResult(a, False, ms.edge_rounds, total, outcome or "unresolved", closest, closest_res)


def _outcome_of(sign):
    return sign if sign in ("positive", "negative") else "sign_changing"


def _ray_pair(prob, u, cfg, ms, stats):
    ray = ray_escape_radius(prob, u, cfg, ms.bisect_tol, ms.t_min, ms.t_cap, stats)
    return ray, ray.t_lo * u, ray.t_hi * u


def _record(prob, u, ms, provenance):
    return SolutionRecord(np.array(u), classify_sign(u, ms.sign_tol), float(phi(prob, u)),
                          float(residual_m(prob, u)), provenance)


def _one_signed_branch(prob, direction, cfg, ms, stats, name):
    ray, a, b = _ray_pair(prob, direction, cfg, ms, stats)
    # flow launched just outside the basin: must stay in the cone while it escapes
    launch = integrate(prob, (ray.t_star + ms.margin_factor * ms.bisect_tol) * direction, cfg)
    stats.absorb(launch)
    edge = track_edge(prob, a, b, cfg, ms, stats)
    evidence = {"t_star": ray.t_star, "verified": ray.verified, "history": ray.history,
                "launch_status": launch.status, "launch_min_nodal": launch.min_nodal,
                "launch_max_nodal": launch.max_nodal, "edge_rounds": edge.rounds,
                "edge_steps": edge.steps}
    if not edge.converged:
        raise BranchFailure(name, "edge tracking did not reach a critical point", evidence)
    return _record(prob, edge.u, ms, evidence)


def _direction_outcome(prob, d, cfg, ms, stats, fine=False):
    """Sign class that the boundary flow through the ray along ``d`` commits to."""
    one = _one_signed(d, 0.0)
    if one is not None and not fine:
        # the boundary point itself lies in a cone, which the flow never leaves
        return None, EdgeResult(d, False, 0, 0, one)
    tol = ms.bisect_tol if fine else ms.sweep_tol
    ray = ray_escape_radius(prob, d, cfg, tol, ms.t_min, ms.t_cap, stats)
    edge = track_edge(prob, ray.t_lo * d, ray.t_hi * d, cfg, ms, stats, stop_on_sign=True,
                      sep=ms.edge_sep if fine else ms.sweep_sep, tol=tol)
    return ray, edge


def _try_polish(prob, edge, cfg, ms):
    if edge.closest is None or not edge.closest_residual <= ms.polish_below:
        return None
    u, res, ok = newton_polish(prob, edge.closest, tol=cfg.eps_crit)
    if ok and classify_sign(u, ms.sign_tol) == "sign_changing":
        return u, res
    return None


def _sign_changing_branch(prob, u1, u2, cfg, ms, stats):
    thetas = 2 * np.pi * np.arange(ms.n_theta) / ms.n_theta
    sweep = []
    outcomes = []
    for th in thetas:
        d = plane_point(np.cos(th), np.sin(th), u1, u2, prob).u
        ray, edge = _direction_outcome(prob, d, cfg, ms, stats)
        sweep.append({"theta": float(th), "t_star": None if ray is None else ray.t_star,
                      "outcome": edge.outcome})
        outcomes.append(edge.outcome)
        if edge.converged and edge.outcome == "sign_changing":
            return _record(prob, edge.u, ms, {"theta": float(th), "polished": False}), sweep
    evidence = {"sweep": sweep, "resolution": 2 * np.pi / ms.n_theta}
    k = len(thetas)
    for i in range(k):
        o1, o2 = outcomes[i], outcomes[(i + 1) % k]
        if {o1, o2} != {"positive", "negative"}:
            continue
        lo, hi = thetas[i], thetas[i] + 2 * np.pi / k
        rec = _refine_transition(prob, lo, hi, o1, u1, u2, cfg, ms, stats, evidence)
        if rec is not None:
            return rec, sweep
    raise BranchFailure("sign_changing", "no sign-changing critical point found", evidence)


def _refine_transition(prob, lo, hi, out_lo, u1, u2, cfg, ms, stats, evidence):
    """Bisect between a positive-outcome and a negative-outcome direction.

    Boundary flows from directions close to the transition linger near the
    sign-changing critical point before committing to one cone.  The mixed-sign
    state of smallest residual seen is handed to a local Newton solve once its
    residual is below ``ms.polish_below``.  When bisection is exhausted the two
    closest mixed states on either side seed the next bracket.
    """
    refine = evidence.setdefault("refinement", [])

    def direction(s, P, N):
        v = (1 - s) * P + s * N
        return v / norm_w1p(v, prob.p, prob.mesh)

    P = plane_point(np.cos(lo), np.sin(lo), u1, u2, prob).u
    N = plane_point(np.cos(hi), np.sin(hi), u1, u2, prob).u
    if out_lo != "positive":
        P, N = N, P
    tried = np.inf
    for level in range(ms.reseed_rounds):
        s_lo, s_hi = 0.0, 1.0
        best = {}
        for _ in range(ms.theta_depth):
            s = 0.5 * (s_lo + s_hi)
            if s <= s_lo or s >= s_hi:
                break
            ray, edge = _direction_outcome(prob, direction(s, P, N), cfg, ms, stats, fine=level > 0)
            refine.append({"level": level, "s": s, "outcome": edge.outcome,
                           "closest_residual": edge.closest_residual})
            if edge.converged and edge.outcome == "sign_changing":
                return _record(prob, edge.u, ms, {"theta_bracket": [lo, hi], "level": level, "s": s,
                                                  "polished": False})
            if edge.closest_residual < 0.5 * tried:
                tried = edge.closest_residual
                hit = _try_polish(prob, edge, cfg, ms)
                if hit is not None:
                    return _record(prob, hit[0], ms, {"theta_bracket": [lo, hi], "level": level, "s": s,
                                                      "polished": True,
                                                      "seed_residual": edge.closest_residual})
            if edge.outcome == "positive":
                s_lo = s
            elif edge.outcome == "negative":
                s_hi = s
            else:
                break
            if edge.closest is not None and edge.closest_residual < best.get(edge.outcome, (np.inf,))[0]:
                best[edge.outcome] = (edge.closest_residual, edge.closest)
        if "positive" not in best or "negative" not in best:
            return None
        P, N = best["positive"][1], best["negative"][1]
        P, N = P / norm_w1p(P, prob.p, prob.mesh), N / norm_w1p(N, prob.p, prob.mesh)
    return None


def principal_pair(prob):
    u1 = eigen_first(prob.p, prob.mesh).u
    u2 = eigen_second_1d(prob.p, prob.mesh).u
    return u1 / norm_w1p(u1, prob.p, prob.mesh), u2 / norm_w1p(u2, prob.p, prob.mesh)


def find_three(prob, cfg=None, ms=None, basis=None):
    """Positive, negative and sign-changing critical points of the energy.

    Returns (records, report) where ``records`` maps sign class to
    SolutionRecord (or to the BranchFailure raised by that branch) and
    ``report`` carries sweep evidence and flow statistics.
    """
    cfg = cfg or FlowConfig()
    ms = ms or MultistartConfig()
    u1, u2 = basis if basis is not None else principal_pair(prob)
    stats = _Stats()
    records = {}
    for name, d in (("positive", u1), ("negative", -u1)):
        try:
            records[name] = _one_signed_branch(prob, d, cfg, ms, stats, name)
        except BranchFailure as e:
            records[name] = e
    sweep = []
    try:
        records["sign_changing"], sweep = _sign_changing_branch(prob, u1, u2, cfg, ms, stats)
    except BranchFailure as e:
        records["sign_changing"] = e
    report = {"flows": stats.flows, "steps": stats.steps, "max_energy_increase": stats.max_increase,
              "sweep": sweep, "sweep_resolution": 2 * np.pi / ms.n_theta}
    return records, report


def driver_report(prob, records, report, with_u=False):
    doc = {"problem": {"n": prob.mesh.n, "L": prob.mesh.L, "p": prob.p, "lambda": prob.lam,
                       "potential": prob.spec.to_dict()},
           "stats": report, "records": {}}
    for name, rec in records.items():
        if isinstance(rec, SolutionRecord):
            doc["records"][name] = dict(rec.to_dict(with_u), status="ok")
        else:
            doc["records"][name] = {"status": "failed", "error": str(rec),
                                    "evidence": rec.evidence}
    return json.dumps(doc, sort_keys=True, default=_jsonable)


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"not serializable: {type(o)}")
