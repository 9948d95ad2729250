"""Descending flow du/dt = -V(u) with a cone-preserving pseudo-gradient field.

The field is V(u) = u - A(u) with A(u) = (-Delta_p)^(-1)(lam |u|^(p-2) u + w),
w the min-norm subgradient selection.  An explicit Euler step with dt <= 1 is
the convex combination (1 - dt) u + dt A(u); by the discrete comparison
principle A maps nonnegative data to nonnegative functions whenever
s w >= 0 pointwise, so the cone of nonnegative functions (and its mirror) is
never left.  Steps are halved until the energy decreases (Armijo).
"""

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .functional import norm_h, phi, smooth_part
from .grid import norm_w1p
from .plap import NewtonOpts, inverse_plap
from .potential import clarke_bounds

__all__ = ["FlowConfig", "FlowState", "FlowTrace", "STATUSES", "vector_field", "field_terms",
           "flow_step", "integrate", "classify_sign", "cone_status"]

STATUSES = ("critical_point", "reached_origin_basin", "floor_exit", "horizon", "stalled")


@dataclass(frozen=True)
class FlowConfig:
    """Stopping rules and step control.

    ``eps_crit`` is the residual below which a state counts as critical,
    ``phi_floor`` the energy below which a trajectory has escaped,
    ``origin_radius`` the W^(1,p) radius inside which it is captured by the
    origin, and ``t_max`` the time horizon.  ``max_steps`` bounds the number
    of accepted steps (a second horizon) and an accepted step shorter than
    ``dt_min`` counts as a stall, so chattering near a discontinuity cannot
    loop indefinitely.
    """

    dt0: float = 1.0
    eps_crit: float = 1e-8
    phi_floor: float = -1.0
    t_max: float = 2000.0
    origin_radius: float = 1e-3
    cone_tol: float = 1e-12
    max_halvings: int = 60
    armijo: float = 1e-4
    energy_slack: float = 1e-13
    growth_cap: float = 2.0
    stride: int = 1
    max_steps: int = 10000
    dt_min: float = 1e-12
    rule: str = "min_norm"
    newton: NewtonOpts = field(default_factory=NewtonOpts)

    def __post_init__(self):
        if not self.eps_crit > 0:
            raise ValueError("eps_crit must be positive")
        if not self.dt0 > 0:
            raise ValueError("dt0 must be positive")
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if not self.cone_tol >= 0:
            raise ValueError("cone_tol must be nonnegative")
        if self.stride < 1:
            raise ValueError("stride must be at least 1")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")


@dataclass
class FlowState:
    t: float
    u: np.ndarray
    phi: float
    residual: float
    cone_status: str

    def summary(self):
        return {"t": self.t, "phi": self.phi, "residual": self.residual,
                "min_u": float(self.u.min()), "max_u": float(self.u.max())}


@dataclass
class FlowTrace:
    states: list
    status: str
    steps: int = 0
    max_increase: float = -np.inf
    min_nodal: float = np.inf
    max_nodal: float = -np.inf
    descent_fallbacks: int = 0

    @property
    def final(self):
        return self.states[-1]

    def energies(self):
        return np.array([s.phi for s in self.states])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "phi", "residual", "min_u", "max_u"])
            for s in self.states:
                d = s.summary()
                w.writerow([repr(d[k]) for k in ("t", "phi", "residual", "min_u", "max_u")])

    def to_json(self, path=None):
        doc = {"status": self.status, "steps": self.steps, "max_increase": self.max_increase,
               "min_nodal": self.min_nodal, "max_nodal": self.max_nodal,
               "snapshots": [dict(s.summary(), u=s.u.tolist(), cone_status=s.cone_status)
                             for s in self.states]}
        text = json.dumps(doc, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def cone_status(u, tol=0.0):
    if u.min() >= -tol:
        return "in_P"
    if u.max() <= tol:
        return "in_negP"
    return "mixed"


def classify_sign(u, tol=1e-10):
    u = np.asarray(u, dtype=float)
    if np.max(np.abs(u)) <= tol:
        return "zero"
    if np.all(u > tol):
        return "positive"
    if np.all(u < -tol):
        return "negative"
    return "sign_changing"


def field_terms(prob, u, cfg):
    """Field and the quantities the step control needs, from one inverse solve.

    Returns (V, g, pairing, residual) where g is the nodal residual for the
    selected subgradient and pairing = <g, V>_h.
    """
    p, m = prob.p, prob.mesh
    s = smooth_part(prob, u)
    lo, hi = clarke_bounds(prob.spec, u)
    w_min = np.clip(s, lo, hi)
    residual = norm_h(s - w_min, m)
    if cfg.rule == "min_norm":
        w = w_min
    elif cfg.rule == "midpoint":
        w = 0.5 * (lo + hi)
    elif cfg.rule == "lower":
        w = np.asarray(lo, dtype=float)
    elif cfg.rule == "upper":
        w = np.asarray(hi, dtype=float)
    else:
        raise ValueError(f"unknown selection rule {cfg.rule!r}")
    g = s - w
    A = inverse_plap(prob.lam * np.sign(u) * np.abs(u) ** (p - 1.0) + w, p, m, cfg.newton)
    V = u - A
    pairing = m.h * float(np.dot(g, V))
    return V, g, pairing, residual


def vector_field(prob, u, rule="min_norm", cfg=None):
    """V(u) = u - (-Delta_p)^(-1)(lam |u|^(p-2) u + w), w selected by ``rule``.

    When the descent pairing <g, V>_h is not positive at a non-critical state
    the residual direction g itself is returned instead.
    """
    cfg = cfg or FlowConfig(rule=rule)
    if cfg.rule != rule:
        cfg = FlowConfig(**{**cfg.__dict__, "rule": rule})
    V, g, pairing, residual = field_terms(prob, u, cfg)
    if residual > cfg.eps_crit and not pairing > 0:
        return g
    return V


def _state(prob, t, u, residual, cfg):
    return FlowState(t, u, phi(prob, u), residual, cone_status(u, cfg.cone_tol))


def flow_step(prob, s, cfg, terms=None):
    """One explicit Euler step with Armijo backtracking on the energy.

    Returns (new_state, dt, fallback) where ``dt`` is 0.0 when the step stalled
    or the field vanished.
    """
    V, g, pairing, residual = terms if terms is not None else field_terms(prob, s.u, cfg)
    fallback = False
    if not pairing > 0:
        if residual <= cfg.eps_crit or not np.any(V):
            return s, 0.0, False
        V, pairing, fallback = g, prob.mesh.h * float(np.dot(g, g)), True
    vnorm = norm_w1p(V, prob.p, prob.mesh)
    if vnorm == 0.0:
        return s, 0.0, fallback
    dt = min(cfg.dt0, 1.0, cfg.growth_cap * (1.0 + norm_w1p(s.u, prob.p, prob.mesh)) / vnorm)
    slack = cfg.energy_slack * max(1.0, abs(s.phi))
    for _ in range(cfg.max_halvings):
        u_new = s.u - dt * V
        phi_new = phi(prob, u_new) if np.all(np.isfinite(u_new)) else np.nan
        if np.isfinite(phi_new) and phi_new <= s.phi - cfg.armijo * dt * pairing + slack:
            return FlowState(s.t + dt, u_new, phi_new, np.nan,
                             cone_status(u_new, cfg.cone_tol)), dt, fallback
        if np.isnan(phi_new) and np.all(np.isfinite(u_new)):
            break
        dt *= 0.5
    return s, 0.0, fallback


def integrate(prob, v0, cfg=None, record=True):
    """Run the flow from ``v0`` until one of the stopping rules fires.

    Statuses: ``critical_point`` (residual <= eps_crit away from the origin, or
    an exactly zero state), ``reached_origin_basin`` (W^(1,p) norm below
    origin_radius), ``floor_exit`` (energy below phi_floor
    or non-finite), ``horizon`` (t >= t_max or max_steps taken) and ``stalled``
    (no admissible step longer than dt_min).
    Snapshots are kept every ``cfg.stride`` steps plus the final state; the
    trace also records the largest per-step energy change and the nodal extremes
    over every accepted state, not only the snapshots.
    """
    cfg = cfg or FlowConfig()
    m = prob.mesh
    u = np.array(v0, dtype=float)
    if u.shape != (m.n,):
        raise ValueError(f"start has shape {u.shape}, mesh expects ({m.n},)")
    terms = field_terms(prob, u, cfg)
    state = _state(prob, 0.0, u, terms[3], cfg)
    trace = FlowTrace([state], "horizon", min_nodal=float(u.min()), max_nodal=float(u.max()))
    while True:
        state.residual = terms[3]
        status = _terminal(prob, state, cfg)
        if status:
            break
        new, dt, fb = flow_step(prob, state, cfg, terms)
        trace.descent_fallbacks += fb
        if dt < cfg.dt_min:
            status = "stalled"
            break
        trace.steps += 1
        trace.max_increase = max(trace.max_increase, new.phi - state.phi)
        trace.min_nodal = min(trace.min_nodal, float(new.u.min()))
        trace.max_nodal = max(trace.max_nodal, float(new.u.max()))
        state = new
        if not np.isfinite(state.phi) or state.phi < cfg.phi_floor:
            state.residual = np.inf
            status = "floor_exit"
            break
        terms = field_terms(prob, state.u, cfg)
        if trace.steps >= cfg.max_steps:
            status = "horizon"
            break
        if record and trace.steps % cfg.stride == 0:
            trace.states.append(state)
    state.residual = terms[3] if status != "floor_exit" else state.residual
    if trace.states[-1] is not state:
        trace.states.append(state)
    trace.status = status
    return trace


def _terminal(prob, state, cfg):
    small = norm_w1p(state.u, prob.p, prob.mesh) < cfg.origin_radius
    if state.residual <= cfg.eps_crit and (not small or not np.any(state.u)):
        return "critical_point"
    if small:
        return "reached_origin_basin"
    if not np.isfinite(state.phi) or state.phi < cfg.phi_floor:
        return "floor_exit"
    if state.t >= cfg.t_max:
        return "horizon"
    return None
