"""Locally Lipschitz potentials j(x, s) and their pointwise Clarke subdifferentials.

The built-in potentials do not depend on ``x``; the argument is kept so that
call sites read like the continuous problem.  Every function here accepts
scalar or array ``s`` and broadcasts.

For a scalar function that is C^1 between finitely many breakpoints the
Clarke subdifferential at ``s`` is the closed interval spanned by the two
one-sided derivative limits, which is what :func:`clarke_bounds` returns.
"""

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial

__all__ = ["Interval", "PotentialSpec", "KINDS", "smooth_power", "kinked_power",
           "jump_derivative", "custom_piecewise", "j_eval", "f_left", "f_right", "f_prime",
           "clarke_bounds", "clarke_interval", "j0_dir", "check_Hj", "is_odd"]

KINDS = ("smooth_power", "kinked_power", "jump_derivative", "custom_piecewise")


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    def contains(self, v, tol=0.0):
        return self.lo - tol <= v <= self.hi + tol

    def support(self, d):
        """max { xi * d : xi in the interval }."""
        return max(self.lo * d, self.hi * d)

    @property
    def midpoint(self):
        return 0.5 * (self.lo + self.hi)

    @property
    def is_degenerate(self):
        return self.lo == self.hi


@dataclass(frozen=True)
class PotentialSpec:
    """Parameters of a potential j together with the constants of its growth hypotheses.

    ``q`` is the growth exponent, ``mu`` and ``M`` the superlinearity exponent and
    threshold, ``a1`` the growth constant.  For the power kinds ``c`` is the
    derivative jump at the levels ``+-b``.  For ``custom_piecewise`` the derivative
    f = j' is given as one polynomial per piece (coefficients low to high order)
    on the intervals cut by ``breakpoints``; j is its antiderivative with j(0) = 0.
    """

    kind: str
    q: float = 4.0
    mu: float = 3.0
    M: float = 1.0
    a1: float = 1.0
    c: float = 0.0
    b: float = 1.0
    breakpoints: tuple = ()
    pieces: tuple = ()
    _poly: tuple = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}; expected one of {KINDS}")
        bps = tuple(float(v) for v in self.breakpoints)
        if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bps)
        if self.kind == "custom_piecewise":
            if len(self.pieces) != len(bps) + 1:
                raise ValueError(f"{len(bps)} breakpoints need {len(bps) + 1} pieces, "
                                 f"got {len(self.pieces)}")
            pieces = tuple(tuple(float(c) for c in pc) for pc in self.pieces)
            object.__setattr__(self, "pieces", pieces)
            object.__setattr__(self, "_poly", _antiderivatives(bps, pieces))
        else:
            if not self.q > 1:
                raise ValueError(f"power potentials need q > 1, got q={self.q}")
            if self.kind != "smooth_power":
                if not self.b > 0:
                    raise ValueError(f"kink level must be positive, got b={self.b}")
                object.__setattr__(self, "breakpoints", (-float(self.b), float(self.b)))

    def to_dict(self):
        d = {"kind": self.kind, "q": self.q, "mu": self.mu, "M": self.M, "a1": self.a1}
        if self.kind in ("kinked_power", "jump_derivative"):
            d.update(c=self.c, b=self.b)
        if self.kind == "custom_piecewise":
            d.update(breakpoints=list(self.breakpoints), pieces=[list(pc) for pc in self.pieces])
        return d


def _antiderivatives(bps, pieces):
    """Polynomials for f and j on every piece, with j continuous and j(0) = 0."""
    fs = [Polynomial(pc if pc else [0.0]) for pc in pieces]
    js = [f.integ() for f in fs]
    k0 = int(np.searchsorted(bps, 0.0, side="right"))
    js[k0] = js[k0] - js[k0](0.0)
    for k in range(k0 + 1, len(js)):
        b = bps[k - 1]
        js[k] = js[k] + (js[k - 1](b) - js[k](b))
    for k in range(k0 - 1, -1, -1):
        b = bps[k]
        js[k] = js[k] + (js[k + 1](b) - js[k](b))
    return tuple(fs), tuple(js)


def smooth_power(q=4.0, mu=3.0, M=1.0, a1=1.0):
    """j(s) = |s|^q / q."""
    return PotentialSpec("smooth_power", q=q, mu=mu, M=M, a1=a1)


def kinked_power(q=4.0, c=0.5, b=0.5, mu=3.0, M=1.0, a1=None):
    """j(s) = |s|^q / q + c max(0, |s| - b): a convex kink at s = +-b."""
    return PotentialSpec("kinked_power", q=q, mu=mu, M=M, a1=1.0 + c if a1 is None else a1,
                         c=c, b=b)


def jump_derivative(q=4.0, c=1.0, b=1.0, mu=3.0, M=1.0, a1=None):
    """Odd f(s) = |s|^(q-2) s + c sign(s) H(|s| - b), an upward jump of height c at |s| = b."""
    return PotentialSpec("jump_derivative", q=q, mu=mu, M=M, a1=1.0 + c if a1 is None else a1,
                         c=c, b=b)


def custom_piecewise(breakpoints, pieces, q=4.0, mu=3.0, M=1.0, a1=1.0):
    return PotentialSpec("custom_piecewise", q=q, mu=mu, M=M, a1=a1,
                         breakpoints=tuple(breakpoints), pieces=tuple(tuple(p) for p in pieces))


def _power_part(spec, s):
    a = np.abs(s)
    return a ** spec.q / spec.q, np.sign(s) * a ** (spec.q - 1.0)


def _eval_pieces(polys, idx, s):
    out = np.empty_like(s)
    for k, poly in enumerate(polys):
        sel = idx == k
        if np.any(sel):
            out[sel] = poly(s[sel])
    return out


def j_eval(spec, x, s):
    s_arr = np.asarray(s, dtype=float)
    if spec.kind == "custom_piecewise":
        flat = np.atleast_1d(s_arr)
        idx = np.searchsorted(spec.breakpoints, flat, side="right")
        out = _eval_pieces(spec._poly[1], idx, flat).reshape(s_arr.shape)
    else:
        out, _ = _power_part(spec, s_arr)
        if spec.kind != "smooth_power":
            out = out + spec.c * np.maximum(0.0, np.abs(s_arr) - spec.b)
    return out if out.ndim else float(out)


def _one_sided(spec, s, side):
    s_arr = np.asarray(s, dtype=float)
    if spec.kind == "custom_piecewise":
        flat = np.atleast_1d(s_arr)
        idx = np.searchsorted(spec.breakpoints, flat, side=side)
        out = _eval_pieces(spec._poly[0], idx, flat).reshape(s_arr.shape)
    else:
        _, out = _power_part(spec, s_arr)
        if spec.kind != "smooth_power":
            b, c = spec.b, spec.c
            if side == "right":
                jump = c * (s_arr >= b) - c * (s_arr < -b)
            else:
                jump = c * (s_arr > b) - c * (s_arr <= -b)
            out = out + jump
    return out if out.ndim else float(out)


def f_right(spec, s):
    """Right limit of j'(s)."""
    return _one_sided(spec, s, "right")


def f_left(spec, s):
    """Left limit of j'(s)."""
    return _one_sided(spec, s, "left")


def f_prime(spec, s):
    """Derivative of the smooth branch of j' at s (one-sided from the right at breakpoints)."""
    s_arr = np.asarray(s, dtype=float)
    if spec.kind == "custom_piecewise":
        flat = np.atleast_1d(s_arr)
        idx = np.searchsorted(spec.breakpoints, flat, side="right")
        out = _eval_pieces(tuple(f.deriv() for f in spec._poly[0]), idx, flat).reshape(s_arr.shape)
    else:
        out = (spec.q - 1.0) * np.abs(s_arr) ** (spec.q - 2.0) if spec.q != 2 else np.ones_like(s_arr)
    return out if np.ndim(out) else float(out)


def clarke_bounds(spec, s):
    """Endpoints (lo, hi) of the Clarke subdifferential of j(x, .) at s, vectorized."""
    fl, fr = f_left(spec, s), f_right(spec, s)
    return np.minimum(fl, fr), np.maximum(fl, fr)


def clarke_interval(spec, x, s):
    lo, hi = clarke_bounds(spec, float(s))
    return Interval(float(lo), float(hi))


def j0_dir(spec, x, s, dir):
    """Generalized directional derivative j0(x, s; dir), the support function of the interval."""
    lo, hi = clarke_bounds(spec, s)
    return np.maximum(lo * dir, hi * dir) if np.ndim(lo) or np.ndim(dir) else max(lo * dir, hi * dir)


def is_odd(spec, samples=None):
    """True when j is even (f odd) on a symmetric probe set."""
    if spec.kind in ("smooth_power", "kinked_power", "jump_derivative"):
        return True
    s = np.linspace(0.0, 5.0, 101) if samples is None else np.abs(np.asarray(samples, float))
    lo_p, hi_p = clarke_bounds(spec, s)
    lo_m, hi_m = clarke_bounds(spec, -s)
    return bool(np.allclose(lo_p, -hi_m) and np.allclose(hi_p, -lo_m)
                and np.allclose(j_eval(spec, 0.0, s), j_eval(spec, 0.0, -s)))


def check_Hj(spec, s_samples, p, iv_tol=1e-2):
    """Sampled diagnostic for the growth and sign hypotheses on j.

    Returns a dict keyed by condition name ("i" ... "v"), each entry holding
    ``passed`` and ``first_violation`` (the offending sample or None).  Condition
    (iii) is checked verbatim on samples z >= M; samples z <= -M are evaluated
    with the same formula and only *flagged* when they fail.  Condition (iv) is
    judged at the sample closest to zero.
    """
    s = np.asarray(s_samples, dtype=float).ravel()
    if s.size == 0:
        raise ValueError("check_Hj needs at least one sample")
    lo, hi = clarke_bounds(spec, s)
    js = j_eval(spec, 0.0, s)
    js = np.atleast_1d(js)
    report = {}

    def first(mask):
        bad = np.flatnonzero(mask)
        return None if bad.size == 0 else float(s[bad[0]])

    j0 = float(j_eval(spec, 0.0, 0.0))
    report["i"] = {"passed": j0 == 0.0, "first_violation": None if j0 == 0.0 else 0.0}

    bound = spec.a1 * (1.0 + np.abs(s) ** (spec.q - 1.0))
    v = first(np.maximum(np.abs(lo), np.abs(hi)) > bound * (1 + 1e-12))
    report["ii"] = {"passed": v is None, "first_violation": v}

    # -j0(z; -z) = min(lo z, hi z)
    rhs = np.minimum(lo * s, hi * s)
    lhs = spec.mu * js
    viol = lhs > rhs + 1e-12 * np.maximum(1.0, np.abs(rhs))
    jM = float(j_eval(spec, 0.0, spec.M))
    v = first(viol & (s >= spec.M))
    ok_pos = v is None and jM > 0 and spec.mu > p
    report["iii"] = {"passed": ok_pos, "first_violation": v,
                     "j_at_M": jM, "mu_gt_p": spec.mu > p,
                     "flagged_negative": first(viol & (s <= -spec.M))}

    nz = s[s != 0.0]
    if nz.size == 0:
        report["iv"] = {"passed": True, "first_violation": None, "ratio": None}
    else:
        z = nz[np.argmin(np.abs(nz))]
        ratio = p * float(j_eval(spec, 0.0, z)) / abs(z) ** p
        ok = abs(ratio) <= iv_tol
        report["iv"] = {"passed": bool(ok), "first_violation": None if ok else float(z), "ratio": ratio}

    v = first((s * lo < 0) | (s * hi < 0))
    report["v"] = {"passed": v is None, "first_violation": v}
    report["all_passed"] = all(bool(report[k]["passed"]) for k in ("i", "ii", "iii", "iv", "v"))
    return report
