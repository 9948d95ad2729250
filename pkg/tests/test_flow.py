import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from descflow.flow import (STATUSES, FlowConfig, classify_sign, cone_status, field_terms, flow_step,
                           integrate, vector_field)
from descflow.functional import Problem, phi, residual_m, select_w, subdiff_element
from descflow.grid import make_mesh, norm_w1p
from descflow.plap import eigen_first, eigen_second_1d, inverse_plap
from descflow.potential import jump_derivative, kinked_power, smooth_power
from descflow.suites import broken_sign_spec

M = make_mesh(49)
E1 = eigen_first(2.0, M)
U1 = E1.u / norm_w1p(E1.u, 2.0, M)
PROBS = {name: Problem(M, 2.0, 5.0, spec) for name, spec in
         (("smooth", smooth_power()), ("kinked", kinked_power()), ("jump", jump_derivative()))}


def test_config_validation():
    for bad in (dict(eps_crit=0.0), dict(dt0=-1.0), dict(t_max=0.0), dict(cone_tol=-1.0), dict(stride=0),
                dict(max_steps=0)):
        with pytest.raises(ValueError):
            FlowConfig(**bad)


def test_sign_classes():
    assert classify_sign(E1.u) == "positive"
    assert classify_sign(-E1.u) == "negative"
    assert classify_sign(eigen_second_1d(2.0, M, first=E1).u) == "sign_changing"
    assert classify_sign(np.zeros(M.n)) == "zero"
    assert cone_status(np.array([0.0, 1.0])) == "in_P"
    assert cone_status(np.array([-1.0, 1.0])) == "mixed"


def test_start_at_origin_is_critical():
    tr = integrate(PROBS["smooth"], np.zeros(M.n))
    assert tr.status == "critical_point" and tr.steps == 0


def test_small_start_is_captured():
    tr = integrate(PROBS["smooth"], 0.01 * U1)
    assert tr.status == "reached_origin_basin"
    assert abs(tr.final.phi) < 1e-3


def test_large_start_escapes_downhill():
    tr = integrate(PROBS["smooth"], 30 * U1)
    assert tr.status in ("floor_exit", "critical_point")
    assert tr.final.phi < phi(PROBS["smooth"], 30 * U1) or tr.status == "floor_exit"
    assert tr.final.phi < 0


def test_field_vanishes_at_critical_point():
    from descflow.functional import newton_polish
    from descflow.oracle import shoot
    prob = PROBS["smooth"]
    u, res, ok = newton_polish(prob, shoot(prob, 0).at(M.x))
    assert ok
    assert norm_w1p(vector_field(prob, u), 2.0, M) < 1e-6
    tr = integrate(prob, u)
    assert tr.status == "critical_point" and tr.steps == 0
    assert np.array_equal(tr.final.u, u)
    # an exactly vanishing field leaves the state untouched
    zero = integrate(prob, np.zeros(M.n)).final
    new, dt, _ = flow_step(prob, zero, FlowConfig())
    assert dt == 0.0 and new is zero


def test_descent_pairing_near_origin():
    prob = PROBS["smooth"]
    u = 0.05 * U1
    V, g, pairing, res = field_terms(prob, u, FlowConfig())
    assert pairing > 0 and res > 0


@pytest.mark.parametrize("name", sorted(PROBS))
def test_inverse_preserves_cone(name, rng):
    prob = PROBS[name]
    u = np.abs(rng.normal(size=M.n)) * 3
    w = select_w(prob, u)
    A = inverse_plap(prob.lam * u + w, 2.0, M)
    assert np.all(A >= 0)


def test_rules_all_run():
    for rule in ("min_norm", "midpoint", "lower", "upper"):
        tr = integrate(PROBS["jump"], 2 * U1, FlowConfig(rule=rule))
        assert tr.status in STATUSES
    with pytest.raises(ValueError):
        integrate(PROBS["jump"], U1, FlowConfig(rule="bogus"))


def test_trace_exports(tmp_path):
    tr = integrate(PROBS["smooth"], 0.2 * U1, FlowConfig(stride=3))
    path = tmp_path / "trace.csv"
    tr.to_csv(path)
    rows = path.read_text().strip().splitlines()
    assert rows[0] == "t,phi,residual,min_u,max_u"
    assert len(rows) == len(tr.states) + 1
    doc = json.loads(tr.to_json(tmp_path / "trace.json"))
    assert doc["status"] == tr.status
    assert len(doc["snapshots"][-1]["u"]) == M.n
    assert (tmp_path / "trace.json").read_text() == tr.to_json()


def test_wrong_shape_rejected():
    with pytest.raises(ValueError):
        integrate(PROBS["smooth"], np.zeros(3))


def test_broken_sign_spec_leaves_cone():
    bad = Problem(M, 2.0, 5.0, broken_sign_spec())
    tr = integrate(bad, 0.5 * U1, FlowConfig(max_steps=300))
    assert tr.min_nodal < -1e-12


def test_step_budget_ends_chattering_flow():
    bad = Problem(M, 2.0, 5.0, broken_sign_spec())
    tr = integrate(bad, 0.5 * U1, FlowConfig(max_steps=50))
    assert tr.status in ("horizon", "stalled") and tr.steps <= 50


shapes = arrays(np.float64, M.n, elements=st.floats(0.0, 1.0))


def _start(shape, scale, sign):
    # a bumpy perturbation of the principal mode, so large scales leave the basin
    shape = E1.u * (1.0 + 0.5 * shape)
    return sign * scale * shape / norm_w1p(shape, 2.0, M)


@settings(max_examples=40, deadline=None)
@given(shapes, st.floats(0.05, 40.0), st.sampled_from([1.0, -1.0]), st.sampled_from(sorted(PROBS)))
def test_energy_non_increasing_and_cone_kept(shape, scale, sign, name):
    prob = PROBS[name]
    cfg = FlowConfig(t_max=200.0)
    tr = integrate(prob, _start(shape, scale, sign), cfg)
    assert tr.status in STATUSES
    e = tr.energies()
    assert np.all(np.diff(e) <= 1e-10)
    assert tr.max_increase <= 1e-10
    worst = tr.min_nodal if sign > 0 else -tr.max_nodal
    assert worst >= -cfg.cone_tol
    for s in tr.states:
        assert s.cone_status == ("in_P" if sign > 0 else "in_negP")
    if tr.status == "critical_point":
        assert tr.final.residual <= cfg.eps_crit
        assert residual_m(prob, tr.final.u) <= cfg.eps_crit


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, M.n, elements=st.floats(-1.0, 1.0)).filter(lambda a: np.abs(a).max() > 1e-3),
       st.floats(0.05, 15.0))
def test_energy_non_increasing_mixed_starts(shape, scale):
    u0 = scale * shape / norm_w1p(shape, 2.0, M)
    tr = integrate(PROBS["jump"], u0, FlowConfig(t_max=200.0))
    assert tr.max_increase <= 1e-10 or tr.steps == 0


def test_strict_interior_start_ends_strictly_positive():
    # the positive critical point is reached from its own neighbourhood
    from descflow.functional import newton_polish
    from descflow.oracle import shoot
    prob = PROBS["jump"]
    u, _, ok = newton_polish(prob, shoot(prob, 0).at(M.x))
    tr = integrate(prob, u * (1 + 1e-9))
    if tr.status == "critical_point":
        assert np.all(tr.final.u > 0)
    assert ok and np.all(u > 0)
