import numpy as np
import pytest

from descflow.functional import Problem
from descflow.grid import make_mesh
from descflow.plap import eigen_first
from descflow.potential import jump_derivative
from descflow.suites import (PROPERTIES, slope_equivalence, mirrored, run_properties,
                             schauder_implies_outward, slope_inequality)
from descflow.oracle import SmallProblem

M = make_mesh(49)
PROB = Problem(M, 2.0, 0.5 * eigen_first(2.0, M).lam, jump_derivative())


def test_oracle_suites_small_samples(rng):
    for res in (slope_equivalence(rng, 300), slope_inequality(rng, 300), schauder_implies_outward(rng, 500)):
        assert res["passed"], res
        assert res["samples"] > 0


def test_mirrored_problem():
    sp = SmallProblem(np.diag([1.0, 2.0]), [0.5, -1.0], c=[0.3, 0.0], k=[0.2, 0.0])
    neg = mirrored(sp)
    x = np.array([0.7, 1.1])
    assert neg.value(-x) == pytest.approx(sp.value(x))
    assert mirrored(neg) == sp


def test_run_properties_is_seeded():
    names = ("energy_monotone", "cone_invariance", "gradient_consistency")
    a = run_properties(names, 7, PROB, n_starts=10)
    b = run_properties(names, 7, PROB, n_starts=10)
    assert a == b
    assert [r["name"] for r in a] == list(names)
    assert all(r["passed"] for r in a)


def test_selection_does_not_shift_streams():
    one = run_properties(("gradient_consistency",), 3, PROB)
    both = run_properties(("energy_monotone", "gradient_consistency"), 3, PROB)
    assert one[0] == both[1]


def test_unknown_property():
    with pytest.raises(ValueError):
        run_properties(("nonsense",), 0, PROB)
    assert run_properties((), 0, None) == []
    assert len(PROPERTIES) == 7
