import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from descflow.grid import make_mesh, norm_lr, norm_w1p
from descflow.plap import (ConvergenceError, NewtonOpts, apply_plap, eigen_first, eigen_residual,
                           eigen_second_1d, inverse_plap, inverse_plap_flux, rayleigh_quotient)
from descflow.oracle import shoot_eigenvalue
from descflow.multistart import count_nodes
from reference import FOUR_PI2, LAMBDA1_P3, PI2

M199 = make_mesh(199)
M20 = make_mesh(20)


def test_second_difference_for_p2():
    m = make_mesh(4)
    u = np.array([1.0, 2.0, 0.5, -1.0])
    up = np.concatenate(([0.0], u, [0.0]))
    expect = -(up[:-2] - 2 * up[1:-1] + up[2:]) / m.h ** 2
    assert np.allclose(apply_plap(u, 2.0, m), expect)


def test_apply_on_sine():
    u = np.sin(np.pi * M199.x)
    assert np.max(np.abs(apply_plap(u, 2.0, M199) - PI2 * u)) < 1e-3
    assert np.all(apply_plap(np.zeros(5), 3.0, make_mesh(5)) == 0)
    with pytest.raises(ValueError):
        apply_plap(u, 1.0, M199)


@pytest.mark.parametrize("p", [1.3, 2.0, 3.0, 4.5])
def test_homogeneity(p, rng):
    u = rng.normal(size=M20.n)
    for c in (-2.5, 0.3, 7.0):
        assert np.allclose(apply_plap(c * u, p, M20), c * abs(c) ** (p - 2) * apply_plap(u, p, M20),
                           rtol=1e-10, atol=1e-10)


def test_inverse_of_sine_source():
    u = inverse_plap(PI2 * np.sin(np.pi * M199.x), 2.0, M199)
    assert np.max(np.abs(u - np.sin(np.pi * M199.x))) < 1e-3
    assert np.all(inverse_plap(np.zeros(M20.n), 3.0, M20) == 0)


@pytest.mark.parametrize("p", [1.2, 1.5, 2.0, 3.0, 6.0])
def test_inverse_roundtrip(p, rng):
    f = rng.normal(size=M20.n) * 5
    u = inverse_plap(f, p, M20)
    r = apply_plap(u, p, M20) - f
    assert np.sqrt(M20.h * r @ r) <= 1e-8 * max(1.0, np.sqrt(M20.h * f @ f))


@pytest.mark.parametrize("p", [1.5, 3.0])
def test_flux_quadrature_agrees_with_newton(p, rng):
    f = rng.normal(size=M20.n)
    assert np.allclose(inverse_plap_flux(f, p, M20), inverse_plap(f, p, M20), atol=1e-8)


def test_newton_options_validated():
    with pytest.raises(ValueError):
        NewtonOpts(tol=0.0)
    assert issubclass(ConvergenceError, RuntimeError)


def test_first_eigenvalue_p2():
    e = eigen_first(2.0, M199)
    assert abs(e.lam - PI2) / PI2 < 1e-3
    assert np.all(e.u > 0)
    assert norm_lr(e.u, 2.0, M199) == pytest.approx(1.0)


def test_first_eigenvalue_p3():
    e = eigen_first(3.0, M199)
    assert abs(e.lam - LAMBDA1_P3) / LAMBDA1_P3 < 1e-3
    assert abs(e.lam - shoot_eigenvalue(3.0, 1.0, 0)) / e.lam < 1e-3
    assert np.all(e.u > 0)


@pytest.mark.parametrize("p", [2.0, 3.0])
def test_second_eigenpair(p):
    e1 = eigen_first(p, M199)
    e2 = eigen_second_1d(p, M199, first=e1)
    assert count_nodes(e2.u) == 1
    assert eigen_residual(e2.lam, e2.u, p, M199) < 1e-6
    assert e2.lam / e1.lam == pytest.approx(2 ** p, rel=1e-3)
    if p == 2.0:
        assert abs(e2.lam - FOUR_PI2) / FOUR_PI2 < 1e-3
        ref = np.sin(2 * np.pi * M199.x)
        assert np.max(np.abs(e2.u / np.max(e2.u) - ref)) < 1e-3


vec = arrays(np.float64, 20, elements=st.floats(-10, 10, allow_nan=False))
p_values = st.sampled_from([1.5, 2.0, 3.0, 4.0])


@settings(max_examples=150, deadline=None)
@given(vec, vec, p_values)
def test_monotone_operator(u, v, p):
    d = apply_plap(u, p, M20) - apply_plap(v, p, M20)
    assert M20.h * d @ (u - v) >= -1e-9 * (1 + np.abs(d).max() * np.abs(u - v).max())


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, 20, elements=st.floats(0, 10)), arrays(np.float64, 20, elements=st.floats(0, 10)),
       p_values)
def test_comparison_principle(f, extra, p):
    u = inverse_plap(f, p, M20)
    assert np.all(u >= -1e-10 * (1 + np.abs(u).max()))
    w = inverse_plap(f + extra, p, M20)
    assert np.all(w >= u - 1e-8 * (1 + np.abs(w).max()))


_LAM1 = {p: eigen_first(p, M20).lam for p in (1.5, 2.0, 3.0, 4.0)}


@settings(max_examples=200, deadline=None)
@given(vec.filter(lambda u: np.abs(u).max() > 1e-2), p_values)
def test_rayleigh_bound(u, p):
    assert rayleigh_quotient(u, p, M20) >= _LAM1[p] - 1e-8 * _LAM1[p]
    assert norm_w1p(u, p, M20) > 0
