import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from descflow.grid import (grad, inner_h, make_mesh, norm_lr, norm_w1p, read_gridfn_csv,
                           write_gridfn_csv)
from descflow.plap import eigen_first
from reference import L2_NORM_SIN, W12_NORM_SIN


def test_mesh_spacing():
    assert make_mesh(3, 1.0).h == 0.25
    assert make_mesh(199, 1.0).h == pytest.approx(0.005, abs=1e-15)
    m = make_mesh(4, 2.0)
    assert np.allclose(m.x, [0.4, 0.8, 1.2, 1.6])
    assert m.x_full[0] == 0.0 and m.x_full[-1] == pytest.approx(2.0)


@pytest.mark.parametrize("n, L", [(1, 1.0), (0, 1.0), (5, 0.0), (5, -1.0), (2.5, 1.0)])
def test_mesh_rejects_bad_input(n, L):
    with pytest.raises(ValueError):
        make_mesh(n, L)


def test_grad_by_hand():
    m = make_mesh(2, 1.0)
    assert np.allclose(grad(np.zeros(2), m), 0.0)
    # h = 1/3, u = (1, 1): cells see jumps +1, 0, -1
    assert np.allclose(grad(np.array([1.0, 1.0]), m), [3.0, 0.0, -3.0])


def test_grad_shape_mismatch():
    with pytest.raises(ValueError):
        grad(np.zeros(3), make_mesh(4))


def test_grad_of_sine_matches_cosine_at_midpoints():
    m = make_mesh(199)
    g = grad(np.sin(np.pi * m.x), m)
    mid = m.x_full[:-1] + m.h / 2
    assert np.max(np.abs(g - np.pi * np.cos(np.pi * mid))) < 10 * m.h


def test_norms_of_sine():
    m = make_mesh(199)
    u = np.sin(np.pi * m.x)
    assert norm_w1p(np.zeros(m.n), 2, m) == 0.0
    assert norm_lr(np.zeros(m.n), 2, m) == 0.0
    assert abs(norm_w1p(u, 2, m) - W12_NORM_SIN) < 1e-3
    assert abs(norm_lr(u, 2, m) - L2_NORM_SIN) < 1e-3


def test_norm_of_constant():
    m = make_mesh(99)
    assert norm_lr(np.ones(m.n), 1, m) == pytest.approx(0.99)


def test_norm_parameter_errors():
    m = make_mesh(5)
    with pytest.raises(ValueError):
        norm_w1p(np.ones(5), 1.0, m)
    with pytest.raises(ValueError):
        norm_lr(np.ones(5), 0.5, m)


def test_csv_roundtrip_is_exact(tmp_path, rng):
    m = make_mesh(17)
    u = rng.normal(size=m.n) * 10.0 ** rng.integers(-8, 8, m.n)
    path = tmp_path / "u.csv"
    write_gridfn_csv(path, u, m)
    assert np.array_equal(read_gridfn_csv(path, m), u)
    with pytest.raises(ValueError):
        read_gridfn_csv(path, make_mesh(18))


def test_inner_product_weights():
    m = make_mesh(3)
    assert inner_h(np.ones(3), np.arange(3.0), m) == pytest.approx(0.75)


vectors = arrays(np.float64, 12, elements=st.floats(-50, 50, allow_nan=False))
exponents = st.floats(1.1, 5.0)


@settings(max_examples=200, deadline=None)
@given(vectors, vectors, exponents, st.floats(-20, 20))
def test_norm_axioms(u, v, p, c):
    m = make_mesh(12)
    for norm in (lambda w: norm_w1p(w, p, m), lambda w: norm_lr(w, p, m)):
        nu, nv = norm(u), norm(v)
        assert norm(u + v) <= nu + nv + 1e-9 * (1 + nu + nv)
        assert norm(c * u) == pytest.approx(abs(c) * nu, rel=1e-10, abs=1e-12)


_LAM1 = {p: eigen_first(p, make_mesh(12)).lam for p in (1.5, 2.0, 3.0)}


@settings(max_examples=200, deadline=None)
@given(vectors.filter(lambda u: np.max(np.abs(u)) > 1e-3), st.sampled_from(sorted(_LAM1)))
def test_discrete_poincare_bound(u, p):
    m = make_mesh(12)
    lhs = norm_w1p(u, p, m) ** p
    rhs = _LAM1[p] * norm_lr(u, p, m) ** p
    assert lhs >= rhs * (1 - 1e-8)
