import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lincs.algebra import (
    E12,
    E21,
    H0,
    X0,
    ControlRange,
    ad_matrix,
    adrank_check,
    bracket,
    cartan_inner,
    cartan_involution,
    check_algebra_element,
    check_group_element,
    coordinates,
    from_coordinates,
    group_exp,
    killing_form,
    sl_basis,
)
from lincs.exceptions import RejectedInputError
from lincs.oracles import taylor_exp

from conftest import random_sl2

entries = st.floats(-1, 1, allow_nan=False)


@st.composite
def sl2(draw):
    a, b, c = draw(arrays(float, 3, elements=entries))
    return np.array([[a, b], [c, -a]])


def test_bracket_examples():
    np.testing.assert_array_equal(bracket(H0, X0), [[0, 2], [-1, 0]])
    np.testing.assert_array_equal(bracket(X0, X0), np.zeros((2, 2)))
    np.testing.assert_array_equal(bracket(H0, bracket(H0, X0)), [[0, 4], [2, 0]])


def test_bracket_dimension_mismatch():
    with pytest.raises(RejectedInputError):
        bracket(H0, np.zeros((3, 3)))


def test_basis_order():
    B = sl_basis(2)
    for got, want in zip(B, [H0, E12, E21]):
        np.testing.assert_array_equal(got, want)
    assert len(sl_basis(3)) == 8
    assert all(abs(np.trace(b)) == 0 for b in sl_basis(4))


def test_coordinates_roundtrip(rng):
    for n in (2, 3, 4):
        X = rng.normal(size=(n, n))
        X -= np.trace(X) / n * np.eye(n)
        np.testing.assert_allclose(from_coordinates(coordinates(X), n), X, atol=1e-14)


def test_ad_matrix_examples():
    np.testing.assert_array_equal(ad_matrix(H0), np.diag([0.0, 2.0, -2.0]))
    np.testing.assert_array_equal(ad_matrix(np.zeros((2, 2))), np.zeros((3, 3)))
    # [E12, H0] = -2 E12, [E12, E12] = 0, [E12, E21] = H0
    expected = np.array([[0.0, 0.0, 1.0], [-2.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    np.testing.assert_array_equal(ad_matrix(E12), expected)


def test_killing_examples():
    assert killing_form(H0, H0) == 8.0
    assert killing_form(X0, np.zeros((2, 2))) == 0.0
    assert killing_form(E12, E12) == 0.0


def test_killing_trace_relation(rng):
    for n in (2, 3):
        for _ in range(50):
            X = rng.uniform(-1, 1, size=(n, n))
            Y = rng.uniform(-1, 1, size=(n, n))
            X -= np.trace(X) / n * np.eye(n)
            Y -= np.trace(Y) / n * np.eye(n)
            want = 2 * n * np.trace(X @ Y)
            assert killing_form(X, Y) == pytest.approx(want, rel=1e-10, abs=1e-13)


def test_cartan_involution_examples():
    J = np.array([[0.0, 1.0], [-1.0, 0.0]])
    np.testing.assert_array_equal(cartan_involution(J), J)
    np.testing.assert_array_equal(cartan_involution(H0), -H0)
    assert cartan_inner(H0, H0) == 8.0


@given(sl2())
def test_cartan_involution_is_involution(X):
    np.testing.assert_array_equal(cartan_involution(cartan_involution(X)), X)


@given(sl2())
def test_cartan_inner_positive(X):
    assert cartan_inner(X, X) >= -1e-12


@given(sl2(), sl2())
def test_antisymmetry(X, Y):
    assert np.abs(bracket(X, Y) + bracket(Y, X)).max() <= 1e-14


def test_jacobi_identity(rng):
    for _ in range(100):
        X, Y, Z = (random_sl2(rng) for _ in range(3))
        total = bracket(X, bracket(Y, Z)) + bracket(Y, bracket(Z, X)) + bracket(Z, bracket(X, Y))
        assert np.abs(total).max() <= 1e-12


def test_exp_examples():
    for t in (-1.3, 0.0, 0.7, 2.0):
        np.testing.assert_allclose(group_exp(H0, t), np.diag([np.exp(t), np.exp(-t)]), rtol=1e-14)
    np.testing.assert_array_equal(group_exp(np.zeros((2, 2))), np.eye(2))
    mu = np.sqrt(1.5)
    closed = np.cosh(mu) * np.eye(2) + np.sinh(mu) / mu * X0
    np.testing.assert_allclose(group_exp(X0), closed, atol=1e-15)
    assert np.abs(group_exp(X0) - taylor_exp(X0)).max() <= 1e-12


@pytest.mark.parametrize("X", [
    np.array([[0.0, 1.0], [-1.0, 0.0]]),  # elliptic
    np.array([[0.0, 2.0], [0.0, 0.0]]),  # nilpotent
    np.array([[1e-7, 0.0], [0.0, -1e-7]]),  # near the removable singularity
    np.array([[0.3, -1.2], [0.9, -0.3]]),
])
def test_exp_matches_series(X):
    for t in (-2.0, 0.5, 1.5):
        assert np.abs(group_exp(X, t) - taylor_exp(t * X, terms=40)).max() <= 1e-12


@given(sl2(), st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=100)
def test_exp_group_properties(X, s, t):
    g = group_exp(X, t)
    assert np.linalg.det(g) == pytest.approx(1.0, rel=1e-9)
    np.testing.assert_allclose(g @ group_exp(X, -t), np.eye(2), atol=1e-9 * max(1, np.abs(g).max() ** 2))
    prod = group_exp(X, s) @ group_exp(X, t)
    np.testing.assert_allclose(group_exp(X, s + t), prod, rtol=1e-9, atol=1e-9)


def test_exp_general_n(rng):
    X = rng.uniform(-1, 1, size=(3, 3))
    X -= np.trace(X) / 3 * np.eye(3)
    assert np.abs(group_exp(X) - taylor_exp(X)).max() <= 1e-12


def test_adrank_examples():
    coords = np.array([coordinates(X0), coordinates(bracket(H0, X0)),
                       coordinates(bracket(H0, bracket(H0, X0)))])
    np.testing.assert_array_equal(coords, [[1, 1, 0.5], [0, 2, -1], [0, 4, 2]])
    assert np.linalg.det(coords) == pytest.approx(8.0)
    assert adrank_check(H0, X0) == 3
    assert adrank_check(H0, H0) == 1
    assert adrank_check(H0, E12) == 1


def test_validation():
    with pytest.raises(RejectedInputError, match="traceless"):
        check_algebra_element([[1.0, 0.0], [0.0, -0.5]])
    with pytest.raises(RejectedInputError):
        check_algebra_element([[1.0]])
    with pytest.raises(RejectedInputError, match="determinant"):
        check_group_element(np.diag([2.0, 2.0]))
    g = check_group_element(group_exp(X0))
    assert not g.flags.writeable
    with pytest.raises(RejectedInputError, match="rho must be positive"):
        ControlRange(0.0)
    assert ControlRange(0.1).contains(0.1)
    assert not ControlRange(0.1).contains(0.2)
