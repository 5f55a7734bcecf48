import math

import numpy as np
import pytest
import scipy.linalg
import sympy as sp
from hypothesis import given, settings, strategies as st

from fhverify import su2
from fhverify.su2 import THETA1, THETA2, THETA3, build_irrep

from conftest import random_su2

NS = range(0, 21)


def comm(a, b):
    return a @ b - b @ a


def test_basis_matrices_exact():
    assert np.array_equal(THETA1, 0.5j * np.array([[0, 1], [1, 0]]))
    assert np.array_equal(THETA2, 0.5 * np.array([[0, 1], [-1, 0]]))
    assert np.array_equal(THETA3, 0.5j * np.array([[1, 0], [0, -1]]))
    for t in su2.THETAS:
        assert np.allclose(t.conj().T, -t, atol=0)
        assert np.trace(t) == 0


def test_basis_brackets_and_orthonormality():
    assert np.array_equal(comm(THETA2, THETA1), THETA3)
    assert np.array_equal(comm(THETA3, THETA2), THETA1)
    assert np.array_equal(comm(THETA1, THETA3), THETA2)
    G = np.array([[su2.su2_inner(a, b) for b in su2.THETAS] for a in su2.THETAS])
    assert np.allclose(G, np.eye(3), atol=1e-15)


def test_su2_coords_roundtrip(rng):
    c = rng.normal(size=3)
    A = sum(x * t for x, t in zip(c, su2.THETAS))
    assert np.allclose(su2.su2_coords(A), c, atol=1e-14)


def test_trivial_irrep():
    R = build_irrep(0)
    for M in (R.X, R.Y, R.H, R.T1, R.T2, R.T3):
        assert M.shape == (1, 1) and M[0, 0] == 0


def test_irrep_n1_theta3():
    assert np.allclose(build_irrep(1).T3, np.diag([0.5j, -0.5j]), atol=0)


def test_irrep_n2_weights():
    R = build_irrep(2)
    assert np.array_equal(np.diag(R.H).real, [2, 0, -2])
    v1 = np.eye(3)[:, 1]
    assert np.allclose(R.X @ v1, 2 * np.eye(3)[:, 0], atol=0)


@pytest.mark.parametrize("n", [1, 4, 7])
def test_raising_lowering_action(n):
    R = build_irrep(n)
    E = np.eye(n + 1)
    for k in range(n + 1):
        assert np.allclose(R.H @ E[:, k], (n - 2 * k) * E[:, k], atol=0)
        low = E[:, k - 1] * k * (n - k + 1) if k >= 1 else 0 * E[:, 0]
        assert np.allclose(R.X @ E[:, k], low, atol=0)
        up = E[:, k + 1] if k < n else 0 * E[:, 0]
        assert np.allclose(R.Y @ E[:, k], up, atol=0)
    assert np.allclose(R.T1, 0.5j * (R.X + R.Y), atol=0)
    assert np.allclose(R.T2, 0.5 * (R.X - R.Y), atol=0)
    assert np.allclose(R.T3, 0.5j * R.H, atol=0)


def test_n1_matches_defining_representation():
    R = build_irrep(1)
    for T, t in zip(R.T, su2.THETAS):
        assert np.allclose(T, t, atol=0)


@pytest.mark.parametrize("n", NS)
def test_brackets(n):
    T1, T2, T3 = build_irrep(n).T
    assert np.max(np.abs(comm(T2, T1) - T3), initial=0) <= 1e-12
    assert np.max(np.abs(comm(T3, T2) - T1), initial=0) <= 1e-12
    assert np.max(np.abs(comm(T1, T3) - T2), initial=0) <= 1e-12


@pytest.mark.parametrize("n", NS)
def test_skew_hermitian_under_gram(n):
    R = build_irrep(n)
    for T in R.T:
        assert np.max(np.abs(R.gram @ T + T.conj().T @ R.gram)) <= 1e-12 * max(1.0, np.max(np.abs(R.gram @ T)))
    assert R.gram[0, 0] == 1


@pytest.mark.parametrize("n", NS)
def test_casimir_scalar(n):
    C = su2.casimir(build_irrep(n))
    off = C - np.diag(np.diag(C))
    assert np.max(np.abs(off)) <= 1e-13
    assert np.allclose(np.diag(C), su2.casimir_value(n), atol=1e-11)


@pytest.mark.parametrize("n,val", [(0, 0), (1, sp.Rational(3, 4)), (3, sp.Rational(15, 4)), (6, 12)])
def test_casimir_exact(n, val):
    C = su2.casimir(build_irrep(n), exact=True)
    assert C == val * sp.eye(n + 1)


@pytest.mark.parametrize("n", range(0, 9))
def test_weight_periodicity(n):
    T3 = build_irrep(n).T3
    assert np.allclose(scipy.linalg.expm(4 * math.pi * T3), np.eye(n + 1), atol=1e-9)


def test_invalid_weights():
    for bad in (-1, 1.5, 65, True):
        with pytest.raises(ValueError):
            build_irrep(bad)


def test_irrep_json_roundtrip():
    R = build_irrep(3)
    S = su2.Irrep.from_json(R.to_json())
    for k in ("X", "Y", "H", "T1", "T2", "T3", "gram"):
        assert np.array_equal(getattr(R, k), getattr(S, k))


def test_matrix_element_identity():
    for n in (0, 2, 5):
        R = build_irrep(n)
        P = su2.matrix_elements(R, np.eye(2))
        assert np.allclose(P, np.diag(R.gram_diag), atol=1e-13)


def test_matrix_element_n1_is_g(rng):
    g = random_su2(rng)
    R = build_irrep(1)
    P = np.array([[su2.matrix_element(R, k, l, g) for l in range(2)] for k in range(2)])
    assert np.allclose(P, g.T, atol=1e-14)


def test_matrix_element_rejects_nonunitary():
    with pytest.raises(ValueError):
        su2.matrix_element(build_irrep(2), 0, 0, 2 * np.eye(2))
    with pytest.raises(IndexError):
        su2.matrix_element(build_irrep(2), 3, 0, np.eye(2))


@pytest.mark.parametrize("n", [1, 2, 5])
def test_directional_derivative_of_matrix_elements(n, rng):
    R = build_irrep(n)
    g = random_su2(rng)
    t = 1e-5
    for th, T in zip(su2.THETAS, R.T):
        plus = su2.matrix_elements(R, g @ scipy.linalg.expm(t * th))
        minus = su2.matrix_elements(R, g @ scipy.linalg.expm(-t * th))
        fd = (plus - minus) / (2 * t)
        exact = (R.gram_diag[:, None] * (su2.group_action(R, g) @ T)).T
        assert np.max(np.abs(fd - exact)) <= 1e-8 * max(1.0, np.max(np.abs(exact)))


@settings(max_examples=25, deadline=None)
@given(n=st.integers(0, 8), seed=st.integers(0, 2**31))
def test_action_is_homomorphism_and_methods_agree(n, seed):
    rng = np.random.default_rng(seed)
    g, h = random_su2(rng), random_su2(rng)
    R = build_irrep(n)
    A = su2.group_action(R, g)
    assert np.allclose(A @ su2.group_action(R, h), su2.group_action(R, g @ h), atol=1e-9 * max(1, np.max(np.abs(A))))
    assert np.allclose(A, su2.group_action(R, g, method="expm"), atol=1e-8 * max(1, np.max(np.abs(A))))


def test_euler_action_matches_group_action(rng):
    R = build_irrep(3)
    a, b, c = rng.uniform(0, 4 * math.pi, 3)
    g = su2.euler_matrix(a, b, c)
    assert np.allclose(su2.euler_action(R, a, b, c), su2.group_action(R, g), atol=1e-11)
