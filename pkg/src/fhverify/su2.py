"""Irreducible representations V^(n) of SU(2) in the highest-weight basis.

The basis is v_k = Y^k v (k = 0..n) with v a highest weight vector, so that

    H v_k = (n - 2k) v_k,   X v_k = k(n - k + 1) v_{k-1},   Y v_k = v_{k+1}.

The su(2) basis used throughout the package is

    theta1 = (i/2)[[0, 1], [1, 0]]
    theta2 = (1/2)[[0, 1], [-1, 0]]
    theta3 = (i/2)[[1, 0], [0, -1]]

which is declared orthonormal; the induced inner product on su(2) is
<A, B> = -2 tr(AB).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

N_MAX = 64

THETA1 = 0.5j * np.array([[0, 1], [1, 0]], dtype=complex)
THETA2 = 0.5 * np.array([[0, 1], [-1, 0]], dtype=complex)
THETA3 = 0.5j * np.array([[1, 0], [0, -1]], dtype=complex)
THETAS = (THETA1, THETA2, THETA3)


@dataclass(frozen=True)
class LieBasis:
    theta1: np.ndarray
    theta2: np.ndarray
    theta3: np.ndarray

    def __iter__(self):
        return iter((self.theta1, self.theta2, self.theta3))


def lie_basis() -> LieBasis:
    return LieBasis(*(t.copy() for t in THETAS))


def su2_inner(a: np.ndarray, b: np.ndarray) -> float:
    """Inner product on su(2) making theta1, theta2, theta3 orthonormal."""
    return float(np.real(-2.0 * np.trace(a @ b)))


def su2_coords(a: np.ndarray) -> np.ndarray:
    """Coordinates of a (stack of) su(2) matrices in the theta basis.

    Accepts shape (..., 2, 2) and returns shape (3, ...).
    """
    a = np.asarray(a)
    return np.stack([np.real(-2.0 * np.einsum("...ij,ji->...", a, t)) for t in THETAS])


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Irrep:
    """The representation V^(n) with matrices acting on the v_k basis.

    Columns are images of basis vectors: ``X[:, k]`` holds X v_k.
    """

    n: int
    X: np.ndarray
    Y: np.ndarray
    H: np.ndarray
    T1: np.ndarray
    T2: np.ndarray
    T3: np.ndarray
    gram: np.ndarray

    @property
    def dim(self) -> int:
        return self.n + 1

    @property
    def T(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (self.T1, self.T2, self.T3)

    @property
    def gram_diag(self) -> np.ndarray:
        return np.real(np.diag(self.gram))

    def to_dict(self) -> dict:
        def enc(m):
            return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m, dtype=complex)]

        return {"n": self.n, **{k: enc(getattr(self, k)) for k in ("X", "Y", "H", "T1", "T2", "T3", "gram")}}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "Irrep":
        def dec(m):
            a = np.array(m, dtype=float)
            return _freeze(a[..., 0] + 1j * a[..., 1])

        return cls(n=int(d["n"]), **{k: dec(d[k]) for k in ("X", "Y", "H", "T1", "T2", "T3", "gram")})

    @classmethod
    def from_json(cls, s: str) -> "Irrep":
        return cls.from_dict(json.loads(s))


def _check_n(n) -> int:
    if isinstance(n, bool) or int(n) != n or n < 0:
        raise ValueError(f"highest weight must be a nonnegative integer, got {n!r}")
    if n > N_MAX:
        raise ValueError(f"highest weight {n} exceeds the supported cap {N_MAX}")
    return int(n)


def _gram_entries(n: int) -> list[int]:
    # gram[k] = gram[k-1] * k(n-k+1), gram[0] = 1
    g = [1]
    for k in range(1, n + 1):
        g.append(g[-1] * k * (n - k + 1))
    return g


@lru_cache(maxsize=None)
def build_irrep(n: int) -> Irrep:
    """Build V^(n) with its invariant inner product.

    The Gram matrix is diagonal with gram[0, 0] = 1; the remaining entries
    follow from requiring theta1 to act skew-Hermitian.
    """
    n = _check_n(n)
    d = n + 1
    X = np.zeros((d, d), dtype=complex)
    Y = np.zeros((d, d), dtype=complex)
    H = np.zeros((d, d), dtype=complex)
    for k in range(d):
        H[k, k] = n - 2 * k
        if k >= 1:
            X[k - 1, k] = k * (n - k + 1)
        if k + 1 <= n:
            Y[k + 1, k] = 1.0
    T1 = 0.5j * (X + Y)
    T2 = 0.5 * (X - Y)
    T3 = 0.5j * H
    gram = np.diag(np.array(_gram_entries(n), dtype=float)).astype(complex)
    return Irrep(n, *(_freeze(m) for m in (X, Y, H, T1, T2, T3, gram)))


def exact_matrices(n: int) -> dict:
    """X, Y, H, T1, T2, T3 and the Gram matrix as exact sympy matrices."""
    import sympy as sp

    n = _check_n(n)
    d = n + 1
    X = sp.zeros(d, d)
    Y = sp.zeros(d, d)
    H = sp.zeros(d, d)
    for k in range(d):
        H[k, k] = n - 2 * k
        if k >= 1:
            X[k - 1, k] = k * (n - k + 1)
        if k + 1 <= n:
            Y[k + 1, k] = 1
    half = sp.Rational(1, 2)
    return {
        "X": X,
        "Y": Y,
        "H": H,
        "T1": sp.I * half * (X + Y),
        "T2": half * (X - Y),
        "T3": sp.I * half * H,
        "gram": sp.diag(*_gram_entries(n)),
    }


def casimir(irrep: Irrep, exact: bool = False):
    """Return -T1^2 - T2^2 - T3^2, which is (n^2 + 2n)/4 times the identity.

    With ``exact=True`` the product is formed in exact Gaussian-rational
    arithmetic and a sympy matrix is returned.
    """
    if exact:
        m = exact_matrices(irrep.n)
        c = -(m["T1"] ** 2) - m["T2"] ** 2 - m["T3"] ** 2
        return c.applyfunc(lambda z: z.expand())
    return -(irrep.T1 @ irrep.T1) - irrep.T2 @ irrep.T2 - irrep.T3 @ irrep.T3


def casimir_value(n: int) -> float:
    return 0.25 * (n * n + 2 * n)


def _check_special_unitary(g: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    g = np.asarray(g, dtype=complex)
    if g.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {g.shape}")
    err = np.max(np.abs(g.conj().T @ g - np.eye(2)))
    if err > tol:
        raise ValueError(f"matrix is not unitary (max |g^H g - I| = {err:.3e})")
    if abs(np.linalg.det(g) - 1.0) > 1e-10:
        raise ValueError("matrix does not have unit determinant")
    return g


def _poly_mul(p, q):
    return np.convolve(p, q)


def symmetric_power(g: np.ndarray, n: int) -> np.ndarray:
    """Action of g on Sym^n(C^2) in the v_k basis.

    v_k = n!/(n-k)! e1^(n-k) e2^k, so the monomial-basis matrix is rescaled
    by those factors.
    """
    g = np.asarray(g, dtype=complex)
    n = _check_n(n)
    d = n + 1
    # column k: coefficients of (g00 x + g10 y)^(n-k) (g01 x + g11 y)^k, in powers of y
    col_e1 = np.array([g[0, 0], g[1, 0]])
    col_e2 = np.array([g[0, 1], g[1, 1]])
    M = np.zeros((d, d), dtype=complex)
    for k in range(d):
        p = np.array([1.0 + 0j])
        for _ in range(n - k):
            p = _poly_mul(p, col_e1)
        for _ in range(k):
            p = _poly_mul(p, col_e2)
        M[:, k] = p
    c = np.array([math.perm(n, k) for k in range(d)], dtype=float)
    return M * c[None, :] / c[:, None]


def group_action(irrep: Irrep, g: np.ndarray, method: str = "sympower") -> np.ndarray:
    """Matrix of g acting on V^(n).

    ``method="sympower"`` lifts g to the symmetric power directly;
    ``method="expm"`` writes g = exp(A) with A in su(2) and exponentiates the
    represented Lie-algebra element.
    """
    g = _check_special_unitary(g)
    if method == "sympower":
        return symmetric_power(g, irrep.n)
    if method == "expm":
        a = su2_coords(_su2_log(g))
        A = sum(c * T for c, T in zip(a, irrep.T))
        return scipy.linalg.expm(A)
    raise ValueError(f"unknown method {method!r}")


def _su2_log(g: np.ndarray) -> np.ndarray:
    # principal logarithm via the angle-axis form g = cos(t/2) I + 2 sin(t/2) u.theta
    c = np.clip(np.real(np.trace(g)) / 2.0, -1.0, 1.0)
    half = math.acos(c)
    if half < 1e-14:
        return np.zeros((2, 2), dtype=complex)
    traceless = g - c * np.eye(2)
    if math.pi - half < 1e-7:
        # near -I the axis is ill-conditioned; exp(2 pi u.theta) = -I for any unit u
        u = su2_coords(traceless)
        nu = np.linalg.norm(u)
        u = u / nu if nu > 1e-12 else np.array([0.0, 0.0, 1.0])
        return 2 * half * sum(ui * t for ui, t in zip(u, THETAS))
    return traceless * (half / math.sin(half))


def matrix_element(irrep: Irrep, k: int, l: int, g: np.ndarray, method: str = "sympower") -> complex:
    """pi_kl(g) = (g v_k, v_l) for the Gram inner product (linear in the first slot)."""
    if not (0 <= k <= irrep.n and 0 <= l <= irrep.n):
        raise IndexError(f"indices ({k}, {l}) out of range for n = {irrep.n}")
    rho = group_action(irrep, g, method=method)
    return complex(irrep.gram_diag[l] * rho[l, k])


def matrix_elements(irrep: Irrep, g: np.ndarray, method: str = "sympower") -> np.ndarray:
    """All matrix elements; entry [k, l] is pi_kl(g)."""
    rho = group_action(irrep, g, method=method)
    return (irrep.gram_diag[:, None] * rho).T


def euler_matrix(a, b, c) -> np.ndarray:
    """g = exp(a theta3) exp(b theta1) exp(c theta3), broadcast over inputs.

    Returns shape (..., 2, 2).
    """
    a, b, c = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (a, b, c)))
    ea = np.zeros(a.shape + (2, 2), dtype=complex)
    ea[..., 0, 0] = np.exp(0.5j * a)
    ea[..., 1, 1] = np.exp(-0.5j * a)
    ec = np.zeros(c.shape + (2, 2), dtype=complex)
    ec[..., 0, 0] = np.exp(0.5j * c)
    ec[..., 1, 1] = np.exp(-0.5j * c)
    eb = np.zeros(b.shape + (2, 2), dtype=complex)
    eb[..., 0, 0] = np.cos(0.5 * b)
    eb[..., 1, 1] = np.cos(0.5 * b)
    eb[..., 0, 1] = 1j * np.sin(0.5 * b)
    eb[..., 1, 0] = 1j * np.sin(0.5 * b)
    return ea @ eb @ ec


def euler_action(irrep: Irrep, a, b, c) -> np.ndarray:
    """Represented group element for Euler angles, shape (..., n+1, n+1).

    Uses exp(a T3) exp(b T1) exp(c T3); exp(b T1) comes from one
    eigendecomposition of T1 in the Gram-orthonormal frame.
    """
    a, b, c = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (a, b, c)))
    n = irrep.n
    w = 0.5 * (n - 2 * np.arange(n + 1))
    s = np.sqrt(irrep.gram_diag)
    # S T1 S^-1 is skew-Hermitian; i * that is Hermitian
    T1n = s[:, None] * irrep.T1 / s[None, :]
    evals, V = np.linalg.eigh(-1j * T1n)
    ub, inv_b = np.unique(b, return_inverse=True)
    Eb = np.einsum("ij,bj,kj->bik", V, np.exp(1j * ub[:, None] * evals[None, :]), V.conj())
    Eb = Eb * s[None, None, :] / s[None, :, None]
    Eb = Eb[inv_b.reshape(b.shape)]
    pa = np.exp(1j * a[..., None] * w)
    pc = np.exp(1j * c[..., None] * w)
    return pa[..., :, None] * Eb * pc[..., None, :]
