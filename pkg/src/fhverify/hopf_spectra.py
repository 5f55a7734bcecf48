"""Finite Hessian blocks of the Hopf map on V^(n) (x) p and their spectra.

Blocks act on V^(n) (x) p with p = span{theta1, theta2}. The basis is ordered
k-major: (v_0 (x) theta1, v_0 (x) theta2, v_1 (x) theta1, ...), so a 2x2
operator matrix [[A, B], [C, D]] of operators on V^(n) becomes
kron(A, E11) + kron(B, E12) + kron(C, E21) + kron(D, E22).
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.optimize

from .su2 import build_irrep, casimir_value

CLUSTER_TOL = 1e-8


class BlockKind(str, Enum):
    L_PHI = "L_phi"
    A_BLOCK = "A_block"
    WARD = "Ward"


class SpectrumError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class BracketError(ValueError):
    pass


@dataclass(frozen=True)
class HessianBlock:
    n: int
    matrix: np.ndarray
    kind: BlockKind
    alpha: float | None = None

    @property
    def size(self) -> int:
        return 2 * (self.n + 1)

    def inner_product(self) -> np.ndarray:
        """Gram matrix of gram (x) Id_2 in the block basis."""
        return np.kron(build_irrep(self.n).gram, np.eye(2))

    def adjoint_residual(self) -> float:
        """max |G M - M^H G| relative to max |G M|; zero for a self-adjoint block."""
        G = self.inner_product()
        GM = G @ self.matrix
        scale = max(np.max(np.abs(GM)), 1.0)
        return float(np.max(np.abs(GM - GM.conj().T)) / scale)


@dataclass
class SpectrumReport:
    n: int
    kind: BlockKind
    eigenvalues: list[float]
    predicted: list[float]
    alpha: float | None = None
    max_abs_deviation: float = field(init=False)

    def __post_init__(self):
        if len(self.eigenvalues) != len(self.predicted):
            raise ValueError("computed and predicted spectra differ in length")
        e = np.sort(np.asarray(self.eigenvalues, dtype=float))
        p = np.sort(np.asarray(self.predicted, dtype=float))
        self.eigenvalues = e.tolist()
        self.predicted = p.tolist()
        self.max_abs_deviation = float(np.max(np.abs(e - p))) if e.size else 0.0

    def to_dict(self) -> dict:
        d = {"n": self.n, "kind": self.kind.value}
        if self.alpha is not None:
            d["alpha"] = self.alpha
        d.update(
            eigenvalues=self.eigenvalues,
            predicted=self.predicted,
            max_abs_deviation=self.max_abs_deviation,
        )
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def csv_rows(self) -> list[dict]:
        return [
            {
                "n": self.n,
                "kind": self.kind.value,
                "alpha": "" if self.alpha is None else self.alpha,
                "index": i,
                "computed": c,
                "predicted": p,
            }
            for i, (c, p) in enumerate(zip(self.eigenvalues, self.predicted))
        ]


CSV_COLUMNS = ("n", "kind", "alpha", "index", "computed", "predicted")


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in reports:
        w.writerows(r.csv_rows())
    return buf.getvalue()


def _assemble(A, B, C, D) -> np.ndarray:
    E = np.eye(2)
    return (
        np.kron(A, np.outer(E[0], E[0]))
        + np.kron(B, np.outer(E[0], E[1]))
        + np.kron(C, np.outer(E[1], E[0]))
        + np.kron(D, np.outer(E[1], E[1]))
    )


def a_block(n: int) -> HessianBlock:
    """The operator A^(n) = [[T2^2, -T2 T1], [-T1 T2, T1^2]] on V^(n) (x) p."""
    R = build_irrep(n)
    T1, T2 = R.T1, R.T2
    M = _assemble(T2 @ T2, -T2 @ T1, -T1 @ T2, T1 @ T1)
    return HessianBlock(n, M, BlockKind.A_BLOCK)


def hessian_block(n: int) -> HessianBlock:
    """L_phi restricted to V^(n) (x) p: Casimir * Id + A^(n)."""
    A = a_block(n)
    M = casimir_value(n) * np.eye(A.size) + A.matrix
    return HessianBlock(n, M, BlockKind.L_PHI)


def ward_operator_matrix(alpha: float) -> np.ndarray:
    """(D + alpha L_phi) on V^(1) (x) p assembled from the n = 1 operators."""
    R = build_irrep(1)
    T1, T2, T3 = R.T
    M = _assemble(
        alpha * T2 @ T2,
        -2 * T3 - alpha * T2 @ T1,
        2 * T3 - alpha * T1 @ T2,
        alpha * T1 @ T1,
    )
    return 0.75 * (1 + alpha) * np.eye(4) + M


def ward_literal_matrix(alpha: float) -> np.ndarray:
    """The displayed 4x4 constant matrix plus 3/4 (1 + alpha) Id.

    Entries are taken verbatim, in the basis (e1 (x) theta1, e1 (x) theta2,
    e2 (x) theta1, e2 (x) theta2).
    """
    a = -alpha / 4
    c = 1j + 1j * alpha / 4
    blk = np.array([[a, -c], [c, a]])
    M = np.zeros((4, 4), dtype=complex)
    M[:2, :2] = blk
    M[2:, 2:] = blk
    return 0.75 * (1 + alpha) * np.eye(4) + M


def ward_block(alpha: float, form: str = "operator") -> HessianBlock:
    """The Ward operator D + alpha L_phi on V^(1) (x) p.

    ``form="operator"`` builds it from the representation matrices,
    ``form="literal"`` from the displayed constant matrix.
    """
    if alpha < 0:
        raise ValueError("coupling alpha must be nonnegative")
    if form == "operator":
        M = ward_operator_matrix(alpha)
    elif form == "literal":
        M = ward_literal_matrix(alpha)
    else:
        raise ValueError(f"unknown form {form!r}")
    return HessianBlock(1, M, BlockKind.WARD, float(alpha))


def _self_adjoint_eigvals(block: HessianBlock, tol: float = 1e-10) -> np.ndarray:
    s = np.sqrt(np.real(np.diag(block.inner_product())))
    M = s[:, None] * block.matrix / s[None, :]
    asym = float(np.max(np.abs(M - M.conj().T))) if M.size else 0.0
    scale = max(float(np.max(np.abs(M))) if M.size else 0.0, 1.0)
    if asym > tol * scale:
        raise SpectrumError("block is not self-adjoint for gram (x) Id", asym)
    try:
        return np.linalg.eigvalsh(0.5 * (M + M.conj().T))
    except np.linalg.LinAlgError as exc:
        raise SpectrumError(f"Hermitian eigensolve failed: {exc}", asym) from exc


def lambda_k(n: int, k: int) -> float:
    return -0.5 * (2 * k * n - 2 * k * k + n)


def predicted_spectrum(n: int, kind: BlockKind, alpha: float | None = None) -> list[float]:
    kind = BlockKind(kind)
    if kind is BlockKind.L_PHI:
        return [0.25 * (n - 2 * k) ** 2 for k in range(n + 1)] + [casimir_value(n)] * (n + 1)
    if kind is BlockKind.A_BLOCK:
        return [lambda_k(n, k) for k in range(n + 1)] + [0.0] * (n + 1)
    if alpha is None:
        raise ValueError("Ward spectrum needs alpha")
    return [(3 * alpha + 7) / 4] * 2 + [(alpha - 1) / 4] * 2


def block_spectrum(block: HessianBlock) -> SpectrumReport:
    ev = _self_adjoint_eigvals(block)
    return SpectrumReport(
        n=block.n,
        kind=block.kind,
        alpha=block.alpha,
        eigenvalues=ev.tolist(),
        predicted=predicted_spectrum(block.n, block.kind, block.alpha),
    )


def min_ward_eigenvalue(alpha: float) -> float:
    return float(_self_adjoint_eigvals(ward_block(alpha))[0])


def stability_threshold(alpha_lo: float, alpha_hi: float, tol: float = 1e-9) -> float:
    """Locate the coupling where the Ward block's lowest eigenvalue crosses zero."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    f_lo = min_ward_eigenvalue(alpha_lo)
    f_hi = min_ward_eigenvalue(alpha_hi)
    if not (f_lo < 0 < f_hi):
        raise BracketError(
            f"bracket [{alpha_lo}, {alpha_hi}] does not straddle the threshold "
            f"(min eigenvalues {f_lo:.3e}, {f_hi:.3e})"
        )
    return scipy.optimize.bisect(min_ward_eigenvalue, alpha_lo, alpha_hi, xtol=tol, rtol=4 * np.finfo(float).eps)


def cluster(values, tol: float = CLUSTER_TOL) -> list[tuple[float, int]]:
    """Group sorted values into (mean, count) clusters with gap <= tol."""
    v = np.sort(np.asarray(values, dtype=float))
    out: list[list] = []
    for x in v:
        if out and x - out[-1][2] <= tol:
            out[-1][0] += x
            out[-1][1] += 1
            out[-1][2] = x
        else:
            out.append([x, 1, x])
    return [(s / c, c) for s, c, _ in out]


@dataclass
class MultiplicityReport:
    n: int
    multiplicities: dict[float, int]
    predicted: dict[float, int]
    total: int

    @property
    def expected_total(self) -> int:
        return 2 * (self.n + 1) ** 2

    @property
    def consistent(self) -> bool:
        if self.total != self.expected_total:
            return False
        if len(self.multiplicities) != len(self.predicted):
            return False
        return all(
            any(abs(k - kp) <= CLUSTER_TOL and v == vp for kp, vp in self.predicted.items())
            for k, v in self.multiplicities.items()
        )


def l2_block_multiplicities(n: int) -> MultiplicityReport:
    """Eigenvalue multiplicities of L_phi on span{pi_kl} (x) p.

    Each eigenvector of the block gives n + 1 eigenfunctions, one per
    matrix-element column index l.
    """
    rep = block_spectrum(hessian_block(n))
    mult = {round(v, 12) + 0.0: c * (n + 1) for v, c in cluster(rep.eigenvalues)}
    pred: dict[float, int] = {}
    for k in range(n + 1):
        key = round(0.25 * (n - 2 * k) ** 2, 12) + 0.0
        pred[key] = pred.get(key, 0) + (n + 1)
    key = round(casimir_value(n), 12)
    pred[key] = pred.get(key, 0) + (n + 1) ** 2
    return MultiplicityReport(n, mult, pred, sum(mult.values()))
