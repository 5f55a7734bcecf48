"""Symmetry-reduced S^4 -> CP^2 profiles.

The reduced energy of a profile alpha(t) is pi^2 int (K alpha'^2 + U) dt with
K = 2 a^2 / (1 + a^2)^4 and U = a^4 / (2 (1 + a^2)^2). Viewed as a Lagrangian
L = K alpha'^2 + U, its Euler-Lagrange equation is

    alpha'' = alpha (1 + alpha^2) / 2 - (1 - 3 alpha^2) alpha'^2 / (alpha (1 + alpha^2)),

and H = (K alpha'^2 - U) / 2 is conserved along solutions. In the chart
q = log(alpha^2 / (1 + alpha^2)) the same equation reads q'' = 1 - q'^2 and
H = e^{2q} (q'^2 - 1) / 4; the H = 0 solutions are the lines q = -t + c.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.integrate

PI2 = math.pi**2
BLOWUP = 1e8
DEGENERATE = 1e-8


class DegenerateDataError(ValueError):
    pass


class BlowUpError(RuntimeError):
    pass


@dataclass
class Profile:
    t_grid: np.ndarray
    alpha: np.ndarray
    alpha_dot: np.ndarray

    def __post_init__(self):
        self.t_grid = np.asarray(self.t_grid, dtype=float)
        self.alpha = np.broadcast_to(np.asarray(self.alpha, dtype=float), self.t_grid.shape).copy()
        self.alpha_dot = np.broadcast_to(np.asarray(self.alpha_dot, dtype=float), self.t_grid.shape).copy()
        if self.t_grid.ndim != 1 or self.t_grid.size < 2:
            raise ValueError("a profile needs at least two samples")
        if np.any(np.diff(self.t_grid) <= 0):
            raise ValueError("t_grid must be strictly increasing")


def kinetic_coefficient(a):
    return 2 * a**2 / (1 + a**2) ** 4


def potential(a):
    return a**4 / (2 * (1 + a**2) ** 2)


def energy_density(a, adot):
    return PI2 * (kinetic_coefficient(a) * adot**2 + potential(a))


def reduced_energy(p: Profile) -> float:
    """Simpson quadrature of the reduced energy density over the profile's grid."""
    return float(scipy.integrate.simpson(energy_density(p.alpha, p.alpha_dot), x=p.t_grid))


def conserved_h(alpha, alpha_dot):
    a2 = np.asarray(alpha, dtype=float) ** 2
    return a2 * np.asarray(alpha_dot) ** 2 / (1 + a2) ** 4 - a2**2 / (4 * (1 + a2) ** 2)


def el_acceleration(alpha, alpha_dot):
    a, v = alpha, alpha_dot
    return a * (1 + a * a) / 2 - (1 - 3 * a * a) * v * v / (a * (1 + a * a))


def exact_profile(t, branch: str = "plus"):
    """The H = 0 solutions alpha_+(t) = (e^t - 1)^(-1/2) (t > 0) and alpha_-(t) = -alpha_+(-t) (t < 0)."""
    t = np.asarray(t, dtype=float)
    if branch == "plus":
        if np.any(t <= 0):
            raise ValueError("the plus branch is defined for t > 0")
        em = np.expm1(t)
        a = em**-0.5
        return a, -0.5 * (em + 1) * em**-1.5
    if branch == "minus":
        if np.any(t >= 0):
            raise ValueError("the minus branch is defined for t < 0")
        a, ad = exact_profile(-t, "plus")
        return -a, ad
    raise ValueError(f"unknown branch {branch!r}")


def exact_el_residual(t) -> np.ndarray:
    """Relative EL residual of the exact plus branch, using the closed-form second derivative."""
    t = np.asarray(t, dtype=float)
    a, ad = exact_profile(t)
    em = np.expm1(t)
    # d/dt of -1/2 e^t (e^t - 1)^(-3/2)
    add = -0.5 * (em + 1) * em**-1.5 + 0.75 * (em + 1) ** 2 * em**-2.5
    rhs = el_acceleration(a, ad)
    return np.abs(add - rhs) / np.maximum(np.abs(add), 1e-300)


def derive_el_symbolic():
    """Euler-Lagrange acceleration derived with sympy from L = K a'^2 + U."""
    import sympy as sp

    a, v = sp.symbols("alpha alpha_dot", real=True)
    K = 2 * a**2 / (1 + a**2) ** 4
    U = a**4 / (2 * (1 + a**2) ** 2)
    L = K * v**2 + U
    # d/dt dL/dv = dL/da, with d/dt acting as v d/da + acc d/dv
    acc = sp.Symbol("acc")
    dLdv = sp.diff(L, v)
    eq = sp.diff(dLdv, a) * v + sp.diff(dLdv, v) * acc - sp.diff(L, a)
    return sp.simplify(sp.solve(eq, acc)[0]), (a, v)


def _rhs_alpha(y):
    a, v = y
    if abs(a) > BLOWUP:
        raise BlowUpError(f"|alpha| exceeded {BLOWUP:g}")
    if a == 0.0:
        raise DegenerateDataError("trajectory reached alpha = 0")
    return np.array([v, el_acceleration(a, v)])


_Q_BLOWUP = math.log(BLOWUP**2 / (1 + BLOWUP**2))


def _rhs_log(y):
    q, p = y
    if q > _Q_BLOWUP:
        raise BlowUpError(f"|alpha| exceeded {BLOWUP:g}")
    return np.array([p, 1.0 - p * p])


def to_log_chart(alpha, alpha_dot):
    a2 = alpha * alpha
    return math.log(a2 / (1 + a2)), 2 * alpha_dot / (alpha * (1 + a2))


def from_log_chart(q, p, sign=1.0):
    q = np.asarray(q, dtype=float)
    a = sign * np.sqrt(np.exp(q) / -np.expm1(q))
    return a, p * a * (1 + a * a) / 2


def _rk4(rhs, y, t0, t_end, h_step):
    n = max(1, math.ceil((t_end - t0) / h_step - 1e-9))
    h = (t_end - t0) / n
    ys = np.empty((n + 1, 2))
    ys[0] = y
    for i in range(n):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        ys[i + 1] = y
    return t0 + h * np.arange(n + 1), ys


def integrate_el(
    alpha0: float, alpha_dot0: float, t0: float, t_end: float, h_step: float, chart: str = "log"
) -> Profile:
    """Classical RK4 for the reduced Euler-Lagrange equation.

    ``chart="log"`` steps the equivalent equation q'' = 1 - q'^2, which is
    far better conditioned along the decaying branch; ``chart="alpha"``
    steps alpha'' directly. The step is shrunk slightly so that t_end is hit
    exactly.
    """
    if h_step <= 0:
        raise ValueError("h_step must be positive")
    if t_end <= t0:
        raise ValueError("t_end must exceed t0")
    if abs(alpha0) < DEGENERATE:
        raise DegenerateDataError("initial alpha too close to the degenerate locus alpha = 0")
    if abs(alpha0) > BLOWUP:
        raise BlowUpError(f"|alpha| exceeded {BLOWUP:g}")
    if chart == "alpha":
        ts, ys = _rk4(_rhs_alpha, np.array([alpha0, alpha_dot0], dtype=float), t0, t_end, h_step)
        return Profile(ts, ys[:, 0], ys[:, 1])
    if chart != "log":
        raise ValueError(f"unknown chart {chart!r}")
    ts, ys = _rk4(_rhs_log, np.array(to_log_chart(alpha0, alpha_dot0)), t0, t_end, h_step)
    a, ad = from_log_chart(ys[:, 0], ys[:, 1], math.copysign(1.0, alpha0))
    return Profile(ts, a, ad)


def exact_branch_profile(t_small: float, t_large: float, n_points: int) -> Profile:
    if not 0 < t_small < t_large:
        raise ValueError("need 0 < t_small < t_large")
    t = np.linspace(t_small, t_large, int(n_points))
    a, ad = exact_profile(t)
    return Profile(t, a, ad)


def glued_energy(t_small: float = 1e-6, t_large: float = 30.0, n_points: int = 100_000) -> float:
    """Energy of the glued alpha_- / alpha_+ solution; the two branches contribute equally."""
    return 2 * reduced_energy(exact_branch_profile(t_small, t_large, n_points))
