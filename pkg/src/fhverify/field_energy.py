"""The energy E(phi) = 1/2 |phi^* omega|^2 for maps into Kahler targets.

Maps are sampled at mesh vertices. Sphere targets store unit 3-vectors and
torus targets store angles in [0, 1); derivatives are the mesh's central
differences, using nearest-lift steps for angles. The first-variation
density is omega(X, dphi(Z)) with Z the metric dual of delta phi^* omega,
so the L2 gradient of E is -J dphi(Z).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import dec
from .dec import Cochain, Mesh
from .su2 import THETAS, build_irrep, euler_action, euler_matrix, su2_coords

CRITICAL_C = 10.0


class TargetKind(str, Enum):
    SPHERE = "SphereS2"
    TORUS2 = "FlatTorus2"
    TORUS4 = "FlatTorus4"
    S2S2 = "ProductS2S2"


class NonCriticalError(ValueError):
    pass


class FlowStallError(RuntimeError):
    pass


def _sphere_exp(p, u):
    r = np.sqrt(np.sum(u * u, axis=0))
    safe = np.where(r > 0, r, 1.0)
    out = p * np.cos(r) + u * (np.sin(r) / safe)
    return out / np.sqrt(np.sum(out * out, axis=0))


@dataclass(frozen=True)
class TargetGeometry:
    """A Kahler target: round unit spheres, flat unit tori, or a product.

    ``orientation`` flips the sign of omega (and J) on sphere factors.
    """

    kind: TargetKind
    orientation: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", TargetKind(self.kind))
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")

    @property
    def value_dim(self) -> int:
        return {"SphereS2": 3, "FlatTorus2": 2, "FlatTorus4": 4, "ProductS2S2": 6}[self.kind.value]

    @property
    def dim(self) -> int:
        return 2 if self.kind in (TargetKind.SPHERE, TargetKind.TORUS2) else 4

    @property
    def is_torus(self) -> bool:
        return self.kind in (TargetKind.TORUS2, TargetKind.TORUS4)

    def _sphere_blocks(self):
        if self.kind is TargetKind.SPHERE:
            return [slice(0, 3)]
        if self.kind is TargetKind.S2S2:
            return [slice(0, 3), slice(3, 6)]
        return []

    def omega(self, p, u, v):
        """omega_p(u, v) pointwise; p, u, v have the value dimension leading."""
        if self.is_torus:
            out = u[0] * v[1] - u[1] * v[0]
            if self.kind is TargetKind.TORUS4:
                out = out + u[2] * v[3] - u[3] * v[2]
            return out
        out = 0
        for s in self._sphere_blocks():
            out = out + self.orientation * np.sum(p[s] * np.cross(u[s], v[s], axis=0), axis=0)
        return out

    def J(self, p, u):
        if self.is_torus:
            out = np.empty_like(u)
            for i in range(0, self.value_dim, 2):
                out[i] = -u[i + 1]
                out[i + 1] = u[i]
            return out
        parts = [self.orientation * np.cross(*np.broadcast_arrays(p[s], u[s]), axis=0) for s in self._sphere_blocks()]
        return np.concatenate(parts, axis=0)

    def omega_dual(self, p, v):
        """The vector w with omega_p(u, v) = u . w for every ambient u."""
        if self.is_torus:
            w = np.empty_like(v)
            for i in range(0, self.value_dim, 2):
                w[i] = v[i + 1]
                w[i + 1] = -v[i]
            return w
        parts = [self.orientation * np.cross(*np.broadcast_arrays(v[s], p[s]), axis=0) for s in self._sphere_blocks()]
        return np.concatenate(parts, axis=0)

    def omega_point_gradient(self, p, u, v):
        """Gradient in p of omega_p(u, v) with u, v held fixed (zero for tori)."""
        if self.is_torus:
            return np.zeros(np.broadcast_shapes(u.shape, v.shape))
        parts = [self.orientation * np.cross(*np.broadcast_arrays(u[s], v[s]), axis=0) for s in self._sphere_blocks()]
        return np.concatenate(parts, axis=0)

    def inner(self, u, v):
        return np.sum(u * v, axis=0)

    def project(self, p, u):
        """Orthogonal projection of an ambient vector onto the tangent space at p."""
        if self.is_torus:
            return u
        parts = []
        for s in self._sphere_blocks():
            ps, us = np.broadcast_arrays(p[s], u[s])
            parts.append(us - np.sum(ps * us, axis=0) * ps)
        return np.concatenate(parts, axis=0)

    def exp(self, p, u):
        if self.is_torus:
            return np.mod(p + u, 1.0)
        parts = []
        for s in self._sphere_blocks():
            ps, us = np.broadcast_arrays(p[s], u[s])
            parts.append(_sphere_exp(ps, us))
        return np.concatenate(parts, axis=0)

    def reduce(self, values):
        values = np.asarray(values, dtype=float)
        if self.is_torus:
            return np.mod(values, 1.0)
        for s in self._sphere_blocks():
            dev = np.max(np.abs(np.sum(values[s] ** 2, axis=0) - 1.0))
            if dev > 1e-12:
                raise ValueError(f"sphere values are not unit vectors (deviation {dev:.2e})")
        return values

    def normalize(self, values):
        values = np.array(values, dtype=float)
        for s in self._sphere_blocks():
            values[s] = values[s] / np.sqrt(np.sum(values[s] ** 2, axis=0))
        return values

    def tangency_defect(self, p, u) -> float:
        out = 0.0
        for s in self._sphere_blocks():
            out = max(out, float(np.max(np.abs(np.sum(p[s] * u[s], axis=0)))))
        return out

    def diff(self, mesh: Mesh, values, mu: int):
        if self.is_torus:
            return mesh.diff_lifted(values, mu, 1.0)
        return mesh.diff(values, mu)


@dataclass(eq=False)
class DiscreteMap:
    mesh: Mesh
    target: TargetGeometry
    values: np.ndarray
    _dphi: list | None = field(default=None, repr=False)

    def __post_init__(self):
        self.values = self.target.reduce(self.values)
        if self.values.shape[0] != self.target.value_dim:
            raise ValueError(f"expected {self.target.value_dim} value components")

    @property
    def dphi(self) -> list[np.ndarray]:
        """Coordinate derivatives D_mu phi, one ambient vector field per direction."""
        if self._dphi is None:
            self._dphi = [self.target.diff(self.mesh, self.values, mu) for mu in range(self.mesh.m)]
        return self._dphi

    def push(self, Z: np.ndarray) -> np.ndarray:
        """dphi(Z) for a coordinate vector field Z, projected to the tangent space."""
        out = sum(Z[mu] * self.dphi[mu] for mu in range(self.mesh.m))
        return self.target.project(self.values, out)

    def perturbed(self, X: np.ndarray, eps: float) -> "DiscreteMap":
        return DiscreteMap(self.mesh, self.target, self.target.exp(self.values, eps * X))

    def on_mesh(self, mesh: Mesh) -> "DiscreteMap":
        if mesh.shape != self.mesh.shape:
            raise dec.MeshMismatchError("grid shapes differ")
        return DiscreteMap(mesh, self.target, self.values)


# ---------------------------------------------------------------- map builders


def identity_torus(mesh: Mesh) -> DiscreteMap:
    return torus_linear(mesh, np.eye(mesh.m, dtype=int))


def torus_linear(mesh: Mesh, L) -> DiscreteMap:
    """x -> L x mod 1 on a unit flat torus; L must be an integer matrix."""
    L = np.asarray(L)
    if not mesh.is_flat or any(abs(p - 1.0) > 1e-15 for p in mesh.periods):
        raise ValueError("torus maps need a flat unit torus")
    if L.shape != (mesh.m, mesh.m) or not np.all(L == np.round(L)):
        raise ValueError("L must be an integer m x m matrix")
    target = TargetGeometry(TargetKind.TORUS2 if mesh.m == 2 else TargetKind.TORUS4)
    x = mesh.coords()
    vals = [sum(float(L[i, j]) * x[j] for j in range(mesh.m)) for i in range(mesh.m)]
    return DiscreteMap(mesh, target, np.stack(np.broadcast_arrays(*vals)))


def torus_projection(mesh: Mesh) -> DiscreteMap:
    """(x1, x2, x3, x4) -> (x1, x2, 0, 0) on the flat unit 4-torus."""
    return torus_linear(mesh, np.diag([1, 1, 0, 0]))


def constant_map(mesh: Mesh, target: TargetGeometry, point) -> DiscreteMap:
    point = np.asarray(point, dtype=float).reshape((-1,) + (1,) * mesh.m)
    return DiscreteMap(mesh, target, target.normalize(point) if not target.is_torus else point)


def hopf_map(mesh: Mesh, orientation: int = -1) -> DiscreteMap:
    """g -> Ad_g theta3 in theta-coordinates, a unit vector in R^3.

    The default orientation makes J on the target agree with ad theta3 on p.
    """
    if mesh.kind != "SU2Euler":
        raise ValueError("the Hopf map needs an SU2Euler mesh")
    a, b, _ = mesh.coords()
    g = euler_matrix(a, b, np.zeros_like(a * b))
    gi = np.conj(np.swapaxes(g, -1, -2))
    vals = su2_coords(g @ THETAS[2] @ gi)
    return DiscreteMap(mesh, TargetGeometry(TargetKind.SPHERE, orientation), TargetGeometry(TargetKind.SPHERE).normalize(vals))


def sphere_coords(theta, phi) -> np.ndarray:
    theta, phi = np.broadcast_arrays(theta, phi)
    return np.stack([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])


def sphere_projection(mesh: Mesh) -> DiscreteMap:
    """Projection of S2 x S2 onto its first factor."""
    if mesh.kind != "SphereProduct":
        raise ValueError("projection needs a SphereProduct mesh")
    t1, p1, _, _ = mesh.coords()
    return DiscreteMap(mesh, TargetGeometry(TargetKind.SPHERE), sphere_coords(t1, p1))


def sphere_identity(mesh: Mesh) -> DiscreteMap:
    if mesh.kind != "SphereProduct":
        raise ValueError("needs a SphereProduct mesh")
    t1, p1, t2, p2 = mesh.coords()
    vals = np.concatenate(np.broadcast_arrays(sphere_coords(t1, p1), sphere_coords(t2, p2)), axis=0)
    return DiscreteMap(mesh, TargetGeometry(TargetKind.S2S2), vals)


def random_fourier(mesh: Mesh, rng: np.random.Generator, ncomp: int, kmax: int = 2, amp: float = 1.0) -> np.ndarray:
    """Smooth random periodic field with integer frequencies |k_i| <= kmax."""
    x = [2 * np.pi * mesh.coord(mu) / mesh.periods[mu] for mu in range(mesh.m)]
    out = np.zeros((ncomp,) + mesh.shape)
    for k in np.ndindex(*(2 * kmax + 1,) * mesh.m):
        kv = np.array(k) - kmax
        phase = sum(kv[mu] * x[mu] for mu in range(mesh.m))
        c = rng.standard_normal((2, ncomp)) / (1.0 + kv @ kv)
        out += amp * (c[0].reshape((-1,) + (1,) * mesh.m) * np.cos(phase) + c[1].reshape((-1,) + (1,) * mesh.m) * np.sin(phase))
    return out


def random_sphere_map(mesh: Mesh, rng: np.random.Generator, kmax: int = 1, amp: float = 0.3, blocks: int = 1) -> DiscreteMap:
    """A smooth random map into S2 (or S2 x S2 with ``blocks=2``).

    Built as sphere_coords(theta, psi) of two random periodic angle fields,
    so derivatives stay bounded by those of the angle fields.
    """
    parts = []
    for _ in range(blocks):
        ang = random_fourier(mesh, rng, 2, kmax, amp)
        ang[0] += rng.uniform(0, np.pi)
        parts.append(sphere_coords(ang[0], ang[1]))
    kind = TargetKind.SPHERE if blocks == 1 else TargetKind.S2S2
    return DiscreteMap(mesh, TargetGeometry(kind), np.concatenate(parts, axis=0))


def random_torus_map(mesh: Mesh, rng: np.random.Generator, max_degree: int = 2, amp: float = 0.05) -> DiscreteMap:
    """A random integer-linear torus map plus a smooth periodic perturbation."""
    L = rng.integers(-max_degree, max_degree + 1, size=(mesh.m, mesh.m))
    base = torus_linear(mesh, L)
    pert = random_fourier(mesh, rng, mesh.m, kmax=1, amp=amp)
    return DiscreteMap(mesh, base.target, base.values + pert)


def random_variation(phi: DiscreteMap, rng: np.random.Generator, kmax: int = 2, amp: float = 1.0) -> np.ndarray:
    X = random_fourier(phi.mesh, rng, phi.target.value_dim, kmax, amp)
    return phi.target.project(phi.values, X)


# ---------------------------------------------------------------- energy


def pullback_kahler(phi: DiscreteMap) -> Cochain:
    """The 2-form with components omega(D_i phi, D_j phi)."""
    comps = {}
    for i, j in dec.multi_indices(phi.mesh.m, 2):
        comps[(i, j)] = phi.target.omega(phi.values, phi.dphi[i], phi.dphi[j])
    return Cochain.from_components(phi.mesh, 2, comps)


def energy(phi: DiscreteMap) -> float:
    P = pullback_kahler(phi)
    return 0.5 * dec.l2_inner(P, P)


def discrete_gradient(phi: DiscreteMap) -> np.ndarray:
    """L2 gradient of the discrete energy itself, as a tangent field.

    Unlike -J dphi(Z), which discretizes the continuum gradient, this is the
    exact derivative of the lattice energy, so it is a descent direction on
    any grid. Built by transposing the difference operators in the pullback.
    """
    mesh, tgt = phi.mesh, phi.target
    P = pullback_kahler(phi)
    c = dec.raise_indices(P) * mesh.vol
    D = phi.dphi
    g = 0
    for a, (i, j) in enumerate(dec.multi_indices(mesh.m, 2)):
        g = g - mesh.diff(c[a] * tgt.omega_dual(phi.values, D[j]), i)
        g = g + mesh.diff(c[a] * tgt.omega_dual(phi.values, D[i]), j)
        g = g + c[a] * tgt.omega_point_gradient(phi.values, D[i], D[j])
    return tgt.project(phi.values, g) / mesh.vol


def energy_density(phi: DiscreteMap) -> np.ndarray:
    P = pullback_kahler(phi)
    return 0.5 * dec.pointwise_inner(P, P)


def criticality_threshold(mesh: Mesh, C: float = CRITICAL_C) -> float:
    return C * mesh.h**2


@dataclass
class Residual:
    """Z = sharp(delta phi^* omega) and the Euler-Lagrange residual dphi(Z)."""

    Z: np.ndarray
    residual: np.ndarray
    norm: float
    threshold: float

    @property
    def critical(self) -> bool:
        return self.norm < self.threshold


def el_residual(phi: DiscreteMap, C: float = CRITICAL_C) -> Residual:
    P = pullback_kahler(phi)
    Z = dec.sharp(dec.codifferential(P))
    r = phi.push(Z)
    norm = math.sqrt(max(phi.mesh.integrate(phi.target.inner(r, r)), 0.0))
    return Residual(Z, r, norm, criticality_threshold(phi.mesh, C))


@dataclass
class FirstVariation:
    fd_derivative: float
    formula_value: float
    abs_gap: float

    @property
    def rel_gap(self) -> float:
        return self.abs_gap / (abs(self.fd_derivative) + 1e-12)


def _check_tangent(phi: DiscreteMap, X, tol: float = 1e-12):
    X = np.asarray(X, dtype=float)
    if X.shape[0] != phi.target.value_dim:
        raise ValueError("variation has the wrong number of components")
    scale = max(1.0, float(np.max(np.abs(X))) if X.size else 0.0)
    if phi.target.tangency_defect(phi.values, X) > tol * scale:
        raise ValueError("variation is not tangent to the target")
    return X


def first_variation_formula(phi: DiscreteMap, X, residual: Residual | None = None) -> float:
    res = residual or el_residual(phi)
    return phi.mesh.integrate(phi.target.omega(phi.values, X, res.residual))


def first_variation_check(phi: DiscreteMap, X, eps: float = 1e-4) -> FirstVariation:
    """Derivative of E along exp(t X) by finite differences, against the formula.

    The central differences at eps and eps/2 are Richardson-combined, which
    removes the eps^2 term; for torus targets E is a quartic in t and the
    result is then exact up to round-off.
    """
    if not 1e-7 <= eps <= 1e-2:
        raise ValueError("eps must lie in [1e-7, 1e-2]")
    X = _check_tangent(phi, X)

    def central(e):
        return (energy(phi.perturbed(X, e)) - energy(phi.perturbed(X, -e))) / (2 * e)

    fd = (4 * central(eps / 2) - central(eps)) / 3
    formula = first_variation_formula(phi, X)
    return FirstVariation(fd, formula, abs(fd - formula))


@dataclass
class HessianValue:
    flow_term: float
    norm_term: float

    @property
    def value(self) -> float:
        return self.flow_term + self.norm_term


def hessian_quadratic(phi: DiscreteMap, Y, C: float = CRITICAL_C, require_critical: bool = True) -> HessianValue:
    """Second variation at a critical map.

    flow_term = int omega(Y, nabla_Z Y); norm_term = |d phi^*(iota_Y omega)|^2.
    """
    Y = _check_tangent(phi, Y)
    res = el_residual(phi, C)
    if require_critical and not res.critical:
        raise NonCriticalError(f"residual {res.norm:.3e} exceeds threshold {res.threshold:.3e}")
    mesh, tgt = phi.mesh, phi.target
    m = mesh.m
    cov = tgt.project(phi.values, sum(res.Z[mu] * mesh.diff(Y, mu) for mu in range(m)))
    flow = mesh.integrate(tgt.omega(phi.values, Y, cov))
    beta = Cochain.from_components(mesh, 1, {(mu,): tgt.omega(phi.values, Y, phi.dphi[mu]) for mu in range(m)})
    dbeta = dec.exterior_d(beta)
    return HessianValue(flow, dec.l2_inner(dbeta, dbeta))


def second_difference(phi: DiscreteMap, Y, t: float = 1e-3) -> float:
    """(E(exp tY) - 2E + E(exp -tY)) / t^2."""
    return (energy(phi.perturbed(Y, t)) - 2 * energy(phi) + energy(phi.perturbed(Y, -t))) / t**2


# ---------------------------------------------------------------- bounds


@dataclass
class BoundResult:
    energy: float
    bound: float
    gap: float
    which_side: str | None = None


def bound_2d(phi: DiscreteMap) -> BoundResult:
    """E >= (int phi^* omega)^2 / (2 Vol)."""
    if phi.mesh.m != 2:
        raise dec.DegreeError("bound_2d needs a 2-dimensional domain")
    P = pullback_kahler(phi)
    total = phi.mesh.integrate_top(P.values[0])
    E = 0.5 * dec.l2_inner(P, P)
    bound = total**2 / (2 * phi.mesh.total_volume())
    return BoundResult(E, bound, E - bound)


def bound_4d(phi: DiscreteMap, tol: float = 1e-10) -> BoundResult:
    """E >= 1/2 |int phi^*(omega ^ omega)|, with equality iff phi^* omega is (anti-)self-dual."""
    if phi.mesh.m != 4:
        raise dec.DegreeError("bound_4d needs a 4-dimensional domain")
    P = pullback_kahler(phi)
    c = lambda i, j: P.component(i, j)
    top = 2 * (c(0, 1) * c(2, 3) - c(0, 2) * c(1, 3) + c(0, 3) * c(1, 2))
    E = 0.5 * dec.l2_inner(P, P)
    bound = 0.5 * abs(phi.mesh.integrate_top(top))
    plus, minus = dec.selfdual_split(P)
    n2 = dec.l2_inner(P, P)
    if n2 <= 1e-300:
        side = "self-dual"
    elif dec.l2_inner(minus, minus) <= tol * n2:
        side = "self-dual"
    elif dec.l2_inner(plus, plus) <= tol * n2:
        side = "anti-self-dual"
    else:
        side = "neither"
    return BoundResult(E, bound, E - bound, side)


@dataclass
class ConformalResult:
    energy_g: float
    energy_scaled: float
    abs_gap: float

    @property
    def rel_gap(self) -> float:
        return self.abs_gap / max(abs(self.energy_g), 1e-300)


def conformal_invariance_check(phi: DiscreteMap, lam) -> ConformalResult:
    if phi.mesh.m != 4:
        raise dec.DegreeError("conformal invariance holds in dimension 4")
    e0 = energy(phi)
    e1 = energy(phi.on_mesh(phi.mesh.with_conformal_factor(lam)))
    return ConformalResult(e0, e1, abs(e0 - e1))


# ---------------------------------------------------------------- flow


@dataclass
class FlowStep:
    step: int
    energy: float
    residual_norm: float
    dt: float


@dataclass
class FlowResult:
    trajectory: list[FlowStep]
    final: DiscreteMap
    converged: bool


def gradient_flow(
    phi: DiscreteMap,
    steps: int,
    dt: float | None = None,
    C: float = CRITICAL_C,
    min_dt: float = 1e-12,
) -> FlowResult:
    """Explicit descent on the lattice energy with backtracking on energy increase.

    Steps follow minus the exact lattice gradient (which agrees with
    J dphi(Z) up to discretization error); the reported residual and the
    stopping test use dphi(Z).
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    dt0 = 0.1 * phi.mesh.h**2 if dt is None else float(dt)
    if dt0 <= 0:
        raise ValueError("dt must be positive")
    cur = phi
    E = energy(cur)
    res = el_residual(cur, C)
    traj = [FlowStep(0, E, res.norm, dt0)]
    step_dt = dt0
    for step in range(1, steps + 1):
        if res.critical:
            return FlowResult(traj, cur, True)
        direction = -discrete_gradient(cur)
        while True:
            cand = cur.perturbed(direction, step_dt)
            E_new = energy(cand)
            if E_new <= E:
                break
            step_dt *= 0.5
            if step_dt < min_dt:
                raise FlowStallError(f"time step fell below {min_dt:g} at step {step}")
        cur, E = cand, E_new
        res = el_residual(cur, C)
        traj.append(FlowStep(step, E, res.norm, step_dt))
        step_dt = min(dt0, 1.25 * step_dt)
    return FlowResult(traj, cur, res.critical)


# ---------------------------------------------------------------- Peter-Weyl


def _lambda_k(n: int, k: int) -> float:
    return -0.5 * (2 * k * n - 2 * k * k + n)


@dataclass
class PeterWeylResult:
    n: int
    k: int
    l: int
    estimate: float
    predicted: float

    @property
    def abs_error(self) -> float:
        return abs(self.estimate - self.predicted)


def matrix_element_field(mesh: Mesh, n: int, k: int, l: int) -> np.ndarray:
    """pi_kl(g) = (g v_k, v_l) evaluated at every vertex of an SU2Euler mesh."""
    if mesh.kind != "SU2Euler":
        raise ValueError("matrix elements need an SU2Euler mesh")
    R = build_irrep(n)
    if not (0 <= k <= n and 0 <= l <= n):
        raise ValueError("need 0 <= k, l <= n")
    a, b, c = mesh.coords()
    rho = euler_action(R, a, b, c)
    return R.gram_diag[l] * rho[..., l, k]


def eigen_section(mesh: Mesh, n: int, k: int, l: int) -> np.ndarray:
    """Y = ((theta2 pi) theta1 - (theta1 pi) theta2) / lambda_k as p-valued components."""
    pi = matrix_element_field(mesh, n, k, l)
    lk = _lambda_k(n, k)
    return np.stack([mesh.frame_derivative(pi, 1) / lk, -mesh.frame_derivative(pi, 0) / lk])


def apply_hessian_operator(mesh: Mesh, Y: np.ndarray) -> np.ndarray:
    """[[-t1^2 - t3^2, -t3 - t1 t2], [t3 - t2 t1, -t2^2 - t3^2]] applied by frame differences."""
    t = lambda f, i: mesh.frame_derivative(f, i)
    Y1, Y2 = Y
    out1 = -t(t(Y1, 0), 0) - t(t(Y1, 2), 2) - t(Y2, 2) - t(t(Y2, 1), 0)
    out2 = t(Y1, 2) - t(t(Y1, 0), 1) - t(t(Y2, 1), 1) - t(t(Y2, 2), 2)
    return np.stack([out1, out2])


def rayleigh_quotient(mesh: Mesh, Y: np.ndarray, LY: np.ndarray) -> float:
    num = mesh.integrate(np.real(np.sum(np.conj(Y) * LY, axis=0)))
    den = mesh.integrate(np.real(np.sum(np.conj(Y) * Y, axis=0)))
    return num / den


def peter_weyl_check(n: int, k: int, l: int, mesh: Mesh | None = None, size: int = 48) -> PeterWeylResult:
    mesh = mesh or dec.su2_euler(size)
    Y = eigen_section(mesh, n, k, l)
    est = rayleigh_quotient(mesh, Y, apply_hessian_operator(mesh, Y))
    return PeterWeylResult(n, k, l, est, 0.25 * (n - 2 * k) ** 2)


def section_to_variation(phi: DiscreteMap, Y: np.ndarray) -> np.ndarray:
    """Real p-valued section (Y1, Y2) -> tangent field Ad_g [Y1 theta1 + Y2 theta2, theta3]."""
    mesh = phi.mesh
    a, b, c = mesh.coords()
    g = euler_matrix(a, b, c)
    gi = np.conj(np.swapaxes(g, -1, -2))
    # [theta1, theta3] = theta2, [theta2, theta3] = -theta1
    e1 = su2_coords(g @ THETAS[1] @ gi)
    e2 = -su2_coords(g @ THETAS[0] @ gi)
    return Y[0] * e1 + Y[1] * e2
