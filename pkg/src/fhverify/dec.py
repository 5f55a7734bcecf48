"""Discrete exterior calculus on structured periodic grids.

Forms are stored by coordinate components at grid vertices, one array per
increasing multi-index, and the exterior derivative is built from
antisymmetrized central differences. Central differences on a periodic grid
commute with each other, so d o d vanishes identically, and they are
skew-adjoint under the vertex sum, so the codifferential assembled from the
pointwise Hodge star is the exact adjoint of d wherever the volume density
is positive.

Curved meshes are periodic parametrizations that cover the manifold several
times (``Mesh.cover``). Their signed density changes sign across the
parametrization seams; the Hodge star uses the signed density, which is
smooth, and integrals use its absolute value.

Arrays may be stored in broadcast form: a field that does not depend on a
grid axis may have length 1 along that axis.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sps
import scipy.sparse.linalg

from .su2 import THETA1, THETA3, euler_matrix, su2_coords

MAX_UNKNOWNS = 20000
DENSE_LIMIT = 4000
SYMMETRY_TOL = 1e-10


class DegreeError(ValueError):
    pass


class MeshMismatchError(ValueError):
    pass


class FeasibilityError(RuntimeError):
    pass


def multi_indices(m: int, p: int) -> list[tuple[int, ...]]:
    return list(itertools.combinations(range(m), p))


def _perm_sign(seq) -> int:
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


SUPPORTED_ORDERS = (2, 4, 6, 8)
DEFAULT_ORDER = 8


def _central_weights(order: int) -> tuple[tuple[int, float], ...]:
    """(offset, weight) pairs of the order-accurate central first derivative, per unit h."""
    if order not in SUPPORTED_ORDERS:
        raise ValueError(f"unsupported stencil order {order}")
    r = order // 2
    out = []
    for j in range(1, r + 1):
        c = 2 * (-1) ** (j + 1) * math.factorial(r) ** 2 / (j * math.factorial(r - j) * math.factorial(r + j))
        out += [(j, c / 2), (-j, -c / 2)]
    return tuple(out)


_STENCILS = {o: _central_weights(o) for o in SUPPORTED_ORDERS}


def stencil_symbol(theta, order: int):
    """Fourier symbol s(theta) with D e^{i theta j} = (i s(theta) / h) e^{i theta j}."""
    theta = np.asarray(theta, dtype=float)
    return sum(2 * w * np.sin(off * theta) for off, w in _central_weights(order) if off > 0)


@dataclass(frozen=True, eq=False)
class Mesh:
    """A periodic grid with a coordinate metric.

    Attributes:
        kind: "FlatTorus", "SU2Euler" or "SphereProduct".
        shape: grid sizes per coordinate direction.
        periods: coordinate periods.
        offsets: vertex offset per direction, in units of the grid step.
        metric: coordinate metric, shape (m, m, *b) with b broadcastable to shape.
        density: signed volume density sqrt(det g), oriented by the manifold.
        coframe: C[i, mu] = e^i(d_mu) for an oriented orthonormal coframe e^i.
        cover: number of times the coordinate torus covers the manifold.
        order: accuracy order of the central differences (2, 4, 6 or 8).
    """

    kind: str
    shape: tuple[int, ...]
    periods: tuple[float, ...]
    offsets: tuple[float, ...]
    metric: np.ndarray
    density: np.ndarray
    coframe: np.ndarray
    cover: int = 1
    order: int = DEFAULT_ORDER
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if len(self.shape) not in (2, 3, 4):
            raise ValueError("mesh dimension must be 2, 3 or 4")
        if min(self.shape) < 4:
            raise ValueError(f"all grid sizes must be >= 4, got {self.shape}")
        if self.order not in _STENCILS:
            raise ValueError(f"unsupported stencil order {self.order}")
        m = self.m
        gm = np.moveaxis(np.asarray(self.metric), (0, 1), (-2, -1))
        if np.min(np.linalg.eigvalsh(gm)) <= 0:
            raise ValueError("metric is not positive definite at every vertex")
        if gm.shape[-1] != m:
            raise ValueError("metric has the wrong dimension")

    @property
    def m(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(p / n for p, n in zip(self.periods, self.shape))

    @property
    def h(self) -> float:
        return max(self.spacing)

    @property
    def cell_volume(self) -> float:
        return math.prod(self.spacing)

    @property
    def is_flat(self) -> bool:
        return self.kind == "FlatTorus"

    def coord(self, mu: int) -> np.ndarray:
        """Coordinate values along direction mu, shaped to broadcast over the grid."""
        n = self.shape[mu]
        x = (np.arange(n) + self.offsets[mu]) * self.spacing[mu]
        sh = [1] * self.m
        sh[mu] = n
        return x.reshape(sh)

    def coords(self) -> list[np.ndarray]:
        return [self.coord(mu) for mu in range(self.m)]

    @property
    def vol(self) -> np.ndarray:
        """Per-vertex volume weight (broadcast form)."""
        return np.abs(self.density) * self.cell_volume / self.cover

    def total_volume(self) -> float:
        return self.integrate(np.ones((1,) * self.m))

    def integrate(self, f) -> float:
        """Sum of f * vol over the grid; f in broadcast form."""
        return float(np.real(self.grid_sum(np.asarray(f) * self.vol)))

    def integrate_top(self, f) -> float:
        """Oriented integral of a top-degree coordinate component f."""
        w = np.sign(self.density) * self.cell_volume / self.cover
        return float(np.real(self.grid_sum(np.asarray(f) * w)))

    def grid_sum(self, f):
        f = np.asarray(f)
        f = f.reshape((1,) * (self.m - f.ndim) + f.shape) if f.ndim < self.m else f
        mult = 1
        for ax, n in enumerate(self.shape):
            if f.shape[ax - self.m] == 1 and n > 1:
                mult *= n
        return f.sum(axis=tuple(range(f.ndim - self.m, f.ndim))) * mult

    def full(self, f) -> np.ndarray:
        f = np.asarray(f)
        return np.broadcast_to(f, f.shape[: f.ndim - self.m] + self.shape)

    @property
    def metric_inv(self) -> np.ndarray:
        if "ginv" not in self._cache:
            gm = np.moveaxis(self.metric, (0, 1), (-2, -1))
            self._cache["ginv"] = np.moveaxis(np.linalg.inv(gm), (-2, -1), (0, 1))
        return self._cache["ginv"]

    def form_metric(self, p: int) -> np.ndarray:
        """Inverse metric on p-forms, G[I, J] = det(ginv[I, J]), shape (c, c, *b)."""
        key = ("G", p)
        if key not in self._cache:
            idx = multi_indices(self.m, p)
            ginv = self.metric_inv
            bshape = ginv.shape[2:]
            G = np.empty((len(idx), len(idx)) + bshape)
            for a, I in enumerate(idx):
                for b, J in enumerate(idx):
                    if p == 0:
                        G[a, b] = 1.0
                        continue
                    sub = ginv[np.ix_(I, J)]
                    G[a, b] = np.linalg.det(np.moveaxis(sub, (0, 1), (-2, -1)))
            self._cache[key] = G
        return self._cache[key]

    def diff(self, f: np.ndarray, mu: int) -> np.ndarray:
        """Central difference along grid direction mu (trailing grid axes)."""
        f = np.asarray(f)
        ax = f.ndim - self.m + mu
        if f.shape[ax] == 1:
            return np.zeros_like(f)
        out = np.zeros(f.shape, dtype=np.result_type(f, float))
        for off, w in _STENCILS[self.order]:
            out += w * np.roll(f, -off, axis=ax)
        return out / self.spacing[mu]

    def diff_lifted(self, f: np.ndarray, mu: int, period: float) -> np.ndarray:
        """Central difference of a circle-valued field using nearest-lift steps."""
        f = np.asarray(f, dtype=float)
        ax = f.ndim - self.m + mu
        if f.shape[ax] == 1:
            return np.zeros_like(f)
        step = np.roll(f, -1, axis=ax) - f
        step = step - period * np.floor(step / period + 0.5)

        def span(k):
            # lifted f(x + k h) - f(x - k h) for k >= 1
            s = np.zeros_like(f)
            for j in range(-k, k):
                s += np.roll(step, -j, axis=ax)
            return s

        out = np.zeros_like(f)
        for off, w in _STENCILS[self.order]:
            if off > 0:
                out += w * span(off)
        return out / self.spacing[mu]

    def with_conformal_factor(self, lam) -> "Mesh":
        """The same grid with metric lam^2 g."""
        lam = np.asarray(lam, dtype=float)
        if np.min(lam) <= 0:
            raise ValueError("conformal factor must be positive")
        return Mesh(
            kind=self.kind,
            shape=self.shape,
            periods=self.periods,
            offsets=self.offsets,
            metric=self.metric * lam**2,
            density=self.density * lam**self.m,
            coframe=self.coframe * lam,
            cover=self.cover,
            order=self.order,
        )

    def frame_derivative(self, f: np.ndarray, i: int) -> np.ndarray:
        """Derivative of f along the i-th orthonormal frame vector."""
        E = self.frame
        out = None
        for mu in range(self.m):
            coef = E[mu, i]
            if not np.any(coef):
                continue
            term = coef * self.diff(f, mu)
            out = term if out is None else out + term
        return np.zeros_like(f) if out is None else out

    @property
    def frame(self) -> np.ndarray:
        """E[mu, i]: coordinate components of the orthonormal frame, inverse of the coframe."""
        if "frame" not in self._cache:
            C = np.moveaxis(self.coframe, (0, 1), (-2, -1))
            self._cache["frame"] = np.moveaxis(np.linalg.inv(C), (-2, -1), (0, 1))
        return self._cache["frame"]


def flat_torus(m: int, sizes, periods=None, order: int = DEFAULT_ORDER) -> Mesh:
    sizes = tuple(int(s) for s in (sizes if np.ndim(sizes) else [sizes] * m))
    if len(sizes) != m:
        raise ValueError("need one size per dimension")
    periods = tuple(float(p) for p in (periods if periods is not None else [1.0] * m))
    eye = np.eye(m).reshape((m, m) + (1,) * m)
    return Mesh(
        kind="FlatTorus",
        shape=sizes,
        periods=periods,
        offsets=(0.0,) * m,
        metric=eye.copy(),
        density=np.ones((1,) * m),
        coframe=eye.copy(),
        cover=1,
        order=order,
    )


def su2_euler(sizes, order: int = DEFAULT_ORDER) -> Mesh:
    """SU(2) with the theta-orthonormal left-invariant metric in Euler angles.

    g(a, b, c) = exp(a theta3) exp(b theta1) exp(c theta3) with every angle
    in [0, 4 pi); this torus covers SU(2) eight times. The b grid is offset
    by half a step so no vertex sits where the parametrization degenerates.
    """
    sizes = tuple(int(s) for s in (sizes if np.ndim(sizes) else [sizes] * 3))
    per = 4 * math.pi
    nb, nc = sizes[1], sizes[2]
    if nb % 4:
        # otherwise some b vertex lands on a multiple of pi, where the chart degenerates
        raise ValueError(f"the b grid size must be divisible by 4, got {nb}")
    b = (np.arange(nb) + 0.5) * per / nb
    c = np.arange(nc) * per / nc
    B, Cc = np.meshgrid(b, c, indexing="ij")
    zero = np.zeros_like(B)
    EB = euler_matrix(zero, B, zero)
    EC = euler_matrix(zero, zero, Cc)
    inv = lambda x: np.conj(np.swapaxes(x, -1, -2))
    mc_a = inv(EC) @ inv(EB) @ THETA3 @ EB @ EC
    mc_b = inv(EC) @ THETA1 @ EC
    mc_c = np.broadcast_to(THETA3, mc_a.shape)
    C = np.stack([su2_coords(mc_a), su2_coords(mc_b), su2_coords(mc_c)], axis=1)
    C = C[:, :, None, :, :]
    metric = np.einsum("iu...,iv...->uv...", C, C)
    density = np.linalg.det(np.moveaxis(C, (0, 1), (-2, -1)))
    return Mesh(
        kind="SU2Euler",
        shape=sizes,
        periods=(per, per, per),
        offsets=(0.0, 0.5, 0.0),
        metric=metric,
        density=density,
        coframe=C,
        cover=8,
        order=order,
    )


def sphere_product(sizes, order: int = DEFAULT_ORDER) -> Mesh:
    """Product of two round unit spheres in coordinates (theta1, phi1, theta2, phi2).

    Polar angles run over [0, 2 pi) so the grid is periodic; each sphere is
    covered twice.
    """
    sizes = tuple(int(s) for s in sizes)
    if len(sizes) != 4:
        raise ValueError("sphere product needs four grid sizes")
    if sizes[0] % 2 or sizes[2] % 2:
        raise ValueError("polar grid sizes must be even so no vertex sits on a pole")
    per = 2 * math.pi
    offsets = (0.5, 0.0, 0.5, 0.0)
    t1 = ((np.arange(sizes[0]) + 0.5) * per / sizes[0]).reshape(-1, 1, 1, 1)
    t2 = ((np.arange(sizes[2]) + 0.5) * per / sizes[2]).reshape(1, 1, -1, 1)
    s1 = np.sin(t1)
    s2 = np.sin(t2)
    one = np.ones_like(s1 * s2)
    diag = [one, s1**2 * one, one, s2**2 * one]
    metric = np.zeros((4, 4) + one.shape)
    coframe = np.zeros((4, 4) + one.shape)
    for i in range(4):
        metric[i, i] = diag[i]
        coframe[i, i] = np.sqrt(diag[i]) * (np.sign(s1) if i == 1 else np.sign(s2) if i == 3 else 1)
    return Mesh(
        kind="SphereProduct",
        shape=sizes,
        periods=(per,) * 4,
        offsets=offsets,
        metric=metric,
        density=s1 * s2,
        coframe=coframe,
        cover=4,
        order=order,
    )


@dataclass
class Cochain:
    """A discrete p-form; ``values[a]`` is the component on multi-index ``indices[a]``."""

    mesh: Mesh
    degree: int
    values: np.ndarray

    def __post_init__(self):
        if not 0 <= self.degree <= self.mesh.m:
            raise DegreeError(f"degree {self.degree} outside 0..{self.mesh.m}")
        ncomp = math.comb(self.mesh.m, self.degree)
        self.values = np.asarray(self.values)
        if self.values.shape[0] != ncomp:
            raise ValueError(f"expected {ncomp} components, got {self.values.shape[0]}")

    @property
    def indices(self) -> list[tuple[int, ...]]:
        return multi_indices(self.mesh.m, self.degree)

    def component(self, *idx: int) -> np.ndarray:
        """Component for an arbitrary index tuple, with the antisymmetry sign."""
        if len(set(idx)) < len(idx):
            return np.zeros_like(self.values[0])
        s = _perm_sign(idx)
        return s * self.values[self.indices.index(tuple(sorted(idx)))]

    def __add__(self, other):
        _check_same(self, other)
        return Cochain(self.mesh, self.degree, _stack_broadcast(self.values, other.values, np.add))

    def __sub__(self, other):
        _check_same(self, other)
        return Cochain(self.mesh, self.degree, _stack_broadcast(self.values, other.values, np.subtract))

    def __mul__(self, c):
        return Cochain(self.mesh, self.degree, self.values * c)

    __rmul__ = __mul__

    def __neg__(self):
        return Cochain(self.mesh, self.degree, -self.values)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    @classmethod
    def zeros(cls, mesh: Mesh, degree: int) -> "Cochain":
        return cls(mesh, degree, np.zeros((math.comb(mesh.m, degree),) + (1,) * mesh.m))

    @classmethod
    def from_components(cls, mesh: Mesh, degree: int, comps: dict) -> "Cochain":
        """Build from {multi-index: array or scalar}; missing entries are zero."""
        idx = multi_indices(mesh.m, degree)
        arrs = [np.asarray(comps.get(I, 0.0), dtype=float) for I in idx]
        arrs = [a.reshape((1,) * (mesh.m - a.ndim) + a.shape) for a in arrs]
        return cls(mesh, degree, np.stack(np.broadcast_arrays(*arrs)))


def _stack_broadcast(a, b, op):
    a, b = np.broadcast_arrays(a, b)
    return op(a, b)


def _check_same(a: Cochain, b: Cochain):
    if a.mesh is not b.mesh:
        raise MeshMismatchError("cochains live on different meshes")
    if a.degree != b.degree:
        raise MeshMismatchError(f"degree mismatch: {a.degree} vs {b.degree}")


def exterior_d(a: Cochain) -> Cochain:
    mesh, p = a.mesh, a.degree
    if p >= mesh.m:
        raise DegreeError(f"exterior derivative of a top-degree ({p}) form")
    src = {I: i for i, I in enumerate(multi_indices(mesh.m, p))}
    comps = []
    for J in multi_indices(mesh.m, p + 1):
        acc = None
        for r, mu in enumerate(J):
            I = J[:r] + J[r + 1 :]
            term = mesh.diff(a.values[src[I]], mu)
            term = term if r % 2 == 0 else -term
            acc = term if acc is None else acc + term
        comps.append(acc)
    return Cochain(mesh, p + 1, np.stack(np.broadcast_arrays(*comps)))


def raise_indices(a: Cochain) -> np.ndarray:
    G = a.mesh.form_metric(a.degree)
    return np.einsum("ab...,b...->a...", G, a.values)


def pointwise_inner(a: Cochain, b: Cochain) -> np.ndarray:
    _check_same(a, b)
    return np.einsum("a...,a...->...", raise_indices(a), b.values)


def hodge_star(a: Cochain) -> Cochain:
    mesh, p, m = a.mesh, a.degree, a.mesh.m
    raised = raise_indices(a)
    src = {I: i for i, I in enumerate(multi_indices(m, p))}
    comps = []
    for K in multi_indices(m, m - p):
        I = tuple(i for i in range(m) if i not in K)
        comps.append(_perm_sign(I + K) * mesh.density * raised[src[I]])
    return Cochain(mesh, m - p, np.stack(np.broadcast_arrays(*comps)))


def codifferential(a: Cochain) -> Cochain:
    m, p = a.mesh.m, a.degree
    if p == 0:
        raise DegreeError("codifferential of a 0-form")
    sign = (-1) ** (m + m * p + 1)
    return sign * hodge_star(exterior_d(hodge_star(a)))


def l2_inner(a: Cochain, b: Cochain) -> float:
    return a.mesh.integrate(pointwise_inner(a, b))


def l2_norm(a: Cochain) -> float:
    return math.sqrt(max(l2_inner(a, a), 0.0))


def sharp(a: Cochain) -> np.ndarray:
    """Vector field g^{-1} a, coordinate components shape (m, *b)."""
    if a.degree != 1:
        raise DegreeError("sharp takes a 1-form")
    return np.einsum("uv...,v...->u...", a.mesh.metric_inv, a.values)


def flat(mesh: Mesh, v: np.ndarray) -> Cochain:
    return Cochain(mesh, 1, np.einsum("uv...,v...->u...", mesh.metric, v))


def vector_norm2(mesh: Mesh, v: np.ndarray) -> np.ndarray:
    return np.einsum("uv...,u...,v...->...", mesh.metric, v, v)


def frame_components(mesh: Mesh, v: np.ndarray) -> np.ndarray:
    """Components of a coordinate vector field in the orthonormal frame."""
    return np.einsum("iu...,u...->i...", mesh.coframe, v)


def wedge(a: Cochain, b: Cochain) -> Cochain:
    _check_same_mesh(a, b)
    m, p, q = a.mesh.m, a.degree, b.degree
    if p + q > m:
        raise DegreeError(f"wedge degree {p + q} exceeds dimension {m}")
    ia = multi_indices(m, p)
    ib = multi_indices(m, q)
    out = {}
    for i, I in enumerate(ia):
        for j, J in enumerate(ib):
            if set(I) & set(J):
                continue
            K = tuple(sorted(I + J))
            term = _perm_sign(I + J) * a.values[i] * b.values[j]
            out[K] = out.get(K, 0) + term
    return Cochain.from_components(a.mesh, p + q, out)


def _check_same_mesh(a, b):
    if a.mesh is not b.mesh:
        raise MeshMismatchError("cochains live on different meshes")


def selfdual_split(a: Cochain) -> tuple[Cochain, Cochain]:
    """Split a 2-form on a 4-manifold into self-dual and anti-self-dual parts."""
    if a.mesh.m != 4 or a.degree != 2:
        raise DegreeError("self-dual splitting needs a 2-form in dimension 4")
    s = hodge_star(a)
    return 0.5 * (a + s), 0.5 * (a - s)


# ---------------------------------------------------------------- spectra


def _diff_matrix_1d(n: int, h: float, order: int) -> sps.csr_matrix:
    rows, cols, vals = [], [], []
    for j in range(n):
        for off, w in _STENCILS[order]:
            rows.append(j)
            cols.append((j + off) % n)
            vals.append(w / h)
    return sps.csr_matrix((vals, (rows, cols)), shape=(n, n))


def _diff_matrix(mesh: Mesh, mu: int) -> sps.csr_matrix:
    mats = [sps.identity(n, format="csr") for n in mesh.shape]
    mats[mu] = _diff_matrix_1d(mesh.shape[mu], mesh.spacing[mu], mesh.order)
    out = mats[0]
    for M in mats[1:]:
        out = sps.kron(out, M, format="csr")
    return out


def d_matrix(mesh: Mesh, p: int) -> sps.csr_matrix:
    """Sparse exterior derivative on flattened p-cochains (component-major)."""
    N = mesh.size
    src = {I: i for i, I in enumerate(multi_indices(mesh.m, p))}
    tgt = multi_indices(mesh.m, p + 1)
    D = [_diff_matrix(mesh, mu) for mu in range(mesh.m)]
    blocks = [[None] * len(src) for _ in tgt]
    for a, J in enumerate(tgt):
        for r, mu in enumerate(J):
            I = J[:r] + J[r + 1 :]
            blocks[a][src[I]] = D[mu] if r % 2 == 0 else -D[mu]
    for a in range(len(tgt)):
        for b in range(len(src)):
            if blocks[a][b] is None:
                blocks[a][b] = sps.csr_matrix((N, N))
    return sps.bmat(blocks, format="csr")


def _pointwise_block_matrix(mesh: Mesh, coef: np.ndarray) -> sps.csr_matrix:
    """Block matrix with per-vertex coefficients coef[a, b, *grid]."""
    na, nb = coef.shape[:2]
    blocks = [[sps.diags(mesh.full(coef[a, b]).ravel()) for b in range(nb)] for a in range(na)]
    return sps.bmat(blocks, format="csr")


def star_matrix(mesh: Mesh, p: int) -> sps.csr_matrix:
    m = mesh.m
    G = mesh.form_metric(p)
    src = {I: i for i, I in enumerate(multi_indices(m, p))}
    tgt = multi_indices(m, m - p)
    coef = np.zeros((len(tgt), len(src)) + np.broadcast_shapes(G.shape[2:], np.shape(mesh.density)))
    for a, K in enumerate(tgt):
        I = tuple(i for i in range(m) if i not in K)
        coef[a] = _perm_sign(I + K) * mesh.density * G[src[I]]
    return _pointwise_block_matrix(mesh, coef)


def mass_matrix(mesh: Mesh, p: int) -> sps.csr_matrix:
    G = mesh.form_metric(p)
    coef = G * mesh.vol
    return _pointwise_block_matrix(mesh, coef)


def codiff_matrix(mesh: Mesh, p: int) -> sps.csr_matrix:
    """delta on p-forms as a sparse matrix, p >= 1."""
    m = mesh.m
    sign = (-1) ** (m + m * p + 1)
    return sign * (star_matrix(mesh, m - p + 1) @ d_matrix(mesh, m - p) @ star_matrix(mesh, p))


@dataclass
class LaplacianSpectra:
    """Eigenvalues of the form Laplacian and its two halves.

    ``laplacian``: Delta_p on p-forms. ``delta_d_lower``: delta d on
    (p-1)-forms. ``d_delta_upper``: d delta on (p+1)-forms. ``delta_d`` and
    ``d_delta``: the two halves acting on p-forms themselves.
    """

    p: int
    laplacian: np.ndarray
    delta_d: np.ndarray
    d_delta: np.ndarray
    delta_d_lower: np.ndarray | None
    d_delta_upper: np.ndarray | None
    asymmetry: float

    def union_lower_upper(self) -> np.ndarray:
        parts = [x for x in (self.delta_d_lower, self.d_delta_upper) if x is not None]
        return np.sort(np.concatenate(parts)) if parts else np.zeros(0)


def _sym_eigs(mesh: Mesh, p: int, A: sps.spmatrix, count: int | None):
    """Eigenvalues of A, self-adjoint for the p-form mass matrix on flat meshes.

    When the measured asymmetry exceeds SYMMETRY_TOL (curved meshes whose
    density changes sign) the general eigenproblem of A itself is solved and
    real parts are returned, so exact kernels such as constants survive.
    """
    M = mass_matrix(mesh, p)
    K = (M @ A).tocsr()
    asym = abs(K - K.T).max() if K.nnz else 0.0
    scale = max(abs(K).max() if K.nnz else 0.0, 1e-300)
    rel = float(asym / scale)
    n = K.shape[0]
    dense = n <= DENSE_LIMIT or count is None or count >= n - 1
    if rel > SYMMETRY_TOL:
        if dense:
            w = np.real(scipy.linalg.eigvals(A.toarray()))
        else:
            w = np.real(scipy.sparse.linalg.eigs(A.tocsc(), k=count, sigma=-1e-3, return_eigenvectors=False))
    else:
        K = 0.5 * (K + K.T)
        if dense:
            w = scipy.linalg.eigh(K.toarray(), M.toarray(), eigvals_only=True)
        else:
            w = scipy.sparse.linalg.eigsh(K.tocsc(), k=count, M=M.tocsc(), sigma=-1e-3, which="LM", return_eigenvectors=False)
    w = np.sort(w)
    if count is not None:
        w = w[:count]
    return w, rel


def laplacian_spectrum(mesh: Mesh, p: int, count: int | None = None) -> LaplacianSpectra:
    m = mesh.m
    if not 0 <= p <= m:
        raise DegreeError(f"degree {p} outside 0..{m}")
    for q in (p - 1, p, p + 1):
        if 0 <= q <= m and math.comb(m, q) * mesh.size > MAX_UNKNOWNS:
            raise FeasibilityError(
                f"{math.comb(m, q) * mesh.size} unknowns exceed the cap of {MAX_UNKNOWNS}"
            )
    N = mesh.size

    def zero(q):
        c = math.comb(m, q) * N
        return sps.csr_matrix((c, c))

    dd = codiff_matrix(mesh, p + 1) @ d_matrix(mesh, p) if p < m else zero(p)
    ddl = d_matrix(mesh, p - 1) @ codiff_matrix(mesh, p) if p > 0 else zero(p)
    asym = 0.0
    lap, a1 = _sym_eigs(mesh, p, dd + ddl, count)
    w_dd, a2 = _sym_eigs(mesh, p, dd, count)
    w_ddl, a3 = _sym_eigs(mesh, p, ddl, count)
    asym = max(a1, a2, a3)
    lower = upper = None
    if p > 0:
        lower, a4 = _sym_eigs(mesh, p - 1, codiff_matrix(mesh, p) @ d_matrix(mesh, p - 1), count)
        asym = max(asym, a4)
    if p < m:
        upper, a5 = _sym_eigs(mesh, p + 1, d_matrix(mesh, p) @ codiff_matrix(mesh, p + 1), count)
        asym = max(asym, a5)
    return LaplacianSpectra(p, lap, w_dd, w_ddl, lower, upper, asym)


def distinct_values(values, tol: float = 1e-8) -> np.ndarray:
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        return v
    keep = [v[0]]
    for x in v[1:]:
        if x - keep[-1] > tol:
            keep.append(x)
    return np.array(keep)


def set_gap(a, b, tol: float = 1e-8) -> float:
    """Largest distance from a distinct value of one spectrum to the other.

    Zero (up to round-off) exactly when the two spectra agree as sets.
    """
    da = distinct_values(a, tol)
    db = distinct_values(b, tol)
    if da.size == 0 or db.size == 0:
        return 0.0 if da.size == db.size else math.inf

    def one_way(x, y):
        pos = np.clip(np.searchsorted(y, x), 1, len(y) - 1) if len(y) > 1 else np.zeros(len(x), int)
        cand = np.minimum(np.abs(x - y[pos]), np.abs(x - y[np.maximum(pos - 1, 0)]))
        return float(np.max(cand))

    return max(one_way(da, db), one_way(db, da))


def scalar_laplacian_oracle(mesh: Mesh) -> np.ndarray:
    """Fourier-diagonalized spectrum of delta d on 0-forms for a flat torus."""
    if not mesh.is_flat:
        raise ValueError("Fourier oracle needs a flat torus")
    parts = []
    for n, h in zip(mesh.shape, mesh.spacing):
        th = 2 * np.pi * np.arange(n) / n
        parts.append((stencil_symbol(th, mesh.order) / h) ** 2)
    total = parts[0]
    for q in parts[1:]:
        total = np.add.outer(total, q)
    return np.sort(total.ravel())
