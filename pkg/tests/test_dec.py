import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fhverify import dec, su2
from fhverify.dec import Cochain
from fhverify.field_energy import random_fourier


def random_cochain(mesh, p, rng, kmax=1):
    return Cochain(mesh, p, random_fourier(mesh, rng, math.comb(mesh.m, p), kmax=kmax))


MESHES = {
    "t2": lambda: dec.flat_torus(2, 8),
    "t3": lambda: dec.flat_torus(3, (6, 5, 4)),
    "t4": lambda: dec.flat_torus(4, 4),
    "su2": lambda: dec.su2_euler(8),
    "s2s2": lambda: dec.sphere_product((8, 6, 8, 6)),
}


def test_mesh_validation():
    with pytest.raises(ValueError):
        dec.flat_torus(2, 3)
    with pytest.raises(ValueError):
        dec.flat_torus(2, 8, order=3)
    with pytest.raises(ValueError):
        dec.su2_euler(6)
    with pytest.raises(ValueError):
        dec.sphere_product((5, 4, 6, 4))
    mesh = dec.flat_torus(2, (8, 16))
    assert mesh.cell_volume == pytest.approx(1 / 128)
    assert np.allclose(mesh.metric[..., 0, 0], np.eye(2))
    assert mesh.total_volume() == pytest.approx(1.0, abs=1e-14)


def test_curved_volumes():
    assert dec.su2_euler(48).total_volume() / (16 * math.pi**2) - 1 == pytest.approx(0, abs=5e-3)
    s = dec.sphere_product((64, 32, 64, 32)).total_volume()
    assert s / (16 * math.pi**2) - 1 == pytest.approx(0, abs=1e-3)


@pytest.mark.parametrize("order", dec.SUPPORTED_ORDERS)
def test_stencil_accuracy_and_symbol(order):
    w = dict(dec._central_weights(order))
    # exact on polynomials up to degree order
    for k in range(1, order + 1):
        assert sum(wt * off**k for off, wt in w.items()) == pytest.approx(1.0 if k == 1 else 0.0, abs=1e-12)
    th = np.linspace(0, 0.2, 5)
    assert np.allclose(dec.stencil_symbol(th, order), th, atol=th ** (order + 1) + 1e-15)


@pytest.mark.parametrize("name", list(MESHES))
def test_d_squared_vanishes(name, rng):
    mesh = MESHES[name]()
    for p in range(mesh.m - 1):
        a = random_cochain(mesh, p, rng, kmax=2)
        assert dec.exterior_d(dec.exterior_d(a)).max_abs() <= 1e-13 * max(1.0, a.max_abs() / mesh.h**2)


def test_d_of_top_degree_raises():
    mesh = dec.flat_torus(2, 8)
    with pytest.raises(dec.DegreeError):
        dec.exterior_d(Cochain.zeros(mesh, 2))
    with pytest.raises(dec.DegreeError):
        dec.codifferential(Cochain.zeros(mesh, 0))


def test_d_trivial_examples():
    mesh = dec.flat_torus(2, 16)
    x, _ = mesh.coords()
    assert dec.exterior_d(Cochain.from_components(mesh, 0, {(): 3.0})).max_abs() == 0
    a = Cochain.from_components(mesh, 1, {(0,): np.sin(2 * np.pi * x)})
    assert dec.exterior_d(a).max_abs() == 0


@pytest.mark.parametrize("order", [2, dec.DEFAULT_ORDER])
def test_d_convergence(order):
    errs = []
    for n in (16, 32, 64):
        mesh = dec.flat_torus(2, n, order=order)
        x, y = mesh.coords()
        f = Cochain.from_components(mesh, 0, {(): np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y)})
        df = dec.exterior_d(f)
        ex = 2 * np.pi * np.cos(2 * np.pi * x) * np.sin(2 * np.pi * y)
        ey = 2 * np.pi * np.sin(2 * np.pi * x) * np.cos(2 * np.pi * y)
        errs.append(max(np.max(np.abs(df.values[0] - ex)), np.max(np.abs(df.values[1] - ey))))
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert min(orders) >= 1.9
    if order == 2:
        assert errs[-1] <= 10 * (1 / 64) ** 2 * (2 * np.pi) ** 3


def test_hodge_star_flat_4d():
    mesh = dec.flat_torus(4, 4)
    a = Cochain.from_components(mesh, 2, {(0, 1): 1.0})
    s = dec.hodge_star(a)
    assert np.array_equal(np.squeeze(s.component(2, 3)), 1.0)
    assert np.count_nonzero(s.values) == 1


@pytest.mark.parametrize("name", list(MESHES))
def test_star_star_sign(name, rng):
    mesh = MESHES[name]()
    m = mesh.m
    for p in range(m + 1):
        a = random_cochain(mesh, p, rng)
        ss = dec.hodge_star(dec.hodge_star(a))
        assert np.allclose(ss.values, (-1) ** (p * (m - p)) * a.values, atol=1e-12 * max(1, a.max_abs()))


def test_star_conformally_invariant_on_middle_forms(rng):
    mesh = dec.flat_torus(4, 4)
    lam = 1.2 + np.tanh(random_fourier(mesh, rng, 1)[0]) ** 2
    scaled = mesh.with_conformal_factor(lam)
    a = random_cochain(mesh, 2, rng)
    b = Cochain(scaled, 2, a.values)
    assert np.allclose(dec.hodge_star(a).values, dec.hodge_star(b).values, atol=1e-13)
    lhs = dec.pointwise_inner(b, b) * scaled.vol
    rhs = dec.pointwise_inner(a, a) * mesh.vol
    assert np.max(np.abs(lhs - rhs)) <= 1e-13 * np.max(np.abs(rhs))


def test_codifferential_examples():
    mesh = dec.flat_torus(2, 16)
    assert dec.codifferential(Cochain.from_components(mesh, 2, {(0, 1): 2.5})).max_abs() == 0
    errs = []
    for n in (16, 32, 64):
        mesh = dec.flat_torus(2, n, order=2)
        x, _ = mesh.coords()
        f = np.sin(2 * np.pi * x)
        dl = dec.codifferential(Cochain.from_components(mesh, 2, {(0, 1): f}))
        # delta(f dx^dy) = f_y dx - f_x dy
        errs.append(np.max(np.abs(dl.values[1] + 2 * np.pi * np.cos(2 * np.pi * x))) + np.max(np.abs(dl.values[0])))
    assert math.log2(errs[1] / errs[2]) >= 1.9


@pytest.mark.parametrize("name", ["t2", "t3", "t4"])
def test_adjointness_flat(name, rng):
    mesh = MESHES[name]()
    for p in range(mesh.m):
        a = random_cochain(mesh, p, rng, kmax=2)
        b = random_cochain(mesh, p + 1, rng, kmax=2)
        lhs = dec.l2_inner(dec.exterior_d(a), b)
        rhs = dec.l2_inner(a, dec.codifferential(b))
        assert abs(lhs - rhs) <= 1e-10 * max(abs(lhs), 1e-300) + 1e-12


def _left_invariant_form(mesh, p, coefs):
    """sum_J coefs[J] e^J for the left-invariant coframe e^i of SU(2)."""
    C = mesh.coframe
    comps = {}
    for I in dec.multi_indices(3, p):
        total = 0
        for k, J in enumerate(dec.multi_indices(3, p)):
            if p == 0:
                det = 1.0
            else:
                sub = np.stack([np.stack([C[j, mu] for mu in I]) for j in J])
                det = np.linalg.det(np.moveaxis(sub, (0, 1), (-2, -1)))
            total = total + coefs[k] * det
        comps[I] = total
    return Cochain.from_components(mesh, p, comps)


def test_adjointness_su2_converges():
    """Smooth forms on SU(2): the adjointness defect shrinks fast with refinement."""
    defects = []
    for n in (12, 24):
        mesh = dec.su2_euler(n)
        g = su2.euler_matrix(*mesh.coords())
        fns = [g[..., 0, 0].real, g[..., 0, 1].imag + 0.3, g[..., 0, 1].real, g[..., 1, 0].imag, g[..., 0, 0].imag]
        worst = 0.0
        for p in range(3):
            a = _left_invariant_form(mesh, p, fns[: math.comb(3, p)])
            b = _left_invariant_form(mesh, p + 1, fns[1 : 1 + math.comb(3, p + 1)])
            da = dec.exterior_d(a)
            gap = abs(dec.l2_inner(da, b) - dec.l2_inner(a, dec.codifferential(b)))
            worst = max(worst, gap / (dec.l2_norm(da) * dec.l2_norm(b)))
        defects.append(worst)
    assert defects[1] <= 1e-3
    assert defects[1] < defects[0] / 16


def test_l2_examples():
    t2 = dec.flat_torus(2, 8)
    dx = Cochain.from_components(t2, 1, {(0,): 1.0})
    assert dec.l2_inner(dx, dx) == pytest.approx(1.0, abs=1e-15)
    t4 = dec.flat_torus(4, 4)
    w = Cochain.from_components(t4, 2, {(0, 1): 1.0, (2, 3): 1.0})
    assert dec.l2_inner(w, w) == pytest.approx(2.0, abs=1e-14)


def test_mismatch_errors():
    a = Cochain.zeros(dec.flat_torus(2, 8), 1)
    b = Cochain.zeros(dec.flat_torus(2, 8), 1)
    with pytest.raises(dec.MeshMismatchError):
        dec.l2_inner(a, b)
    with pytest.raises(dec.MeshMismatchError):
        dec.l2_inner(a, Cochain.zeros(a.mesh, 2))
    with pytest.raises(dec.DegreeError):
        dec.wedge(Cochain.zeros(a.mesh, 2), a)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), p=st.integers(0, 2))
def test_cauchy_schwarz(seed, p):
    rng = np.random.default_rng(seed)
    mesh = dec.flat_torus(2, 4) if seed % 2 else dec.sphere_product((4, 4, 4, 4))
    a, b = random_cochain(mesh, p, rng), random_cochain(mesh, p, rng)
    assert abs(dec.l2_inner(a, b)) <= dec.l2_norm(a) * dec.l2_norm(b) * (1 + 1e-12)


def test_sharp_flat():
    mesh = dec.flat_torus(2, 8)
    dx = Cochain.from_components(mesh, 1, {(0,): 1.0})
    assert np.allclose(np.squeeze(dec.sharp(dx)), [1.0, 0.0])
    base = dec.flat_torus(2, 8)
    g = np.diag([4.0, 1.0]).reshape(2, 2, 1, 1)
    stretched = dec.Mesh("FlatTorus", base.shape, base.periods, base.offsets, g, np.full((1, 1), 2.0), np.sqrt(g))
    v = dec.sharp(Cochain.from_components(stretched, 1, {(0,): 1.0}))
    assert np.allclose(np.squeeze(v), [0.25, 0.0])


@pytest.mark.parametrize("name", ["su2", "s2s2", "t3"])
def test_sharp_flat_roundtrip(name, rng):
    mesh = MESHES[name]()
    v = random_fourier(mesh, rng, mesh.m)
    assert np.max(np.abs(dec.sharp(dec.flat(mesh, v)) - v)) <= 1e-12 * np.max(np.abs(v))


def test_selfdual_split():
    mesh = dec.flat_torus(4, 4)
    plus = Cochain.from_components(mesh, 2, {(0, 1): 1.0, (2, 3): 1.0})
    minus = Cochain.from_components(mesh, 2, {(0, 1): 1.0, (2, 3): -1.0})
    assert dec.selfdual_split(plus)[1].max_abs() == 0
    assert dec.selfdual_split(minus)[0].max_abs() == 0


def test_selfdual_pythagoras(rng):
    mesh = dec.flat_torus(4, 4)
    for _ in range(10):
        a = random_cochain(mesh, 2, rng)
        ap, am = dec.selfdual_split(a)
        assert dec.l2_inner(a, a) == pytest.approx(dec.l2_inner(ap, ap) + dec.l2_inner(am, am), rel=1e-10)
        assert np.allclose(dec.hodge_star(ap).values, ap.values)
        assert np.allclose(dec.hodge_star(am).values, -am.values)


def test_wedge_of_kahler_forms():
    mesh = dec.flat_torus(4, 4)
    w = Cochain.from_components(mesh, 2, {(0, 1): 1.0, (2, 3): 1.0})
    ww = dec.wedge(w, w)
    assert np.allclose(ww.values, 2.0)


def test_laplacian_fourier_oracle_2d():
    mesh = dec.flat_torus(2, 8)
    s = dec.laplacian_spectrum(mesh, 2)
    assert dec.set_gap(s.laplacian, dec.scalar_laplacian_oracle(mesh)) <= 1e-9
    assert s.asymmetry <= 1e-12


def test_laplacian_constants_in_kernel():
    for mesh in (dec.flat_torus(2, 6), dec.flat_torus(3, 4), dec.su2_euler((6, 8, 6))):
        s = dec.laplacian_spectrum(mesh, 0)
        assert np.min(np.abs(s.laplacian)) <= 1e-9 * max(1.0, np.max(np.abs(s.laplacian)))


def test_laplacian_inclusions_3d():
    mesh = dec.flat_torus(3, 4)
    s = dec.laplacian_spectrum(mesh, 1)
    assert dec.set_gap(s.laplacian, s.union_lower_upper()) <= 1e-9
    for half in (s.delta_d, s.d_delta):
        d = dec.distinct_values(half)
        lap = dec.distinct_values(s.laplacian)
        assert all(np.min(np.abs(lap - x)) <= 1e-8 for x in d)


def test_laplacian_feasibility_cap():
    with pytest.raises(dec.FeasibilityError):
        dec.laplacian_spectrum(dec.flat_torus(4, 10), 2)


def test_set_gap():
    assert dec.set_gap([0, 1, 1, 2], [2, 0, 1]) == 0
    assert dec.set_gap([0, 1], [0, 1.5]) == pytest.approx(0.5)
