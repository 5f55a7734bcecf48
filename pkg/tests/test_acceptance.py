"""Acceptance battery: one test per criterion, each reporting a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``.
"""
import math

import numpy as np
import pytest

from fhverify import dec, field_energy as fe, hopf_spectra as hs, ode_profile as ode
from fhverify.su2 import build_irrep

EIGHT_PI2 = 8 * math.pi**2
ROUNDOFF = 1e-12


def _hermitian_eigs(block):
    # independent of the package's solver: similarity by sqrt(gram (x) Id2), then eigvalsh
    s = np.sqrt(np.repeat(build_irrep(block.n).gram_diag, 2))
    M = s[:, None] * block.matrix / s[None, :]
    return np.sort(np.linalg.eigvalsh(0.5 * (M + M.conj().T)))


def test_hopf_hessian_spectrum(acceptance):
    worst, lowest = 0.0, math.inf
    for n in range(0, 21):
        ev = _hermitian_eigs(hs.hessian_block(n))
        expected = sorted([0.25 * (n - 2 * k) ** 2 for k in range(n + 1)] + [0.25 * (n * n + 2 * n)] * (n + 1))
        worst = max(worst, float(np.max(np.abs(ev - expected))))
        lowest = min(lowest, float(ev[0]))
    ok = worst <= 1e-10 and lowest >= -1e-12
    acceptance(1, "Hopf Hessian spectrum n<=20", ok, f"max deviation {worst:.2e}, min eigenvalue {lowest:.2e}")
    assert ok


def test_ward_threshold(acceptance):
    worst = 0.0
    for alpha in np.linspace(0, 3, 13):
        ev = _hermitian_eigs(hs.ward_block(alpha))
        expected = sorted([(3 * alpha + 7) / 4] * 2 + [(alpha - 1) / 4] * 2)
        worst = max(worst, float(np.max(np.abs(ev - expected))))
    star = hs.stability_threshold(0.0, 2.0, 1e-6)
    ok = worst <= 1e-12 and abs(star - 1) <= 1e-6
    acceptance(2, "Ward block and threshold", ok, f"max deviation {worst:.2e}, alpha* = {star:.9f}")
    assert ok


def test_glued_solution_energy(acceptance):
    e = ode.glued_energy(1e-6, 30, 100_000)
    prof = ode.integrate_el(1.0, -1.0, math.log(2), 10.0, 1e-3)
    exact = (np.exp(prof.t_grid) - 1) ** -0.5
    match = float(np.max(np.abs(prof.alpha - exact)))
    drift = float(np.max(np.abs(ode.conserved_h(prof.alpha, prof.alpha_dot) - ode.conserved_h(1.0, -1.0))))
    ok = abs(e - math.pi**2) <= 1e-3 and match <= 1e-8 and drift <= 1e-10
    acceptance(3, "glued solution energy", ok, f"E - pi^2 = {e - math.pi**2:.2e}, profile error {match:.2e}, H drift {drift:.2e}")
    assert ok


def test_energy_values(acceptance):
    t2 = dec.flat_torus(2, 32)
    e_id = fe.energy(fe.identity_torus(t2))
    e_lin = fe.energy(fe.torus_linear(t2, [[2, 0], [0, 1]]))
    e_hopf = fe.energy(fe.hopf_map(dec.su2_euler(48)))
    e_proj = fe.energy(fe.sphere_projection(dec.sphere_product((64, 32, 64, 32))))
    r_hopf, r_proj = e_hopf / EIGHT_PI2 - 1, e_proj / EIGHT_PI2 - 1
    ok = abs(e_id - 0.5) <= 1e-13 and abs(e_lin - 2) <= 1e-13 and abs(r_hopf) <= 5e-3 and abs(r_proj) <= 5e-3
    acceptance(
        4, "energy values", ok,
        f"identity {e_id:.15g}, det 2 map {e_lin:.15g}, Hopf rel err {r_hopf:+.2e}, projection rel err {r_proj:+.2e}",
    )
    assert ok


def _order(coarse, fine, ratio):
    if coarse <= ROUNDOFF and fine <= ROUNDOFF:
        return math.inf
    return math.log(coarse / fine) / math.log(ratio)


def test_criticality_residuals(acceptance):
    cases = {
        "identity T2": lambda n: fe.identity_torus(dec.flat_torus(2, n)),
        "identity T4": lambda n: fe.identity_torus(dec.flat_torus(4, n)),
        "linear T2": lambda n: fe.torus_linear(dec.flat_torus(2, n), [[2, 1], [1, 3]]),
        "S2xS2 projection": lambda n: fe.sphere_projection(dec.sphere_product((2 * n, n, 2 * n, n))),
        "Hopf": lambda n: fe.hopf_map(dec.su2_euler(n)),
    }
    sizes = {"identity T4": (8, 16), "Hopf": (24, 48)}
    ok, parts = True, []
    for name, build in cases.items():
        a, b = sizes.get(name, (16, 32))
        coarse, fine = build(a), build(b)
        rc, rf = fe.el_residual(coarse).norm, fe.el_residual(fine).norm
        order = _order(rc, rf, coarse.mesh.h / fine.mesh.h)
        good = order >= 1.9 and rf <= 10 * fine.mesh.h**2
        ok &= good
        parts.append(f"{name} {rc:.1e}->{rf:.1e} (order {'roundoff' if math.isinf(order) else f'{order:.2f}'})")
    # every residual above sits at round-off, so also report the rate at which Z approaches -theta3
    zerr = []
    for n in (24, 48):
        phi = cases["Hopf"](n)
        Zf = dec.frame_components(phi.mesh, fe.el_residual(phi).Z)
        zerr.append(float(np.max(np.abs(Zf - np.array([0, 0, -1]).reshape(3, 1, 1, 1)))))
    parts.append(f"Hopf Z + theta3 {zerr[0]:.1e}->{zerr[1]:.1e} (order {math.log2(zerr[0] / zerr[1]):.2f})")
    acceptance(5, "criticality residuals", ok, "; ".join(parts))
    assert ok


def test_conformal_invariance(acceptance):
    rng = np.random.default_rng(5)
    mesh = dec.flat_torus(4, 8)
    gaps = []
    for i in range(10):
        phi = fe.random_sphere_map(mesh, rng, blocks=2) if i % 2 else fe.random_torus_map(mesh, rng)
        lam = np.exp(0.4 * fe.random_fourier(mesh, rng, 1, kmax=1)[0])
        e_g = fe.energy(phi)
        e_s = fe.energy(phi.on_mesh(mesh.with_conformal_factor(lam)))
        gaps.append(abs(e_g - e_s) / e_g)
    ok = max(gaps) <= 1e-12
    acceptance(6, "conformal invariance (4d)", ok, f"max relative gap {max(gaps):.2e} over 10 fields")
    assert ok


def test_topological_bounds(acceptance):
    rng = np.random.default_rng(6)
    m2, m4 = dec.flat_torus(2, 32), dec.flat_torus(4, 8)
    g2 = [fe.bound_2d(fe.random_sphere_map(m2, rng) if i % 2 else fe.random_torus_map(m2, rng)).gap for i in range(100)]
    g4 = [fe.bound_4d(fe.random_sphere_map(m4, rng, blocks=2) if i % 2 else fe.random_torus_map(m4, rng)).gap for i in range(50)]
    eq = [fe.bound_2d(fe.torus_linear(m2, L)).gap for L in (np.eye(2), np.diag([2, 1]), [[2, 1], [1, 3]], [[0, -1], [1, 0]])]
    eq.append(fe.bound_4d(fe.identity_torus(m4)).gap)
    ok = min(g2) >= -1e-10 and min(g4) >= -1e-10 and max(abs(g) for g in eq) <= 1e-10
    acceptance(
        7, "energy lower bounds", ok,
        f"min gap 2d {min(g2):.2e}, 4d {min(g4):.2e}; max equality gap {max(abs(g) for g in eq):.2e}",
    )
    assert ok


def test_laplacian_spectra(acceptance):
    ok, parts = True, []
    for m, n in ((2, 8), (4, 4)):
        s = dec.laplacian_spectrum(dec.flat_torus(m, n), 2)
        union = dec.set_gap(s.laplacian, s.union_lower_upper())
        lower = dec.set_gap(s.laplacian, s.delta_d_lower)
        ok &= union <= 1e-9 and lower <= 1e-9
        parts.append(f"T{m} {n}^{m}: union gap {union:.1e}, delta-d gap {lower:.1e}")
    acceptance(8, "form Laplacian spectra", ok, "; ".join(parts))
    assert ok


def test_variation_consistency(acceptance):
    rng = np.random.default_rng(9)
    mesh = dec.flat_torus(2, 32)
    first = []
    for i in range(50):
        phi = fe.random_sphere_map(mesh, rng) if i % 2 == 0 else fe.random_torus_map(mesh, rng)
        X = fe.random_variation(phi, rng, kmax=1)
        eps = 1e-4
        fd = (fe.energy(phi.perturbed(X, eps)) - fe.energy(phi.perturbed(X, -eps))) / (2 * eps)
        first.append(abs(fd - fe.first_variation_formula(phi, X)) / (abs(fd) + 1e-12))
    ident = fe.identity_torus(mesh)
    second, kernel = [], []
    for _ in range(10):
        Y = fe.random_variation(ident, rng, kmax=2)
        t = 1e-3
        fd2 = (fe.energy(ident.perturbed(Y, t)) - 2 * fe.energy(ident) + fe.energy(ident.perturbed(Y, -t))) / t**2
        second.append(abs(fe.hessian_quadratic(ident, Y).value - fd2) / abs(fd2))
        H = fe.random_fourier(mesh, rng, 1, kmax=2)[0]
        kernel.append(abs(fe.hessian_quadratic(ident, np.stack([mesh.diff(H, 1), -mesh.diff(H, 0)])).value))
    ok = max(first) <= 1e-3 and max(second) <= 1e-3 and max(kernel) <= 1e-10
    acceptance(
        9, "first/second variation", ok,
        f"first variation max rel gap {max(first):.2e}, Hessian max rel gap {max(second):.2e}, kernel {max(kernel):.1e}",
    )
    assert ok


def test_peter_weyl(acceptance):
    mesh = dec.su2_euler(48)
    ok, parts = True, []
    for n, k in ((1, 0), (2, 1), (3, 0)):
        r = fe.peter_weyl_check(n, k, 0, mesh=mesh)
        good = r.abs_error <= (0.01 * r.predicted if r.predicted else 0.01)
        ok &= good
        parts.append(f"(n,k)=({n},{k}) {r.estimate:.6f} vs {r.predicted}")
    acceptance(10, "Peter-Weyl Rayleigh quotients on 48^3", ok, "; ".join(parts))
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
