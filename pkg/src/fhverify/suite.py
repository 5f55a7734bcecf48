"""Verification tasks shared by the command-line runner.

Each task takes a parameter mapping and a random generator and returns a
TaskResult: numeric results, CSV tables and the list of failed assertions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import dec, field_energy as fe, hopf_spectra as hs, ode_profile as ode

ROUNDOFF_FLOOR = 1e-12


@dataclass
class TaskResult:
    name: str
    results: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def check(self, ok: bool, message: str):
        if not ok:
            self.failures.append(message)
        return ok


def observed_order(coarse: float, fine: float, ratio: float = 2.0) -> float:
    """log(coarse / fine) / log(ratio); inf when both are at round-off."""
    if coarse <= ROUNDOFF_FLOOR and fine <= ROUNDOFF_FLOOR:
        return math.inf
    if fine <= 0:
        return math.inf
    return math.log(coarse / fine) / math.log(ratio)


# ---------------------------------------------------------------- spectra


def run_spectrum(p: dict, rng=None) -> TaskResult:
    out = TaskResult("spectrum")
    tol = p["tolerance"]
    reports = []
    for n in range(1, p["n_max"] + 1):
        rep = hs.block_spectrum(hs.hessian_block(n))
        reports.append(rep)
        out.check(rep.max_abs_deviation <= tol, f"n={n}: deviation {rep.max_abs_deviation:.3e} > {tol:g}")
        out.check(min(rep.eigenvalues) >= -1e-12, f"n={n}: negative eigenvalue {min(rep.eigenvalues):.3e}")
    out.results["reports"] = [r.to_dict() for r in reports]
    out.results["max_abs_deviation"] = max(r.max_abs_deviation for r in reports)
    out.tables["spectrum"] = hs.reports_to_csv(reports)
    return out


def run_ward(p: dict, rng=None) -> TaskResult:
    out = TaskResult("ward")
    tol = p["tolerance"]
    alphas = np.linspace(p["alpha_lo"], p["alpha_hi"], p["alpha_points"])
    rows = ["alpha,min_eigenvalue"]
    worst = 0.0
    reports = []
    for a in alphas:
        rep = hs.block_spectrum(hs.ward_block(float(a)))
        reports.append(rep.to_dict())
        worst = max(worst, rep.max_abs_deviation)
        rows.append(f"{a:.15g},{rep.eigenvalues[0]:.15g}")
    out.check(worst <= tol, f"Ward eigenvalue deviation {worst:.3e} > {tol:g}")
    out.results.update(reports=reports, max_abs_deviation=worst)
    out.tables["ward"] = "\n".join(rows) + "\n"
    return out


def run_threshold(p: dict, rng=None) -> TaskResult:
    out = TaskResult("threshold")
    try:
        a = hs.stability_threshold(p["lo"], p["hi"], p["tol"])
    except hs.BracketError as exc:
        out.check(False, str(exc))
        return out
    out.results["alpha_star"] = a
    out.check(abs(a - 1.0) <= p["tol"], f"alpha_star {a!r} differs from 1 by more than {p['tol']:g}")
    return out


# ---------------------------------------------------------------- energies


def run_energy(p: dict, rng=None) -> TaskResult:
    out = TaskResult("energy")
    rel = p["energy_rel_tol"]
    t2 = dec.flat_torus(2, p["torus_size"])
    e_id = fe.energy(fe.identity_torus(t2))
    e_lin = fe.energy(fe.torus_linear(t2, [[2, 0], [0, 1]]))
    out.check(abs(e_id - 0.5) <= 1e-13, f"identity energy {e_id!r} != 0.5")
    out.check(abs(e_lin - 2.0) <= 1e-13, f"linear-map energy {e_lin!r} != 2")
    target = 8 * math.pi**2
    e_hopf = fe.energy(fe.hopf_map(dec.su2_euler(p["hopf_size"])))
    s = p["product_size"]
    e_proj = fe.energy(fe.sphere_projection(dec.sphere_product((2 * s, s, 2 * s, s))))
    for name, val in (("hopf", e_hopf), ("projection", e_proj)):
        out.check(abs(val / target - 1) <= rel, f"{name} energy {val:.6f} not within {rel:g} of 8 pi^2")
    out.results.update(
        identity_t2=e_id,
        linear_t2=e_lin,
        hopf=e_hopf,
        hopf_rel_err=e_hopf / target - 1,
        projection=e_proj,
        projection_rel_err=e_proj / target - 1,
        target="8 pi^2",
    )
    return out


def _critical_cases(p: dict):
    a, b = p["torus_sizes"]
    yield "identity_t2", lambda n: fe.identity_torus(dec.flat_torus(2, n)), (a, b)
    yield "identity_t4", lambda n: fe.identity_torus(dec.flat_torus(4, n)), (8, 16)
    yield "linear_t2", lambda n: fe.torus_linear(dec.flat_torus(2, n), [[2, 1], [1, 3]]), (a, b)
    s, t = p["product_sizes"]
    yield "projection_s2s2", lambda n: fe.sphere_projection(dec.sphere_product((2 * n, n, 2 * n, n))), (s, t)
    h, k = p["hopf_sizes"]
    yield "hopf", lambda n: fe.hopf_map(dec.su2_euler(n)), (h, k)


def run_residual(p: dict, rng=None) -> TaskResult:
    out = TaskResult("residual")
    rows = ["map,size,h,residual_norm,threshold"]
    for name, build, sizes in _critical_cases(p):
        res = []
        for n in sizes:
            phi = build(n)
            r = fe.el_residual(phi, p["critical_c"])
            res.append((phi, r))
            rows.append(f"{name},{n},{phi.mesh.h:.15g},{r.norm:.15g},{r.threshold:.15g}")
        (phi0, r0), (phi1, r1) = res
        ratio = phi0.mesh.h / phi1.mesh.h
        order = observed_order(r0.norm, r1.norm, ratio)
        out.results[name] = {
            "norms": [r0.norm, r1.norm],
            "thresholds": [r0.threshold, r1.threshold],
            "observed_order": "roundoff" if math.isinf(order) else order,
        }
        out.check(order >= 1.9, f"{name}: observed order {order:.3f} < 1.9")
        out.check(r1.norm <= r1.threshold, f"{name}: residual {r1.norm:.3e} above {r1.threshold:.3e}")
        if name == "hopf":
            # Z should approach -theta3
            errs = []
            for ph, r in res:
                Zf = dec.frame_components(ph.mesh, r.Z)
                errs.append(float(max(np.max(np.abs(Zf[0])), np.max(np.abs(Zf[1])), np.max(np.abs(Zf[2] + 1)))))
            out.results[name]["Z_minus_theta3_error"] = errs
            out.results[name]["Z_order"] = observed_order(errs[0], errs[1], ratio)
    out.tables["residual"] = "\n".join(rows) + "\n"
    return out


def run_conformal(p: dict, rng) -> TaskResult:
    out = TaskResult("conformal")
    mesh = dec.flat_torus(4, p["size"])
    gaps = []
    for i in range(p["n_random"]):
        phi = fe.random_torus_map(mesh, rng) if i % 2 else fe.random_sphere_map(mesh, rng, blocks=2)
        lam = 1.0 + 0.5 * np.tanh(fe.random_fourier(mesh, rng, 1, kmax=1)[0]) ** 2 + 0.2
        gaps.append(fe.conformal_invariance_check(phi, lam).rel_gap)
    worst = max(gaps)
    out.results.update(rel_gaps=gaps, max_rel_gap=worst)
    out.check(worst <= p["rel_tol"], f"conformal gap {worst:.3e} > {p['rel_tol']:g}")
    return out


def run_bounds(p: dict, rng) -> TaskResult:
    out = TaskResult("bounds")
    m2 = dec.flat_torus(2, p["size_2d"])
    m4 = dec.flat_torus(4, p["size_4d"])
    g2 = []
    for i in range(p["n_random_2d"]):
        phi = fe.random_sphere_map(m2, rng) if i % 2 else fe.random_torus_map(m2, rng)
        g2.append(fe.bound_2d(phi).gap)
    g4 = []
    for i in range(p["n_random_4d"]):
        phi = fe.random_sphere_map(m4, rng, blocks=2) if i % 2 else fe.random_torus_map(m4, rng)
        g4.append(fe.bound_4d(phi).gap)
    out.check(min(g2) >= -1e-10, f"2d bound violated: min gap {min(g2):.3e}")
    out.check(min(g4) >= -1e-10, f"4d bound violated: min gap {min(g4):.3e}")
    eq = {}
    for name, L in (("identity_t2", np.eye(2)), ("diag_2_1", np.diag([2, 1])), ("shear_2_1_1_3", [[2, 1], [1, 3]])):
        eq[name] = fe.bound_2d(fe.torus_linear(m2, L)).gap
    for name, L in (("identity_t4", np.eye(4)), ("diag_2_1_2_1", np.diag([2, 1, 2, 1]))):
        eq[name] = fe.bound_4d(fe.torus_linear(m4, L)).gap
    for name, gap in eq.items():
        out.check(abs(gap) <= 1e-10, f"{name}: equality gap {gap:.3e}")
    diag2211 = fe.bound_4d(fe.torus_linear(m4, np.diag([2, 2, 1, 1])))
    out.results.update(
        min_gap_2d=min(g2),
        min_gap_4d=min(g4),
        equality_gaps=eq,
        diag_2_2_1_1={"energy": diag2211.energy, "bound": diag2211.bound, "gap": diag2211.gap, "which_side": diag2211.which_side},
    )
    return out


def run_laplacian(p: dict, rng=None) -> TaskResult:
    out = TaskResult("laplacian")
    tol = p["gap_tol"]
    for m, n in ((2, p["size_2d"]), (4, p["size_4d"])):
        mesh = dec.flat_torus(m, n)
        s = dec.laplacian_spectrum(mesh, 2)
        union = dec.set_gap(s.laplacian, s.union_lower_upper())
        refine = dec.set_gap(s.laplacian, s.delta_d_lower)
        inc = max(dec.set_gap(np.concatenate([s.delta_d, s.d_delta]), s.laplacian), 0.0)
        key = f"flat_torus_{m}d"
        out.results[key] = {
            "size": n,
            "union_gap": union,
            "delta_d_gap": refine,
            "halves_gap": inc,
            "distinct_eigenvalues": len(dec.distinct_values(s.laplacian)),
            "asymmetry": s.asymmetry,
        }
        if m == 2:
            out.results[key]["fourier_oracle_gap"] = dec.set_gap(s.laplacian, dec.scalar_laplacian_oracle(mesh))
        out.check(union <= tol, f"{key}: spectrum of Delta_2 vs union gap {union:.3e}")
        out.check(refine <= tol, f"{key}: spectrum of Delta_2 vs delta d gap {refine:.3e}")
    return out


# ---------------------------------------------------------------- variations


def run_variation(p: dict, rng) -> TaskResult:
    out = TaskResult("variation")
    n = p["size"]
    rel = []
    for i in range(p["n_random"]):
        mesh = dec.flat_torus(2, n)
        phi = fe.random_sphere_map(mesh, rng) if i % 2 == 0 else fe.random_torus_map(mesh, rng)
        X = fe.random_variation(phi, rng, kmax=1)
        rel.append(fe.first_variation_check(phi, X, p["eps"]).rel_gap)
    out.check(max(rel) <= p["rel_tol"], f"first variation gap {max(rel):.3e} > {p['rel_tol']:g}")
    hess = []
    kernel = []
    mesh = dec.flat_torus(2, n)
    ident = fe.identity_torus(mesh)
    for i in range(p["n_hessian"]):
        Y = fe.random_variation(ident, rng, kmax=2)
        hv = fe.hessian_quadratic(ident, Y)
        fd = fe.second_difference(ident, Y, 1e-3)
        hess.append(abs(hv.value - fd) / max(abs(fd), 1e-12))
        H = fe.random_fourier(mesh, rng, 1, kmax=2)[0]
        Ysym = np.stack([mesh.diff(H, 1), -mesh.diff(H, 0)])
        kernel.append(abs(fe.hessian_quadratic(ident, Ysym).value))
    out.check(max(hess) <= p["rel_tol"], f"Hessian vs second difference {max(hess):.3e}")
    out.check(max(kernel) <= 1e-10, f"symplectic kernel value {max(kernel):.3e}")
    out.results.update(first_variation_max_rel_gap=max(rel), hessian_max_rel_gap=max(hess), kernel_max=max(kernel))
    return out


def run_peter_weyl(p: dict, rng=None) -> TaskResult:
    out = TaskResult("peter_weyl")
    mesh = dec.su2_euler(p["size"])
    rows = []
    for n, k, l in p["cases"]:
        r = fe.peter_weyl_check(n, k, l, mesh=mesh)
        ok = r.abs_error <= (p["rel_tol"] * r.predicted if r.predicted else 1e-2)
        out.check(ok, f"(n,k,l)=({n},{k},{l}): estimate {r.estimate:.6f} vs {r.predicted}")
        rows.append({"n": n, "k": k, "l": l, "estimate": r.estimate, "predicted": r.predicted})
    out.results["cases"] = rows
    return out


# ---------------------------------------------------------------- ODE / flow


def run_ode(p: dict, rng=None) -> TaskResult:
    out = TaskResult("ode")
    if p.get("glued", False):
        e = ode.glued_energy(p["t_small"], p["t_large"], p["n_points"])
        err = abs(e - math.pi**2)
        out.results.update(energy=e, target="pi^2", abs_err=err)
        out.check(err <= p["energy_tol"], f"glued energy error {err:.3e}")
        t = np.linspace(p["t_small"], p["t_large"], 200)
        a, _ = ode.exact_profile(t)
        out.tables["profile"] = "t,alpha\n" + "".join(f"{x:.15g},{y:.15g}\n" for x, y in zip(t, a))
        return out
    prof = ode.integrate_el(1.0, -1.0, math.log(2), p["t_end"], p["h_step"])
    a, _ = ode.exact_profile(prof.t_grid)
    err = float(np.max(np.abs(prof.alpha - a)))
    drift = float(np.max(np.abs(ode.conserved_h(prof.alpha, prof.alpha_dot))))
    out.results.update(max_error=err, h_drift=drift)
    out.check(err <= p["match_tol"], f"integrator error {err:.3e}")
    out.check(drift <= p["drift_tol"], f"H drift {drift:.3e}")
    out.tables["profile"] = "t,alpha\n" + "".join(
        f"{x:.15g},{y:.15g}\n" for x, y in zip(prof.t_grid[::50], prof.alpha[::50])
    )
    return out


def run_flow(p: dict, rng) -> TaskResult:
    out = TaskResult("flow")
    mesh = dec.flat_torus(2, p["size"])
    if p["start"] == "random_sphere":
        phi = fe.random_sphere_map(mesh, rng)
    else:
        base = fe.identity_torus(mesh)
        x, y = mesh.coords()
        bump = p["perturbation"] * np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y) + 0 * x
        phi = fe.DiscreteMap(mesh, base.target, base.values + np.stack([bump, np.zeros_like(bump)]))
    res = fe.gradient_flow(phi, p["steps"], p.get("dt"))
    E = [s.energy for s in res.trajectory]
    out.check(all(b <= a for a, b in zip(E, E[1:])), "energy increased along the flow")
    out.results.update(
        initial_energy=E[0], final_energy=E[-1], steps=len(E) - 1, converged=res.converged,
        final_residual=res.trajectory[-1].residual_norm,
    )
    out.tables["flow"] = "step,energy,residual_norm\n" + "".join(
        f"{s.step},{s.energy:.15g},{s.residual_norm:.15g}\n" for s in res.trajectory
    )
    return out
