"""Invariant suites run by ``thinsheet verify``.

Each check returns a :class:`CheckResult`; a library error raised inside a
check is reported as a failure carrying the error name, never propagated.
"""

import numpy as np
import yaml

from . import ansatz, config, effective, elastic, midsurface, prestrain, regimes, relax, symalg
from .elastic import CheckResult
from .errors import ThinSheetError
from .quadrature import ThicknessQuadrature

TOL = 1e-10


def _guard(name, fn):
    try:
        out = fn()
    except ThinSheetError as exc:
        return [CheckResult(name, False, float("inf"), f"{type(exc).__name__}: {exc}")]
    return out if isinstance(out, list) else [out]


def _result(name, violation, tol, detail=""):
    return CheckResult(name, bool(violation <= tol), float(violation), detail)


# symalg


def check_symalg(rng, n=100):
    S = symalg.sym(rng.normal(size=(n, 3, 3)))
    T = symalg.sym(rng.normal(size=(n, 3, 3)))
    v = symalg.sym3_to_vec(S)
    rt = np.abs(symalg.vec_to_sym3(v) - S).max()
    iso = np.abs(np.einsum("pi,pi->p", v, symalg.sym3_to_vec(T)) - np.einsum("pij,pij->p", S, T)).max()
    a = symalg.sym(rng.normal(size=(3, 3))) + 3 * np.eye(3)
    cong = np.abs(v @ symalg.congruence_matrix(a).T - symalg.sym3_to_vec(a @ S @ a)).max()
    return [
        _result("symalg.roundtrip", rt, TOL),
        _result("symalg.isometry", iso, TOL),
        _result("symalg.congruence", cong, TOL),
    ]


# elastic


def check_elastic(law, rng):
    return [CheckResult(f"elastic.{law.name}.{c.name}", c.passed, c.violation, c.detail) for c in elastic.check_law(law, rng)]


# relax


def check_relax(law, rng, n=50):
    q3 = elastic.hessian_at_identity(law, exact=law.q3_exact is not None)
    abar = regimes.random_spd(rng)
    rf = relax.relax(q3, abar)
    lc = relax.conjugated_operator(q3.operator, abar)
    X = symalg.sym(rng.normal(size=(n, 2, 2)))
    x = symalg.sym2_to_vec(X)
    c_opt = rf.c_of(X)
    best = np.einsum("pi,ij,pj->p", x, rf.q2.operator, x)
    # perturbing c can only increase the conjugated form
    worst = 0.0
    for _ in range(5):
        c = c_opt + rng.normal(size=c_opt.shape)
        v = x @ symalg.EMBED2.T + c @ symalg.LIFT3.T
        worst = max(worst, float(np.max(best - np.einsum("pi,ij,pj->p", v, lc, v))))
    v = x @ symalg.EMBED2.T + c_opt @ symalg.LIFT3.T
    eq = np.abs(np.einsum("pi,ij,pj->p", v, lc, v) - best).max() / max(1.0, np.abs(best).max())
    psd = -min(0.0, rf.q2.min_eigenvalue())
    return [
        _result("relax.minimality", max(worst, 0.0), 1e-10),
        _result("relax.attained", eq, 1e-10),
        _result("relax.psd", psd, 1e-12),
    ]


# effective


def _model(cfg, law, quad, points, b_fn, abar_fn):
    pr = prestrain.make_prestrain(points, quad, b_fn, abar_fn)
    q3 = elastic.q3_field(law, points, quad.nodes, exact=law.q3_exact is not None)
    return pr, q3, effective.effective_model(pr, q3)


def check_effective(cfg, law, rng, points):
    b_fn, breaks, _ = config.build_b(cfg)
    abar_fn = config.build_abar(cfg)
    quad = config.build_quad(cfg, breaks)
    pr, q3, model = _model(cfg, law, quad, points, b_fn, abar_fn)
    cert = effective.residue_certificate(model)
    out = [
        _result("effective.residue_certificate", cert.max_violation, TOL),
        _result("effective.residue_nonnegative", max(0.0, -float(model.residue.min())), 1e-12),
        _result("effective.t2_star_positive", max(0.0, -float(np.linalg.eigvalsh(model.t2_star)[:, 0].min())), 0.0),
    ]
    H = rng.normal(size=(len(points), 3))
    g = effective.target_strain(pr.abar, pr.b)
    direct, _ = midsurface.direct_density(q3, pr.abar, g, H, quad)
    closed = model.density(H)
    out.append(_result("effective.closed_vs_direct", float(np.max(np.abs(closed - direct) / np.maximum(1.0, np.abs(direct)))), 1e-8))

    # the node count must integrate the configured B exactly: compare against 2N nodes
    n = cfg.quadrature["nodes"]
    inner = [b for b in breaks if -0.5 < b < 0.5]
    fine = ThicknessQuadrature.composite(2 * n, inner) if inner else ThicknessQuadrature.gauss(2 * n)
    _, _, ref = _model(cfg, law, fine, points, b_fn, abar_fn)
    scale = max(1.0, float(np.abs(ref.t2_star).max()), float(np.abs(ref.n_star).max()))
    diff = max(
        float(np.abs(model.t2_star - ref.t2_star).max()),
        float(np.abs(model.n_star - ref.n_star).max()),
        float(np.abs(model.residue - ref.residue).max()),
    )
    out.append(_result("effective.quadrature_convergence", diff / scale, TOL, f"{n} vs {2 * n} nodes"))

    # affine-in-t prestrain is reproduced exactly with zero residue
    iso = elastic.builtin_isotropic_quadratic(1.0, 0.5)
    B1 = symalg.sym(rng.normal(size=(3, 3)))
    B0 = symalg.sym(rng.normal(size=(3, 3)))
    q16 = ThicknessQuadrature.gauss(16)
    _, _, aff = _model(cfg, iso, q16, points[:4], prestrain.linear_b(B1, B0), None)
    viol = max(float(np.abs(aff.n_star - symalg.sym2_to_vec(B1[:2, :2])).max()), float(np.abs(aff.residue).max()))
    out.append(_result("effective.affine_exactness", viol, TOL))
    return out


# midsurface


def check_midsurface(cfg, law, rng):
    quad = ThicknessQuadrature.gauss(8)
    b_fn, _, _ = config.build_b(cfg)
    out = []
    for fam in (midsurface.Plane(), midsurface.Cylinder(1.5)):
        surf = midsurface.build_surface(fam, 6, 6, analytic=True)
        pr = prestrain.make_prestrain(surf.points, quad, b_fn)
        q3 = elastic.q3_field(law, surf.points, quad.nodes, exact=law.q3_exact is not None)
        model = effective.effective_model(pr, q3)
        e, _ = midsurface.gamma_energy(surf, model)
        ed, _ = midsurface.gamma_energy_direct(surf, pr, q3)
        name = type(fam).__name__.lower()
        out.append(_result(f"midsurface.{name}.closed_vs_direct", abs(e - ed) / max(1.0, abs(ed)), 1e-8))
        R = elastic.random_rotations(rng, 1)[0]
        moved = surf.moved(R, rng.normal(size=3))
        em, _ = midsurface.gamma_energy(moved, model)
        out.append(_result(f"midsurface.{name}.rigid_invariance", abs(em - e) / max(1.0, abs(e)), 1e-12))
    cyl = midsurface.build_surface(midsurface.Cylinder(2.0), 5, 5, analytic=True)
    ii = np.abs(cyl.second_form - symalg.sym2_to_vec(np.diag([0.5, 0.0]))).max()
    out.append(_result("midsurface.cylinder_second_form", ii, TOL))
    return out


# ansatz


def check_ansatz(law, rng):
    B = symalg.sym(0.2 * rng.normal(size=(3, 3)))
    b_fn = prestrain.constant_b(B)
    fam = midsurface.Cylinder(2.0)
    curved = ansatz.curved_recovery(fam, b_fn, law.q3_exact, B[:2, :2])
    wr, cf = ansatz.wrinkled_flat_ansatz(np.diag([0.5, 0.0]), 1.0, prestrain.linear_b(B), law.q3_exact, 1e-2)
    x = midsurface.lattice(20, 20)
    return [
        _result("ansatz.curved_gradient", ansatz.gradient_check(curved, rng, 1e-2), 1e-6),
        _result("ansatz.wrinkled_gradient", ansatz.gradient_check(wr, rng, 1e-2), 1e-6),
        _result("ansatz.corrugation_identity", float(cf.residual(x).max()), 1e-12),
    ]


# regimes


def check_regimes(rng, samples):
    out = []
    cyl = max(regimes.example_cylinder(h, a).max_energy for h in (1e-1, 1e-2) for a in (0.5, 2.0))
    out.append(_result("regimes.cylinder_energy_zero", cyl, 1e-12))
    osc = regimes.example_oscillation([1e-2, 1e-3, 1e-4], 2.3, 1.2)
    out.append(_result("regimes.oscillation_energy_zero", float(osc.energy.max()), 1e-12))
    out.append(_result("regimes.oscillation_exponent", abs(osc.exponents["prestrain_l2_over_h3"] + 0.2), 0.05))
    worst = 0.0
    for _ in range(3):
        R = elastic.random_rotations(rng, 1)[0]
        A = regimes.random_spd(rng, rotation=R)
        M = regimes.random_spd(rng, rotation=R)
        worst = max(worst, regimes.nearest_rotation_gap(A, M, samples, rng).violation)
    out.append(_result("regimes.commuting_rotation_gap", worst, 1e-12))
    A, M = regimes.random_spd(rng), regimes.random_spd(rng)
    _, beat, ident = regimes.beating_rotation(A, M)
    out.append(CheckResult("regimes.noncommuting_beaten", bool(beat < ident - 1e-12), float(max(0.0, beat - ident))))
    iso = elastic.builtin_isotropic_quadratic(1.0, 0.5)
    M0 = symalg.sym(rng.normal(size=(2, 2)))

    def grad_b(x, t):
        # B_2x2 = sym grad g for g = M0 x + (0.3 x1 x2, 0), which the bilinear elements represent exactly
        B = np.zeros(np.broadcast_shapes(np.shape(x)[:-1], np.shape(t)) + (3, 3))
        B[..., :2, :2] = M0
        B[..., 0, 0] += 0.3 * x[..., 1]
        B[..., 0, 1] += 0.15 * x[..., 0]
        B[..., 1, 0] += 0.15 * x[..., 0]
        return B

    gap = regimes.restricted_gap(grad_b, lambda x, t: iso.q3_exact(), 9, 9)
    out.append(_result("regimes.gradient_gap_zero", abs(gap.gap), 1e-8))
    return out


def check_config_roundtrip(cfg):
    again = config.from_dict(yaml.safe_load(cfg.dump()))
    return CheckResult("config.roundtrip", again == cfg, 0.0 if again == cfg else 1.0)


def run_suites(cfg, rng):
    """Run every suite for ``cfg``; returns a flat list of results."""
    law = config.build_law(cfg)
    points = np.random.default_rng(cfg.seed).uniform(0, 1, (cfg.verify["instances"], 2))
    results = []
    results += _guard("config", lambda: check_config_roundtrip(cfg))
    results += _guard("symalg", lambda: check_symalg(rng))
    results += _guard(f"elastic.{law.name}", lambda: check_elastic(law, rng))
    for builtin in (elastic.builtin_dist_law(), elastic.builtin_isotropic_quadratic(1.0, 0.5)):
        if builtin.name != law.name:
            results += _guard(f"elastic.{builtin.name}", lambda b=builtin: check_elastic(b, rng))
    results += _guard("relax", lambda: check_relax(law, rng))
    results += _guard("effective", lambda: check_effective(cfg, law, rng, points))
    results += _guard("midsurface", lambda: check_midsurface(cfg, law, rng))
    results += _guard("ansatz", lambda: check_ansatz(elastic.builtin_isotropic_quadratic(1.0, 0.5), rng))
    results += _guard("regimes", lambda: check_regimes(rng, cfg.verify["samples"]))
    return results
