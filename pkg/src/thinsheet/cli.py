"""Command-line front end.

Every subcommand reads an optional YAML config, writes comma-separated tables
into ``--out`` and maps library errors onto exit codes: 0 success,
1 invariant failure, 2 config error, 3 numerical error.
"""

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__, ansatz, config, effective, elastic, midsurface, prestrain, regimes, verify
from .errors import ConfigError, InvariantFailure, ThinSheetError
from .midsurface import lattice
from .quadrature import trapezoid_weights
from .symalg import vec_to_sym2

_CHUNK = 256


# output


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def write_table(path, header, rows, cfg):
    """CSV with a ``# version, seed, config_hash`` preamble line and a header row."""
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# version={__version__}, seed={cfg.seed}, config_hash={cfg.digest()}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


# pipelines


def _setup(cfg):
    law = config.build_law(cfg)
    b_fn, breaks, _ = config.build_b(cfg)
    quad = config.build_quad(cfg, breaks)
    return law, b_fn, quad


def _reduce_points(cfg, points, law, b_fn, quad):
    """Plate model over ``points``, computed in fixed-size chunks (thread count independent)."""
    abar_fn = config.build_abar(cfg)
    exact = law.q3_exact is not None

    def work(sl):
        pts = points[sl]
        pr = prestrain.make_prestrain(pts, quad, b_fn, abar_fn)
        q3 = elastic.q3_field(law, pts, quad.nodes, exact=exact)
        return pr, q3, effective.effective_model(pr, q3)

    slices = [slice(i, i + _CHUNK) for i in range(0, len(points), _CHUNK)]
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            parts = list(pool.map(work, slices))
    else:
        parts = [work(sl) for sl in slices]
    return parts


def _concat_models(parts):
    cat = lambda f: np.concatenate([f(m) for _, _, m in parts])
    return cat(lambda m: m.points), cat(lambda m: m.t2_star), cat(lambda m: m.n_star), cat(lambda m: m.residue)


def cmd_reduce(cfg, out):
    law, b_fn, quad = _setup(cfg)
    g = cfg.grid
    points = lattice(g["n1"], g["n2"], tuple(g["lengths"]))
    w = trapezoid_weights(g["n1"], g["n2"], tuple(g["lengths"]))
    pts, t2, n_star, res = _concat_models(_reduce_points(cfg, points, law, b_fn, quad))
    iu = np.triu_indices(3)
    table = np.column_stack([pts, t2[:, iu[0], iu[1]], n_star, res])
    header = ["x1", "x2", "T11", "T12", "T13", "T22", "T23", "T33", "n1", "n2", "n3", "R"]
    files = [write_table(os.path.join(out, "reduce.csv"), header, table, cfg)]
    summary = [
        ("min_eig_T2star", float(np.linalg.eigvalsh(t2)[:, 0].min())),
        ("integral_R", float(w @ res)),
        ("min_R", float(res.min())),
        ("nodes", len(quad)),
    ]
    files.append(write_table(os.path.join(out, "reduce_summary.csv"), ["quantity", "value"], summary, cfg))
    return 0, files


def cmd_energy(cfg, out):
    law, b_fn, quad = _setup(cfg)
    surf = config.build_surface(cfg)
    tol = cfg.tolerances["isometry"]
    parts = _reduce_points(cfg, surf.points, law, b_fn, quad)
    H = surf.second_form
    closed, direct, off = [], [], 0
    for pr, q3, model in parts:
        sl = slice(off, off + len(pr.points))
        off += len(pr.points)
        closed.append(0.5 * model.density(H[sl]))
        g = effective.target_strain(pr.abar, pr.b)
        direct.append(0.5 * midsurface.direct_density(q3, pr.abar, g, H[sl], quad)[0])
    midsurface._gate(surf, tol)
    closed, direct = np.concatenate(closed), np.concatenate(direct)
    ec, ed = float(surf.weights @ closed), float(surf.weights @ direct)
    rel = abs(ec - ed) / max(abs(ed), 1e-300) if ed else abs(ec)
    files = [
        write_table(
            os.path.join(out, "energy.csv"),
            ["x1", "x2", "density_closed", "density_direct"],
            np.column_stack([surf.points, closed, direct]),
            cfg,
        ),
        write_table(
            os.path.join(out, "energy_summary.csv"),
            ["quantity", "value"],
            [("energy_closed", ec), ("energy_direct", ed), ("relative_difference", rel),
             ("isometry_residual", midsurface.isometry_residual(surf)[1])],
            cfg,
        ),
    ]
    if rel > 1e-8:
        raise InvariantFailure(f"closed form and direct minimization differ by {rel:.3e}")
    return 0, files


def _require_identity_abar(cfg, what):
    if config.build_abar(cfg) is not None:
        raise ConfigError("prestrain.abar.family", f"{what} needs abar family 'identity'")


def cmd_sweep(cfg, out):
    _require_identity_abar(cfg, "sweep")
    law, b_fn, quad = _setup(cfg)
    if law.q3_exact is None:
        raise ConfigError("law.family", "sweep needs a law with a closed-form Hessian")
    surf = config.build_surface(cfg)
    fam = config.build_family(cfg)
    parts = _reduce_points(cfg, surf.points, law, b_fn, quad)
    _, t2, n_star, res = _concat_models(parts)
    H = surf.second_form
    e = H - n_star
    dens = 0.5 * (np.einsum("pi,pij,pj->p", e, t2, e) + res)
    midsurface._gate(surf, cfg.tolerances["isometry"])
    target = float(surf.weights @ dens)

    stretch = cfg.sweep["stretch"]
    if isinstance(stretch, str):
        if stretch != "optimal":
            raise ConfigError("sweep.stretch", "expected 'optimal' or a 2x2 matrix")
        s_all = np.concatenate([m.optimal_stretch(H[i * _CHUNK : (i + 1) * _CHUNK]) for i, (_, _, m) in enumerate(parts)])
        spread = float(np.ptp(s_all, axis=0).max())
        if spread > 1e-8:
            raise ConfigError("sweep.stretch", f"optimal stretch varies over the surface ({spread:.2e}); give a constant matrix")
        s = vec_to_sym2(s_all[0])
    else:
        s = config._matrix(stretch, "sweep.stretch", (2, 2))
    deform = ansatz.curved_recovery(fam, b_fn, law.q3_exact, s)
    pfn = lambda x, t, h: np.eye(3) + h * b_fn(x, t)
    energy_at = lambda h: ansatz.energy3d(deform, pfn, law, h, surf.points, surf.weights, quad, threads=cfg.threads)[0]
    return _finish_sweep(cfg, out, "sweep", energy_at, cfg.sweep, target, {"stretch": s})


def cmd_wrinkle(cfg, out):
    _require_identity_abar(cfg, "wrinkle")
    law, b_fn, quad = _setup(cfg)
    if law.q3_exact is None:
        raise ConfigError("law.family", "wrinkle needs a law with a closed-form Hessian")
    wc = cfg.wrinkle
    s = config._matrix(wc["stretch"], "wrinkle.stretch", (2, 2))
    if cfg.surface["family"] != "plane":
        raise ConfigError("surface.family", "wrinkle needs a flat sheet")
    target = ansatz.fixed_stretch_energy(s, b_fn, law.q3_exact, quad)
    pfn = lambda x, t, h: np.eye(3) + h * b_fn(x, t)
    residuals = []

    def energy_at(h):
        deform, cf = ansatz.wrinkled_flat_ansatz(s, wc["K"], b_fn, law.q3_exact, h, wc["gamma"])
        L = ansatz.whole_period_length(cf.lam)
        lengths = (L, 1.0)
        pts = lattice(wc["n1"], wc["n2"], lengths)
        w = trapezoid_weights(wc["n1"], wc["n2"], lengths) / L
        residuals.append(float(cf.residual(pts).max()))
        return ansatz.energy3d(deform, pfn, law, h, pts, w, quad, threads=cfg.threads)[0]

    code, files = _finish_sweep(cfg, out, "wrinkle", energy_at, wc, target, {})
    if max(residuals) > 1e-12:
        raise InvariantFailure(f"corrugation identity residual {max(residuals):.3e}")
    return code, files


def _finish_sweep(cfg, out, name, energy_at, section, target, extra):
    result = ansatz.h_sweep(energy_at, section["h_list"], target)
    files = [write_table(os.path.join(out, f"{name}.csv"), ["h", "energy", "abs_error", "rel_error"], result.rows(), cfg)]
    final = float(result.rel_error[-1])
    summary = [("target", target), ("final_rel_error", final), ("rate", result.rate),
               ("monotone_tail", result.monotone_tail), ("tolerance", float(section["tolerance"]))]
    for k, v in extra.items():
        summary += [(f"{k}_{i}{j}", float(v[i, j])) for i in range(2) for j in range(2)]
    files.append(write_table(os.path.join(out, f"{name}_summary.csv"), ["quantity", "value"], summary, cfg))
    if final > section["tolerance"]:
        print(f"{name}: final relative error {final:.4g} exceeds {section['tolerance']}", file=sys.stderr)
        return 1, files
    return 0, files


def incompatible_b(x, t):
    """``B = x2^2 e1⊗e1``: its 2x2 block is not a symmetrized gradient."""
    shape = np.broadcast_shapes(np.shape(x)[:-1], np.shape(t))
    B = np.zeros(shape + (3, 3))
    B[..., 0, 0] = np.broadcast_to(np.asarray(x)[..., 1] ** 2, shape)
    return B


def cmd_regimes(cfg, out):
    rc = cfg.regimes
    rng = np.random.default_rng(cfg.seed)
    law, b_fn, quad = _setup(cfg)
    if law.q3_exact is None:
        raise ConfigError("law.family", "regimes needs a law with a closed-form Hessian")
    q3 = lambda x, t: law.q3_exact()
    files = []
    n = rc["gap_grid"]
    rows = []
    for label, fn in (("configured", b_fn), ("incompatible_x2sq", incompatible_b)):
        g = regimes.restricted_gap(fn, q3, n, n, quad=quad)
        rows.append((label, g.restricted, g.unrestricted, g.gap, g.iterations))
    files.append(write_table(os.path.join(out, "gap.csv"), ["case", "restricted", "unrestricted", "gap", "iterations"], rows, cfg))

    rows = [(r.h, r.alpha, r.max_energy, r.amplitude_top, r.prestrain_l2_over_h)
            for r in (regimes.example_cylinder(h, a) for h in rc["cylinder_h"] for a in rc["cylinder_alpha"])]
    files.append(write_table(os.path.join(out, "cylinder.csv"), ["h", "alpha", "max_energy", "amplitude_top", "prestrain_l2_over_h"], rows, cfg))

    rows = []
    for h in rc["corner_h"]:
        r = regimes.example_corner(h, rc["corner_lambda"])
        rows.append((r.h, r.radius, r.max_energy, r.sup_metric_defect, r.l1_metric_defect, r.midplane_defect, r.grad_nu_arc, r.grad_nu_discrete))
    files.append(write_table(
        os.path.join(out, "corner.csv"),
        ["h", "radius", "max_energy", "sup_metric_defect", "l1_metric_defect", "midplane_defect", "grad_nu_arc", "grad_nu_discrete"],
        rows, cfg,
    ))

    osc = regimes.example_oscillation(rc["oscillation_h"], rc["oscillation_alpha"], rc["oscillation_beta"])
    rows = list(zip(osc.h, osc.prestrain_l2, osc.extra["scaled"], osc.metric_l1, osc.energy))
    files.append(write_table(os.path.join(out, "oscillation.csv"), ["h", "prestrain_l2", "prestrain_l2_over_h3", "metric_l1", "max_energy"], rows, cfg))
    summary = [(k, v) for k, v in osc.exponents.items()] + [("status", osc.status)]
    files.append(write_table(os.path.join(out, "oscillation_summary.csv"), ["quantity", "value"], summary, cfg))

    rows = []
    for i in range(rc["rotation_pairs"]):
        R = elastic.random_rotations(rng, 1)[0]
        A, M = regimes.random_spd(rng, rotation=R), regimes.random_spd(rng, rotation=R)
        gap = regimes.nearest_rotation_gap(A, M, rc["rotation_samples"], rng)
        rows.append(("commuting", i, gap.identity_value, gap.sampled_min, gap.violation))
    for i in range(rc["rotation_pairs"]):
        A, M = regimes.random_spd(rng), regimes.random_spd(rng)
        _, beat, ident = regimes.beating_rotation(A, M)
        rows.append(("noncommuting", i, ident, beat, max(0.0, ident - beat)))
    files.append(write_table(os.path.join(out, "rotation.csv"), ["kind", "pair", "identity_value", "best_value", "improvement"], rows, cfg))
    return 0, files


def cmd_verify(cfg, out):
    results = verify.run_suites(cfg, np.random.default_rng(cfg.seed))
    rows = [(r.name, r.passed, r.violation, r.detail) for r in results]
    files = [write_table(os.path.join(out, "verify.csv"), ["invariant", "passed", "violation", "detail"], rows, cfg)]
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name} violation={r.violation:.3e} {r.detail}".rstrip())
    return (0 if all(r.passed for r in results) else 1), files


COMMANDS = {
    "reduce": cmd_reduce,
    "energy": cmd_energy,
    "sweep": cmd_sweep,
    "wrinkle": cmd_wrinkle,
    "regimes": cmd_regimes,
    "verify": cmd_verify,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="thinsheet", description="Prestrained thin-sheet plate reduction.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="YAML run configuration (defaults apply when omitted)")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, help="RNG seed (overrides the config)")
        p.add_argument("--threads", type=int, help="worker threads (overrides the config)")
    return parser


def resolve_config(args):
    cfg = config.load(args.config, args.command) if args.config else config.from_dict({}, args.command)
    cfg.command = args.command
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.threads is not None:
        over["threads"] = args.threads
    if over:
        data = cfg.to_dict()
        data.update(over)
        cfg = config.from_dict(data)
    return cfg


def run(argv=None):
    """Parse ``argv`` and run; returns ``(exit_code, written_files)``."""
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        os.makedirs(args.out, exist_ok=True)
        return COMMANDS[args.command](cfg, args.out)
    except ThinSheetError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code, []
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return 3, []


def main(argv=None):
    code, _ = run(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
