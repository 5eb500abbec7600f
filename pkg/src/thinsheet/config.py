"""Run configuration: YAML in, validated dataclass out, and builders.

Every section has defaults, so an empty file (or no file) is a valid config.
Errors name the offending field path, e.g. ``law.mu``.
"""

import copy
import hashlib
import json
from dataclasses import asdict, dataclass, field

import numpy as np
import yaml

from . import elastic, midsurface, prestrain
from .errors import ConfigError
from .quadrature import ThicknessQuadrature

COMMANDS = ("reduce", "energy", "sweep", "wrinkle", "regimes", "verify")

_B1 = [[0.2, 0.05, 0.1], [0.05, -0.1, 0.05], [0.1, 0.05, 0.15]]

DEFAULTS = {
    "law": {"family": "isotropic", "mu": 1.0, "lambda": 0.5},
    "prestrain": {"abar": {"family": "identity"}, "b": {"family": "linear", "b1": _B1}},
    "surface": {"family": "plane", "rho": 2.0, "analytic": True},
    "grid": {"n1": 16, "n2": 16, "lengths": [1.0, 1.0]},
    "quadrature": {"nodes": 16},
    "sweep": {"h_list": [1e-1, 3e-2, 1e-2, 3e-3, 1e-3], "stretch": "optimal", "tolerance": 0.02},
    "wrinkle": {
        "h_list": [1e-1, 1e-2, 1e-3, 1e-4],
        "stretch": [[0.5, 0.0], [0.0, 0.0]],
        "K": 1.0,
        "gamma": 0.4,
        "n1": 257,
        "n2": 5,
        "tolerance": 0.05,
    },
    "regimes": {
        "gap_grid": 17,
        "cylinder_h": [1e-1, 1e-2, 1e-3],
        "cylinder_alpha": [0.5, 1.0, 2.0],
        "corner_h": [1e-2, 1e-3],
        "corner_lambda": 1.0,
        "oscillation_h": [1e-2, 1e-3, 1e-4, 1e-5],
        "oscillation_alpha": 2.3,
        "oscillation_beta": 1.2,
        "rotation_pairs": 5,
        "rotation_samples": 20000,
    },
    "verify": {"instances": 5, "samples": 100},
    "tolerances": {"isometry": 1e-3},
    "seed": 0,
    "threads": 1,
}


@dataclass
class RunConfig:
    command: str = "verify"
    law: dict = field(default_factory=dict)
    prestrain: dict = field(default_factory=dict)
    surface: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    quadrature: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    wrinkle: dict = field(default_factory=dict)
    regimes: dict = field(default_factory=dict)
    verify: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    seed: int = 0
    threads: int = 1

    def to_dict(self):
        return asdict(self)

    def dump(self):
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _merge(base, over, path):
    out = copy.deepcopy(base)
    for k, v in (over or {}).items():
        if k not in base:
            raise ConfigError(f"{path}.{k}".lstrip("."), "unknown key")
        if isinstance(v, dict) and "family" in v:
            # a family descriptor replaces the default wholesale; its builder validates the keys
            out[k] = copy.deepcopy(v)
        elif isinstance(base[k], dict):
            if not isinstance(v, dict):
                raise ConfigError(f"{path}.{k}".lstrip("."), "expected a mapping")
            out[k] = _merge(base[k], v, f"{path}.{k}")
        else:
            out[k] = v
    return out


def from_dict(data, command=None):
    data = dict(data or {})
    cmd = data.pop("command", None) or command or "verify"
    if cmd not in COMMANDS:
        raise ConfigError("command", f"unknown command {cmd!r}")
    merged = _merge(DEFAULTS, data, "")
    cfg = RunConfig(command=cmd, **merged)
    validate(cfg)
    return cfg


def load(path, command=None):
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError("--config", f"file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError("--config", f"invalid YAML: {exc}") from None
    if data is not None and not isinstance(data, dict):
        raise ConfigError("--config", "top level must be a mapping")
    return from_dict(data or {}, command)


def _positive_int(value, path, minimum=1):
    if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
        raise ConfigError(path, f"expected an integer >= {minimum}, got {value!r}")


def _h_list(values, path, minimum=3):
    try:
        h = np.asarray(values, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(path, "expected a list of numbers") from None
    if h.ndim != 1 or len(h) < minimum or np.any(h <= 0) or np.any(np.diff(h) >= 0):
        raise ConfigError(path, f"expected >= {minimum} positive, strictly decreasing values")
    return h


def validate(cfg):
    _positive_int(cfg.quadrature.get("nodes"), "quadrature.nodes")
    _positive_int(cfg.grid.get("n1"), "grid.n1", 3)
    _positive_int(cfg.grid.get("n2"), "grid.n2", 3)
    _positive_int(cfg.seed, "seed", 0)
    _positive_int(cfg.threads, "threads", 1)
    _h_list(cfg.sweep["h_list"], "sweep.h_list")
    _h_list(cfg.wrinkle["h_list"], "wrinkle.h_list")
    build_law(cfg)
    build_b(cfg)
    build_abar(cfg)
    if cfg.surface.get("family") not in ("plane", "cylinder", "sphere"):
        raise ConfigError("surface.family", f"unknown family {cfg.surface.get('family')!r}")


def _matrix(value, path, shape=(3, 3)):
    try:
        m = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(path, "expected a numeric matrix") from None
    if m.shape == (2, 2) and shape == (3, 3):
        m = np.pad(m, ((0, 1), (0, 1)))
    if m.shape != shape:
        raise ConfigError(path, f"expected shape {shape}, got {m.shape}")
    return m


def build_law(cfg):
    p = cfg.law
    fam = p.get("family")
    if fam == "dist":
        return elastic.builtin_dist_law()
    if fam == "isotropic":
        return elastic.builtin_isotropic_quadratic(p.get("mu", 1.0), p.get("lambda", 0.0))
    if fam == "isotropic_linear_t":
        return elastic.isotropic_linear_t(p.get("mu", 1.0), p.get("lambda", 0.0), p.get("slope", 0.0))
    if fam == "biot_quadratic":
        return elastic.biot_quadratic(_matrix(p.get("operator"), "law.operator", (6, 6)))
    raise ConfigError("law.family", f"unknown family {fam!r}")


def build_b(cfg):
    """Returns ``(b_fn, layer_breaks, degree)``; degree is None when not polynomial."""
    b = cfg.prestrain.get("b", {})
    fam = b.get("family")
    if fam == "zero":
        return prestrain.constant_b(np.zeros((3, 3))), [], 0
    if fam == "constant":
        return prestrain.constant_b(_matrix(b.get("matrix"), "prestrain.b.matrix")), [], 0
    if fam == "linear":
        b0 = b.get("b0")
        b0 = None if b0 is None else _matrix(b0, "prestrain.b.b0")
        return prestrain.linear_b(_matrix(b.get("b1"), "prestrain.b.b1"), b0), [], 1
    if fam == "polynomial":
        coeffs = b.get("coeffs")
        if not isinstance(coeffs, list) or not coeffs:
            raise ConfigError("prestrain.b.coeffs", "expected a non-empty list of matrices")
        mats = [_matrix(c, f"prestrain.b.coeffs[{i}]") for i, c in enumerate(coeffs)]
        return prestrain.polynomial_b(mats), [], len(mats) - 1
    if fam == "layers":
        layers = b.get("layers")
        if not isinstance(layers, list) or not layers:
            raise ConfigError("prestrain.b.layers", "expected a non-empty list")
        spec = []
        for i, layer in enumerate(layers):
            try:
                spec.append((float(layer["lo"]), float(layer["hi"]), _matrix(layer["matrix"], f"prestrain.b.layers[{i}].matrix")))
            except (KeyError, TypeError):
                raise ConfigError(f"prestrain.b.layers[{i}]", "needs lo, hi, matrix") from None
        fn, breaks = prestrain.layers_b(spec)
        return fn, breaks, None
    raise ConfigError("prestrain.b.family", f"unknown family {fam!r}")


def build_abar(cfg):
    a = cfg.prestrain.get("abar", {})
    fam = a.get("family")
    if fam == "identity":
        return None
    if fam == "constant":
        m = _matrix(a.get("matrix"), "prestrain.abar.matrix")
        if not np.allclose(m, m.T) or np.linalg.eigvalsh(0.5 * (m + m.T))[0] <= 0:
            raise ConfigError("prestrain.abar.matrix", "must be symmetric positive definite")
        return prestrain.constant_abar(m)
    raise ConfigError("prestrain.abar.family", f"unknown family {fam!r}")


def build_quad(cfg, breaks=()):
    n = cfg.quadrature["nodes"]
    inner = [b for b in breaks if -0.5 < b < 0.5]
    if inner:
        return ThicknessQuadrature.composite(n, inner)
    return ThicknessQuadrature.gauss(n)


def build_family(cfg):
    s = cfg.surface
    fam = s.get("family")
    if fam == "plane":
        return midsurface.Plane()
    rho = s.get("rho")
    if not isinstance(rho, (int, float)) or rho <= 0:
        raise ConfigError("surface.rho", "expected a positive radius")
    return midsurface.Cylinder(float(rho)) if fam == "cylinder" else midsurface.Sphere(float(rho))


def build_surface(cfg, n1=None, n2=None):
    g = cfg.grid
    abar_fn = build_abar(cfg)
    return midsurface.build_surface(
        build_family(cfg),
        n1 or g["n1"],
        n2 or g["n2"],
        tuple(g["lengths"]),
        analytic=bool(cfg.surface.get("analytic", True)),
        abar_fn=abar_fn,
    )
