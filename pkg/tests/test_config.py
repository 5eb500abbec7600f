import numpy as np
import pytest
import yaml
from hypothesis import given, strategies as st

from thinsheet import config
from thinsheet.errors import ConfigError

LAWS = st.sampled_from([
    {"family": "dist"},
    {"family": "isotropic", "mu": 2.0, "lambda": 0.3},
    {"family": "isotropic_linear_t", "mu": 1.0, "lambda": 0.5, "slope": 0.4},
])
BS = st.sampled_from([
    {"family": "zero"},
    {"family": "constant", "matrix": [[0.1, 0, 0], [0, 0.2, 0], [0, 0, 0.3]]},
    {"family": "linear", "b1": [[0.1, 0], [0, 0.2]]},
    {"family": "polynomial", "coeffs": [[[0.1, 0, 0], [0, 0, 0], [0, 0, 0]], [[0, 0.1, 0], [0.1, 0, 0], [0, 0, 0]]]},
    {"family": "layers", "layers": [{"lo": -0.5, "hi": 0.1, "matrix": [[1, 0, 0], [0, 0, 0], [0, 0, 0]]},
                                    {"lo": 0.1, "hi": 0.5, "matrix": [[0, 0, 0], [0, 1, 0], [0, 0, 0]]}]},
])


@given(
    st.sampled_from(config.COMMANDS), LAWS, BS,
    st.integers(0, 2**31), st.integers(1, 8), st.integers(1, 32),
    st.lists(st.floats(1e-6, 1.0), min_size=3, max_size=6, unique=True),
)
def test_roundtrip_is_identity(cmd, law, b, seed, threads, nodes, h):
    data = {
        "command": cmd, "law": law, "prestrain": {"b": b}, "seed": seed, "threads": threads,
        "quadrature": {"nodes": nodes}, "sweep": {"h_list": sorted(h, reverse=True)},
    }
    cfg = config.from_dict(data)
    again = config.from_dict(yaml.safe_load(cfg.dump()))
    assert again == cfg
    assert again.digest() == cfg.digest()


def test_defaults_are_valid():
    cfg = config.from_dict({})
    assert cfg.command == "verify" and cfg.quadrature["nodes"] == 16


@pytest.mark.parametrize(
    "data, path",
    [
        ({"bogus": 1}, "bogus"),
        ({"law": {"mu": 1.0, "colour": 2}}, "law.colour"),
        ({"law": {"family": "neo-hookean"}}, "law.family"),
        ({"law": {"family": "isotropic", "mu": -1.0}}, "law.params"),
        ({"sweep": {"h_list": [0.1, 0.1, 0.01]}}, "sweep.h_list"),
        ({"wrinkle": {"h_list": [0.1, 0.01]}}, "wrinkle.h_list"),
        ({"quadrature": {"nodes": 0}}, "quadrature.nodes"),
        ({"grid": {"n1": 2}}, "grid.n1"),
        ({"prestrain": {"b": {"family": "constant", "matrix": [1, 2]}}}, "prestrain.b.matrix"),
        ({"prestrain": {"b": {"family": "spline"}}}, "prestrain.b.family"),
        ({"prestrain": {"abar": {"family": "constant", "matrix": [[1, 0, 0], [0, -1, 0], [0, 0, 1]]}}}, "prestrain.abar.matrix"),
        ({"surface": {"family": "torus"}}, "surface.family"),
        ({"command": "plot"}, "command"),
        ({"seed": -3}, "seed"),
    ],
)
def test_errors_name_the_field(data, path):
    with pytest.raises(ConfigError) as exc:
        config.from_dict(data)
    assert exc.value.path == path


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError):
        config.load(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("law: [unclosed")
    with pytest.raises(ConfigError):
        config.load(bad)
    bad.write_text("- a list")
    with pytest.raises(ConfigError):
        config.load(bad)


def test_layers_use_composite_quadrature():
    cfg = config.from_dict({"prestrain": {"b": {"family": "layers", "layers": [
        {"lo": -0.5, "hi": 0.0, "matrix": np.eye(3).tolist()}, {"lo": 0.0, "hi": 0.5, "matrix": np.eye(3).tolist()}]}},
        "quadrature": {"nodes": 4}})
    _, breaks, degree = config.build_b(cfg)
    quad = config.build_quad(cfg, breaks)
    assert degree is None and len(quad) == 8
    assert np.all(quad.nodes[:4] < 0) and np.all(quad.nodes[4:] > 0)
