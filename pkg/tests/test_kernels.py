import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given

from thinsheet import _kernels_py, kernels

from conftest import matrices

compiled = pytest.importorskip("thinsheet._kernels")


@given(matrices())
def test_biot_energy_backends_agree(a):
    F = np.eye(3) + 0.4 * a
    ref = _kernels_py.biot_energy(F, 1.3, 0.7)
    assert np.isclose(compiled.biot_energy(F, 1.3, 0.7), ref, rtol=1e-10, atol=1e-13)


def test_batched_shapes_agree(rng):
    F = np.eye(3) + 0.2 * rng.normal(size=(4, 5, 3, 3))
    a, b = compiled.biot_energy(F, 1.0, 0.5), _kernels_py.biot_energy(F, 1.0, 0.5)
    assert a.shape == b.shape == (4, 5)
    assert np.allclose(a, b, rtol=1e-10, atol=1e-13)


def test_rotated_distance_min_agrees(rng):
    A, M = np.diag([1.5, 1.0, 0.7]), np.diag([1.2, 0.9, 1.1])
    q = rng.normal(size=(5000, 4))
    d1, k1 = compiled.rotated_distance_min(A, M, q)
    d2, k2 = _kernels_py.rotated_distance_min(A, M, q)
    assert k1 == k2 and np.isclose(d1, d2, rtol=1e-12)


def test_env_var_forces_python_backend():
    code = "from thinsheet import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, THINSHEET_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    assert kernels.BACKEND in ("python", "cython")
