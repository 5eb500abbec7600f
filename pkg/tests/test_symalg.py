import numpy as np
import pytest
from hypothesis import given

from thinsheet import symalg
from thinsheet.errors import FrameNotOrthogonal

from conftest import matrices, spd_matrices, sym_matrices


@given(matrices())
def test_sym3_roundtrip_and_symmetric_part(m):
    v = symalg.sym3_to_vec(m)
    assert np.allclose(symalg.vec_to_sym3(v), symalg.sym(m), atol=1e-14)


@given(matrices(), matrices())
def test_coordinates_are_an_isometry(a, b):
    lhs = symalg.sym3_to_vec(a) @ symalg.sym3_to_vec(b)
    rhs = np.sum(symalg.sym(a) * symalg.sym(b))
    assert abs(lhs - rhs) <= 1e-12 * (1 + abs(rhs))


@given(sym_matrices(2))
def test_sym2_roundtrip(m):
    assert np.allclose(symalg.vec_to_sym2(symalg.sym2_to_vec(m)), m, atol=1e-14)


def test_embed_and_lift_touch_disjoint_coordinates():
    assert np.allclose(symalg.EMBED2.T @ symalg.LIFT3, 0)
    assert np.allclose(symalg.EMBED2.T @ symalg.EMBED2, np.eye(3))
    # sym(c ⊗ e3) has norm^2 = c1^2/2 + c2^2/2 + c3^2
    assert np.allclose(symalg.LIFT3.T @ symalg.LIFT3, np.diag([0.5, 0.5, 1.0]))


@given(spd_matrices(), sym_matrices())
def test_congruence_matrix(a, s):
    lhs = symalg.congruence_matrix(a) @ symalg.sym3_to_vec(s)
    rhs = symalg.sym3_to_vec(a @ s @ a)
    assert np.allclose(lhs, rhs, atol=1e-10 * (1 + np.abs(rhs).max()))


@given(matrices(), sym_matrices())
def test_quadratic_form_ignores_skew_part(f, l):
    op = np.eye(6) + 0.1 * np.pad(l, ((0, 3), (0, 3)))
    q = symalg.QuadForm3(0.5 * (op + op.T))
    assert np.isclose(q(f), q(symalg.sym(f)), rtol=1e-12, atol=1e-12)


def test_frame_of_checks_orthogonality():
    jac = np.eye(3)[:, :2]
    assert np.allclose(symalg.frame_of(jac, np.array([0, 0, 1.0])), np.eye(3))
    with pytest.raises(FrameNotOrthogonal):
        symalg.frame_of(2 * jac, np.array([0, 0, 1.0]))
