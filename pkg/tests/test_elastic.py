import numpy as np
import pytest
from hypothesis import given, strategies as st

from thinsheet import elastic
from thinsheet.errors import BadModuli, HessianNotPSD, SingularDeformation, StepTooSmall
from thinsheet.symalg import sym

from conftest import matrices

LAWS = [
    elastic.builtin_dist_law(),
    elastic.builtin_isotropic_quadratic(1.0, 0.5),
    elastic.isotropic_linear_t(1.3, 0.2, 0.8),
]


@pytest.mark.parametrize("law", LAWS, ids=lambda l: l.name)
def test_law_suite(law, rng):
    for res in elastic.check_law(law, rng):
        assert res.passed, res


@given(matrices())
def test_dist_law_is_distance_to_so3(a):
    F = np.eye(3) + 0.3 * a
    if np.linalg.det(F) <= 0.05:
        return
    w = elastic.builtin_dist_law()(F)
    assert np.isclose(w, elastic.dist_to_so3_sq(F), rtol=1e-9, atol=1e-12)


@given(st.floats(0.1, 5), st.floats(-0.5, 5))
def test_fd_hessian_matches_closed_form(mu, lam):
    if not 3 * lam + 2 * mu > 0:
        return
    law = elastic.builtin_isotropic_quadratic(mu, lam)
    fd = elastic.hessian_at_identity(law).operator
    assert np.allclose(fd, law.q3_exact(), atol=1e-7 * (1 + mu + abs(lam)))


def test_dist_hessian_is_twice_sym_norm():
    # Q3(F) = 2 |sym F|^2 for the distance law
    law = elastic.builtin_dist_law()
    F = np.arange(9.0).reshape(3, 3) / 10
    q = elastic.hessian_at_identity(law)
    assert np.isclose(q(F), 2 * np.sum(sym(F) ** 2), rtol=1e-7)


def test_taylor_ratio_tends_to_one(rng):
    rep = elastic.taylor_ratio_check(LAWS[1], rng.normal(size=(3, 3)), [1e-1, 1e-2, 1e-3, 1e-4])
    dev = np.abs(rep.ratios - 1)
    assert dev[-1] < 1e-3 and dev[-1] < dev[0]


def test_taylor_on_skew_direction_is_not_applicable():
    F = np.array([[0, 1.0, 0], [-1.0, 0, 0], [0, 0, 0]])
    assert not elastic.taylor_ratio_check(LAWS[0], F, [1e-2, 1e-3]).applicable


def test_errors():
    with pytest.raises(BadModuli):
        elastic.builtin_isotropic_quadratic(-1.0, 0.0)
    with pytest.raises(BadModuli):
        elastic.builtin_isotropic_quadratic(1.0, -1.0)
    with pytest.raises(BadModuli):
        elastic.isotropic_linear_t(1.0, 0.0, 3.0)
    with pytest.raises(SingularDeformation):
        LAWS[0].energy(-np.eye(3), strict=True)
    with pytest.raises(StepTooSmall):
        elastic.hessian_at_identity(LAWS[0], step=1e-9)
    bad = elastic.biot_quadratic(np.diag([-1.0, 2, 2, 2, 2, 2]))
    with pytest.raises(HessianNotPSD):
        elastic.hessian_at_identity(bad)
    assert not elastic.check_hessian(bad).passed


def test_q3_field_shapes():
    law = LAWS[2]
    t = np.linspace(-0.4, 0.4, 5)
    exact = elastic.q3_field(law, np.zeros((2, 2)), t)
    fd = elastic.q3_field(law, np.zeros((2, 2)), t, exact=False)
    assert exact.shape == (2, 5, 6, 6)
    assert np.allclose(exact, fd, atol=1e-7)
