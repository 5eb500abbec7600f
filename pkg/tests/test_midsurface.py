import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st

from thinsheet import effective, elastic, midsurface, prestrain, symalg
from thinsheet.errors import DegenerateSurface, InfiniteEnergy, MetricMismatch
from thinsheet.quadrature import ThicknessQuadrature

from conftest import spd_matrices

Q8 = ThicknessQuadrature.gauss(8)
ISO = elastic.builtin_isotropic_quadratic(1.0, 0.5)


def rotation(v):
    return scipy.linalg.expm(np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]]))


def plate(surface, b_fn):
    pr = prestrain.make_prestrain(surface.points, Q8, b_fn)
    q3 = elastic.q3_field(ISO, surface.points, Q8.nodes)
    return pr, q3, effective.effective_model(pr, q3)


def test_discrete_second_form_converges_to_analytic():
    fam = midsurface.Cylinder(2.0)
    errs = []
    for n in (16, 32, 64):
        disc = midsurface.build_surface(fam, n, n)
        ana = midsurface.build_surface(fam, n, n, analytic=True)
        errs.append(np.abs(disc.second_form - ana.second_form).max())
    assert errs[-1] < 1e-4
    assert errs[0] / errs[-1] > 8  # second order


def test_cylinder_second_form():
    s = midsurface.build_surface(midsurface.Cylinder(2.0), 5, 5, analytic=True)
    assert np.allclose(s.second_form, symalg.sym2_to_vec(np.diag([0.5, 0.0])), atol=1e-14)
    assert midsurface.isometry_residual(s)[1] < 1e-14


@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3), st.lists(st.floats(-5, 5), min_size=3, max_size=3))
def test_energy_is_rigid_invariant(v, c):
    surf = midsurface.build_surface(midsurface.Cylinder(1.5), 5, 5, analytic=True)
    _, _, model = plate(surf, prestrain.linear_b(np.diag([0.2, -0.1, 0.3])))
    e, _ = midsurface.gamma_energy(surf, model)
    moved = surf.moved(rotation(v), np.asarray(c))
    em, _ = midsurface.gamma_energy(moved, model)
    assert np.isclose(em, e, rtol=1e-12)
    assert np.allclose(moved.second_form, surf.second_form, atol=1e-12)


def test_closed_form_and_direct_energy_agree():
    surf = midsurface.build_surface(midsurface.Cylinder(2.0), 6, 6, analytic=True)
    coeffs = [np.diag([0.1, 0.2, 0.0]), np.eye(3) * 0.3, np.diag([0.0, 0.5, 0.1]), np.diag([0.2, 0.0, 0.0])]
    pr, q3, model = plate(surf, prestrain.polynomial_b(coeffs))
    e, dens = midsurface.gamma_energy(surf, model)
    ed, dens_d = midsurface.gamma_energy_direct(surf, pr, q3)
    assert np.isclose(e, ed, rtol=1e-10)
    assert np.allclose(dens, dens_d, rtol=1e-9, atol=1e-14)


def test_flat_sheet_with_constant_prestrain_has_zero_energy():
    surf = midsurface.build_surface(midsurface.Plane(), 4, 4, analytic=True)
    _, _, model = plate(surf, prestrain.constant_b(np.diag([0.3, -0.2, 0.1])))
    e, _ = midsurface.gamma_energy(surf, model)
    assert abs(e) < 1e-14


def test_non_isometric_surfaces_have_infinite_energy():
    sphere = midsurface.build_surface(midsurface.Sphere(1.0), 5, 5, lengths=(0.5, 0.5), analytic=True)
    _, _, model = plate(sphere, prestrain.constant_b(np.eye(3)))
    with pytest.raises(InfiniteEnergy):
        midsurface.gamma_energy(sphere, model)
    stretched = midsurface.build_surface(midsurface.Affine(((1.1, 0), (0, 1), (0, 0))), 4, 4)
    with pytest.raises(InfiniteEnergy):
        midsurface.gamma_energy(stretched, model)


@given(spd_matrices(lo=0.5, hi=2.0), st.lists(st.floats(-3, 3), min_size=3, max_size=3))
def test_cosserat_completes_the_frame(G, v):
    M = scipy.linalg.sqrtm(G).real
    R = rotation(v)
    b = midsurface.cosserat(R @ M[:, :2], G)
    assert np.allclose(b, R @ M[:, 2], atol=1e-9)


def test_cosserat_errors():
    with pytest.raises(MetricMismatch):
        midsurface.cosserat(2 * np.eye(3)[:, :2], np.eye(3))
    with pytest.raises(DegenerateSurface):
        midsurface.unit_normal(np.zeros((3, 2)))
    with pytest.raises(DegenerateSurface):
        midsurface.build_surface(midsurface.Plane(), 2, 5)


def test_identity_metric_cosserat_is_normal():
    surf = midsurface.build_surface(midsurface.Cylinder(2.0), 5, 5, analytic=True)
    assert np.allclose(midsurface.cosserat(surf.grad_y, np.eye(3)), surf.nu)
