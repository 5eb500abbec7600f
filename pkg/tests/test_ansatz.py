import numpy as np
import pytest
from hypothesis import given, strategies as st

from thinsheet import ansatz, effective, elastic, midsurface, prestrain
from thinsheet.errors import BadTarget, PreconditionII, SingularPrestrain
from thinsheet.quadrature import ThicknessQuadrature

from conftest import sym_matrices

Q = ThicknessQuadrature.gauss(8)
ISO = elastic.builtin_isotropic_quadratic(1.0, 0.5)
B = np.array([[0.2, 0.05, 0.1], [0.05, -0.1, 0.05], [0.1, 0.05, 0.15]])


def identity_plus(b_fn):
    return lambda x, t, h: np.eye(3) + h * b_fn(x, t)


@given(st.floats(1e-3, 1e-1))
def test_curved_gradient_matches_differences(h):
    d = ansatz.curved_recovery(midsurface.Cylinder(2.0), prestrain.linear_b(B, B), ISO.q3_exact, B[:2, :2])
    assert ansatz.gradient_check(d, np.random.default_rng(0), h) < 1e-6


@given(st.floats(1e-3, 1e-1), st.floats(0.0, 2.0))
def test_wrinkled_gradient_matches_differences(h, K):
    d, _ = ansatz.wrinkled_flat_ansatz(np.diag([0.5, 0.0]), K, prestrain.linear_b(B), ISO.q3_exact, h)
    assert ansatz.gradient_check(d, np.random.default_rng(1), h) < 1e-6


@given(sym_matrices(2), st.floats(0.5, 500))
def test_corrugation_identity(A, lam):
    A = A.copy()
    A[0, 0] = abs(A[0, 0])
    cf = ansatz.corrugation_fields(A, lam)
    x = np.random.default_rng(2).uniform(-3, 3, (50, 2))
    assert cf.residual(x).max() <= 1e-12 * max(1.0, np.abs(A).max())


def test_corrugation_needs_nonnegative_a11():
    with pytest.raises(BadTarget):
        ansatz.corrugation_fields(np.diag([-0.1, 0.0]), 10.0)
    with pytest.raises(BadTarget):
        ansatz.corrugation_fields(np.eye(2), 0.0)


def test_wrinkled_ansatz_needs_flat_base():
    with pytest.raises(PreconditionII):
        ansatz.wrinkled_flat_ansatz(np.eye(2), 1.0, prestrain.constant_b(B), ISO.q3_exact, 1e-2, family=midsurface.Cylinder(2.0))


def test_whole_period_length():
    lam = 37.3
    L = ansatz.whole_period_length(lam)
    n = L * lam / (2 * np.pi)
    assert abs(n - round(n)) < 1e-12 and abs(L - 1) <= np.pi / lam


def test_energy_is_thread_independent():
    surf = midsurface.build_surface(midsurface.Cylinder(2.0), 40, 30, analytic=True)
    b_fn = prestrain.constant_b(B)
    d = ansatz.curved_recovery(midsurface.Cylinder(2.0), b_fn, ISO.q3_exact, B[:2, :2])
    args = (d, identity_plus(b_fn), ISO, 1e-2, surf.points, surf.weights, Q)
    e1, d1 = ansatz.energy3d(*args, threads=1)
    e3, d3 = ansatz.energy3d(*args, threads=3)
    assert e1 == e3 and np.array_equal(d1, d3)


def test_singular_prestrain():
    d = ansatz.curved_recovery(midsurface.Plane(), prestrain.constant_b(np.zeros((3, 3))), ISO.q3_exact, np.zeros((2, 2)))
    with pytest.raises(SingularPrestrain):
        ansatz.energy3d(d, lambda x, t, h: np.zeros(np.shape(t) + (3, 3)), ISO, 1e-2, np.zeros((1, 2)), np.ones(1), Q)


def test_flat_sheet_without_prestrain_has_zero_energy():
    b_fn = prestrain.constant_b(np.zeros((3, 3)))
    d = ansatz.curved_recovery(midsurface.Plane(), b_fn, ISO.q3_exact, np.zeros((2, 2)))
    pts = midsurface.lattice(5, 5)
    for h in (1e-1, 1e-2, 1e-3):
        e, _ = ansatz.energy3d(d, identity_plus(b_fn), ISO, h, pts, np.full(25, 1 / 25), Q)
        assert abs(e) < 1e-20


def test_curved_energy_approaches_limit():
    fam = midsurface.Cylinder(2.0)
    surf = midsurface.build_surface(fam, 12, 12, analytic=True)
    b_fn = prestrain.constant_b(B)
    pr = prestrain.make_prestrain(surf.points, Q, b_fn)
    model = effective.effective_model(pr, elastic.q3_field(ISO, surf.points, Q.nodes))
    target, _ = midsurface.gamma_energy(surf, model)
    s = model.optimal_stretch(surf.second_form)
    assert np.ptp(s, axis=0).max() < 1e-12
    d = ansatz.curved_recovery(fam, b_fn, ISO.q3_exact, B[:2, :2])
    sweep = ansatz.h_sweep(
        lambda h: ansatz.energy3d(d, identity_plus(b_fn), ISO, h, surf.points, surf.weights, Q)[0],
        [1e-1, 1e-2, 1e-3], target,
    )
    assert sweep.rel_error[-1] < 1e-3 and sweep.monotone_tail
    assert abs(sweep.rate - 1) < 0.1


def test_fixed_stretch_energy_at_optimum_is_residue():
    # with s = B_2x2 for constant B the energy vanishes
    b_fn = prestrain.constant_b(B)
    assert ansatz.fixed_stretch_energy(B[:2, :2], b_fn, ISO.q3_exact, Q) < 1e-30
    assert ansatz.fixed_stretch_energy(np.zeros((2, 2)), b_fn, ISO.q3_exact, Q) > 0


def test_fit_rate_and_sweep_validation():
    h = np.array([1e-1, 1e-2, 1e-3])
    assert np.isclose(ansatz.fit_rate(h, 3 * h**2), 2.0)
    assert np.isnan(ansatz.fit_rate(h, np.zeros(3)))
    with pytest.raises(ValueError):
        ansatz.h_sweep(lambda h: 0.0, [1e-2, 1e-1, 1e-3], 0.0)
