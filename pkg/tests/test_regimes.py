import numpy as np
import pytest
from hypothesis import given, strategies as st

from thinsheet import elastic, regimes
from thinsheet.errors import BadExponents, GeometryOverlap, NotCommuting, SolverStall

ISO = elastic.builtin_isotropic_quadratic(1.0, 0.5)
Q3 = lambda x, t: ISO.q3_exact()


def field(fn):
    def b(x, t):
        shape = np.broadcast_shapes(np.shape(x)[:-1], np.shape(t))
        out = np.zeros(shape + (3, 3))
        x = np.broadcast_to(x, shape + (2,))
        t = np.broadcast_to(t, shape)
        fn(out, x[..., 0], x[..., 1], t)
        return out

    return b


def gradient_compatible(out, x1, x2, t):
    # g0 = (0.2 x1 + 0.3 x1 x2, -0.1 x2): bilinear, so exactly representable; plus odd-in-t and normal parts
    out[..., 0, 0] = 0.2 + 0.3 * x2 + 0.4 * t
    out[..., 0, 1] = out[..., 1, 0] = 0.15 * x1
    out[..., 1, 1] = -0.1 - 0.2 * t
    out[..., 2, 2] = 0.3


def incompatible(out, x1, x2, t):
    out[..., 0, 0] = x2**2


def test_gradient_compatible_prestrain_has_no_gap():
    g = regimes.restricted_gap(field(gradient_compatible), Q3)
    assert abs(g.gap) <= 1e-8


def test_incompatible_prestrain_has_a_gap():
    g = regimes.restricted_gap(field(incompatible), Q3)
    assert g.gap > 1e-6
    assert g.restricted >= g.unrestricted - 1e-10


def test_zero_prestrain():
    g = regimes.restricted_gap(field(lambda *a: None), Q3, 5, 5)
    assert g.restricted == 0 and g.unrestricted == 0 and g.gap == 0


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
def test_restricted_never_below_unrestricted(a, b, c):
    def fn(out, x1, x2, t):
        out[..., 0, 0] = a * x2**2 + b * t
        out[..., 1, 1] = c * x1 * x2

    g = regimes.restricted_gap(field(fn), Q3, 7, 7)
    assert g.restricted >= g.unrestricted - 1e-10


def test_solver_stall():
    with pytest.raises(SolverStall):
        regimes.restricted_gap(field(incompatible), Q3, 9, 9, maxiter=2)


@pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0, 2.0])
def test_rolled_cylinder_has_zero_energy(alpha):
    for h in (1e-1, 1e-2, 1e-3):
        rep = regimes.example_cylinder(h, alpha)
        assert rep.max_energy <= 1e-12
    rep = regimes.example_cylinder(1e-3, 1.0)
    assert np.isclose(rep.amplitude_top, 0.5)


def test_corner():
    rep = regimes.example_corner(1e-2, 1.0)
    assert rep.max_energy <= 1e-12
    assert rep.midplane_defect <= 1e-14
    assert np.isclose(rep.grad_nu_discrete, rep.grad_nu_arc, rtol=1e-2)
    finer = regimes.example_corner(1e-3, 1.0)
    # curvature concentrates like 1/r; the L1 metric defect is O(h)
    assert np.isclose(finer.grad_nu_arc / rep.grad_nu_arc, 10.0)
    assert np.isclose(finer.l1_metric_defect / rep.l1_metric_defect, 0.1, rtol=1e-2)
    with pytest.raises(GeometryOverlap):
        regimes.example_corner(0.3, 1.0)


def test_oscillation_statuses():
    rep = regimes.example_oscillation([1e-2, 1e-3, 1e-4], 2.3, 1.2)
    assert rep.status == "divergent" and rep.energy.max() <= 1e-12
    assert rep.metric_l1[-1] < rep.metric_l1[0]
    assert regimes.example_oscillation([1e-2, 1e-3, 1e-4], 2.0, 0.5).status == "no_divergence"
    with pytest.raises(BadExponents):
        regimes.example_oscillation([1e-2, 1e-3], 1.0, 1.0)


def test_oscillation_exponent_is_stable():
    full = regimes.example_oscillation([1e-2, 1e-3, 1e-4, 1e-5], 2.3, 1.2)
    drop = regimes.example_oscillation([1e-3, 1e-4, 1e-5], 2.3, 1.2)
    a, b = full.exponents["prestrain_l2_over_h3"], drop.exponents["prestrain_l2_over_h3"]
    assert abs(a - b) <= 0.05


def test_nearest_rotation_examples(rng):
    A = np.diag([2.0, 1.0, 1.0])
    res = regimes.nearest_rotation_gap(A, np.eye(3), 100_000, rng)
    assert res.violation == 0 and np.isclose(res.identity_value, 1.0)
    assert regimes.nearest_rotation_gap(np.eye(3), np.eye(3), 1000, rng).sampled_min == 0
    B, C = regimes.random_spd(rng), regimes.random_spd(rng)
    with pytest.raises(NotCommuting):
        regimes.nearest_rotation_gap(B, C, 10, rng)
    Q, beat, ident = regimes.beating_rotation(B, C)
    assert beat < ident and np.allclose(Q.T @ Q, np.eye(3))


def test_order_h_diagnostic_contrast():
    B = np.diag([0.3, 0.1, -0.2])
    fam = lambda x, t, h: np.broadcast_to(np.eye(3) + h * B, np.broadcast_shapes(x.shape[:-1], t.shape) + (3, 3))
    rep = regimes.order_h_diagnostic(fam, fam, np.eye(3), [1e-1, 1e-2, 1e-3], np.zeros((1, 2)), np.ones(1))
    assert rep.status == "h2_bound_consistent" and rep.exponents["metric_l1"] >= 1.95
    grad_fn, a_fn = regimes.remark_family()
    rep = regimes.order_h_diagnostic(
        grad_fn, a_fn, np.eye(3), [1e-1, 3e-2, 1e-2, 3e-3], lambda h: regimes.period_cell(h, 3.0), None,
        law=elastic.builtin_dist_law(),
    )
    assert rep.status == "h2_bound_violated"
    assert rep.exponents["averaged_gradient_l2"] > 1.0  # averages still converge
    assert rep.energy.max() <= 1e-12
