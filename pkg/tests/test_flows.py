import math

import numpy as np
import pytest

from bekbench.errors import (
    DimensionMismatch,
    OutsideRegion,
    SignatureViolation,
    StepTooLarge,
    UnsupportedRegion,
)
from bekbench.flows import (
    BCFTDoubleCone,
    DoubleCone,
    FlowSample,
    SchwarzschildExterior,
    bekenstein_coefficient,
    chiral_velocity,
    contains,
    dilate,
    integrate_flow,
    local_beta,
    max_beta,
    size_normalization,
    velocity,
)

PI = math.pi


# -- region construction and validation ---------------------------------------


def test_region_constructor_guards():
    with pytest.raises(ValueError, match="radius"):
        DoubleCone(0.0)
    with pytest.raises(ValueError, match="radius"):
        DoubleCone(-1.0)
    with pytest.raises(ValueError, match="spatial dimension"):
        DoubleCone(1.0, 0)
    with pytest.raises(ValueError, match="mass"):
        SchwarzschildExterior(0.0)
    # every ordering violation of 0 <= a1 < b1 < a2 < b2
    for bad in [(-1.0, 2.0, 3.0, 4.0), (2.0, 1.0, 3.0, 4.0),
                (1.0, 3.0, 2.0, 4.0), (1.0, 2.0, 4.0, 3.0),
                (1.0, 1.0, 3.0, 4.0)]:
        with pytest.raises(ValueError, match="endpoints"):
            BCFTDoubleCone(*bad)


def test_bcft_coefficients_closed_form():
    reg = BCFTDoubleCone(1.0, 2.0, 3.0, 4.0)
    l, m, n = reg.coefficients()
    assert l == (2.0 - 1.0) + (4.0 - 3.0)
    assert m == 2.0 * 4.0 - 1.0 * 3.0
    assert n == 4.0 * 3.0 * (2.0 - 1.0) + 2.0 * 1.0 * (4.0 - 3.0)


def test_bcft_denominator_root_guard():
    # the denominator discriminant factors as (a1-b1)(a1-b2)(a2-b1)(a2-b2),
    # strictly negative for every strictly ordered region, but float
    # cancellation surfaces a spurious root when two endpoints nearly
    # coincide; such numerically degenerate regions are refused
    with pytest.raises(UnsupportedRegion, match="denominator"):
        BCFTDoubleCone(1.0, 2.0, np.nextafter(2.0, 3.0), 3.0)


def test_dilate_each_variant():
    dc = dilate(DoubleCone(1.5, 3), 2.0)
    assert dc.radius == 3.0 and dc.spatial_dim == 3
    bc = dilate(BCFTDoubleCone(1.0, 2.0, 3.0, 4.0), 0.5)
    assert (bc.a1, bc.b1, bc.a2, bc.b2) == (0.5, 1.0, 1.5, 2.0)
    sch = dilate(SchwarzschildExterior(1.0), 4.0)
    assert sch.mass == 4.0
    with pytest.raises(ValueError, match="factor"):
        dilate(dc, 0.0)


def test_size_normalization():
    assert size_normalization(DoubleCone(4.0)) == pytest.approx(0.25)
    reg = BCFTDoubleCone(1.0, 3.0, 4.0, 6.0)
    assert size_normalization(reg) == pytest.approx(0.5)
    with pytest.raises(UnsupportedRegion):
        size_normalization(SchwarzschildExterior(1.0))


# -- membership ----------------------------------------------------------------


def test_contains_double_cone_closed():
    dc = DoubleCone(1.0, 2)
    assert contains(dc, [0.0, 0.0, 0.0])
    assert contains(dc, [0.5, 0.3, 0.4])      # |t| + r = 1 exactly
    assert contains(dc, [1.0, 0.0, 0.0])      # upper tip
    assert contains(dc, [-1.0, 0.0, 0.0])     # lower tip
    assert not contains(dc, [0.6, 0.3, 0.4])
    assert not contains(dc, [0.0, 0.0])       # wrong arity => not a member


def test_contains_bcft_rectangle():
    reg = BCFTDoubleCone(1.0, 2.0, 3.0, 4.0)
    # chiral box: u = t + x in [3, 4], v = t - x in [1, 2]
    assert contains(reg, [2.5, 1.0])           # u = 3.5, v = 1.5, deep inside
    assert contains(reg, [2.0, 1.0])           # corner u = 3, v = 1
    assert not contains(reg, [2.5, 2.0])       # u = 4.5 past the far edge
    assert not contains(reg, [0.0, 0.0])


def test_contains_unsupported():
    with pytest.raises(UnsupportedRegion):
        contains(SchwarzschildExterior(1.0), [0.0, 3.0])


# -- chiral velocity profiles ---------------------------------------------------


def test_chiral_velocity_double_cone_profile():
    reg = DoubleCone(2.0)
    for y in np.linspace(-2.0, 2.0, 17):
        want = PI * (2.0 - y) * (2.0 + y) / 2.0
        assert chiral_velocity(reg, float(y)) == pytest.approx(want, abs=1e-14)
    assert chiral_velocity(reg, 2.0) == 0.0
    assert chiral_velocity(reg, -2.0) == 0.0


def test_chiral_velocity_bcft_frozen_value():
    # frozen regression value for the (1,2,3,4) region at y = 3.5
    reg = BCFTDoubleCone(1.0, 2.0, 3.0, 4.0)
    got = chiral_velocity(reg, 3.5)
    num = 2.0 * PI * (3.5 - 1.0) * (3.5 - 2.0) * (3.5 - 3.0) * (3.5 - 4.0)
    den = 2.0 * 3.5 ** 2 - 2.0 * 5.0 * 3.5 + 14.0
    assert got == pytest.approx(num / den, abs=1e-14)
    assert got == pytest.approx(-1.6829961, abs=1e-6)


def test_chiral_velocity_bcft_endpoint_roots():
    # all four interval endpoints are exact roots, so the boundary is fixed
    reg = BCFTDoubleCone(1.0, 2.0, 3.0, 4.0)
    for y in (1.0, 2.0, 3.0, 4.0):
        assert abs(chiral_velocity(reg, y)) < 1e-10


# -- pointwise velocity and local temperature ------------------------------------


def test_velocity_center_is_pure_time():
    vel = velocity(DoubleCone(1.0), [0.0, 0.0])
    assert vel == pytest.approx([PI, 0.0], abs=1e-14)
    vel3 = velocity(DoubleCone(2.0, 3), [0.0, 0.0, 0.0, 0.0])
    assert vel3 == pytest.approx([2.0 * PI, 0.0, 0.0, 0.0], abs=1e-14)


def test_velocity_tips_are_fixed_points():
    dc = DoubleCone(1.0)
    assert np.max(np.abs(velocity(dc, [1.0, 0.0]))) < 1e-12
    assert np.max(np.abs(velocity(dc, [-1.0, 0.0]))) < 1e-12
    assert np.max(np.abs(velocity(dc, [0.0, 1.0]))) < 1e-12


def test_velocity_radial_symmetry():
    # the spatial part must point along the position vector
    dc = DoubleCone(1.0, 2)
    vel = velocity(dc, [0.1, 0.3, 0.4])
    x = np.array([0.3, 0.4])
    cross = vel[1] * x[1] - vel[2] * x[0]
    assert abs(cross) < 1e-14


def test_velocity_guards():
    dc = DoubleCone(1.0)
    with pytest.raises(OutsideRegion):
        velocity(dc, [0.0, 1.5])
    with pytest.raises(DimensionMismatch):
        velocity(dc, [0.0, 0.0, 0.0])
    with pytest.raises(UnsupportedRegion):
        velocity(SchwarzschildExterior(1.0), [0.0, 3.0])


def test_local_beta_double_cone_profile():
    # on the time-zero slice both chiral factors equal pi (R^2 - r^2) / R
    assert local_beta(DoubleCone(1.0), [0.0, 0.6]) == pytest.approx(
        0.64 * PI, abs=1e-12
    )
    assert local_beta(DoubleCone(1.0), [0.0, 0.0]) == pytest.approx(PI)
    assert local_beta(DoubleCone(3.0), [0.0, 0.0]) == pytest.approx(3.0 * PI)


def test_local_beta_is_timelike_inside_bcft():
    reg = BCFTDoubleCone(1.0, 2.0, 3.0, 4.0)
    for t, x in [(2.5, 1.0), (2.6, 0.9), (2.9, 1.05)]:
        b = local_beta(reg, [t, x])
        assert b > 0.0


def test_minkowski_signature_guard():
    from bekbench.flows import _minkowski_beta

    with pytest.raises(SignatureViolation):
        _minkowski_beta(np.array([0.1, 1.0]))
    # null vectors clamp to zero rather than raising
    assert _minkowski_beta(np.array([1.0, 1.0])) == 0.0


# -- flow integration -------------------------------------------------------------


def test_center_trajectory_matches_tanh():
    # at the spatial origin the flow reduces to dt/ds = pi (1 - t^2), whose
    # solution through t(0) = 0 is t(s) = tanh(pi s)
    samples = integrate_flow(DoubleCone(1.0), [0.0, 0.0], (0.0, 1.0))
    assert isinstance(samples[0], FlowSample)
    for smp in samples:
        assert abs(smp.point[0] - math.tanh(PI * smp.s)) < 1e-8
        assert abs(smp.point[1]) < 1e-14
    assert samples[0].s == 0.0
    assert samples[-1].s == pytest.approx(1.0)


def test_flow_samples_report_velocity_and_beta():
    samples = integrate_flow(DoubleCone(1.0), [0.0, 0.0], (0.0, 0.2))
    for smp in samples:
        t = smp.point[0]
        assert smp.velocity[0] == pytest.approx(PI * (1.0 - t * t), abs=1e-10)
        assert smp.beta_local == pytest.approx(abs(smp.velocity[0]), abs=1e-12)


def test_backward_flow_inverts_forward():
    dc = DoubleCone(1.0)
    fwd = integrate_flow(dc, [0.0, 0.3], (0.0, 0.5), step=5e-4)
    back = integrate_flow(dc, fwd[-1].point, (0.5, 0.0), step=5e-4)
    assert np.max(np.abs(back[-1].point - np.array([0.0, 0.3]))) < 1e-7
    assert back[-1].s == pytest.approx(0.0)


def test_zero_span_returns_single_sample():
    samples = integrate_flow(DoubleCone(1.0), [0.0, 0.2], (0.3, 0.3))
    assert len(samples) == 1
    assert samples[0].s == 0.3


def test_trajectory_stays_inside_region():
    reg = BCFTDoubleCone(1.0, 2.0, 3.0, 4.0)
    samples = integrate_flow(reg, [2.5, 1.0], (0.0, 2.0), step=1e-3)
    for smp in samples:
        assert contains(reg, smp.point, tol=1e-7)


def test_step_too_large_is_detected():
    with pytest.raises(StepTooLarge):
        integrate_flow(DoubleCone(1.0), [0.0, 0.3], (0.0, 2.0), step=0.5)
    with pytest.raises(ValueError, match="step"):
        integrate_flow(DoubleCone(1.0), [0.0, 0.0], (0.0, 1.0), step=0.0)


def test_integrate_checks_start_point():
    with pytest.raises(OutsideRegion):
        integrate_flow(DoubleCone(1.0), [0.0, 2.0], (0.0, 1.0))


def test_finite_difference_recovers_center_beta():
    # fourth-order central difference of the integrated time coordinate at
    # s = 0 recovers the local inverse temperature at the center
    for rad in (1.0, 2.0, 3.0):
        dc = DoubleCone(rad)
        delta = 1e-3

        def t_at(s, region=dc):
            if s == 0.0:
                return 0.0
            smp = integrate_flow(region, [0.0, 0.0], (0.0, s), step=2e-4)
            return smp[-1].point[0]

        deriv = (
            -t_at(2 * delta) + 8 * t_at(delta)
            - 8 * t_at(-delta) + t_at(-2 * delta)
        ) / (12 * delta)
        assert abs(deriv - PI * rad) < 1e-9


def test_dilation_covariance_of_flow():
    # x -> k x conjugates the flows: the dilated trajectory through k x0 is
    # k times the original trajectory at equal flow parameter
    dc = DoubleCone(1.0)
    big = dilate(dc, 2.0)
    base = integrate_flow(dc, [0.1, 0.2], (0.0, 0.4), step=5e-4)
    scaled = integrate_flow(big, [0.2, 0.4], (0.0, 0.4), step=5e-4)
    assert len(base) == len(scaled)
    for a, b in zip(base, scaled):
        assert np.max(np.abs(2.0 * a.point - b.point)) < 1e-8


# -- temperature extrema and the bound coefficient --------------------------------


def test_max_beta_double_cone():
    val, point = max_beta(DoubleCone(1.0))
    assert val == pytest.approx(PI, abs=1e-9)
    assert np.max(np.abs(point)) < 1e-6
    val2, _ = max_beta(DoubleCone(2.5))
    assert val2 == pytest.approx(2.5 * PI, abs=1e-8)
    with pytest.raises(ValueError, match="resolution"):
        max_beta(DoubleCone(1.0), grid_resolution=32)


def test_max_beta_bcft_consistent_with_grid():
    reg = BCFTDoubleCone(1.0, 2.0, 3.0, 4.0)
    val, point = max_beta(reg)
    # independent dense-grid check over the chiral rectangle
    us = np.linspace(3.0, 4.0, 2001)
    vs = np.linspace(1.0, 2.0, 2001)
    gu = max(-chiral_velocity(reg, float(u)) for u in us)
    gv = max(-chiral_velocity(reg, float(v)) for v in vs)
    assert val == pytest.approx(math.sqrt(gu * gv), abs=1e-7)
    assert val == pytest.approx(local_beta(reg, point), abs=1e-10)


def test_bekenstein_coefficient_closed_forms():
    assert bekenstein_coefficient(DoubleCone(1.0)) == pytest.approx(PI)
    assert bekenstein_coefficient(DoubleCone(2.0)) == pytest.approx(2.0 * PI)
    assert bekenstein_coefficient(SchwarzschildExterior(1.0)) == pytest.approx(
        8.0 * PI
    )
    assert bekenstein_coefficient(SchwarzschildExterior(0.5)) == pytest.approx(
        4.0 * PI
    )


def test_bekenstein_coefficient_bcft_family_frozen():
    # unit chiral legs at growing separation; frozen regression values.
    # farther cones forget the boundary, so the coefficient decreases
    family = [
        (BCFTDoubleCone(1.0, 2.0, 3.0, 4.0), 1.6835744290),
        (BCFTDoubleCone(1.0, 2.0, 4.0, 5.0), 1.6170362534),
        (BCFTDoubleCone(1.0, 2.0, 6.0, 7.0), 1.5868265300),
    ]
    vals = []
    for reg, frozen in family:
        lam = bekenstein_coefficient(reg)
        assert lam == pytest.approx(frozen, abs=1e-6)
        vals.append(lam)
    assert vals[0] > vals[1] > vals[2]


def test_bekenstein_coefficient_is_scale_invariant_for_bcft():
    reg = BCFTDoubleCone(1.0, 2.0, 3.0, 4.0)
    scaled = dilate(reg, 3.0)
    assert bekenstein_coefficient(scaled) == pytest.approx(
        bekenstein_coefficient(reg), abs=1e-8
    )
