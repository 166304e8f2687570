import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from toral_nodal.curve import (CircularArc, CubicArc, EllipseArc,
                               make_arclength, near_stationary_interval, phase)


def reference_arclength(spec, u0, u1, n=200_000):
    """Independent fine-grid Simpson of |gamma'_spec|."""
    u = np.linspace(u0, u1, n + 1)
    speed = np.linalg.norm(spec.d1(u), axis=-1)
    w = np.ones(n + 1)
    w[1:-1:2], w[2:-1:2] = 4.0, 2.0
    return float((u1 - u0) / n / 3.0 * (w @ speed))


def test_circular_closed_form():
    c = make_arclength(CircularArc(center=(0.0, 0.0), radius=1.0,
                                   angle0=0.0, angle1=math.pi / 4))
    assert c.length == math.pi / 4
    assert c.kmin == c.kmax == 1.0
    t = np.linspace(0, c.length, 100)
    assert np.max(np.abs(c.curvature(t) - 1.0)) < 1e-12


def test_scaled_circle_curvature():
    c = make_arclength(CircularArc(center=(1.0, 2.0), radius=2.5,
                                   angle0=0.1, angle1=0.6))
    assert c.length == pytest.approx(2.5 * 0.5, abs=1e-15)
    assert c.kmin == pytest.approx(0.4)


def test_ellipse_length_matches_reference(ell):
    ref = reference_arclength(ell.spec, 0.2, 0.9)
    assert abs(ell.length - ref) < 1e-9


def test_cubic_length_matches_reference(cub):
    ref = reference_arclength(cub.spec, 0.0, 0.8)
    assert abs(cub.length - ref) < 1e-9


def test_full_circle_rejected():
    with pytest.raises(ValueError, match="curvature"):
        make_arclength(CircularArc(center=(0, 0), radius=1.0,
                                   angle0=0.0, angle1=2 * math.pi))


def test_zero_curvature_rejected():
    with pytest.raises(ValueError):
        make_arclength(CubicArc(x_coeffs=(0, 1, 0, 0), y_coeffs=(0, 0, 0, 0),
                                angle0=0.0, angle1=1.0))


def test_inflection_rejected():
    # y = u^3 has a curvature sign change through u = 0
    with pytest.raises(ValueError):
        make_arclength(CubicArc(x_coeffs=(0, 1, 0, 0), y_coeffs=(0, 0, 0, 0.2),
                                angle0=-0.5, angle1=0.5))


def test_unit_speed_and_frenet(all_curves):
    for curve in all_curves:
        t = np.linspace(0.0, curve.length, 2001)
        tang = curve.tangent(t)
        assert np.max(np.abs(np.linalg.norm(tang, axis=-1) - 1.0)) <= 1e-9
        gap = curve.second(t) - curve.curvature(t)[..., None] * curve.normal(t)
        assert np.max(np.linalg.norm(gap, axis=-1)) <= 1e-6
        assert np.max(np.abs(np.einsum("ij,ij->i", tang, curve.normal(t)))) <= 1e-9


def test_arclength_parametrization_consistency(ell):
    # walking the curve accumulates exactly the arc length
    t = np.linspace(0.0, ell.length, 5)
    for a, b in zip(t, t[1:]):
        seg = reference_arclength(ell.spec, float(ell.u_of_t(a)), float(ell.u_of_t(b)))
        assert abs(seg - (b - a)) < 1e-9


def test_phase_circular_closed_form(circ):
    # for a circular arc, the phase in direction (1,0) is the x coordinate
    t = np.linspace(0.0, circ.length, 33)
    pe = phase(circ, (1.0, 0.0), t)
    assert np.allclose(pe.phi, circ.gamma(t)[:, 0], atol=1e-12)
    u = 0.3 + t  # R = 1
    assert np.allclose(pe.phi, 3.0 + np.cos(u), atol=1e-12)
    assert np.allclose(pe.dphi, -np.sin(u), atol=1e-12)


def test_phase_derivatives_match_finite_differences(all_curves):
    h = 1e-5
    for curve in all_curves:
        for ang in (0.0, 0.8, 2.1, 4.0):
            xi = (math.cos(ang), math.sin(ang))
            t = np.linspace(4 * h, curve.length - 4 * h, 41)
            pe = phase(curve, xi, t)
            fd1 = (phase(curve, xi, t + h).phi - phase(curve, xi, t - h).phi) / (2 * h)
            fd2 = (phase(curve, xi, t + h).dphi - phase(curve, xi, t - h).dphi) / (2 * h)
            fd3 = (phase(curve, xi, t + h).d2phi - phase(curve, xi, t - h).d2phi) / (2 * h)
            for got, want in ((pe.dphi, fd1), (pe.d2phi, fd2), (pe.d3phi, fd3)):
                rel = np.max(np.abs(got - want) / np.maximum(np.abs(want), 1e-3))
                assert rel < 1e-6


def test_phase_one_sided_at_endpoints(circ):
    h = 1e-5
    for t0, sign in ((0.0, 1.0), (circ.length, -1.0)):
        pe = phase(circ, (0.0, 1.0), np.asarray(t0))
        fd = sign * (phase(circ, (0.0, 1.0), np.asarray(t0 + sign * h)).phi
                     - pe.phi) / h
        assert abs(fd - pe.dphi) < 1e-4


@given(st.floats(min_value=0.0, max_value=2 * math.pi),
       st.floats(min_value=0.0, max_value=1.0))
def test_phase_derivative_bounds(ang, frac):
    curve = make_arclength(EllipseArc(center=(2.0, 2.0), a=2.0, b=1.0,
                                      angle0=0.2, angle1=0.9))
    xi = (math.cos(ang), math.sin(ang))
    pe = phase(curve, xi, np.asarray(frac * curve.length))
    assert abs(pe.dphi) <= 1.0 + 1e-12
    assert abs(pe.d2phi) <= curve.kmax + 1e-9
    assert abs(pe.d3phi) <= math.sqrt(curve.kprime_max**2 + curve.kmax**4) + 1e-9


def test_second_derivative_single_sign_change(all_curves):
    # total curvature < pi/2 forces phi'' to change sign at most once
    for curve in all_curves:
        t = np.linspace(0.0, curve.length, 4096)
        for ang in np.linspace(0.0, 2 * math.pi, 17):
            d2 = phase(curve, (math.cos(ang), math.sin(ang)), t).d2phi
            signs = np.sign(d2[np.abs(d2) > 1e-12])
            changes = int(np.sum(signs[:-1] != signs[1:]))
            assert changes <= 1


def test_stationary_direction_values(circ):
    t0 = 0.5 * circ.length
    tang = circ.tangent(np.asarray(t0))
    nrm = circ.normal(np.asarray(t0))
    pe_t = phase(circ, tuple(tang), np.asarray(t0))
    assert abs(abs(pe_t.dphi) - 1.0) < 1e-12
    assert abs(pe_t.d2phi) < 1e-9
    pe_n = phase(circ, tuple(nrm), np.asarray(t0))
    assert abs(pe_n.dphi) < 1e-9


def test_near_stationary_interval_circle():
    curve = make_arclength(CircularArc(center=(0, 0), radius=1.0,
                                       angle0=-0.6, angle1=0.6))
    interval, length = near_stationary_interval(curve, (1.0, 0.0), 0.1)
    assert interval is not None
    assert length == pytest.approx(2 * math.asin(0.2), abs=1e-9)
    assert length <= 8 * 0.1 / curve.kmin


def test_near_stationary_empty(circ):
    # direction far from every normal of the arc
    interval, length = near_stationary_interval(circ, (1.0, -1.0), 0.05)
    assert interval is None and length == 0.0


def test_near_stationary_ellipse_single_interval(ell):
    t0 = 0.4 * ell.length
    nrm = ell.normal(np.asarray(t0))
    interval, length = near_stationary_interval(ell, tuple(nrm), 0.05)
    assert interval is not None
    assert interval[0] < t0 < interval[1]
    assert length <= 8 * 0.05 / ell.kmin


def test_near_stationary_sigma_validation(circ):
    with pytest.raises(ValueError):
        near_stationary_interval(circ, (1.0, 0.0), 0.3)
    with pytest.raises(ValueError):
        near_stationary_interval(circ, (0.0, 0.0), 0.1)


def test_grid_cache_consistency(ell):
    t8, g8, tan8 = ell.grid(8)
    t16, g16, tan16 = ell.grid(16)
    assert np.array_equal(t16[::2], t8)
    assert np.array_equal(g16[::2], g8)
    direct = ell.gamma(t16)
    assert np.max(np.abs(direct - g16)) < 1e-12
