import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from toral_nodal.errors import QuadratureError
from toral_nodal.lattice import enumerate_circle
from toral_nodal.medians import build_median_set, dyadic_decompose, median_dist
from toral_nodal.oscillatory import (bilinear_form_bound, fourier_l2_sq,
                                     l2_ratio, l4_vs_B, osc_integral,
                                     osc_quadrature, restriction_norms,
                                     schur_family, schur_norms, vdc_audit)
from toral_nodal.wavefield import (ArcLocalized, SinglePair, UniformRandom,
                                   make_eigenfunction, restrict)

# Bessel J0(10), frozen from the alternating power series
# sum_m (-(x/2)^2)^m / (m!)^2 evaluated in extended precision.
J0_AT_10 = -0.24593576445134832


def j0_series(x: float) -> float:
    """Independent J0 oracle: the defining power series."""
    term, total = 1.0, 1.0
    for m in range(1, 60):
        term *= -(x * x / 4.0) / (m * m)
        total += term
    return total


def test_zero_frequency_gives_length(circ):
    res = osc_integral(circ, None, (1.0, 0.0), 0.0)
    assert res.value == pytest.approx(circ.length, abs=1e-12)


def test_full_period_bessel():
    assert j0_series(10.0) == pytest.approx(J0_AT_10, abs=1e-13)
    res = osc_quadrature(np.sin, None, 0.0, 2 * math.pi, 10.0, tol=1e-10)
    assert res.value.real == pytest.approx(2 * math.pi * J0_AT_10, abs=1e-8)
    assert abs(res.value.imag) < 1e-10
    assert res.error_estimate < 1e-10


def test_quadrature_node_cap():
    with pytest.raises(QuadratureError) as err:
        osc_quadrature(np.sin, None, 0.0, 2 * math.pi, 5.0, tol=1e-30,
                       node_cap=1 << 10)
    assert err.value.best is not None
    assert err.value.best.value.real == pytest.approx(2 * math.pi * j0_series(5.0),
                                                      abs=1e-6)


def test_osc_integral_amplitude(circ):
    res = osc_integral(circ, lambda t: t, (1.0, 0.0), 0.0)
    assert res.value == pytest.approx(circ.length**2 / 2, abs=1e-10)


def test_vdc_audit_stationary_direction(circ):
    # normal direction at mid-arc: stationary phase saturates sqrt(k) decay,
    # so the trend over the full dyadic range is flat but not rising
    nrm = circ.normal(np.asarray(circ.length / 2))
    audit = vdc_audit(circ, tuple(nrm))
    assert -0.05 <= audit.slope <= 0.05
    assert audit.rows[0][0] == 1.0
    plain = abs(osc_integral(circ, None, tuple(nrm), 1.0).value)
    assert audit.rows[0][1] == pytest.approx(plain, rel=1e-9)


def test_vdc_audit_nonstationary_direction(circ):
    audit = vdc_audit(circ, (1.0, -1.0), [float(1 << j) for j in range(11)])
    assert audit.slope < -0.2  # boundary-dominated decay is faster


def test_vdc_audit_validates_k(circ):
    with pytest.raises(ValueError):
        vdc_audit(circ, (1.0, 0.0), [0.5, 1.0])


# -- restriction norms -----------------------------------------------------------

class ConstantWave:
    """f = 1 probe (outside the eigenfunction setting)."""

    def __init__(self, curve):
        self.curve = curve
        self.lam = 2.0
        circle = enumerate_circle(25)
        self.F = make_eigenfunction(circle, SinglePair(mu=(5, 0)))

    def value(self, t):
        return np.ones_like(np.asarray(t, dtype=float))

    def grid_values(self, n):
        t = np.linspace(0.0, self.curve.length, n + 1)
        return t, self.value(t)


def test_norms_constant_probe(circ):
    rep = restriction_norms(ConstantWave(circ))
    L = circ.length
    assert rep.l1 == pytest.approx(L, rel=1e-12)
    assert rep.l2 == pytest.approx(math.sqrt(L), rel=1e-12)
    assert rep.l4 == pytest.approx(L**0.25, rel=1e-12)
    assert rep.lsup == pytest.approx(1.0, abs=1e-12)


def test_norms_single_pair_closed_form(circle25, circ):
    # f = sqrt(2) cos(u): f^2 = 1 + cos(2u); the remainder integral comes
    # from an independent trapezoid evaluation of the closed form
    F = make_eigenfunction(circle25, SinglePair(mu=(3, 4), phase=0.3))
    rw = restrict(F, circ)
    rep = restriction_norms(rw)
    t = np.linspace(0.0, circ.length, 2_000_001)
    g = circ.gamma(t)
    u = 3 * g[:, 0] + 4 * g[:, 1] + 0.3
    remainder = np.trapezoid(np.cos(2 * u), t)
    assert rep.l2_sq == pytest.approx(circ.length + remainder, abs=1e-8)


def test_norms_holder_chain(circle1105, circ):
    F = make_eigenfunction(circle1105, UniformRandom(seed=21))
    rep = restriction_norms(restrict(F, circ))
    L = rep.length
    assert rep.l1 / L <= math.sqrt(rep.l2_sq / L) + 1e-9
    assert math.sqrt(rep.l2_sq / L) <= (rep.l4_4 / L) ** 0.25 + 1e-9
    assert (rep.l4_4 / L) ** 0.25 <= rep.lsup + 1e-9
    assert rep.l2 <= rep.l1 ** (1 / 3) * rep.l4 ** (2 / 3) + 1e-9


def test_fourier_side_l2(circle25, circ):
    F = make_eigenfunction(circle25, UniformRandom(seed=5))
    rw = restrict(F, circ)
    rep = restriction_norms(rw, fourier_check=True)  # raises on disagreement
    side = fourier_l2_sq(rw)
    assert side == pytest.approx(rep.l2_sq, rel=1e-6)


def test_l2_ratio_single_pair(circle25, circ):
    F = make_eigenfunction(circle25, SinglePair(mu=(3, 4)))
    rw = restrict(F, circ)
    rep = restriction_norms(rw)
    rho = l2_ratio(rw, rep)
    assert 0.0 < rho <= circle25.count + 1e-9
    assert rho == pytest.approx(rep.l2_sq / rep.length, rel=1e-12)


def test_l2_ratio_concentrated(circle1105, circ):
    ang = circle1105.angles
    center = min((b - a, 0.5 * (a + b)) for a, b in zip(ang, ang[1:]))[1]
    F = make_eigenfunction(circle1105, ArcLocalized(center_angle=center,
                                                    seed=2, fraction=0.05))
    rho = l2_ratio(restrict(F, circ))
    assert rho > 0.0


def test_l4_ratio(circle25, circ):
    F = make_eigenfunction(circle25, UniformRandom(seed=6))
    rw = restrict(F, circ)
    l44, b, ratio = l4_vs_B(rw)
    assert b == 2 and ratio == pytest.approx(l44 / 2)


# -- Schur machinery ---------------------------------------------------------------

@given(st.integers(min_value=1, max_value=6), st.integers(min_value=1, max_value=6),
       st.integers(min_value=0, max_value=10**6))
def test_induced_one_norms_against_enumeration(rows, cols, seed):
    rng = np.random.default_rng(seed)
    m = rng.uniform(0.0, 1.0, size=(rows, cols))
    col = float(np.max(m.sum(axis=0)))
    # oracle: ||M||_{1->1} = max over coordinate vectors of ||M e_j||_1
    oracle = max(float(np.abs(m @ e).sum())
                 for e in np.eye(cols))
    assert col == pytest.approx(oracle, rel=1e-12)


def _family(n, epsilon=0.45):
    decomp = dyadic_decompose(build_median_set(enumerate_circle(n)), epsilon)
    return decomp, schur_family(decomp)


def test_schur_entries_bounded(circle1105):
    decomp, fam = _family(1105)
    for blk in fam.blocks.values():
        assert np.all(blk.matrix <= 1.0) and np.all(blk.matrix >= 0.0)
        if blk.K == blk.L:
            assert np.all(np.diag(blk.matrix) == 1.0)  # |.|_+ floors at 1


def test_schur_norm_reports(circle1105):
    decomp, fam = _family(1105)
    reports = schur_norms(fam)
    for (K, L), rep in reports.items():
        blk = fam.blocks[(K, L)]
        assert rep.norm_1to1 == float(np.max(blk.matrix.sum(axis=0)))
        assert rep.norm_adj_1to1 == float(np.max(blk.matrix.sum(axis=1)))
        assert rep.bound_2to2 == math.sqrt(rep.norm_1to1 * rep.norm_adj_1to1)
        assert rep.bound_2to2_sq == rep.norm_1to1 * rep.norm_adj_1to1


def test_bilinear_single_median():
    decomp, fam = _family(1105)
    z = decomp.starred()[0]
    rep = bilinear_form_bound({z.z2: 1.0 + 0j}, decomp, fam)
    assert rep.lhs_starred == pytest.approx(1.0)  # diagonal |.|_+ = 1
    assert rep.rhs == fam.arc_max
    assert rep.lhs_starred_blocked == pytest.approx(rep.lhs_starred)


def test_bilinear_distant_pair_excluded():
    decomp, fam = _family(1105, epsilon=0.1)
    starred = decomp.starred()
    z = starred[0]
    w = max(starred, key=lambda m: median_dist(z, m))
    assert median_dist(z, w) >= decomp.locality
    rep = bilinear_form_bound({z.z2: 1.0 + 0j, w.z2: 1.0 + 0j}, decomp, fam)
    assert rep.lhs_starred == pytest.approx(2.0)  # only the two diagonals


def test_bilinear_blocked_equals_flat(circle1105):
    decomp, fam = _family(1105)
    rng = np.random.default_rng(3)
    bz = {m.z2: complex(rng.standard_normal(), rng.standard_normal())
          for m in decomp.starred()}
    rep = bilinear_form_bound(bz, decomp, fam)
    assert rep.lhs_starred_blocked == pytest.approx(rep.lhs_starred, rel=1e-12)
    assert rep.ratio_starred > 0.0
