import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kplab.asymptotics import moment_leading_coefficient
from kplab.domain import build_quadrature
from kplab.fredholm import assemble_A, inner_psi_e, solve_psi
from kplab.phase import frame_at
from kplab.reduction import (
    binom_matrix,
    c_matrix,
    c_matrix_exact,
    det_DN,
    det_exact,
    layered_rule,
    moments,
    psiN_inner_dx,
    psiN_inner_logdet,
    psiN_inner_rowrep,
    rs_to_pq,
    subdomain_spec,
)

from conftest import inside_fraction


@pytest.fixture(scope="module")
def spec2(domain, frame05):
    return subdomain_spec(domain, frame05, 2)


def test_c_matrix_small_entries():
    p0 = 1.3
    cm = c_matrix(2, p0)
    assert cm.entries[0, 0] == pytest.approx(1.0 / (2 * p0))
    assert cm.entries[0, 1] == pytest.approx(-1.0 / (2 * p0) ** 2)
    assert cm.entries[1, 1] == pytest.approx(2.0 / (2 * p0) ** 3)
    assert cm.entries[1, 0] == cm.entries[0, 1]


def test_c_matrix_log_gamma_matches_exact():
    p0 = 0.73
    cm = c_matrix(8, p0)
    for i in (0, 3, 8):
        for j in (0, 5, 8):
            exact = (-1) ** (i + j) * math.comb(i + j, i) / (2 * p0) ** (i + j + 1)
            assert cm.entries[i, j] == pytest.approx(exact, rel=1e-12)


def test_sign_cancellation_identity_exact():
    # det of the signed block equals (2 p0)^(-n^2) det of the binomial block
    p0 = Fraction(3, 2)
    for n in range(1, 7):
        signed = det_exact(c_matrix_exact(n, p0))
        plain = det_exact(binom_matrix(n))
        assert signed == plain / (2 * p0) ** (n * n)
        assert signed > 0


def test_fs_identity_exact_integers():
    # n det C0^(n) = det C1^(n-1), all in integer arithmetic
    for n in range(2, 7):
        lhs = n * det_exact(binom_matrix(n))
        rhs = det_exact(binom_matrix(n - 1, start=1))
        assert lhs == rhs
    assert det_exact([[1, 1], [1, 2]]) == 1
    assert det_exact(binom_matrix(1, start=1)) == 2


def test_c00_derivative_relation():
    # d/dC00 det = 2 p0 n det (finite differences in the C00 slot)
    p0 = 1.21
    for n in (2, 3, 5):
        base = c_matrix(n - 1, p0).entries
        det0 = np.linalg.det(base)
        h = 1e-3 * base[0, 0]
        up, dn = base.copy(), base.copy()
        up[0, 0] += h
        dn[0, 0] -= h
        fd = (np.linalg.det(up) - np.linalg.det(dn)) / (2 * h)
        assert fd == pytest.approx(2.0 * p0 * n * det0, rel=1e-6)


@settings(max_examples=25, deadline=None)
@given(p0=st.floats(0.2, 8.0), n=st.integers(1, 5))
def test_c_determinant_positive(p0, n):
    assert np.linalg.det(c_matrix(n - 1, p0).entries) > 0


def test_subdomain_bounds(domain, frame05, spec2):
    fr = frame05
    truncation_bound = fr.quad_coeff * fr.p0**2 / (16 * 4 * (fr.dp_ds**2 + fr.dp_dr**2))
    assert spec2.eps0 <= truncation_bound * (1 + 1e-12)
    assert spec2.delta0 == pytest.approx(
        2.0 * math.hypot(fr.dp_ds, fr.dp_dr) * math.sqrt(spec2.eps0 / fr.quad_coeff))
    # polydisk containment: every sliver point within p0/2 of k0
    for r in np.linspace(1e-5, spec2.eps0, 8):
        lo, hi = spec2.s_limits(float(r))
        s = np.linspace(lo, hi, 7)
        p, q = rs_to_pq(spec2, np.full(7, r), s)
        assert np.all(np.hypot(p - fr.p0, q - fr.q0) < 0.5 * fr.p0)


def test_s_limits_leading_coefficient(spec2, frame05):
    # s_pm(r) = +-sqrt(r / quad_coeff) (1 + O(sqrt r))
    for r in (1e-5, 1e-4, 1e-3):
        lo, hi = spec2.s_limits(r)
        pred = math.sqrt(r / frame05.quad_coeff)
        assert hi == pytest.approx(pred, rel=0.02)
        assert lo == pytest.approx(-pred, rel=0.02)


def test_rs_chart_roundtrip(spec2):
    r = np.array([1e-4, 5e-3, 0.3 * spec2.eps0])
    s = np.array([1e-3, -2e-3, 5e-4])
    p, q = rs_to_pq(spec2, r, s)
    fr = spec2.frame
    from kplab.phase import phase_f

    r_back = 2.0 * p * (phase_f(p, q, fr.y_ratio) - fr.f_min)
    s_back = (p - fr.p0) * fr.tangent.real + (q - fr.q0) * fr.tangent.imag
    assert np.allclose(r_back, r, rtol=1e-10, atol=1e-14)
    assert np.allclose(s_back, s, rtol=1e-10, atol=1e-14)


def test_moments_hermitian_and_psd(domain, spec2, frame05):
    t = 500.0
    mom = moments(domain, spec2, x=frame05.f_min * t + 1.0, t=t)
    J = mom.values
    assert np.max(np.abs(J - J.conj().T)) <= 1e-12 * np.max(np.abs(J))
    assert J[0, 0].real > 0
    eig = np.linalg.eigvalsh(J)
    assert eig[0] >= -1e-10 * np.trace(J).real


def test_moments_leading_asymptote(domain, spec2, frame05):
    # J_00 t^(3/2) exp(-2 p0 xi) converges to the leading coefficient with
    # drift shrinking at least like t^(-1/2); odd moments carry an extra
    # t^(-1/2) suppression relative to their naive order
    xi = 0.5
    lead = moment_leading_coefficient(frame05, 0, 0).real
    drifts, odd_ratios = [], []
    for t in (1e2, 1e3, 1e4):
        mom = moments(domain, spec2, x=frame05.f_min * t + xi, t=t)
        J = mom.values
        val = J[0, 0].real * t**1.5 * math.exp(-2.0 * frame05.p0 * xi)
        drifts.append(abs(val / lead - 1.0))
        odd_ratios.append(abs(J[0, 1] / J[0, 0]) * t)
    assert drifts[1] <= drifts[0] * 10**-0.5 * 1.5
    assert drifts[2] <= drifts[1] * 10**-0.5 * 1.5
    assert max(odd_ratios) <= 2.0 * min(odd_ratios)  # bounded: J01/J00 ~ 1/t


def test_moments_resolution_stability(domain, spec2, frame05):
    t = 1e3
    x = frame05.f_min * t + 1.0
    a = moments(domain, spec2, x, t, n_r=48, n_s=48).values
    b = moments(domain, spec2, x, t, n_r=80, n_s=80).values
    assert np.max(np.abs(a - b)) <= 1e-10 * np.max(np.abs(b))


def test_logdet_equals_rowrep(domain, spec2, frame05):
    cm = c_matrix(2, frame05.p0)
    for xi, t in ((0.0, 100.0), (2.0, 1000.0), (-3.0, 300.0)):
        mom = moments(domain, spec2, x=frame05.f_min * t + xi, t=t)
        a = psiN_inner_logdet(cm, mom)
        b = psiN_inner_rowrep(cm, mom)
        assert a == pytest.approx(b, rel=1e-10)
        assert det_DN(cm, mom) > 0


def test_scalar_reduction_identity(domain, frame05):
    spec1 = subdomain_spec(domain, frame05, 1)
    spec1.N = 0  # scalar moments on the same sliver
    cm0 = c_matrix(0, frame05.p0)
    t = 200.0
    mom = moments(domain, spec1, x=frame05.f_min * t + 0.5, t=t)
    j00 = mom.values[0, 0].real
    expected = j00 / (1.0 + cm0.entries[0, 0] * j00)
    assert psiN_inner_logdet(cm0, mom) == pytest.approx(expected, rel=1e-12)
    assert psiN_inner_rowrep(cm0, mom) == pytest.approx(expected, rel=1e-12)


def test_inner_dx_matches_finite_difference(domain, spec2, frame05):
    cm = c_matrix(2, frame05.p0)
    t = 100.0
    x = frame05.f_min * t + 1.0
    val, dval = psiN_inner_dx(cm, moments(domain, spec2, x, t))
    h = 1e-4
    vp = psiN_inner_logdet(cm, moments(domain, spec2, x + h, t))
    vm = psiN_inner_logdet(cm, moments(domain, spec2, x - h, t))
    assert val == pytest.approx(psiN_inner_logdet(cm, moments(domain, spec2, x, t)))
    assert dval == pytest.approx((vp - vm) / (2 * h), rel=1e-7)


def test_layered_rule_properties(domain, spec2):
    lay = layered_rule(domain, spec2, 32, 32, n_r=48, n_s=24, t=1000.0)
    assert lay.total_weight() == pytest.approx(math.pi, abs=1e-9)
    assert np.all(lay.w > 0)
    assert inside_fraction(domain, lay.p, lay.q) == 1.0


def test_layered_rule_resolves_reference_point(domain, frame05, spec2):
    # the t = 10 boundary layer: two layered resolutions must agree to 1e-6,
    # which the plain polar rule cannot achieve at any desk-scale size
    t = 10.0
    x = frame05.f_min * t
    va = inner_psi_e(solve_psi(assemble_A(
        domain, layered_rule(domain, spec2, 32, 32, n_r=48, n_s=32, t=t),
        x, 5.0, t)))
    vb = inner_psi_e(solve_psi(assemble_A(
        domain, layered_rule(domain, spec2, 40, 40, n_r=64, n_s=40, t=t),
        x, 5.0, t)))
    assert va > 0
    assert vb == pytest.approx(va, rel=1e-6)


def test_full_solve_matches_reduction_at_large_t(domain, frame05):
    spec1 = subdomain_spec(domain, frame05, 1)
    cm1 = c_matrix(1, frame05.p0)
    t = 1000.0
    x = frame05.f_min * t + 1.0
    lay = layered_rule(domain, spec1, 32, 32, n_r=48, n_s=24, t=t)
    pe = inner_psi_e(solve_psi(assemble_A(domain, lay, x, 0.5 * t, t)))
    pn = psiN_inner_logdet(cm1, moments(domain, spec1, x, t))
    assert pn == pytest.approx(pe, rel=1e-6)


def test_order_bounds():
    with pytest.raises(ValueError):
        c_matrix(9, 1.0)
    with pytest.raises(ValueError):
        c_matrix(-1, 1.0)
    with pytest.raises(ValueError):
        c_matrix(2, -1.0)


def test_u_degenerate_tracks_exact_within_band(domain, spec2, frame05):
    # field-level agreement inside the first dominance window, within the
    # t^(-1/2)-type band (the measured gap is far smaller)
    from kplab.reduction import u_degenerate
    from kplab.fredholm import u_exact

    for t in (100.0, 1000.0):
        x = frame05.f_min * t + 1.0
        lay = layered_rule(domain, spec2, 32, 32, n_r=48, n_s=24, t=t)
        ue = u_exact(domain, lay, x, 0.5 * t, t)
        ud = u_degenerate(domain, spec2, x, 0.5 * t, t)
        assert abs(ud - ue) <= t**-0.4


def test_u_degenerate_approaches_tau_field(domain, frame05):
    from kplab.asymptotics import TrainParams, u_theta
    from kplab.reduction import u_degenerate

    spec3 = subdomain_spec(domain, frame05, 3)
    params = TrainParams(0.5, 3, frame05)
    t = 1e4
    xi = params.ridge_xi(1, t)
    ud = u_degenerate(domain, spec3, frame05.f_min * t + xi, 0.5 * t, t)
    uth = float(u_theta(params, xi, t))
    assert abs(ud - uth) < 5e-2  # o(1) gap at large t


def test_singular_denominator_raises():
    from kplab.errors import SingularDN
    from kplab.reduction import MomentMatrix

    cm = c_matrix(1, 0.5)  # 2 p0 = 1 so C00 = 1 exactly
    bad = np.array([[-1.0, 0.0], [0.0, 0.0]], dtype=complex)
    mom = MomentMatrix(order=1, xi=0.0, t=1.0, log_scale=0.0,
                       scaled=bad, scaled_dx=np.zeros_like(bad))
    with pytest.raises(SingularDN):
        psiN_inner_rowrep(cm, mom)  # I + C J has an exactly zero row
