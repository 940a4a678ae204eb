import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kplab.domain import BoundarySpec, SpectralDomain, build_quadrature
from kplab.errors import NonUniqueMinimizer
from kplab.phase import (
    FrameCache,
    find_k0,
    frame_at,
    golden_min,
    level_curvature,
    log_E,
    phase_f,
)


def test_phase_f_values():
    assert phase_f(2.0, 0.0, 17.3) == pytest.approx(4.0)
    assert phase_f(1.0, 1.0, 1.0) == pytest.approx(-4.0)
    assert phase_f(3.0, -1.0, 2.0) == pytest.approx(10.0)


@given(p=st.floats(-10, 10), q=st.floats(-10, 10), Y=st.floats(-10, 10))
def test_phase_f_even_in_q_and_Y(p, q, Y):
    assert phase_f(p, -q, -Y) == phase_f(p, q, Y)


def test_log_E_values():
    f = phase_f(1.2, 0.3, 0.7)
    assert log_E(1.2, 0.3, f * 5.0, 5.0, 0.7) == pytest.approx(0.0, abs=1e-12)
    assert log_E(1.0, 0.0, 5.0, 2.0, 0.0) == pytest.approx(3.0)
    assert log_E(2.0, 0.4, -7.0, 0.0, 0.0) == pytest.approx(-14.0)


def test_golden_min_quadratic():
    # comparison-based search localizes a smooth minimum to ~sqrt(eps)
    xmin = golden_min(lambda x: (x - 0.37) ** 2 + 1.0, -1.0, 2.0, 1e-12)
    assert xmin == pytest.approx(0.37, abs=5e-8)


def test_find_k0_nonunique_symmetric_circle():
    dom = SpectralDomain(BoundarySpec("circle", (2.0, 0.0), (1.0,)))
    with pytest.raises(NonUniqueMinimizer):
        find_k0(dom, 0.0)


def test_find_k0_against_dense_oracle(domain):
    pm = find_k0(domain, 1.0)
    th = np.linspace(0.0, 2.0 * np.pi, 10**6, endpoint=False)
    pv, qv = domain.boundary.point(th)
    fv = phase_f(pv, qv, 1.0)
    i = int(np.argmin(fv))
    assert pm.f_min <= fv[i] + 1e-12
    dist = abs(pm.theta - th[i]) % (2 * np.pi)
    assert min(dist, 2 * np.pi - dist) < 1e-5


def test_minimality_over_quadrature_nodes(domain, rule32, frame05):
    rng = np.random.default_rng(7)
    idx = rng.choice(rule32.n, size=500, replace=False)
    fv = phase_f(rule32.p[idx], rule32.q[idx], 0.5)
    assert np.all(fv >= frame05.f_min - 1e-9)


def test_find_k0_scan_offset_stability(domain):
    a = find_k0(domain, 1.0, scan_offset=0.0)
    b = find_k0(domain, 1.0, scan_offset=1.7e-4)
    assert abs(a.theta - b.theta) < 1e-10


def test_speed_lipschitz_in_Y(domain):
    th = np.linspace(0, 2 * np.pi, 2048, endpoint=False)
    _, qv = domain.boundary.point(th)
    L = 2.0 * np.max(np.abs(qv))
    delta = 1e-4
    for Y in (0.3, 0.5, 1.0):
        c0 = find_k0(domain, Y).f_min
        c1 = find_k0(domain, Y + delta).f_min
        assert abs(c1 - c0) <= L * delta * (1.0 + 1e-6)


def test_frame_unit_tangent_relation(domain, frame05, frame1):
    for fr in (frame05, frame1):
        assert abs(fr.tangent_scaled) * fr.quad_coeff == pytest.approx(1.0, abs=1e-10)
        assert abs(fr.tangent) == pytest.approx(1.0, abs=1e-10)
        assert fr.quad_coeff > 0
        assert math.hypot(*fr.grad_f) > 1e-10
        assert abs(fr.jac_rs) == pytest.approx(1.0 / fr.grad_F_norm, rel=1e-10)


def test_frame_k0_on_boundary(domain, frame1):
    bp, bq = domain.boundary.point(frame1.theta0)
    assert abs(complex(float(bp), float(bq)) - frame1.k0) < 1e-10


def test_quad_coeff_against_boundary_fit(domain, frame1):
    # sample the boundary near k0, compute (r, s), regress r = a s^2 + b s^3
    fr = frame1
    bnd = domain.boundary
    d1p, d1q = bnd.derivative(fr.theta0)
    speed = math.hypot(float(d1p), float(d1q))
    svals, rvals = [], []
    for s_t in np.concatenate([-np.logspace(-4, -2, 25), np.logspace(-4, -2, 25)]):
        bp, bq = bnd.point(fr.theta0 + s_t / speed)
        rel_p, rel_q = float(bp) - fr.p0, float(bq) - fr.q0
        svals.append(rel_p * fr.tangent.real + rel_q * fr.tangent.imag)
        rvals.append(2.0 * float(bp) * (phase_f(float(bp), float(bq), fr.y_ratio) - fr.f_min))
    s = np.array(svals)
    coef, *_ = np.linalg.lstsq(np.vstack([s**2, s**3]).T, np.array(rvals), rcond=None)
    assert coef[0] == pytest.approx(fr.quad_coeff, rel=1e-4)


def test_level_curvature_closed_form_and_fd():
    # generic point: f_p = 3, f_q = -6.8, closed form |2 f_q^2 - 6 f_p^2|/|grad|^3
    p0, q0, Y = 1.5, 0.8, 1.0
    fp, fq = 2.0 * p0, -6.0 * q0 - 2.0 * Y
    expected = abs(2.0 * fq**2 - 6.0 * fp**2) / (fp**2 + fq**2) ** 1.5
    assert level_curvature(p0, q0, Y) == pytest.approx(expected, rel=1e-14)

    # finite-difference oracle: walk the level set over its tangent line
    c = phase_f(p0, q0, Y)
    gn = math.hypot(fp, fq)
    nx, ny = fp / gn, fq / gn
    tx, ty = -ny, nx
    dd = 1e-4
    offs = []
    for sgn in (-1.0, 1.0):
        lo, hi = -1.0, 1.0
        fun = lambda h: phase_f(p0 + sgn * dd * tx + h * nx,
                                q0 + sgn * dd * ty + h * ny, Y) - c
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if fun(lo) * fun(mid) <= 0:
                hi = mid
            else:
                lo = mid
        offs.append(0.5 * (lo + hi))
    kappa_fd = abs(offs[0] + offs[1]) / dd**2
    assert level_curvature(p0, q0, Y) == pytest.approx(kappa_fd, rel=1e-5)


@settings(max_examples=20, deadline=None)
@given(Y=st.floats(-1.5, 1.5))
def test_frame_invariants_random_Y(domain, Y):
    try:
        fr = frame_at(domain, Y)
    except NonUniqueMinimizer:
        return
    assert fr.quad_coeff > 0
    assert abs(fr.tangent_scaled) * fr.quad_coeff == pytest.approx(1.0, abs=1e-8)
    # minimality on a coarse interior sample
    rule = build_quadrature(domain, 8, 8)
    assert np.min(phase_f(rule.p, rule.q, Y)) >= fr.f_min - 1e-9


def test_frame_cache_identity(domain):
    cache = FrameCache(domain)
    assert cache.get(0.5) is cache.get(0.5)


def test_frame_as_dict_roundtrip(frame05):
    d = frame05.as_dict()
    assert d["p0"] == frame05.p0
    assert d["quad_coeff"] == frame05.quad_coeff
    assert set(d) >= {"y_ratio", "f_min", "boundary_curv", "level_curv",
                      "same_side", "tangent", "jac_rs", "g0"}
