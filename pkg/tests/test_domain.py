import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kplab.domain import (
    BoundarySpec,
    SpectralDomain,
    WeightSpec,
    boundary_point,
    build_quadrature,
    curvature_at,
    default_domain,
    validate_domain,
)
from kplab.errors import DomainInvalid, NonPositiveCurvature

from conftest import inside_fraction


def test_boundary_point_circle():
    spec = BoundarySpec("circle", center=(2.0, 0.0), radii=(1.0,))
    assert boundary_point(spec, 0.0) == pytest.approx((3.0, 0.0), abs=1e-14)
    assert boundary_point(spec, math.pi) == pytest.approx((1.0, 0.0), abs=1e-14)


def test_boundary_point_ellipse():
    spec = BoundarySpec("ellipse", center=(2.0, 0.5), radii=(1.0, 0.5))
    assert boundary_point(spec, math.pi / 2) == pytest.approx((2.0, 1.0), abs=1e-14)


def test_curvature_circle():
    assert curvature_at(BoundarySpec("circle", (2.0, 0.5), (1.0,)), 0.7) == pytest.approx(1.0)
    assert curvature_at(BoundarySpec("circle", (2.0, 0.5), (0.5,)), 2.1) == pytest.approx(2.0)


def test_curvature_ellipse_against_closed_form():
    # oracle: kappa(theta) = a b / (a^2 sin^2 + b^2 cos^2)^(3/2)
    a, b = 1.0, 0.5
    spec = BoundarySpec("ellipse", center=(2.0, 0.5), radii=(a, b))
    for theta in (0.0, 0.3, math.pi / 2, 2.2):
        oracle = a * b / (a**2 * math.sin(theta) ** 2 + b**2 * math.cos(theta) ** 2) ** 1.5
        assert curvature_at(spec, theta) == pytest.approx(oracle, rel=1e-12)
    assert curvature_at(spec, 0.0) == pytest.approx(4.0)


def test_curvature_invariant_under_parameterization_speed():
    # same geometric ellipse, once with the axis parameterization and once
    # as a Fourier radius function (different parameter speed along the curve)
    a, b = 1.0, 0.5
    ell = BoundarySpec("ellipse", center=(2.0, 0.5), radii=(a, b))
    phi = np.linspace(0.0, 2.0 * np.pi, 512, endpoint=False)
    r_of_phi = a * b / np.sqrt((b * np.cos(phi)) ** 2 + (a * np.sin(phi)) ** 2)
    coeffs = np.fft.rfft(r_of_phi) / phi.size
    fourier_cos = tuple([float(coeffs[0].real)] + [2.0 * float(c.real) for c in coeffs[1:80]])
    fourier_sin = tuple(-2.0 * float(c.imag) for c in coeffs[1:80])
    custom = BoundarySpec("custom", center=(2.0, 0.5), radii=(),
                          fourier_cos=fourier_cos, fourier_sin=fourier_sin)

    theta = 0.8  # axis parameter; same geometric point sits at polar angle phi0
    px, qy = ell.point(theta)
    phi0 = math.atan2(float(qy) - 0.5, float(px) - 2.0)
    k_ell = curvature_at(ell, theta)
    k_cus = curvature_at(custom, phi0)
    assert k_cus == pytest.approx(k_ell, rel=1e-8)


def test_nonpositive_curvature_rejected():
    dented = BoundarySpec("custom", center=(3.0, 0.0), radii=(),
                          fourier_cos=(1.0, 0.0, 0.0, 0.4))
    with pytest.raises(NonPositiveCurvature):
        curvature_at(dented, np.linspace(0, 2 * np.pi, 256))


def test_quadrature_circle_area(domain, rule32):
    assert rule32.total_weight() == pytest.approx(math.pi, abs=1e-8)
    assert rule32.p.min() > 0.0
    assert np.all(rule32.w > 0.0)


def test_quadrature_ellipse_area():
    dom = SpectralDomain(BoundarySpec("ellipse", (2.0, 0.5), (1.0, 0.5)))
    rule = build_quadrature(dom, 32, 32)
    assert rule.total_weight() == pytest.approx(math.pi / 2, abs=1e-6)


def test_quadrature_nodes_inside(domain, rule32):
    assert inside_fraction(domain, rule32.p, rule32.q) == 1.0


def test_quadrature_area_convergence_order():
    bnd = BoundarySpec("custom", center=(2.0, 0.5), radii=(),
                       fourier_cos=(1.0, 0.0, 0.08), fourier_sin=(0.05,))
    dom = SpectralDomain(bnd)
    ref = build_quadrature(dom, 96, 96).total_weight()
    errs = [abs(build_quadrature(dom, n, n).total_weight() - ref) for n in (6, 12, 24)]
    # order >= 2 in 1/n means at least 4x shrink per doubling
    assert errs[1] < errs[0] / 4
    assert errs[2] < errs[1] / 4 or errs[2] < 1e-12


def test_quadrature_rejects_invalid_domain():
    touching = SpectralDomain(BoundarySpec("circle", (1.0, 0.0), (1.0,)))
    with pytest.raises(DomainInvalid):
        build_quadrature(touching, 16, 16)


def test_validate_domain_pass():
    rep = validate_domain(SpectralDomain(BoundarySpec("circle", (2.0, 0.0), (1.0,))))
    assert rep.ok
    by_name = {c.name: c for c in rep.checks}
    assert by_name["axis_distance"].value == pytest.approx(1.0, abs=1e-6)
    assert by_name["weight_positive"].passed


def test_validate_domain_axis_failure():
    rep = validate_domain(SpectralDomain(BoundarySpec("circle", (1.0, 0.0), (1.0,))))
    assert not rep.ok
    by_name = {c.name: c for c in rep.checks}
    assert not by_name["axis_distance"].passed


def test_weight_kinds():
    g = WeightSpec("gaussian", value=2.0, center=(2.0, 0.5), sigma=0.7)
    assert float(g(np.array(2.0), np.array(0.5))) == pytest.approx(2.0)
    assert float(g(np.array(3.0), np.array(0.5))) < 2.0
    with pytest.raises(DomainInvalid):
        WeightSpec("constant", value=-1.0)
    with pytest.raises(DomainInvalid):
        WeightSpec("nope")


def test_domain_re_range(domain):
    assert domain.a == pytest.approx(1.0, abs=1e-6)
    assert domain.b == pytest.approx(3.0, abs=1e-6)


@settings(max_examples=25, deadline=None)
@given(
    cp=st.floats(1.5, 4.0),
    cq=st.floats(-1.0, 1.0),
    rho=st.floats(0.2, 1.0),
)
def test_quadrature_properties_random_circles(cp, cq, rho):
    dom = SpectralDomain(BoundarySpec("circle", (cp, cq), (rho,)))
    rule = build_quadrature(dom, 12, 12)
    assert np.all(rule.w > 0)
    assert rule.total_weight() == pytest.approx(math.pi * rho**2, rel=1e-10)
    assert rule.p.min() > cp - rho - 1e-12


def test_default_domain_matches_spec():
    dom = default_domain()
    assert dom.boundary.kind == "circle"
    assert dom.boundary.center == (2.0, 0.5)
    assert dom.boundary.radii == (1.0,)
