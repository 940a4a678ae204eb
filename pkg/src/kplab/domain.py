"""Spectral domain: boundary geometry, weight function, and quadrature.

The domain is a bounded region in the right half of the complex plane
(k = p + iq, Re k >= a > 0) with a smooth, everywhere positively curved
boundary, star-shaped about its nominal center.  Integrals over the domain
are discretized with a Gauss-Legendre product rule through the polar map
(rho, theta) -> center + rho * (boundary(theta) - center).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import DomainInvalid, NonPositiveCurvature

DENSE_CHECK_POINTS = 4096


@dataclass(frozen=True)
class BoundarySpec:
    """Closed C^2 boundary curve, parameterized counterclockwise on [0, 2pi).

    kind:
        "circle"   radii = (rho,)
        "ellipse"  radii = (r_p, r_q), semi-axes along p and q
        "custom"   radius function of the polar angle about `center`,
                   given as a truncated Fourier series:
                   R(th) = fourier_cos[0] + sum_k fourier_cos[k] cos(k th)
                                          + sum_k fourier_sin[k-1] sin(k th)
    """

    kind: str
    center: tuple[float, float]
    radii: tuple[float, ...] = ()
    fourier_cos: tuple[float, ...] = ()
    fourier_sin: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("circle", "ellipse", "custom"):
            raise DomainInvalid(f"unknown boundary kind {self.kind!r}")
        if self.kind == "circle" and len(self.radii) != 1:
            raise DomainInvalid("circle needs one radius")
        if self.kind == "ellipse" and len(self.radii) != 2:
            raise DomainInvalid("ellipse needs two radii")
        if self.kind == "custom" and len(self.fourier_cos) == 0:
            raise DomainInvalid("custom boundary needs fourier_cos[0] > 0")
        if self.kind != "custom" and any(r <= 0 for r in self.radii):
            raise DomainInvalid("radii must be positive")

    # -- radius function (custom kind) ------------------------------------

    def _radius(self, th):
        r = np.full_like(th, self.fourier_cos[0], dtype=float)
        for k, c in enumerate(self.fourier_cos[1:], start=1):
            r += c * np.cos(k * th)
        for k, s in enumerate(self.fourier_sin, start=1):
            r += s * np.sin(k * th)
        return r

    def _radius_d1(self, th):
        r = np.zeros_like(th, dtype=float)
        for k, c in enumerate(self.fourier_cos[1:], start=1):
            r += -k * c * np.sin(k * th)
        for k, s in enumerate(self.fourier_sin, start=1):
            r += k * s * np.cos(k * th)
        return r

    def _radius_d2(self, th):
        r = np.zeros_like(th, dtype=float)
        for k, c in enumerate(self.fourier_cos[1:], start=1):
            r += -k * k * c * np.cos(k * th)
        for k, s in enumerate(self.fourier_sin, start=1):
            r += -k * k * s * np.sin(k * th)
        return r

    # -- point and derivatives ---------------------------------------------

    def point(self, th):
        """Boundary point (p, q) at parameter th; accepts arrays."""
        th = np.asarray(th, dtype=float)
        cp, cq = self.center
        if self.kind == "circle":
            rho = self.radii[0]
            return cp + rho * np.cos(th), cq + rho * np.sin(th)
        if self.kind == "ellipse":
            ra, rb = self.radii
            return cp + ra * np.cos(th), cq + rb * np.sin(th)
        r = self._radius(th)
        return cp + r * np.cos(th), cq + r * np.sin(th)

    def derivative(self, th):
        th = np.asarray(th, dtype=float)
        if self.kind == "circle":
            rho = self.radii[0]
            return -rho * np.sin(th), rho * np.cos(th)
        if self.kind == "ellipse":
            ra, rb = self.radii
            return -ra * np.sin(th), rb * np.cos(th)
        r, r1 = self._radius(th), self._radius_d1(th)
        c, s = np.cos(th), np.sin(th)
        return r1 * c - r * s, r1 * s + r * c

    def second_derivative(self, th):
        th = np.asarray(th, dtype=float)
        if self.kind == "circle":
            rho = self.radii[0]
            return -rho * np.cos(th), -rho * np.sin(th)
        if self.kind == "ellipse":
            ra, rb = self.radii
            return -ra * np.cos(th), -rb * np.sin(th)
        r = self._radius(th)
        r1 = self._radius_d1(th)
        r2 = self._radius_d2(th)
        c, s = np.cos(th), np.sin(th)
        return (r2 - r) * c - 2 * r1 * s, (r2 - r) * s + 2 * r1 * c


def boundary_point(spec: BoundarySpec, theta: float):
    """Point on the boundary at parameter theta, as a (p, q) pair."""
    p, q = spec.point(theta)
    return float(p), float(q)


def curvature_at(spec: BoundarySpec, theta):
    """Signed curvature at parameter theta (counterclockwise orientation).

    Raises NonPositiveCurvature if the value is not strictly positive;
    domains with flat or concave boundary stretches are rejected.
    """
    d1p, d1q = spec.derivative(theta)
    d2p, d2q = spec.second_derivative(theta)
    speed2 = d1p * d1p + d1q * d1q
    kappa = (d1p * d2q - d1q * d2p) / speed2 ** 1.5
    if np.any(np.asarray(kappa) <= 0.0):
        raise NonPositiveCurvature(
            f"curvature {np.min(kappa):.3e} <= 0 at theta={theta!r}"
        )
    return kappa if np.ndim(theta) else float(kappa)


@dataclass(frozen=True)
class WeightSpec:
    """Positive weight g(p, q) on the closed domain.

    kind "constant": g = value.
    kind "gaussian": g = value * exp(-((p-center_p)^2+(q-center_q)^2)/(2 sigma^2)).
    """

    kind: str = "constant"
    value: float = 1.0
    center: tuple[float, float] = (0.0, 0.0)
    sigma: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant", "gaussian"):
            raise DomainInvalid(f"unknown weight kind {self.kind!r}")
        if self.value <= 0:
            raise DomainInvalid("weight amplitude must be positive")
        if self.kind == "gaussian" and self.sigma <= 0:
            raise DomainInvalid("gaussian weight needs sigma > 0")

    def __call__(self, p, q):
        if self.kind == "constant":
            return np.full_like(np.asarray(p, dtype=float), self.value)
        dp = np.asarray(p, dtype=float) - self.center[0]
        dq = np.asarray(q, dtype=float) - self.center[1]
        return self.value * np.exp(-(dp * dp + dq * dq) / (2.0 * self.sigma**2))


@dataclass(frozen=True)
class SpectralDomain:
    """Bounded spectral domain with its boundary, weight, and Re-range.

    a = inf Re over the closure, b = sup Re.  Re k is harmonic, so both
    extremes sit on the boundary and are found by a dense parameter scan.
    """

    boundary: BoundarySpec
    weight: WeightSpec = field(default_factory=WeightSpec)
    a: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        th = np.linspace(0.0, 2.0 * np.pi, DENSE_CHECK_POINTS, endpoint=False)
        pvals, _ = self.boundary.point(th)
        object.__setattr__(self, "a", float(np.min(pvals)))
        object.__setattr__(self, "b", float(np.max(pvals)))


def default_domain() -> SpectralDomain:
    """Circle of radius 1 centered at (2, 0.5) with unit weight.

    The off-axis center breaks the q -> -q symmetry that would otherwise
    make the phase minimizer non-unique at Y = 0.
    """
    return SpectralDomain(
        BoundarySpec("circle", center=(2.0, 0.5), radii=(1.0,)),
        WeightSpec("constant", 1.0),
    )


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes, area weights, and weight-function values over the domain."""

    p: np.ndarray
    q: np.ndarray
    w: np.ndarray
    gvals: np.ndarray

    @property
    def n(self) -> int:
        return self.p.size

    @property
    def k(self) -> np.ndarray:
        return self.p + 1j * self.q

    def total_weight(self) -> float:
        return float(np.sum(self.w))

    def with_gvals(self, gvals: np.ndarray) -> "QuadratureRule":
        return QuadratureRule(self.p, self.q, self.w, np.asarray(gvals, dtype=float))


@dataclass
class ValidationCheck:
    name: str
    passed: bool
    value: float
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "ok": self.ok,
            "checks": [
                {"name": c.name, "passed": c.passed, "value": c.value, "detail": c.detail}
                for c in self.checks
            ],
        }


def validate_domain(domain: SpectralDomain) -> ValidationReport:
    """Report-only audit of the domain admissibility conditions.

    Checks distance to the imaginary axis, curvature positivity on a dense
    parameter grid, star-shapedness about the center (needed by the polar
    quadrature map), and weight positivity.
    """
    th = np.linspace(0.0, 2.0 * np.pi, DENSE_CHECK_POINTS, endpoint=False)
    bnd = domain.boundary
    pvals, qvals = bnd.point(th)
    checks = []

    dist = float(np.min(pvals))
    checks.append(
        ValidationCheck("axis_distance", dist > 0.0, dist,
                        "min Re over boundary; must be > 0")
    )

    d1p, d1q = bnd.derivative(th)
    d2p, d2q = bnd.second_derivative(th)
    speed2 = d1p * d1p + d1q * d1q
    kappa = (d1p * d2q - d1q * d2p) / speed2 ** 1.5
    kmin = float(np.min(kappa))
    checks.append(
        ValidationCheck("curvature_positive", kmin > 0.0, kmin,
                        "min signed curvature on dense grid")
    )

    cp, cq = bnd.center
    u, v = pvals - cp, qvals - cq
    cross = u * d1q - v * d1p
    cmin = float(np.min(cross))
    checks.append(
        ValidationCheck("star_shaped", cmin > 0.0, cmin,
                        "min of (gamma - c) x gamma' on dense grid")
    )

    gb = domain.weight(pvals, qvals)
    gi = domain.weight(cp + 0.5 * u, cq + 0.5 * v)
    gmin = float(min(np.min(gb), np.min(gi)))
    checks.append(
        ValidationCheck("weight_positive", gmin > 0.0, gmin,
                        "min weight on boundary and interior sample")
    )
    return ValidationReport(checks)


def build_quadrature(domain: SpectralDomain, n_radial: int, n_angular: int) -> QuadratureRule:
    """Gauss-Legendre product rule over the domain via the polar map.

    The map (rho, theta) -> center + rho * (boundary(theta) - center) has
    area element rho * ((gamma - c) x gamma') d rho d theta, which is exact
    for circles and ellipses and spectrally accurate for smooth custom
    boundaries.  All nodes are strictly interior.
    """
    if n_radial < 2 or n_angular < 2:
        raise DomainInvalid("need n_radial, n_angular >= 2")
    report = validate_domain(domain)
    if not report.ok:
        bad = [c.name for c in report.checks if not c.passed]
        raise DomainInvalid(f"domain invalid: {bad}")

    xr, wr = leggauss(n_radial)
    rho = 0.5 * (xr + 1.0)
    wr = 0.5 * wr
    xa, wa = leggauss(n_angular)
    th = np.pi * (xa + 1.0)
    wa = np.pi * wa

    bp, bq = domain.boundary.point(th)
    d1p, d1q = domain.boundary.derivative(th)
    cp, cq = domain.boundary.center
    u, v = bp - cp, bq - cq
    cross = u * d1q - v * d1p  # > 0 by star-shapedness

    P = cp + np.outer(rho, u)
    Q = cq + np.outer(rho, v)
    W = np.outer(rho * wr, wa * cross)

    p = P.ravel()
    q = Q.ravel()
    w = W.ravel()
    g = domain.weight(p, q)
    return QuadratureRule(p, q, w, g)
