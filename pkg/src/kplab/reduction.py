"""Degenerate-kernel reduction: Taylor coefficients, boundary sliver,
moment integrals, and the (N+1) x (N+1) determinant formulas.

The kernel factor 1/(lam + conj(k)) expands as a double power series about
the phase minimizer k0 with coefficients
    C_ij = (-1)^(i+j) (i+j)! / (i! j! (2 p0)^(i+j+1)),
convergent on the polydisk |lam - k0| < p0, |k - k0| < p0.  Truncating at
order N and restricting to a thin boundary sliver G around k0 reduces the
integral equation to an (N+1)-dimensional linear system whose data are the
moment integrals
    J_lj = int_G E^2 (k - k0)^l (conj(k) - conj(k0))^j g dp dq.

The moments are integrated directly in the local (r, s) coordinates
(r = 2p(f - f_min), s = tangential offset), where the integrand factorizes
as exp(2 p xi - r t): a product Gauss-Legendre rule graded toward r = 0
resolves the O(1/t)-thin concentration that no global rule can see.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq
from scipy.special import gammaln

from .domain import QuadratureRule, SpectralDomain
from .errors import IllConditioned, SingularDN
from .phase import MinimizerFrame, grad_phase_f, phase_f

MAX_ORDER = 8
R_CUT_DECADES = 30.0  # e^{-rt} tail below exp(-30) goes to the second panel


@dataclass(frozen=True)
class CoefficientMatrix:
    """Taylor coefficients C_ij of the kernel about k0, 0 <= i, j <= order."""

    order: int
    p0: float
    entries: np.ndarray

    def block(self, n: int) -> np.ndarray:
        """Leading n x n block (i, j = 0 .. n-1)."""
        return self.entries[:n, :n]


def c_matrix(N: int, p0: float) -> CoefficientMatrix:
    """Kernel Taylor coefficients via log-gamma (safe for large i+j).

    C_00 = 1/(2 p0), C_01 = -1/(2 p0)^2, C_11 = 2/(2 p0)^3, and in general
    sign (-1)^(i+j) with magnitude binom(i+j, i) / (2 p0)^(i+j+1).
    """
    if N < 0 or N > MAX_ORDER:
        raise ValueError(f"order must be in [0, {MAX_ORDER}]")
    if p0 <= 0:
        raise ValueError("p0 must be positive")
    i = np.arange(N + 1)
    ii, jj = np.meshgrid(i, i, indexing="ij")
    logmag = (gammaln(ii + jj + 1) - gammaln(ii + 1) - gammaln(jj + 1)
              - (ii + jj + 1) * math.log(2.0 * p0))
    sign = np.where((ii + jj) % 2 == 0, 1.0, -1.0)
    return CoefficientMatrix(N, p0, sign * np.exp(logmag))


def c_matrix_exact(n: int, p0: Fraction) -> list:
    """n x n block of C_ij in exact rational arithmetic (tests, n <= 6)."""
    two_p0 = 2 * p0
    return [
        [Fraction((-1) ** (i + j) * math.comb(i + j, i), 1) / two_p0 ** (i + j + 1)
         for j in range(n)]
        for i in range(n)
    ]


def binom_matrix(n: int, start: int = 0) -> list:
    """Integer matrix (i+j)!/(i! j!) for i, j = start .. start+n-1."""
    return [[math.comb(i + j, i) for j in range(start, start + n)]
            for i in range(start, start + n)]


def det_exact(mat: list):
    """Exact determinant by fraction-free Gaussian elimination (small n)."""
    n = len(mat)
    a = [[Fraction(x) for x in row] for row in mat]
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            det = -det
        det *= a[col][col]
        inv = 1 / a[col][col]
        for r in range(col + 1, n):
            factor = a[r][col] * inv
            for c in range(col, n):
                a[r][c] -= factor * a[col][c]
    return det


@dataclass
class SubdomainSpec:
    """Boundary sliver G = {0 < r < eps0, s_minus(r) < s < s_plus(r)}.

    eps0 obeys the truncation bound quad_coeff p0^2 / (16 N^2 |grad p|^2)
    and is additionally capped so G stays inside the polydisk of the Taylor
    series (max |k - k0| < p0 / 2).  delta0 = 2 |grad p| sqrt(eps0 /
    quad_coeff) is the associated p-excursion scale.
    """

    domain: SpectralDomain
    frame: MinimizerFrame
    N: int
    eps0: float
    delta0: float
    theta_span: float

    def boundary_r(self, th) -> float:
        """Scaled phase r = 2 p (f - f_min) at boundary parameter th."""
        fr = self.frame
        p, q = self.domain.boundary.point(th)
        return 2.0 * float(p) * (phase_f(float(p), float(q), fr.y_ratio) - fr.f_min)

    def s_of_theta(self, th) -> float:
        fr = self.frame
        p, q = self.domain.boundary.point(th)
        return ((float(p) - fr.p0) * fr.tangent.real
                + (float(q) - fr.q0) * fr.tangent.imag)

    def s_limits(self, r: float) -> tuple[float, float]:
        """Tangential coordinates of the two boundary crossings at level r."""
        fr = self.frame
        lo = brentq(lambda th: self.boundary_r(th) - r,
                    fr.theta0 - self.theta_span, fr.theta0, xtol=1e-14)
        hi = brentq(lambda th: self.boundary_r(th) - r,
                    fr.theta0, fr.theta0 + self.theta_span, xtol=1e-14)
        return self.s_of_theta(lo), self.s_of_theta(hi)


def subdomain_spec(domain: SpectralDomain, frame: MinimizerFrame, N: int) -> SubdomainSpec:
    """Construct the sliver G for truncation order N at this frame.

    The polydisk cap is enforced by explicit sampling: eps0 halves until
    every sampled point of the closed sliver lies within p0/2 of k0.
    """
    if N < 1 or N > MAX_ORDER:
        raise ValueError(f"N must be in [1, {MAX_ORDER}]")
    grad_p2 = frame.dp_ds**2 + frame.dp_dr**2
    eps0 = frame.quad_coeff * frame.p0**2 / (16.0 * N**2 * grad_p2)

    spec = SubdomainSpec(domain, frame, N, eps0, 0.0, 0.0)
    for _ in range(60):
        spec.eps0 = eps0
        spec.theta_span = _theta_span_for(spec)
        if _max_distance(spec) < 0.5 * frame.p0:
            break
        eps0 *= 0.5
    else:
        raise IllConditioned("could not fit the sliver inside the polydisk")
    spec.delta0 = 2.0 * math.sqrt(grad_p2) * math.sqrt(spec.eps0 / frame.quad_coeff)
    return spec


def _theta_span_for(spec: SubdomainSpec) -> float:
    """Smallest parameter span around theta0 whose r exceeds eps0 on both sides."""
    fr = spec.frame
    d1p, d1q = spec.domain.boundary.derivative(fr.theta0)
    span = 2.0 * math.sqrt(spec.eps0 / fr.quad_coeff)  # leading-order estimate
    span /= math.hypot(float(d1p), float(d1q))
    for _ in range(60):
        if all(spec.boundary_r(fr.theta0 + sgn * span) > spec.eps0
               for sgn in (-1.0, 1.0)):
            return span
        span *= 1.5
    raise IllConditioned("boundary never leaves the sliver; eps0 too large")


def _max_distance(spec: SubdomainSpec) -> float:
    fr = spec.frame
    rr = np.linspace(1e-6 * spec.eps0, spec.eps0, 12)
    dmax = 0.0
    for r in rr:
        s_lo, s_hi = spec.s_limits(float(r))
        for s in np.linspace(s_lo, s_hi, 9):
            p, q = rs_to_pq(spec, np.array([r]), np.array([s]))
            dmax = max(dmax, math.hypot(p[0] - fr.p0, q[0] - fr.q0))
    return dmax


def rs_to_pq(spec: SubdomainSpec, r: np.ndarray, s: np.ndarray):
    """Invert the (r, s) chart by vectorized Newton iteration.

    Initial guess k0 + s tau + (r/|grad F|) n; quadratic convergence on the
    sliver, where the chart is a diffeomorphism by construction.
    """
    fr = spec.frame
    Y = fr.y_ratio
    fp0, fq0 = fr.grad_f
    gn = math.hypot(fp0, fq0)
    nx, ny = fp0 / gn, fq0 / gn
    p = fr.p0 + s * fr.tangent.real + (r / fr.grad_F_norm) * nx
    q = fr.q0 + s * fr.tangent.imag + (r / fr.grad_F_norm) * ny
    for _ in range(30):
        f = phase_f(p, q, Y)
        fp, fq = grad_phase_f(p, q, Y)
        res_r = 2.0 * p * (f - fr.f_min) - r
        res_s = ((p - fr.p0) * fr.tangent.real + (q - fr.q0) * fr.tangent.imag) - s
        if max(np.max(np.abs(res_r)), np.max(np.abs(res_s))) < 1e-13 * (1.0 + np.max(np.abs(r))):
            break
        Fp = 2.0 * (f - fr.f_min) + 2.0 * p * fp
        Fq = 2.0 * p * fq
        det = Fp * fr.tangent.imag - Fq * fr.tangent.real
        p = p - (fr.tangent.imag * res_r - Fq * res_s) / det
        q = q - (-fr.tangent.real * res_r + Fp * res_s) / det
    return p, q


def jac_rs_at(spec: SubdomainSpec, p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """|d(p,q)/d(r,s)| at given points (reciprocal forward Jacobian)."""
    fr = spec.frame
    f = phase_f(p, q, fr.y_ratio)
    fp, fq = grad_phase_f(p, q, fr.y_ratio)
    Fp = 2.0 * (f - fr.f_min) + 2.0 * p * fp
    Fq = 2.0 * p * fq
    det = Fp * fr.tangent.imag - Fq * fr.tangent.real
    return 1.0 / np.abs(det)


def sliver_grid(spec: SubdomainSpec, n_r: int, n_s: int,
                t: float | None = None):
    """Product quadrature grid over G in (r, s) coordinates.

    Returns flat arrays (p, q, r, weight) where weight already contains the
    chart Jacobian.  The radial variable is substituted r = r_hi * v^2,
    which both grades nodes toward r = 0 and removes the sqrt(r) width of
    the sliver from the integrand.  When t is given the main panel is
    clipped at r = R_CUT_DECADES / t and a coarse tail panel covers the
    exponentially dead remainder.
    """
    panels = []
    if t is not None and R_CUT_DECADES / t < spec.eps0:
        panels.append((R_CUT_DECADES / t, n_r, True))
        panels.append((spec.eps0, max(16, n_r // 3), False))
    else:
        panels.append((spec.eps0, n_r, True))

    ps, qs, rs, ws = [], [], [], []
    r_lo = 0.0
    for r_hi, n, graded in panels:
        xv, wv = leggauss(n)
        if graded:
            v = 0.5 * (xv + 1.0)
            r_nodes = r_lo + (r_hi - r_lo) * v * v
            dr = (r_hi - r_lo) * v * wv  # 2 v dv * (w/2)
        else:
            r_nodes = r_lo + 0.5 * (r_hi - r_lo) * (xv + 1.0)
            dr = 0.5 * (r_hi - r_lo) * wv
        xs, wsv = leggauss(n_s)
        for rk, wrk in zip(r_nodes, dr):
            s_lo, s_hi = spec.s_limits(float(rk))
            mid, half = 0.5 * (s_hi + s_lo), 0.5 * (s_hi - s_lo)
            s_nodes = mid + half * xs
            p, q = rs_to_pq(spec, np.full(n_s, rk), s_nodes)
            jac = jac_rs_at(spec, p, q)
            ps.append(p)
            qs.append(q)
            rs.append(np.full(n_s, rk))
            ws.append(wrk * half * wsv * jac)
        r_lo = r_hi
    return (np.concatenate(ps), np.concatenate(qs),
            np.concatenate(rs), np.concatenate(ws))


def layered_rule(domain: SpectralDomain, spec: SubdomainSpec, n_radial: int,
                 n_angular: int, n_r: int = 64, n_s: int = 32,
                 t: float | None = None) -> QuadratureRule:
    """Quadrature over the domain split into bulk and boundary sliver.

    The bulk polar rule integrates the domain minus G exactly: each ray
    aimed at the sliver's boundary shadow is clipped at the r = eps0 level
    curve, and the angular integration is paneled at the shadow edges
    (where the clipping radius has a kink).  The sliver itself gets the
    graded (r, s) rule, t-aware when t is given.  Resolves integrands
    concentrated near the phase minimizer at large t, which the plain
    polar rule cannot see.
    """
    fr = spec.frame
    bnd = domain.boundary
    cp, cq = bnd.center
    Y = fr.y_ratio
    two_pi = 2.0 * math.pi

    # shadow edges: boundary parameters where r crosses eps0 around theta0
    th_lo = brentq(lambda th: spec.boundary_r(th) - spec.eps0,
                   fr.theta0 - spec.theta_span, fr.theta0, xtol=1e-14)
    th_hi = brentq(lambda th: spec.boundary_r(th) - spec.eps0,
                   fr.theta0, fr.theta0 + spec.theta_span, xtol=1e-14)

    def r_along_ray(rho_val, ui, vi):
        p = cp + rho_val * ui
        q = cq + rho_val * vi
        return 2.0 * p * (phase_f(p, q, Y) - fr.f_min)

    xr, wr = leggauss(n_radial)
    rho = 0.5 * (xr + 1.0)
    wr = 0.5 * wr

    ps, qs, ws = [], [], []
    shadow_frac = (th_hi - th_lo) / two_pi
    panels = [
        (th_lo, th_hi, max(8, int(round(n_angular * max(shadow_frac, 0.15))))),
        (th_hi, th_lo + two_pi, n_angular),
    ]
    for a_lo, a_hi, n_ang in panels:
        half = 0.5 * (a_hi - a_lo)
        xa, wa = leggauss(n_ang)
        th = 0.5 * (a_hi + a_lo) + half * xa
        wth = half * wa
        bp, bq = bnd.point(th)
        d1p, d1q = bnd.derivative(th)
        u, v = bp - cp, bq - cq
        cross = u * d1q - v * d1p
        rho_out = np.ones_like(th)
        for i in range(th.size):
            if r_along_ray(1.0, u[i], v[i]) < spec.eps0:
                rho_out[i] = brentq(
                    lambda rv: r_along_ray(rv, u[i], v[i]) - spec.eps0,
                    1e-6, 1.0, xtol=1e-14,
                )
        P = cp + np.outer(rho, rho_out * u)
        Q = cq + np.outer(rho, rho_out * v)
        W = np.outer(rho * wr, wth * cross) * (rho_out**2)[None, :]
        ps.append(P.ravel())
        qs.append(Q.ravel())
        ws.append(W.ravel())

    sp, sq, _, sw = sliver_grid(spec, n_r, n_s, t=t)
    p = np.concatenate(ps + [sp])
    q = np.concatenate(qs + [sq])
    w = np.concatenate(ws + [sw])
    g = domain.weight(p, q)
    return QuadratureRule(p, q, w, g)


@dataclass
class MomentMatrix:
    """Moment integrals J_lj over G at fixed (x, Y, t), log-anchored.

    True values are exp(log_scale) * scaled; scaled_dx holds the moments of
    the x-derivative (an extra factor 2p under the integral).
    """

    order: int
    xi: float
    t: float
    log_scale: float
    scaled: np.ndarray
    scaled_dx: np.ndarray

    @property
    def values(self) -> np.ndarray:
        if self.log_scale > 690.0:
            raise IllConditioned("moment magnitudes overflow the raw domain")
        return self.scaled * math.exp(self.log_scale)

    @property
    def values_dx(self) -> np.ndarray:
        if self.log_scale > 690.0:
            raise IllConditioned("moment magnitudes overflow the raw domain")
        return self.scaled_dx * math.exp(self.log_scale)

    def first_row(self) -> np.ndarray:
        return self.values[0, :]


def moments(domain: SpectralDomain, spec: SubdomainSpec, x: float, t: float,
            n_r: int = 64, n_s: int = 64, xi: float | None = None) -> MomentMatrix:
    """Moment matrix by direct (r, s)-coordinate quadrature.

    The kernel exponent is evaluated through the exact identity
    2 p (x - f t) = 2 p xi - r t, which stays accurate at any t.  Entries
    are Hermitian (J_jl = conj(J_lj)) by construction.
    """
    if t <= 0.0:
        raise ValueError("moments need t > 0")
    fr = spec.frame
    if xi is None:
        xi = x - fr.f_min * t
    N = spec.N
    anchor = 2.0 * fr.p0 * xi

    p, q, r, w = sliver_grid(spec, n_r, n_s, t=t)
    g = domain.weight(p, q)
    expo = 2.0 * p * xi - r * t - anchor
    base = np.exp(expo) * g * w

    dz = (p - fr.p0) + 1j * (q - fr.q0)
    powers = np.empty((N + 1, p.size), dtype=complex)
    powers[0] = 1.0
    for l in range(1, N + 1):
        powers[l] = powers[l - 1] * dz

    scaled = (powers * base[None, :]) @ powers.conj().T
    scaled_dx = (powers * (2.0 * p * base)[None, :]) @ powers.conj().T
    return MomentMatrix(order=N, xi=xi, t=t, log_scale=anchor,
                        scaled=scaled, scaled_dx=scaled_dx)


def _reduced_system(cmat: CoefficientMatrix, mom: MomentMatrix):
    if cmat.order != mom.order:
        raise ValueError("coefficient and moment orders differ")
    J = mom.values
    C = cmat.entries
    D = np.eye(mom.order + 1) + C @ J
    if not np.all(np.isfinite(D)):
        raise IllConditioned("reduced system overflowed; log-domain envelope exceeded")
    return J, C, D


def psiN_inner_logdet(cmat: CoefficientMatrix, mom: MomentMatrix) -> float:
    """(psi_N, e) through the log-determinant trace identity.

    d/dC_00 log det(I + C J) = sum_i J_0i [(I + C J)^-1]_i0, one LU solve;
    exactly equal to the row-replacement determinant ratio.
    """
    J, C, D = _reduced_system(cmat, mom)
    e0 = np.zeros(mom.order + 1, dtype=complex)
    e0[0] = 1.0
    v = np.linalg.solve(D, e0)
    val = J[0, :] @ v
    if abs(val.imag) > 1e-8 * max(abs(val.real), 1e-300):
        raise IllConditioned(f"reduced inner product not real: {val:.3e}")
    return float(val.real)


def psiN_inner_rowrep(cmat: CoefficientMatrix, mom: MomentMatrix,
                      j_row: np.ndarray | None = None) -> float:
    """(psi_N, e) as the ratio of two determinants, log-domain stabilized.

    The numerator replaces the first row of I + C J by the moment row
    (J_00 .. J_0N); the denominator det stays positive for all admissible
    parameters (positive-type discretization).
    """
    J, C, D = _reduced_system(cmat, mom)
    row = J[0, :] if j_row is None else np.asarray(j_row, dtype=complex)
    numer = D.astype(complex).copy()
    numer[0, :] = row
    sd, ld = np.linalg.slogdet(D)
    sn, ln = np.linalg.slogdet(numer)
    if sd == 0 or not np.isfinite(ld):
        raise SingularDN("denominator determinant vanished")
    val = sn / sd * math.exp(ln - ld) if sn != 0 else 0.0
    val = complex(val)
    if abs(val.imag) > 1e-8 * max(abs(val.real), 1e-300):
        raise IllConditioned(f"determinant ratio not real: {val:.3e}")
    return float(val.real)


def det_DN(cmat: CoefficientMatrix, mom: MomentMatrix) -> float:
    """Denominator determinant det(I + C J) (diagnostics)."""
    _, _, D = _reduced_system(cmat, mom)
    sd, ld = np.linalg.slogdet(D)
    return float((sd * math.exp(ld)).real)


def psiN_inner_dx(cmat: CoefficientMatrix, mom: MomentMatrix) -> tuple[float, float]:
    """(psi_N, e) and its analytic x-derivative.

    d/dx J inserts 2p under the integral; the derivative propagates through
    the trace identity with two LU solves of the same reduced system.
    """
    J, C, D = _reduced_system(cmat, mom)
    Jx = mom.values_dx
    n = mom.order + 1
    e0 = np.zeros(n, dtype=complex)
    e0[0] = 1.0
    v = np.linalg.solve(D, e0)              # (I + CJ)^-1 e0
    yvec = np.linalg.solve(D.T, J[0, :])    # row e0^T J (I + CJ)^-1
    val = J[0, :] @ v
    dval = Jx[0, :] @ v - yvec @ (C @ (Jx @ v))
    # the derivative path stacks one more cancellation than the plain inner
    # product, so its reality residue runs an order looser at coarse grids
    for z, tol in ((val, 1e-8), (dval, 1e-7)):
        if abs(z.imag) > tol * max(abs(z.real), 1e-300):
            raise IllConditioned(f"reduced inner product not real: {z:.3e}")
    return float(val.real), float(dval.real)


def u_degenerate(domain: SpectralDomain, spec: SubdomainSpec, x: float, y: float,
                 t: float, n_r: int = 64, n_s: int = 64) -> float:
    """Degenerate-tier field 2 d/dx (psi_N, e) (same sign convention as the
    exact tier)."""
    if t <= 0.0:
        raise ValueError("u_degenerate needs t > 0")
    fr = spec.frame
    cm = c_matrix(spec.N, fr.p0)
    mom = moments(domain, spec, x, t, n_r=n_r, n_s=n_s)
    _, dval = psiN_inner_dx(cm, mom)
    return 2.0 * dval
