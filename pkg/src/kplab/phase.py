"""Phase function, its boundary minimizer, and the local geometric frame.

The exponential weight in the integral equation is controlled by the phase
f(p, q, Y) = p^2 - 3 q^2 - 2 q Y with Y = y/t.  Its minimum over the closed
domain sits on the boundary (the only interior critical point has p = 0,
which is excluded), at a point k0(Y) that sets the soliton speed f_min(Y)
and amplitude 2 p0^2(Y).  Around k0 the frame collects the curvatures of
the boundary and of the phase level set, the quadratic rise rate of the
boundary over its tangent, and the Jacobian data of the local
(scaled-phase, tangent-offset) coordinates used by the moment asymptotics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import SpectralDomain, curvature_at
from .errors import DegenerateFrame, NonUniqueMinimizer

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0

N_SCAN = 2048
THETA_TOL = 1e-12
TIE_REL = 1e-8
TIE_PARAM_DIST = 1e-3


def phase_f(p, q, Y):
    """Phase value p^2 - 3 q^2 - 2 q Y."""
    return p * p - 3.0 * q * q - 2.0 * q * Y


def grad_phase_f(p, q, Y):
    """Gradient (f_p, f_q) = (2p, -6q - 2Y)."""
    return 2.0 * p, -6.0 * q - 2.0 * Y


def log_E(p, q, x, t, Y):
    """Log of the exponential kernel factor: p * (x - f(p,q,Y) * t).

    Consumers exponentiate only differences of these values; raw
    exponentials overflow long before the quantities of interest do.
    """
    return p * (x - phase_f(p, q, Y) * t)


def level_curvature(p, q, Y):
    """Curvature of the phase level set through (p, q).

    Implicit-curve formula |f_q^2 f_pp - 2 f_p f_q f_pq + f_p^2 f_qq| / |grad f|^3
    with f_pp = 2, f_qq = -6, f_pq = 0.
    """
    fp, fq = grad_phase_f(p, q, Y)
    norm2 = fp * fp + fq * fq
    return abs(2.0 * fq * fq - 6.0 * fp * fp) / norm2 ** 1.5


def golden_min(f, a, b, tol):
    """Golden-section search for the minimum of f on [a, b]."""
    h = b - a
    c = b - INV_PHI * h
    d = a + INV_PHI * h
    fc, fd = f(c), f(d)
    while h > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            h = b - a
            c = b - INV_PHI * h
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            h = b - a
            d = a + INV_PHI * h
            fd = f(d)
    return 0.5 * (a + b)


@dataclass(frozen=True)
class PhaseMinimum:
    """Location and value of the boundary minimum of the phase."""

    theta: float
    p0: float
    q0: float
    f_min: float

    @property
    def k0(self) -> complex:
        return self.p0 + 1j * self.q0


def find_k0(domain: SpectralDomain, Y: float, n_scan: int = N_SCAN,
            scan_offset: float = 0.0) -> PhaseMinimum:
    """Locate the unique boundary minimizer of the phase at fixed Y.

    Dense scan over the boundary parameter followed by golden-section
    refinement of every scan-local minimum.  Raises NonUniqueMinimizer if a
    second refined minimum ties the global one (value within
    TIE_REL * (1 + |f_min|)) at parameter distance > TIE_PARAM_DIST; a tie
    would silently invalidate all downstream asymptotics, so it is refused
    rather than broken.
    """
    bnd = domain.boundary
    th = scan_offset + np.linspace(0.0, 2.0 * np.pi, n_scan, endpoint=False)
    pv, qv = bnd.point(th)
    fv = phase_f(pv, qv, Y)

    def fboundary(theta):
        p, q = bnd.point(theta)
        return phase_f(float(p), float(q), Y)

    local = np.nonzero((fv < np.roll(fv, 1)) & (fv <= np.roll(fv, -1)))[0]
    if local.size == 0:  # flat scan; cannot happen for admissible boundaries
        local = np.array([int(np.argmin(fv))])

    dth = 2.0 * np.pi / n_scan
    refined = []
    fglobal = float(np.min(fv))
    for i in local:
        if fv[i] > fglobal + 1e-2 * (1.0 + abs(fglobal)):
            continue  # far from competitive
        lo, hi = th[i] - dth, th[i] + dth
        tstar = golden_min(fboundary, lo, hi, THETA_TOL)
        # Newton polish: comparison-based search saturates at sqrt(eps);
        # a few derivative steps pin the minimizer to ~1e-11
        hstep = 1e-6
        for _ in range(3):
            d1 = (fboundary(tstar + hstep) - fboundary(tstar - hstep)) / (2 * hstep)
            d2 = (fboundary(tstar + hstep) - 2 * fboundary(tstar)
                  + fboundary(tstar - hstep)) / hstep**2
            if d2 <= 0:
                break
            step = d1 / d2
            if abs(step) > 2 * dth:
                break
            tstar -= step
        refined.append((fboundary(tstar), tstar % (2.0 * np.pi)))
    refined.sort()
    fbest, tbest = refined[0]

    for fval, tval in refined[1:]:
        dist = abs(tval - tbest) % (2.0 * np.pi)
        dist = min(dist, 2.0 * np.pi - dist)
        if dist > TIE_PARAM_DIST and fval - fbest < TIE_REL * (1.0 + abs(fbest)):
            raise NonUniqueMinimizer(
                f"two boundary minima at theta={tbest:.6f} and theta={tval:.6f} "
                f"with matching phase values ({fbest:.3e}, {fval:.3e}) at Y={Y}"
            )

    p0, q0 = bnd.point(tbest)
    return PhaseMinimum(float(tbest), float(p0), float(q0), float(fbest))


@dataclass(frozen=True)
class MinimizerFrame:
    """Everything attached to the phase minimizer k0(Y).

    y_ratio        Y = y/t
    theta0         boundary parameter of k0
    k0             minimizer point p0 + i q0 (on the boundary)
    f_min          minimum phase value over the closure (= soliton speed)
    grad_f         gradient of the phase at k0
    boundary_curv  curvature of the boundary at k0
    level_curv     curvature of the phase level set {f = f_min} at k0
    same_side      True if boundary and level set bend to the same side of
                   their common tangent
    quad_coeff     quadratic rise rate of the boundary over the tangent
                   chart: scaled_phase = quad_coeff * s^2 + O(s^3), equal to
                   |grad F| (boundary_curv -/+ level_curv) / 2 with
                   F = 2 p (f - f_min); minus sign when same_side
    tangent        unit tangent of the boundary at k0, as a complex number
    jac_rs         Jacobian determinant d(p,q)/d(r,s) at k0 (signed); the
                   local coordinates are r = F and s = tangential offset
    g0             weight value at k0
    dp_ds, dp_dr   partial derivatives of p in the (r, s) chart at k0
    """

    y_ratio: float
    theta0: float
    k0: complex
    f_min: float
    grad_f: tuple[float, float]
    boundary_curv: float
    level_curv: float
    same_side: bool
    quad_coeff: float
    tangent: complex
    jac_rs: float
    g0: float
    dp_ds: float
    dp_dr: float

    @property
    def p0(self) -> float:
        return self.k0.real

    @property
    def q0(self) -> float:
        return self.k0.imag

    @property
    def tangent_scaled(self) -> complex:
        """(d k / d s)(k0) / quad_coeff; modulus 1 / quad_coeff."""
        return self.tangent / self.quad_coeff

    @property
    def grad_F_norm(self) -> float:
        fp, fq = self.grad_f
        return 2.0 * self.p0 * math.hypot(fp, fq)

    def as_dict(self) -> dict:
        return {
            "y_ratio": self.y_ratio,
            "theta0": self.theta0,
            "p0": self.p0,
            "q0": self.q0,
            "f_min": self.f_min,
            "grad_f": list(self.grad_f),
            "boundary_curv": self.boundary_curv,
            "level_curv": self.level_curv,
            "same_side": self.same_side,
            "quad_coeff": self.quad_coeff,
            "tangent": [self.tangent.real, self.tangent.imag],
            "tangent_scaled": [self.tangent_scaled.real, self.tangent_scaled.imag],
            "jac_rs": self.jac_rs,
            "g0": self.g0,
            "dp_ds": self.dp_ds,
            "dp_dr": self.dp_dr,
        }


def _level_offset(p0, q0, Y, f_min, tau, nrm, s):
    """Normal offset h with f(k0 + s tau + h n) = f_min, root nearest zero.

    The phase is quadratic, so this is an exact quadratic solve in h.
    """
    tp, tq = tau
    npp, nq = nrm

    def fval(h):
        return phase_f(p0 + s * tp + h * npp, q0 + s * tq + h * nq, Y) - f_min

    # coefficients of A h^2 + B h + D
    A = npp * npp - 3.0 * nq * nq
    D = fval(0.0)
    B = fval(1.0) - A - D
    if abs(A) < 1e-14 * (abs(B) + 1.0):
        return -D / B
    disc = B * B - 4.0 * A * D
    if disc < 0.0:
        raise DegenerateFrame("phase level set does not reach the tangent offset")
    r1 = (-B + math.sqrt(disc)) / (2.0 * A)
    r2 = (-B - math.sqrt(disc)) / (2.0 * A)
    return r1 if abs(r1) < abs(r2) else r2


SIDE_OFFSET = 1e-3


def frame_at(domain: SpectralDomain, Y: float) -> MinimizerFrame:
    """Complete geometric frame at the phase minimizer for this Y.

    Raises DegenerateFrame when the quadratic rise rate is not positive or
    the phase gradient vanishes at k0 (hypothesis violations), and
    propagates NonUniqueMinimizer from the search.
    """
    pm = find_k0(domain, Y)
    bnd = domain.boundary
    p0, q0, f_min = pm.p0, pm.q0, pm.f_min

    fp, fq = grad_phase_f(p0, q0, Y)
    grad_norm = math.hypot(fp, fq)
    if grad_norm < 1e-10:
        raise DegenerateFrame(f"phase gradient vanishes at k0 for Y={Y}")

    kappa_hat = float(curvature_at(bnd, pm.theta))
    kappa = level_curvature(p0, q0, Y)

    d1p, d1q = bnd.derivative(pm.theta)
    speed = math.hypot(float(d1p), float(d1q))
    tau = (float(d1p) / speed, float(d1q) / speed)
    # grad f points into the domain (f > f_min inside); unit inward normal
    nrm = (fp / grad_norm, fq / grad_norm)

    # graphs of boundary and level set over the common tangent at +-s offsets
    ds = SIDE_OFFSET
    dth = ds / speed
    sb, hb = [], []
    for sgn in (-1.0, 1.0):
        bp, bq = bnd.point(pm.theta + sgn * dth)
        rel = (float(bp) - p0, float(bq) - q0)
        sb.append(rel[0] * tau[0] + rel[1] * tau[1])
        hb.append(rel[0] * nrm[0] + rel[1] * nrm[1])
    c_gamma = 0.5 * (hb[0] / sb[0] ** 2 + hb[1] / sb[1] ** 2)
    c_level = 0.5 * sum(
        _level_offset(p0, q0, Y, f_min, tau, nrm, sgn * ds) / ds**2
        for sgn in (-1.0, 1.0)
    )
    same_side = (c_gamma > 0) == (c_level > 0)

    grad_F = 2.0 * p0 * grad_norm
    sign = -1.0 if same_side else 1.0
    quad_coeff = grad_F * (kappa_hat + sign * kappa) / 2.0
    if quad_coeff <= 0.0:
        raise DegenerateFrame(
            f"boundary rise rate {quad_coeff:.3e} <= 0 at Y={Y} "
            "(level set hugs the boundary too closely)"
        )

    # forward Jacobian of (r, s) = (2p(f - f_min), tangential offset)
    jf = np.array([[2.0 * p0 * fp, 2.0 * p0 * fq], [tau[0], tau[1]]])
    det_fwd = float(np.linalg.det(jf))
    jinv = np.linalg.inv(jf)
    dp_dr, dp_ds = float(jinv[0, 0]), float(jinv[0, 1])
    dq_ds = float(jinv[1, 1])
    # d k/d s must be a unit tangent; guards frame self-consistency
    if abs(math.hypot(dp_ds, dq_ds) - 1.0) > 1e-8:
        raise DegenerateFrame("tangent column of the inverse Jacobian is not unit")

    g0 = float(domain.weight(np.array(p0), np.array(q0)))

    return MinimizerFrame(
        y_ratio=float(Y),
        theta0=pm.theta,
        k0=complex(p0, q0),
        f_min=f_min,
        grad_f=(fp, fq),
        boundary_curv=kappa_hat,
        level_curv=kappa,
        same_side=same_side,
        quad_coeff=quad_coeff,
        tangent=complex(*tau),
        jac_rs=1.0 / det_fwd,
        g0=g0,
        dp_ds=dp_ds,
        dp_dr=dp_dr,
    )


class FrameCache:
    """Per-Y frame cache; every Y is solved exactly, never interpolated."""

    def __init__(self, domain: SpectralDomain):
        self.domain = domain
        self._frames: dict[float, MinimizerFrame] = {}

    def get(self, Y: float) -> MinimizerFrame:
        key = float(Y)
        if key not in self._frames:
            self._frames[key] = frame_at(self.domain, key)
        return self._frames[key]
