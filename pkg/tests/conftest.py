import numpy as np
import pytest

from kplab.domain import build_quadrature, default_domain
from kplab.phase import frame_at


@pytest.fixture(scope="session")
def domain():
    return default_domain()


@pytest.fixture(scope="session")
def rule24(domain):
    return build_quadrature(domain, 24, 24)


@pytest.fixture(scope="session")
def rule32(domain):
    return build_quadrature(domain, 32, 32)


@pytest.fixture(scope="session")
def frame05(domain):
    return frame_at(domain, 0.5)


@pytest.fixture(scope="session")
def frame1(domain):
    return frame_at(domain, 1.0)


def inside_fraction(domain, p, q):
    """Fraction of points strictly inside the domain (polar membership)."""
    cp, cq = domain.boundary.center
    ang = np.arctan2(q - cq, p - cp)
    bp, bq = domain.boundary.point(ang)
    r_bnd = np.hypot(bp - cp, bq - cq)
    r_pt = np.hypot(p - cp, q - cq)
    return np.mean(r_pt < r_bnd)
