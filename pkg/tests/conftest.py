import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from occupancy3d import EllipseGeom, LabelRecord, ellipse_to_gaussian

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def central_fd(f, x, h=1e-6):
    """Central finite-difference gradient of a scalar function of an array."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        xp = x.copy()
        xm = x.copy()
        xp[idx] += h
        xm[idx] -= h
        g[idx] = (f(xp) - f(xm)) / (2.0 * h)
    return g


def assert_grad_close(analytic, numeric, rtol=1e-4, atol=1e-8):
    analytic = np.asarray(analytic)
    numeric = np.asarray(numeric)
    scale = max(np.abs(numeric).max(), np.abs(analytic).max())
    err = np.abs(analytic - numeric).max()
    assert err <= atol + rtol * scale, f"max abs error {err:.3e} vs scale {scale:.3e}"


@st.composite
def ellipses(draw, min_axis=0.5, max_axis=50.0, span=100.0):
    a = draw(st.floats(min_axis, max_axis))
    b = draw(st.floats(min_axis, a))
    theta = draw(st.floats(0.0, math.pi, exclude_max=True))
    x0 = draw(st.floats(-span, span))
    y0 = draw(st.floats(-span, span))
    return EllipseGeom(x0, y0, a, b, theta)


def contained_targets(n, seed, grid=64, axes=(2.0, 7.0)):
    """Random pixel-frame labels whose 4-sigma box lies inside the grid."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        a = rng.uniform(*axes)
        b = rng.uniform(axes[0], a)
        theta = rng.uniform(0.0, math.pi)
        g = ellipse_to_gaussian(EllipseGeom(0.0, 0.0, a, b, theta))
        hx, hy = 4.0 * math.sqrt(g.sigma[0, 0]), 4.0 * math.sqrt(g.sigma[1, 1])
        lo_x, hi_x = 0.5 + hx, grid + 0.5 - hx
        lo_y, hi_y = 0.5 + hy, grid + 0.5 - hy
        if lo_x >= hi_x or lo_y >= hi_y:
            continue
        e = EllipseGeom(rng.uniform(lo_x, hi_x), rng.uniform(lo_y, hi_y), a, b, theta)
        out.append(LabelRecord.from_gaussian(ellipse_to_gaussian(e), grid, grid, f"t{len(out):03d}"))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
