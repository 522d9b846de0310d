import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from crackwidth.maskio import BinaryMask, Patch

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def strip_array(h=64, w=64, rows=(30, 35)):
    """Horizontal band of ones covering ``rows[0] <= y < rows[1]``."""
    a = np.zeros((h, w))
    a[rows[0]:rows[1], :] = 1.0
    return a


def oriented_strip(size, width, angle_deg, center=None):
    """Half-open continuous strip through ``center`` at ``angle_deg``, rasterised."""
    cx, cy = center if center is not None else (size // 2, size // 2)
    ys, xs = np.mgrid[0:size, 0:size].astype(float)
    a = np.radians(angle_deg)
    perp = -(xs - cx) * np.sin(a) + (ys - cy) * np.cos(a)
    return ((perp >= -width / 2) & (perp < width / 2)).astype(float)


def antialiased_strip(size, width, angle_deg, supersample=8):
    """Strip through the patch centre with pixel values equal to area coverage."""
    k = supersample
    offs = (np.arange(k) + 0.5) / k - 0.5
    acc = np.zeros((size, size))
    for oy in offs:
        for ox in offs:
            acc += oriented_strip(size, width, angle_deg, center=(size // 2 - ox, size // 2 - oy))
    return acc / (k * k)


@pytest.fixture
def strip_patch():
    return Patch(strip_array())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def strip_mask():
    m = np.zeros((100, 100), dtype=bool)
    m[48:53, :] = True
    return BinaryMask(m)


# acceptance verdicts, printed once at the end of the run
ACCEPTANCE = {}


def record_criterion(number, ok, detail):
    ACCEPTANCE[number] = (bool(ok), detail)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
