import numpy as np
import pytest

from hydrostat.grid import make_grid

TWO_PI = 2.0 * np.pi


@pytest.fixture
def g16():
    return make_grid(1.0, 16, 16)


@pytest.fixture
def g32():
    return make_grid(1.0, 32, 32)


def random_periodic(grid, rng, modes=3, wall_zero=False):
    """Smooth random field built from a few low Fourier modes."""
    X, Y = grid.mesh()
    out = np.zeros(grid.shape)
    for _ in range(modes):
        kx = rng.integers(0, 4)
        ky = rng.integers(1, 4)
        a, phase = rng.normal(), rng.uniform(0, TWO_PI)
        prof = np.sin(np.pi * ky * Y) if wall_zero else np.cos(np.pi * ky * Y)
        out += a * np.cos(TWO_PI * kx * X / grid.L + phase) * prof
    if wall_zero:
        out[:, 0] = 0.0
        out[:, -1] = 0.0
    return out


# criterion number -> (passed, one-line detail); filled by test_acceptance.py
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n:>2}: {detail}")
