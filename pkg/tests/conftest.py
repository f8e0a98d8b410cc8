"""Shared fixtures: grids, the Townes profile, and the critical constant.

The expensive objects (shooting solve, grid minimization) are session-scoped
so the whole suite pays for them once.
"""

import numpy as np
import pytest

from nls2d.grids import Field2D, Grid2D


@pytest.fixture(scope="session")
def grid64():
    return Grid2D(8.0, 64)


@pytest.fixture(scope="session")
def grid128():
    return Grid2D(8.0, 128)


@pytest.fixture(scope="session")
def townes():
    from nls2d.minimize import shoot_townes

    return shoot_townes()


@pytest.fixture(scope="session")
def astar():
    from nls2d.minimize import critical_constant

    return critical_constant(method="shooting")


def random_smooth_field(grid: Grid2D, rng: np.random.Generator,
                        decay: float = 2.0) -> Field2D:
    """Random band-limited complex field with a Gaussian envelope so it
    decays at the box edge."""
    n = grid.points_per_side
    coeffs = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    k = np.sqrt(grid.ksq)
    coeffs = np.fft.fft2(coeffs) * np.exp(-(k / decay) ** 2)
    vals = np.fft.ifft2(coeffs)
    vals = vals * np.exp(-grid.rsq / (2.0 * (grid.half_extent / 3.0) ** 2))
    return Field2D(grid, vals)
