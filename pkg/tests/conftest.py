import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from avfield.fields import ComplexField, Grid2D, normalize


@pytest.fixture(scope="session")
def grid48():
    return Grid2D(12.0, 48)


@pytest.fixture(scope="session")
def grid64():
    return Grid2D(16.0, 64)


def smooth_state(grid: Grid2D, seed: int, width: float = 3.0) -> ComplexField:
    """Band-limited random state under a Gaussian envelope, unit norm."""
    rng = np.random.default_rng(seed)
    f = rng.standard_normal((grid.n, grid.n)) + 1j * rng.standard_normal(
        (grid.n, grid.n)
    )
    f = np.fft.ifft2(np.fft.fft2(f) * np.exp(-0.1 * grid.k_squared))
    X, Y = grid.meshes
    f *= np.exp(-(X**2 + Y**2) / (2 * width**2))
    return normalize(ComplexField(grid, f))


def sampled_gaussian(grid: Grid2D) -> ComplexField:
    """The analytic unit-norm Gaussian exp(-|x|^2/2)/sqrt(pi), sampled."""
    X, Y = grid.meshes
    return ComplexField(grid, np.exp(-(X**2 + Y**2) / 2) / np.sqrt(np.pi))
