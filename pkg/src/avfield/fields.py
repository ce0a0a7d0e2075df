"""Periodic 2D fields and FFT-based spectral calculus.

All fields live on a uniform periodic grid covering [-L/2, L/2)^2. Integrals
are uniform-weight (trapezoidal) sums, which are spectrally accurate for
smooth periodic data. Fourier convention: forward transform e^{-ik.x}
(numpy default), 1/n^2 on the inverse; wavevectors k = (2*pi/L)*m with
m in [-n/2, n/2) per axis.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np


class Grid2D:
    """Square periodic computational domain: n x n samples of [-L/2, L/2)^2."""

    def __init__(self, side_length: float, points_per_side: int):
        if side_length <= 0:
            raise ValueError(f"side_length must be positive, got {side_length}")
        if points_per_side < 8:
            raise ValueError(f"points_per_side must be >= 8, got {points_per_side}")
        if points_per_side % 2 != 0:
            raise ValueError(f"points_per_side must be even, got {points_per_side}")
        self.L = float(side_length)
        self.n = int(points_per_side)
        self.h = self.L / self.n

    def __eq__(self, other):
        return isinstance(other, Grid2D) and self.L == other.L and self.n == other.n

    def __hash__(self):
        return hash((self.L, self.n))

    def __repr__(self):
        return f"Grid2D(L={self.L}, n={self.n})"

    @cached_property
    def axis(self) -> np.ndarray:
        return -self.L / 2 + self.h * np.arange(self.n)

    @cached_property
    def meshes(self) -> tuple[np.ndarray, np.ndarray]:
        """(X, Y) coordinate arrays, 'ij' indexed: axis 0 is x, axis 1 is y."""
        return tuple(np.meshgrid(self.axis, self.axis, indexing="ij"))

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, np.ndarray]:
        k = 2 * np.pi * np.fft.fftfreq(self.n, d=self.h)
        return tuple(np.meshgrid(k, k, indexing="ij"))

    @cached_property
    def k_squared(self) -> np.ndarray:
        kx, ky = self.wavenumbers
        return kx**2 + ky**2

    @cached_property
    def displacement_meshes(self) -> tuple[np.ndarray, np.ndarray]:
        """Signed displacements in fft ordering: index j holds j*h for j < n/2,
        (j-n)*h above, so circular convolution indexes minimum-image offsets."""
        d = self.h * np.arange(self.n)
        d[self.n // 2:] -= self.L
        return tuple(np.meshgrid(d, d, indexing="ij"))


@dataclass
class ComplexField:
    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        _check_shape(self.grid, self.values)

    def copy(self) -> "ComplexField":
        return ComplexField(self.grid, self.values.copy())


@dataclass
class RealField:
    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        _check_shape(self.grid, self.values)


@dataclass
class VectorField2:
    grid: Grid2D
    x_values: np.ndarray
    y_values: np.ndarray

    def __post_init__(self):
        self.x_values = np.asarray(self.x_values, dtype=np.float64)
        self.y_values = np.asarray(self.y_values, dtype=np.float64)
        _check_shape(self.grid, self.x_values)
        _check_shape(self.grid, self.y_values)

    def sup_norm(self) -> float:
        return float(np.sqrt(self.x_values**2 + self.y_values**2).max())


def _check_shape(grid: Grid2D, values: np.ndarray):
    if values.shape != (grid.n, grid.n):
        raise ValueError(
            f"field values shape {values.shape} does not match grid ({grid.n}, {grid.n})"
        )


def _same_grid(*fields):
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise ValueError(f"grid mismatch: {f.grid} vs {g}")
    return g


def inner_product(f: ComplexField, g: ComplexField) -> complex:
    """L2 inner product h^2 * sum(conj(f) g); conjugate-linear in f."""
    grid = _same_grid(f, g)
    return complex(grid.h**2 * np.vdot(f.values, g.values))


def norm(f: ComplexField) -> float:
    return float(np.sqrt(f.grid.h**2) * np.linalg.norm(f.values))


def normalize(u: ComplexField) -> ComplexField:
    nrm = norm(u)
    if nrm == 0.0:
        raise ValueError("cannot normalize the zero field")
    return ComplexField(u.grid, u.values / nrm)


def density(u: ComplexField) -> RealField:
    return RealField(u.grid, np.abs(u.values) ** 2)


def spectral_gradient(f: ComplexField) -> tuple[ComplexField, ComplexField]:
    """(-i d/dx f, -i d/dy f) as Fourier multipliers; exact on band-limited data."""
    kx, ky = f.grid.wavenumbers
    fh = np.fft.fft2(f.values)
    return (
        ComplexField(f.grid, np.fft.ifft2(kx * fh)),
        ComplexField(f.grid, np.fft.ifft2(ky * fh)),
    )


def covariant_derivative(
    u: ComplexField, A_total: VectorField2
) -> tuple[ComplexField, ComplexField]:
    """((-i d/dx + Ax) u, (-i d/dy + Ay) u) for the assembled total gauge field."""
    _same_grid(u, A_total)
    px, py = spectral_gradient(u)
    return (
        ComplexField(u.grid, px.values + A_total.x_values * u.values),
        ComplexField(u.grid, py.values + A_total.y_values * u.values),
    )


def spectral_divergence(F: VectorField2) -> RealField:
    kx, ky = F.grid.wavenumbers
    div = np.fft.ifft2(
        1j * kx * np.fft.fft2(F.x_values) + 1j * ky * np.fft.fft2(F.y_values)
    ).real
    return RealField(F.grid, div)


def spectral_curl(F: VectorField2) -> RealField:
    """Scalar curl d(Fy)/dx - d(Fx)/dy (valid for periodic, band-limited fields)."""
    kx, ky = F.grid.wavenumbers
    curl = np.fft.ifft2(
        1j * kx * np.fft.fft2(F.y_values) - 1j * ky * np.fft.fft2(F.x_values)
    ).real
    return RealField(F.grid, curl)


def one_body_apply(u: ComplexField, V: RealField, A_e: VectorField2) -> ComplexField:
    """Apply h = (p + A_e)^2 + V with spectral momenta and diagonal potential."""
    _same_grid(u, V, A_e)
    dx, dy = covariant_derivative(u, A_e)
    kx, ky = u.grid.wavenumbers
    t = np.fft.ifft2(kx * np.fft.fft2(dx.values) + ky * np.fft.fft2(dy.values))
    out = t + A_e.x_values * dx.values + A_e.y_values * dy.values + V.values * u.values
    return ComplexField(u.grid, out)


def random_normalized_field(grid: Grid2D, seed: int) -> ComplexField:
    """Complex Gaussian samples at every grid point, normalized to unit L2 norm."""
    rng = np.random.default_rng(seed)
    vals = rng.standard_normal((grid.n, grid.n)) + 1j * rng.standard_normal(
        (grid.n, grid.n)
    )
    return normalize(ComplexField(grid, vals))


# --- binary field dumps: little-endian float64, row-major, JSON sidecar ---

_KINDS = {ComplexField: "complex", RealField: "real", VectorField2: "vector2"}


def save_field(path: str | Path, field) -> None:
    """Write <path>.f64 (raw little-endian float64) and <path>.json sidecar.

    Complex samples are written interleaved (re, im); vector2 samples
    interleaved (x, y); all row-major in the x-index.
    """
    path = Path(path)
    kind = _KINDS[type(field)]
    if kind == "complex":
        flat = np.ascontiguousarray(field.values, dtype="<c16")
        raw = flat.tobytes()
    elif kind == "real":
        raw = np.ascontiguousarray(field.values, dtype="<f8").tobytes()
    else:
        inter = np.stack([field.x_values, field.y_values], axis=-1)
        raw = np.ascontiguousarray(inter, dtype="<f8").tobytes()
    path.with_suffix(".f64").write_bytes(raw)
    sidecar = {"n": field.grid.n, "L": field.grid.L, "kind": kind}
    path.with_suffix(".json").write_text(json.dumps(sidecar, sort_keys=True) + "\n")


def load_field(path: str | Path):
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    grid = Grid2D(meta["L"], meta["n"])
    raw = path.with_suffix(".f64").read_bytes()
    n = grid.n
    if meta["kind"] == "complex":
        vals = np.frombuffer(raw, dtype="<c16").reshape(n, n)
        return ComplexField(grid, vals.copy())
    if meta["kind"] == "real":
        vals = np.frombuffer(raw, dtype="<f8").reshape(n, n)
        return RealField(grid, vals.copy())
    inter = np.frombuffer(raw, dtype="<f8").reshape(n, n, 2)
    return VectorField2(grid, inter[..., 0].copy(), inter[..., 1].copy())
