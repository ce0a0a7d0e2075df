"""Smeared Coulomb potential, external trap and gauge fields, induced gauge field.

The smeared 2D Coulomb potential is log|.| convolved with the normalized
indicator of a disc of radius R. By the 2D Newton theorem it equals log|x|
outside the disc and |x|^2/(2R^2) + log R - 1/2 inside (continuous, C^1 at
|x| = R). The additive interior constant is kept so the potential converges
pointwise to log|.| as R -> 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import j1

from .fields import ComplexField, Grid2D, RealField, VectorField2


@dataclass
class TrapSpec:
    """Confining potential V(x) = |x|^s / scale - offset, or a tabulated field."""

    exponent: float = 2.0
    scale: float = 1.0
    offset: float = 0.0
    tabulated: RealField | None = None

    def __post_init__(self):
        if self.tabulated is None:
            if self.exponent <= 0:
                raise ValueError(f"trap exponent must be > 0, got {self.exponent}")
            if self.scale <= 0:
                raise ValueError(f"trap scale must be > 0, got {self.scale}")
            if self.offset < 0:
                raise ValueError(f"trap offset must be >= 0, got {self.offset}")


@dataclass
class GaugeSpec:
    """External gauge field: none (b0 = 0), uniform field b0, or tabulated."""

    b0: float = 0.0
    tabulated: VectorField2 | None = None


def smeared_log_potential(x, R: float):
    """Potential of a unit charge smeared over a disc of radius R, at point(s) x.

    x is a length-2 vector or an (..., 2) array. R = 0 gives the bare log|x|.
    """
    x = np.asarray(x, dtype=float)
    r = np.sqrt(np.sum(x * x, axis=-1))
    return smeared_log_potential_radial(r, R)


def smeared_log_potential_radial(r, R: float):
    r = np.asarray(r, dtype=float)
    if R < 0:
        raise ValueError("smearing radius must be >= 0")
    if R == 0.0:
        if np.any(r == 0):
            raise ValueError("bare log potential is singular at the origin")
        return np.log(r)
    inside = r < R
    safe_r = np.where(r > 0, r, 1.0)
    out = np.where(inside, r**2 / (2 * R**2) + np.log(R) - 0.5, np.log(safe_r))
    if out.ndim == 0:
        return float(out)
    return out


def smeared_log_gradient(x, R: float):
    """Gradient of the smeared log potential: x/|x|^2 outside, x/R^2 inside."""
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x * x, axis=-1, keepdims=True)
    if R < 0:
        raise ValueError("smearing radius must be >= 0")
    if R == 0.0:
        if np.any(r2 == 0):
            raise ValueError("bare log gradient is singular at the origin")
        return x / r2
    inside = r2 < R**2
    safe = np.where(r2 > 0, r2, 1.0)
    out = np.where(inside, x / R**2, x / safe)
    return out


def perp(v):
    """(a, b) -> (-b, a) on the last axis."""
    v = np.asarray(v)
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def disc_form_factor(kappa):
    """Radial Fourier transform of the normalized disc indicator at |k| R = kappa.

    Equals 2 J1(kappa)/kappa, with value 1 at kappa = 0; |value| <= 1.
    """
    kappa = np.asarray(kappa, dtype=float)
    if np.any(kappa < 0):
        raise ValueError("kappa must be >= 0")
    out = np.ones_like(kappa)
    nz = kappa > 0
    out[nz] = 2 * j1(kappa[nz]) / kappa[nz]
    if out.ndim == 0:
        return float(out)
    return out


@lru_cache(maxsize=32)
def _gauge_multiplier_cached(L: float, n: int, R: float):
    grid = Grid2D(L, n)
    kx, ky = grid.wavenumbers
    k2 = grid.k_squared.copy()
    k2[0, 0] = 1.0
    ff = disc_form_factor(np.sqrt(grid.k_squared) * R)
    # Fourier multiplier of the perp-gradient kernel under the e^{-ik.x}
    # convention: -2*pi*i * k_perp / |k|^2 * formfactor(|k| R); the k = 0
    # mode is dropped (neutralizing background on the torus).
    mx = -2 * np.pi * 1j * (-ky) / k2 * ff
    my = -2 * np.pi * 1j * (kx) / k2 * ff
    mx[0, 0] = 0.0
    my[0, 0] = 0.0
    # Nyquist lines carry unpaired modes on which an odd multiplier cannot be
    # conjugate-symmetric; zero them so real densities map to exactly real
    # fields (their content is negligible for resolved densities anyway).
    mx[n // 2, :] = mx[:, n // 2] = 0.0
    my[n // 2, :] = my[:, n // 2] = 0.0
    mx.setflags(write=False)
    my.setflags(write=False)
    return mx, my


def gauge_multiplier(grid: Grid2D, R: float) -> tuple[np.ndarray, np.ndarray]:
    """Fourier multiplier pair implementing convolution with the perp-gradient
    of the smeared log potential on the periodic lattice."""
    if R < 0:
        raise ValueError("smearing radius must be >= 0")
    if R > 0 and R >= grid.L / 4:
        raise ValueError(f"smearing radius {R} must be < L/4 = {grid.L / 4}")
    return _gauge_multiplier_cached(grid.L, grid.n, float(R))


def induced_gauge_field(rho: RealField, R: float) -> VectorField2:
    """Gauge field generated by a density: perp-grad smeared log convolved with rho.

    Spectral periodic convolution with the analytic multiplier; the k = 0 mode
    is zeroed, so the output has zero spatial mean. On the torus this removes
    the net flux (uniform neutralizing background), which is the correct
    whole-plane field up to a -pi*M/L^2 * x_perp background, M = integral of rho.
    """
    if float(rho.values.min()) < -1e-12:
        raise ValueError("density has negative entries beyond -1e-12")
    mx, my = gauge_multiplier(rho.grid, R)
    rh = np.fft.fft2(rho.values)
    return VectorField2(
        rho.grid, np.fft.ifft2(mx * rh).real, np.fft.ifft2(my * rh).real
    )


def convolve_gauge_kernel(g: ComplexField, R: float) -> tuple[np.ndarray, np.ndarray]:
    """Componentwise convolution of a complex field with the perp-gradient kernel."""
    mx, my = gauge_multiplier(g.grid, R)
    gh = np.fft.fft2(g.values)
    return np.fft.ifft2(mx * gh), np.fft.ifft2(my * gh)


def build_trap(spec: TrapSpec, grid: Grid2D) -> RealField:
    """Sample the trap on the grid (passthrough for tabulated specs)."""
    if spec.tabulated is not None:
        if spec.tabulated.grid != grid:
            raise ValueError("tabulated trap lives on a different grid")
        return spec.tabulated
    X, Y = grid.meshes
    r = np.sqrt(X**2 + Y**2)
    V = r**spec.exponent / spec.scale - spec.offset
    return RealField(grid, V)


def build_gauge(spec: GaugeSpec, grid: Grid2D) -> VectorField2:
    """External gauge field; uniform b0 is realized as A_e(x) = (b0/2) x_perp."""
    if spec.tabulated is not None:
        if spec.tabulated.grid != grid:
            raise ValueError("tabulated gauge field lives on a different grid")
        return spec.tabulated
    if spec.b0 == 0.0:
        z = np.zeros((grid.n, grid.n))
        return VectorField2(grid, z, z.copy())
    X, Y = grid.meshes
    return VectorField2(grid, -spec.b0 * Y / 2, spec.b0 * X / 2)


def pair_kernel_squared(grid: Grid2D, R: float) -> np.ndarray:
    """|grad w_R|^2 sampled on minimum-image displacements, fft-ordered.

    Tabulated from the piecewise closed form (not a Fourier multiplier): the
    kernel is not sign-definite in k-space while the real-space form is exact.
    Singular at 0 for R = 0, hence rejected there.
    """
    if R <= 0:
        raise ValueError("pair kernel |grad w_R|^2 requires R > 0")
    DX, DY = grid.displacement_meshes
    r2 = DX**2 + DY**2
    inside = r2 < R**2
    safe = np.where(r2 > 0, r2, 1.0)
    vals = np.where(inside, r2 / R**4, 1.0 / safe)
    vals[0, 0] = 0.0
    return vals
