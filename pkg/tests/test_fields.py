import numpy as np
import pytest

from avfield.fields import (
    ComplexField,
    Grid2D,
    RealField,
    VectorField2,
    covariant_derivative,
    inner_product,
    load_field,
    norm,
    normalize,
    random_normalized_field,
    save_field,
    spectral_divergence,
    spectral_gradient,
)
from conftest import sampled_gaussian, smooth_state


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid2D(-1.0, 64)
    with pytest.raises(ValueError):
        Grid2D(10.0, 6)
    with pytest.raises(ValueError):
        Grid2D(10.0, 33)
    g = Grid2D(16.0, 128)
    assert g.h == 0.125
    kx, _ = g.wavenumbers
    assert kx[1, 0] == pytest.approx(2 * np.pi / 16.0)
    assert kx[64, 0] == pytest.approx(-np.pi * 128 / 16.0)


def test_inner_product_constant_field(grid64):
    f = ComplexField(grid64, np.full((grid64.n, grid64.n), 1 / grid64.L))
    assert inner_product(f, f) == pytest.approx(1.0, abs=1e-14)


def test_inner_product_plane_wave_orthogonality(grid64):
    X, Y = grid64.meshes
    k1 = 2 * np.pi / grid64.L
    f = ComplexField(grid64, np.exp(1j * k1 * X))
    g = ComplexField(grid64, np.exp(1j * 2 * k1 * X))
    assert abs(inner_product(f, g)) < 1e-12


def test_inner_product_gaussian_normalization():
    grid = Grid2D(16.0, 128)
    u = sampled_gaussian(grid)
    # truncation error of the analytic integral is ~ e^{-L^2/4}
    assert inner_product(u, u).real == pytest.approx(1.0, abs=1e-10)


def test_inner_product_conjugate_symmetry(grid48):
    f = smooth_state(grid48, 1)
    g = smooth_state(grid48, 2)
    assert inner_product(f, g) == pytest.approx(np.conj(inner_product(g, f)))


def test_inner_product_grid_mismatch(grid48, grid64):
    f = smooth_state(grid48, 1)
    g = smooth_state(grid64, 1)
    with pytest.raises(ValueError, match="grid mismatch"):
        inner_product(f, g)


def test_normalize_scaling(grid48):
    u = smooth_state(grid48, 3)
    doubled = ComplexField(grid48, 2 * u.values)
    assert norm(normalize(doubled)) == pytest.approx(1.0, abs=1e-14)


def test_normalize_idempotent(grid48):
    u = smooth_state(grid48, 4)
    again = normalize(u)
    assert np.abs(again.values - u.values).max() < 1e-15


def test_normalize_random_field(grid48):
    u = random_normalized_field(grid48, seed=11)
    assert abs(norm(u) - 1.0) < 1e-12


def test_normalize_zero_field(grid48):
    z = ComplexField(grid48, np.zeros((grid48.n, grid48.n)))
    with pytest.raises(ValueError):
        normalize(z)


def test_spectral_gradient_plane_wave(grid64):
    X, Y = grid64.meshes
    k = 2 * np.pi / grid64.L
    f = ComplexField(grid64, np.exp(1j * k * X))
    gx, gy = spectral_gradient(f)
    assert np.abs(gx.values - k * f.values).max() < 1e-12
    assert np.abs(gy.values).max() < 1e-12


def test_spectral_gradient_constant(grid64):
    f = ComplexField(grid64, np.full((grid64.n, grid64.n), 2.0 + 1.0j))
    gx, gy = spectral_gradient(f)
    assert np.abs(gx.values).max() < 1e-13
    assert np.abs(gy.values).max() < 1e-13


def test_spectral_gradient_gaussian_analytic():
    grid = Grid2D(16.0, 128)
    u = sampled_gaussian(grid)
    gx, gy = spectral_gradient(u)
    X, Y = grid.meshes
    # -i d/dx of the Gaussian is i x u
    assert np.abs(gx.values - 1j * X * u.values).max() < 1e-8
    assert np.abs(gy.values - 1j * Y * u.values).max() < 1e-8


def test_covariant_derivative_zero_gauge(grid48):
    u = smooth_state(grid48, 5)
    zero = VectorField2(grid48, np.zeros((48, 48)), np.zeros((48, 48)))
    dx, dy = covariant_derivative(u, zero)
    gx, gy = spectral_gradient(u)
    assert np.abs(dx.values - gx.values).max() < 1e-14
    assert np.abs(dy.values - gy.values).max() < 1e-14


def test_covariant_derivative_constant_state(grid48):
    c = 0.7 - 0.2j
    u = ComplexField(grid48, np.full((48, 48), c))
    rng = np.random.default_rng(0)
    ax = rng.standard_normal((48, 48))
    ay = rng.standard_normal((48, 48))
    dx, dy = covariant_derivative(u, VectorField2(grid48, ax, ay))
    assert np.abs(dx.values - ax * c).max() < 1e-12
    assert np.abs(dy.values - ay * c).max() < 1e-12


def _band_limited_phase(grid, seed, amplitude=0.2):
    rng = np.random.default_rng(seed)
    X, Y = grid.meshes
    phi = np.zeros((grid.n, grid.n))
    for _ in range(4):
        mx, my = rng.integers(-3, 4, size=2)
        phi += rng.normal() * np.cos(
            2 * np.pi * (mx * X + my * Y) / grid.L + rng.uniform(0, 2 * np.pi)
        )
    return amplitude * phi


def test_covariant_derivative_gauge_covariance(grid64):
    # the multiplied state must stay resolved: strongly band-limited u and a
    # low-mode, modest-amplitude phase keep aliasing below the tolerance
    rng = np.random.default_rng(7)
    raw = rng.standard_normal((64, 64)) + 1j * rng.standard_normal((64, 64))
    raw = np.fft.ifft2(np.fft.fft2(raw) * np.exp(-0.25 * grid64.k_squared))
    X0, Y0 = grid64.meshes
    raw *= np.exp(-(X0**2 + Y0**2) / 18)
    u = normalize(ComplexField(grid64, raw))
    ax = np.fft.ifft2(
        np.fft.fft2(rng.standard_normal((64, 64))) * np.exp(-0.5 * grid64.k_squared)
    ).real
    ay = np.fft.ifft2(
        np.fft.fft2(rng.standard_normal((64, 64))) * np.exp(-0.5 * grid64.k_squared)
    ).real
    A = VectorField2(grid64, ax, ay)

    phi = _band_limited_phase(grid64, 8)
    kx, ky = grid64.wavenumbers
    ph = np.fft.fft2(phi)
    gphix = np.fft.ifft2(1j * kx * ph).real
    gphiy = np.fft.ifft2(1j * ky * ph).real

    dx, dy = covariant_derivative(u, A)
    n0 = grid64.h**2 * np.sum(np.abs(dx.values) ** 2 + np.abs(dy.values) ** 2)

    u2 = ComplexField(grid64, np.exp(-1j * phi) * u.values)
    A2 = VectorField2(grid64, ax + gphix, ay + gphiy)
    dx2, dy2 = covariant_derivative(u2, A2)
    n1 = grid64.h**2 * np.sum(np.abs(dx2.values) ** 2 + np.abs(dy2.values) ** 2)
    assert abs(n1 - n0) / n0 < 1e-8


def test_parseval(grid48):
    u = smooth_state(grid48, 9)
    real_space = grid48.h**2 * np.sum(np.abs(u.values) ** 2)
    fourier = grid48.h**2 * np.sum(np.abs(np.fft.fft2(u.values)) ** 2) / grid48.n**2
    assert abs(real_space - fourier) / real_space < 1e-12


def test_gradient_symmetric_pairing(grid48):
    f = smooth_state(grid48, 10)
    g = smooth_state(grid48, 11)
    fx, _ = spectral_gradient(f)
    gx, _ = spectral_gradient(g)
    lhs = inner_product(f, gx)
    rhs = inner_product(fx, g)
    assert abs(lhs - rhs) < 1e-10


def test_divergence_integrates_to_zero(grid48):
    rng = np.random.default_rng(12)
    F = VectorField2(
        grid48, rng.standard_normal((48, 48)), rng.standard_normal((48, 48))
    )
    div = spectral_divergence(F)
    assert abs(div.values.sum() * grid48.h**2) < 1e-10


def test_field_dump_roundtrip(tmp_path, grid48):
    u = smooth_state(grid48, 13)
    save_field(tmp_path / "state", u)
    back = load_field(tmp_path / "state")
    assert isinstance(back, ComplexField)
    assert back.grid == grid48
    assert np.array_equal(back.values, u.values)

    r = RealField(grid48, np.abs(u.values) ** 2)
    save_field(tmp_path / "dens", r)
    back_r = load_field(tmp_path / "dens")
    assert np.array_equal(back_r.values, r.values)

    v = VectorField2(grid48, u.values.real, u.values.imag)
    save_field(tmp_path / "vec", v)
    back_v = load_field(tmp_path / "vec")
    assert np.array_equal(back_v.x_values, v.x_values)
    assert np.array_equal(back_v.y_values, v.y_values)


def test_field_dump_layout(tmp_path, grid48):
    # complex dumps are (re, im) interleaved little-endian float64, row-major
    u = smooth_state(grid48, 14)
    save_field(tmp_path / "state", u)
    raw = np.frombuffer((tmp_path / "state.f64").read_bytes(), dtype="<f8")
    assert raw[0] == u.values[0, 0].real
    assert raw[1] == u.values[0, 0].imag
    assert raw[2] == u.values[0, 1].real
