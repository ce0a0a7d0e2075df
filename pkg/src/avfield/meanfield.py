"""Average-field energy functional and its minimization on the L2 sphere.

The functional is E[u] = int |(-i grad + A_e + beta*A[|u|^2]) u|^2 + V |u|^2
with the self-consistent gauge field A[rho] from the smeared log kernel.
Minimization is projected gradient descent with Armijo backtracking; the
tangent-space projection g - <u,g> u keeps the unit-norm constraint to
first order and the overall step re-normalizes exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fields import (
    ComplexField,
    Grid2D,
    VectorField2,
    inner_product,
    norm,
    normalize,
    random_normalized_field,
)
from .potentials import (
    GaugeSpec,
    TrapSpec,
    build_gauge,
    build_trap,
    gauge_multiplier,
)

NORMALIZATION_TOL = 1e-8


@dataclass
class ModelParams:
    beta: float = 0.0
    R: float = 0.1
    trap: TrapSpec = field(default_factory=TrapSpec)
    gauge: GaugeSpec = field(default_factory=GaugeSpec)

    def __post_init__(self):
        if not np.isfinite(self.beta):
            raise ValueError("beta must be finite")
        if self.R < 0:
            raise ValueError("smearing radius must be >= 0")


@dataclass
class SolverConfig:
    step: float = 0.1
    tol: float = 1e-10
    max_iter: int = 50_000
    backtracking: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("step must be > 0")
        if self.tol <= 0:
            raise ValueError("tol must be > 0")
        if not 0 < self.backtracking < 1:
            raise ValueError("backtracking factor must be in (0, 1)")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass
class MinimizeResult:
    u_star: ComplexField
    energy: float
    trace: list[float]
    iterations: int
    converged: bool
    message: str = ""


class _Workspace:
    """Grid-sampled model data shared across evaluations of one configuration."""

    def __init__(self, grid: Grid2D, params: ModelParams):
        self.grid = grid
        self.params = params
        self.V = build_trap(params.trap, grid).values
        ae = build_gauge(params.gauge, grid)
        self.Aex = ae.x_values
        self.Aey = ae.y_values
        self.kx, self.ky = grid.wavenumbers
        if params.beta != 0.0:
            self.mx, self.my = gauge_multiplier(grid, params.R)
        else:
            self.mx = self.my = None

    def total_gauge(self, rho: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if self.params.beta == 0.0:
            return self.Aex, self.Aey
        rh = np.fft.fft2(rho)
        ax = self.Aex + self.params.beta * np.fft.ifft2(self.mx * rh).real
        ay = self.Aey + self.params.beta * np.fft.ifft2(self.my * rh).real
        return ax, ay

    def covariant(self, u: np.ndarray, ax, ay) -> tuple[np.ndarray, np.ndarray]:
        uh = np.fft.fft2(u)
        return (
            np.fft.ifft2(self.kx * uh) + ax * u,
            np.fft.ifft2(self.ky * uh) + ay * u,
        )

    def energy(self, u: np.ndarray) -> float:
        rho = np.abs(u) ** 2
        ax, ay = self.total_gauge(rho)
        dx, dy = self.covariant(u, ax, ay)
        dens = np.abs(dx) ** 2 + np.abs(dy) ** 2 + self.V * rho
        return float(self.grid.h**2 * dens.sum())

    def gradient(self, u: np.ndarray) -> np.ndarray:
        rho = np.abs(u) ** 2
        ax, ay = self.total_gauge(rho)
        dx, dy = self.covariant(u, ax, ay)
        # (p + A)^2 u + V u
        t = np.fft.ifft2(self.kx * np.fft.fft2(dx) + self.ky * np.fft.fft2(dy))
        g = t + ax * dx + ay * dy + self.V * u
        if self.params.beta != 0.0:
            jx = (np.conj(u) * dx).real
            jy = (np.conj(u) * dy).real
            g = g + (2 * self.params.beta) * _self_consistency_potential(
                self, jx, jy
            ) * u
        return g


def _self_consistency_potential(ws: _Workspace, jx: np.ndarray, jy: np.ndarray):
    """Scalar potential from pairing the current with the perp-gradient kernel.

    The kernel is odd, so differentiating A[|u|^2] inside the energy correlates
    (rather than convolves) it with the gauge current; in k-space that is the
    conjugate multiplier. Contract: the finite-difference identity on the
    projected gradient, not any printed formula.
    """
    sh = np.conj(ws.mx) * np.fft.fft2(jx) + np.conj(ws.my) * np.fft.fft2(jy)
    return np.fft.ifft2(sh).real


def total_gauge_field(u: ComplexField, params: ModelParams) -> VectorField2:
    """A_e + beta * A[|u|^2] assembled on u's grid."""
    ws = _Workspace(u.grid, params)
    ax, ay = ws.total_gauge(np.abs(u.values) ** 2)
    ax = np.broadcast_to(ax, u.values.shape).copy()
    ay = np.broadcast_to(ay, u.values.shape).copy()
    return VectorField2(u.grid, ax, ay)


def _require_normalized(u: ComplexField):
    if abs(norm(u) - 1.0) > NORMALIZATION_TOL:
        raise ValueError(f"field is not normalized: |norm - 1| = {abs(norm(u) - 1.0):.2e}")


def energy_af(u: ComplexField, params: ModelParams) -> float:
    """Average-field energy of a normalized state."""
    _require_normalized(u)
    return _Workspace(u.grid, params).energy(u.values)


def current_density(u: ComplexField, A_total: VectorField2) -> VectorField2:
    """Gauge current Re(conj(u) (-i grad + A_total) u)."""
    if u.grid != A_total.grid:
        raise ValueError("grid mismatch between state and gauge field")
    kx, ky = u.grid.wavenumbers
    uh = np.fft.fft2(u.values)
    dx = np.fft.ifft2(kx * uh) + A_total.x_values * u.values
    dy = np.fft.ifft2(ky * uh) + A_total.y_values * u.values
    return VectorField2(
        u.grid, (np.conj(u.values) * dx).real, (np.conj(u.values) * dy).real
    )


def gradient_af(u: ComplexField, params: ModelParams) -> ComplexField:
    """First variation g of the energy: d/de E[normalize(u + e v)] = 2 Re<v, g_p>
    with g_p = g - <u,g> u, for every direction v."""
    _require_normalized(u)
    return ComplexField(u.grid, _Workspace(u.grid, params).gradient(u.values))


def project_tangent(u: ComplexField, g: ComplexField) -> ComplexField:
    return ComplexField(u.grid, g.values - inner_product(u, g) * u.values)


def minimize_af(
    params: ModelParams,
    cfg: SolverConfig,
    u0: ComplexField | None = None,
    grid: Grid2D | None = None,
) -> MinimizeResult:
    """Projected gradient descent with backtracking on the unit L2 sphere.

    Starts from u0 if given (must be normalized), otherwise from a seeded
    complex Gaussian field on `grid`. Accepted steps decrease the energy
    (Armijo condition), so the trace is non-increasing; stops once the
    decrease of an accepted step falls below cfg.tol.
    """
    if u0 is None:
        if grid is None:
            raise ValueError("either u0 or grid must be provided")
        u0 = random_normalized_field(grid, cfg.seed)
    else:
        _require_normalized(u0)
    ws = _Workspace(u0.grid, params)
    h2 = u0.grid.h**2

    u = u0.values.copy()
    energy = ws.energy(u)
    trace = [energy]
    step = cfg.step

    for it in range(1, cfg.max_iter + 1):
        g = ws.gradient(u)
        gp = g - (h2 * np.vdot(u, g)) * u
        gn2 = float(h2 * np.vdot(gp, gp).real)

        while True:
            trial = u - step * gp
            trial /= np.sqrt(h2) * np.linalg.norm(trial)
            e_trial = ws.energy(trial)
            if e_trial <= energy - 1e-4 * step * gn2:
                break
            step *= cfg.backtracking
            if step < 1e-14:
                return MinimizeResult(
                    ComplexField(u0.grid, u),
                    energy,
                    trace,
                    it - 1,
                    False,
                    "step underflow during backtracking",
                )
        decrease = energy - e_trial
        u, energy = trial, e_trial
        trace.append(energy)
        step *= 1.25
        if decrease < cfg.tol:
            return MinimizeResult(
                ComplexField(u0.grid, u), energy, trace, it, True, ""
            )

    return MinimizeResult(
        ComplexField(u0.grid, u),
        energy,
        trace,
        cfg.max_iter,
        False,
        "max_iter reached",
    )
