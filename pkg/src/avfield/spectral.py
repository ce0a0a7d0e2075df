"""One-body spectrum, energy-window projectors, and operator-estimate scans.

The one-body operator h = (p + A_e)^2 + V is discretized with spectral
momenta and a diagonal potential, and diagonalized iteratively (ARPACK).
Energy windows of sqrt(h) give the projectors used to probe the plane-wave
compression bound and the CLR-type eigenvalue-count scaling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .fields import ComplexField, Grid2D, RealField, VectorField2, one_body_apply
from .meanfield import ModelParams
from .potentials import build_gauge, build_trap, smeared_log_gradient

DIMENSION_BUDGET = 400


@dataclass
class SpectralBasis:
    grid: Grid2D
    eigenvalues: np.ndarray  # ascending, shape (m,)
    modes: np.ndarray  # shape (m, n, n), orthonormal in the h^2-weighted product
    params: ModelParams

    @property
    def size(self) -> int:
        return len(self.eigenvalues)

    def mode(self, a: int) -> ComplexField:
        return ComplexField(self.grid, self.modes[a])

    def reliable_limit(self) -> float:
        """Largest trustworthy eigenvalue: a quarter of the grid's Nyquist
        kinetic scale (discretization error grows near the cutoff)."""
        return (np.pi * self.grid.n / self.grid.L) ** 2 / 4


@dataclass
class Projector:
    basis: SpectralBasis
    indices: np.ndarray
    lam_lo: float
    lam_hi: float

    @property
    def rank(self) -> int:
        return len(self.indices)


def _operator_pieces(params: ModelParams, grid: Grid2D):
    V = build_trap(params.trap, grid)
    A = build_gauge(params.gauge, grid)
    return V, A


def build_spectrum(
    params: ModelParams, grid: Grid2D, m: int, *, extra: int = 8
) -> SpectralBasis:
    """Lowest m eigenpairs of h = (p + A_e)^2 + V on the grid.

    A few extra pairs are converged and discarded to protect the top of the
    requested window from Ritz-edge contamination.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if m > DIMENSION_BUDGET:
        raise ValueError(f"m = {m} exceeds the dimension budget {DIMENSION_BUDGET}")
    V, A = _operator_pieces(params, grid)
    n = grid.n
    k = min(m + extra, n * n - 2)

    def matvec(vec):
        u = ComplexField(grid, vec.reshape(n, n))
        return one_body_apply(u, V, A).values.ravel()

    op = LinearOperator((n * n, n * n), matvec=matvec, dtype=np.complex128)
    v0 = np.full(n * n, 1.0 + 0.0j)
    try:
        _, vecs = eigsh(op, k=k, which="SA", v0=v0)
    except ArpackNoConvergence as exc:
        raise RuntimeError(
            f"eigen-solver did not converge ({len(exc.eigenvalues)} of {k} pairs); "
            "residual report unavailable"
        ) from exc
    # ARPACK's complex-Hermitian path does not orthonormalize degenerate
    # clusters; re-diagonalize in the orthonormalized Ritz subspace.
    Q, _ = np.linalg.qr(vecs)
    HQ = np.column_stack([matvec(Q[:, j]) for j in range(Q.shape[1])])
    Hm = Q.conj().T @ HQ
    Hm = (Hm + Hm.conj().T) / 2
    w, S = np.linalg.eigh(Hm)
    vals = w[:m]
    # Euclidean-orthonormal columns; rescale for h^2-weighted inner products.
    modes = ((Q @ S[:, :m]).T / grid.h).reshape(m, n, n)

    basis = SpectralBasis(grid, vals, modes, params)
    _validate_basis(basis, V, A)
    return basis


def _validate_basis(basis: SpectralBasis, V: RealField, A: VectorField2):
    h2 = basis.grid.h**2
    flat = basis.modes.reshape(basis.size, -1)
    gram = h2 * (flat.conj() @ flat.T)
    ortho_err = float(np.abs(gram - np.eye(basis.size)).max())
    if ortho_err > 1e-10:
        raise RuntimeError(f"basis orthonormality residual {ortho_err:.2e} > 1e-10")
    for a in range(basis.size):
        u = ComplexField(basis.grid, basis.modes[a])
        resid = one_body_apply(u, V, A).values - basis.eigenvalues[a] * basis.modes[a]
        rnorm = float(np.sqrt(h2) * np.linalg.norm(resid))
        if rnorm > 1e-8 * (1 + abs(basis.eigenvalues[a])):
            raise RuntimeError(
                f"eigenpair {a} residual {rnorm:.2e} exceeds 1e-8*(1+lambda)"
            )


def build_projector(
    basis: SpectralBasis, lam_lo: float, lam_hi: float
) -> Projector:
    """Select modes with sqrt(lambda) in [lam_lo, lam_hi); exact idempotent
    on the computed span. Use lam_hi = inf for 'everything above lam_lo'."""
    if not lam_lo < lam_hi:
        raise ValueError("window requires lam_lo < lam_hi")
    if np.isfinite(lam_hi) and lam_hi**2 > basis.reliable_limit():
        raise ValueError(
            f"window top {lam_hi}^2 exceeds the reliable spectrum "
            f"{basis.reliable_limit():.1f}"
        )
    if np.isfinite(lam_hi) and lam_hi**2 > basis.eigenvalues[-1]:
        raise ValueError("window extends above the computed spectrum")
    roots = np.sqrt(np.maximum(basis.eigenvalues, 0.0))
    idx = np.nonzero((roots >= lam_lo) & (roots < lam_hi))[0]
    return Projector(basis, idx, lam_lo, lam_hi)


@dataclass
class CLRScan:
    lambdas: np.ndarray
    counts: np.ndarray
    slope: float
    intercept: float


def clr_dimension_scan(basis: SpectralBasis, s: float, lam_list) -> CLRScan:
    """Counts N(lam) = dim{sqrt(h) < lam} and the log-log least-squares slope.

    The expected growth for a trap of exponent s is lam^(2 + 4/s).
    """
    lam_list = np.asarray(sorted(lam_list), dtype=float)
    if len(lam_list) < 4:
        raise ValueError("need at least 4 scan points")
    if lam_list[-1] ** 2 > basis.eigenvalues[-1]:
        raise ValueError("scan extends above the computed spectrum")
    if lam_list[-1] ** 2 > basis.reliable_limit():
        raise ValueError("scan extends above the reliable spectrum")
    roots = np.sqrt(np.maximum(basis.eigenvalues, 0.0))
    counts = np.array([int(np.sum(roots < lam)) for lam in lam_list])
    if np.any(counts == 0):
        raise ValueError("scan window below the first eigenvalue")
    slope, intercept = np.polyfit(np.log(lam_list), np.log(counts), 1)
    scan = CLRScan(lam_list, counts, float(slope), float(intercept))
    bound = 2 + 4 / s + 0.3
    if scan.slope > bound:
        raise RuntimeError(
            f"fitted count exponent {scan.slope:.3f} exceeds the CLR-type bound "
            f"2 + 4/s + 0.3 = {bound:.3f}"
        )
    return scan


def weyl_count(trap, lam: float, L: float = 40.0, n: int = 2048) -> float:
    """Phase-space eigenvalue count (1/4 pi) * int (lam^2 - V)_+ dx by quadrature."""
    grid = Grid2D(L, n)
    V = build_trap(trap, grid)
    return float(grid.h**2 * np.maximum(lam**2 - V.values, 0.0).sum() / (4 * np.pi))


@dataclass
class PlaneWaveRow:
    k: tuple[float, float]
    kind: str  # "cos" or "sin"
    max_abs_eig: float
    constant: float  # max|eig| * |k|^2 / Lambda^2


@dataclass
class PlaneWaveReport:
    lam: float
    rank: int
    rows: list[PlaneWaveRow]

    @property
    def fitted_constant(self) -> float:
        """Smallest constant covering the scan on the decaying branch |k| > Lambda."""
        vals = [r.constant for r in self.rows if np.hypot(*r.k) > self.lam]
        return max(vals) if vals else float("nan")


def _upsample_modes(basis: SpectralBasis, indices, factor: int) -> tuple[np.ndarray, Grid2D]:
    """Zero-padded spectral interpolation of band-limited modes onto a finer grid."""
    n = basis.grid.n
    nf = n * factor
    fine = Grid2D(basis.grid.L, nf)
    out = np.empty((len(indices), nf, nf), dtype=np.complex128)
    for row, a in enumerate(indices):
        fh = np.fft.fftshift(np.fft.fft2(basis.modes[a]))
        pad = (nf - n) // 2
        big = np.zeros((nf, nf), dtype=np.complex128)
        big[pad : pad + n, pad : pad + n] = fh
        out[row] = np.fft.ifft2(np.fft.ifftshift(big)) * factor**2
    return out, fine


def plane_wave_bound_check(
    basis: SpectralBasis, lam: float, k_list, *, upsample: int = 4
) -> PlaneWaveReport:
    """Extreme eigenvalues of the compressions P e_k P, e_k = cos(k.x), sin(k.x).

    Asserts max|eig| <= 1 + 1e-10 (multiplication by a function bounded by 1)
    and reports the per-k constant max|eig| * |k|^2 / lam^2. Large |k| beyond
    the coarse grid's band limit are handled by exact spectral upsampling of
    the (band-limited) window modes.
    """
    proj = build_projector(basis, 0.0, lam)
    if proj.rank == 0:
        raise ValueError(f"window sqrt(h) < {lam} is empty")
    kmax_needed = max(np.hypot(*k) for k in k_list)
    factor = 1
    # products of window modes carry momenta up to ~2*sqrt(reliable); keep the
    # sampling comfortably above |k| + mode bandwidth
    while factor < upsample and (
        np.pi * basis.grid.n * factor / basis.grid.L < 2.5 * kmax_needed
    ):
        factor *= 2
    if factor > 1:
        modes, grid = _upsample_modes(basis, proj.indices, factor)
    else:
        modes, grid = basis.modes[proj.indices], basis.grid
    X, Y = grid.meshes
    flat = modes.reshape(proj.rank, -1)
    h2 = grid.h**2

    rows = []
    for k in k_list:
        phase = k[0] * X + k[1] * Y
        for kind, ek in (("cos", np.cos(phase)), ("sin", np.sin(phase))):
            mat = h2 * (flat.conj() @ (flat * ek.ravel()).T)
            mat = (mat + mat.conj().T) / 2
            eigs = np.linalg.eigvalsh(mat)
            mx = float(np.abs(eigs).max())
            if mx > 1 + 1e-10:
                raise RuntimeError(
                    f"compression norm {mx} exceeds 1 for k={k}, {kind}"
                )
            knorm2 = k[0] ** 2 + k[1] ** 2
            rows.append(PlaneWaveRow(tuple(k), kind, mx, mx * knorm2 / lam**2))
    return PlaneWaveReport(lam, proj.rank, rows)


@dataclass
class SmearedBoundRow:
    R: float
    sup_w_unit_disc: float
    bound_w: float  # 1 + |log R|
    sup_grad: float
    bound_grad: float  # 1/R, attained at |x| = R
    sup_grad_exterior: float  # over |x| >= 1; bounded by 1


def smeared_bound_check(R_list, samples: int = 20001) -> list[SmearedBoundRow]:
    """Dense-sample verification of the smeared-potential bounds with explicit
    constants: |w_R| <= 1 + |log R| on the unit disc, sup|grad w_R| = 1/R,
    and |grad w_R| <= 1 outside the unit disc."""
    from .potentials import smeared_log_potential_radial

    rows = []
    for R in R_list:
        if not 0 < R <= 0.5:
            raise ValueError("R_list must lie in (0, 0.5]")
        r_disc = np.linspace(0.0, 1.0, samples)
        w_vals = np.abs(smeared_log_potential_radial(r_disc, R))
        r_all = np.unique(np.concatenate([r_disc, [R], np.linspace(1.0, 4.0, samples // 4)]))
        grads = np.abs(
            smeared_log_gradient(np.stack([r_all, np.zeros_like(r_all)], -1), R)[:, 0]
        )
        ext = r_all >= 1.0
        rows.append(
            SmearedBoundRow(
                R=R,
                sup_w_unit_disc=float(w_vals.max()),
                bound_w=1 + abs(np.log(R)),
                sup_grad=float(grads.max()),
                bound_grad=1.0 / R,
                sup_grad_exterior=float(grads[ext].max()),
            )
        )
        row = rows[-1]
        if row.sup_w_unit_disc > row.bound_w:
            raise RuntimeError(f"|w_R| bound violated at R={R}")
        if not np.isclose(row.sup_grad, row.bound_grad, rtol=1e-12):
            raise RuntimeError(f"sup|grad w_R| != 1/R at R={R}")
        if row.sup_grad_exterior > 1.0 + 1e-12:
            raise RuntimeError(f"exterior gradient bound violated at R={R}")
    return rows
