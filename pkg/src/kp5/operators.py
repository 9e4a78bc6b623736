"""Multiplier operators and norms for the fifth-order KP-II flow.

The linear part of the equation

    u_t - u_xxxxx + dx^{-1} u_yy + u u_x = 0

is diagonal in Fourier space with symbol m(xi, eta) = xi^5 - eta^2/xi
(defined as 0 on the xi = 0 fiber, which the flow never populates), so the
free propagator is the unitary multiplier exp(i*t*m).

Analyticity is tracked with exponential frequency weights
A = exp(sigma1*|xi| + sigma2*|eta|).  All weighted norms include the domain
measure,

    ||u||^2 = lx*ly * sum_{j,k} w(xi_j, eta_k) * |c[j,k]|^2,

so the unweighted case (sigma = s = 0) coincides with the physical L2 norm.
Weighted sums are evaluated with a max-exponent shift so that sigma values
near the overflow guard stay finite.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import SigmaOverflowError
from .spectral import Grid2D, SpectralField, dealias, pointwise_square, x_derivative

# exp argument budget: exp(650) ~ 1e282 leaves headroom for the mode sums
SIGMA_GUARD_LIMIT = 650.0


def bracket(x):
    """Smoothed absolute value <x> = sqrt(1 + x^2)."""
    return np.sqrt(1.0 + np.square(x))


@dataclass(frozen=True)
class GevreyParams:
    """Weight and regularity parameters for the analytic-norm family.

    sigma1/sigma2 are the exponential weight rates in xi and eta; s1/s2 are
    polynomial Sobolev orders; b is the modulation order <tau - m>^b; beta
    is the reduced modulation order used on bilinear outputs; eps is the
    auxiliary modulation-over-dispersion order.  Only the sigmas are
    constrained at construction; the (b, beta, eps, s1, s2) ranges matter
    only where the bilinear estimate is invoked and are checked there.
    """

    sigma1: float = 0.0
    sigma2: float = 0.0
    s1: float = 0.0
    s2: float = 0.0
    b: float = 0.55
    beta: float = 0.45
    eps: float = 0.0

    def __post_init__(self):
        if self.sigma1 < 0 or self.sigma2 < 0:
            raise ValueError("analyticity radii sigma1, sigma2 must be >= 0")


def max_admissible_sigma1(grid: Grid2D, sigma2: float = 0.0) -> float:
    """Largest sigma1 passing the overflow guard at the given sigma2."""
    budget = SIGMA_GUARD_LIMIT - sigma2 * grid.eta_max
    return max(0.0, budget / grid.xi_max)


def assert_sigma_within_guard(grid: Grid2D, sigma1: float, sigma2: float) -> None:
    if sigma1 < 0 or sigma2 < 0:
        raise ValueError("analyticity radii sigma1, sigma2 must be >= 0")
    load = sigma1 * grid.xi_max + sigma2 * grid.eta_max
    if load > SIGMA_GUARD_LIMIT:
        raise SigmaOverflowError(
            f"sigma1={sigma1:g}, sigma2={sigma2:g} put exp argument at "
            f"{load:.1f} > {SIGMA_GUARD_LIMIT:g} on this grid; largest "
            f"admissible sigma1 at this sigma2 is "
            f"{max_admissible_sigma1(grid, sigma2):.6g}",
            max_sigma1=max_admissible_sigma1(grid, sigma2),
        )


def _log_weight(grid: Grid2D, sigma1: float, sigma2: float) -> np.ndarray:
    return sigma1 * np.abs(grid.xi_col) + sigma2 * np.abs(grid.eta_row)


def apply_gevrey(field: SpectralField, sigma1: float, sigma2: float) -> SpectralField:
    """Multiply coefficients by exp(sigma1*|xi| + sigma2*|eta|)."""
    assert_sigma_within_guard(field.grid, sigma1, sigma2)
    w = np.exp(_log_weight(field.grid, sigma1, sigma2))
    return field.with_coeffs(field.coeffs * w)


def gevrey_norm(field: SpectralField, sigma1: float, sigma2: float) -> float:
    """Exponentially weighted L2 norm; equals physical L2 at sigma = 0.

    The sum is shifted by the largest weight exponent carried by a nonzero
    coefficient, so large sigma cannot overflow and the dominant shell is
    summed at full precision.
    """
    assert_sigma_within_guard(field.grid, sigma1, sigma2)
    c2 = np.abs(field.coeffs) ** 2
    support = c2 > 0.0
    if not support.any():
        return 0.0
    if sigma1 == 0.0 and sigma2 == 0.0:
        return float(np.sqrt(field.grid.measure * c2.sum()))
    logw = _log_weight(field.grid, sigma1, sigma2)
    shift = float(logw[support].max())
    total = float(np.sum(np.exp(2.0 * (logw[support] - shift)) * c2[support]))
    return float(np.exp(shift) * np.sqrt(field.grid.measure * total))


def sobolev_norm(field: SpectralField, s1: float, s2: float) -> float:
    """Anisotropic Sobolev norm with weights <xi>^s1 <eta>^s2."""
    g = field.grid
    w = bracket(g.xi_col) ** (2.0 * s1) * bracket(g.eta_row) ** (2.0 * s2)
    total = np.sum(w * np.abs(field.coeffs) ** 2)
    return float(np.sqrt(g.measure * total))


@lru_cache(maxsize=8)
def dispersion_symbol(grid: Grid2D) -> np.ndarray:
    """m(xi, eta) = xi^5 - eta^2/xi, zero on the xi = 0 fiber."""
    xi = grid.xi_col
    eta = grid.eta_row
    with np.errstate(divide="ignore", invalid="ignore"):
        m = xi**5 - eta**2 / xi
    m = np.where(xi == 0.0, 0.0, m)
    m = np.ascontiguousarray(np.broadcast_to(m, (grid.nx, grid.ny)))
    m.setflags(write=False)
    return m


def semigroup_apply(field: SpectralField, t: float) -> SpectralField:
    """Free evolution exp(i*t*m), a unitary multiplier on every norm here."""
    phase = np.exp(1j * t * dispersion_symbol(field.grid))
    return field.with_coeffs(field.coeffs * phase)


def l2_inner(a: SpectralField, b: SpectralField) -> float:
    """Physical-space inner product of two real fields via their coefficients."""
    if a.grid != b.grid:
        raise ValueError("inner product requires a shared grid")
    return float(a.grid.measure * np.real(np.sum(a.coeffs * np.conj(b.coeffs))))


def remainder_n(field: SpectralField, sigma1: float, sigma2: float) -> SpectralField:
    """Weight-commutator remainder N(f) = dx[(A f)^2 - A(f^2)].

    A is the exponential weight at (sigma1, sigma2); squares are evaluated
    pseudo-spectrally with 2/3 dealiasing.  Vanishes identically at
    sigma1 = sigma2 = 0 (exactly, in floating point: both branches then run
    on bitwise-equal inputs).  On single-mode data the two branches agree
    wherever the triangle inequality is an equality, so N = 0 there too.
    """
    f = dealias(field)
    af = apply_gevrey(f, sigma1, sigma2)
    sq_af = dealias(pointwise_square(af))
    a_sq = apply_gevrey(dealias(pointwise_square(f)), sigma1, sigma2)
    diff = SpectralField(
        field.grid,
        sq_af.coeffs - a_sq.coeffs,
        hermitian=field.hermitian,
        zero_x_mean=False,
    )
    return x_derivative(diff)


def exp_gap_ratio(xi, xi1, sigma: float):
    """Normalized gap of exponential weights along an interaction.

    For output frequency xi split as xi1 + (xi - xi1),

        ratio = (e^a - e^b) / e^a * <xi> / (sigma * <xi - xi1> * <xi1>)

    with a = sigma*(|xi - xi1| + |xi1|) >= b = sigma*|xi|.  Computed via
    expm1 so near-cancellations (xi1 close to 0 or to xi) stay accurate;
    exactly zero at xi1 = 0 and xi1 = xi.  Accepts scalars or arrays.
    """
    if sigma <= 0:
        raise ValueError("exp_gap_ratio requires sigma > 0")
    xi = np.asarray(xi, dtype=np.float64)
    xi1 = np.asarray(xi1, dtype=np.float64)
    a = sigma * (np.abs(xi - xi1) + np.abs(xi1))
    b = sigma * np.abs(xi)
    gap = -np.expm1(b - a)  # (e^a - e^b)/e^a, exact at b == a
    ratio = gap * bracket(xi) / (sigma * bracket(xi - xi1) * bracket(xi1))
    if ratio.ndim == 0:
        return float(ratio)
    return ratio
