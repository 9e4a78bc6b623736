"""Successive approximation on a short contraction window.

The mild form of the flow on [0, delta],

    u(t) = S(t) f - 1/2 integral_0^t S(t - t') dx(w(t')^2) dt',

is iterated from the free evolution u_0(t) = S(t) f.  Windows are stored as
uniformly sliced ``TimeWindowField``s; the time integral is a cumulative
composite Simpson rule on the slice grid (an even slice count, so Simpson
pairs tile the window).  Iteration distance is the sup over slices of a
Gevrey norm of the difference; with contraction the per-iterate ratios sit
well below 1 and the window length rule

    delta = c0 / (1 + ||f||)^exponent,  exponent > 1

keeps them there uniformly in the data size.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import PicardDivergenceError
from .operators import dispersion_symbol, gevrey_norm
from .spectral import Grid2D, SpectralField, dealias, pointwise_square, x_derivative


@dataclass(frozen=True, eq=False)
class TimeWindowField:
    """Field slices at times i * delta / (len - 1), i = 0 .. len-1."""

    grid: Grid2D
    delta: float
    slices: tuple[SpectralField, ...]

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("window length must be positive")
        if len(self.slices) < 3 or len(self.slices) % 2 == 0:
            raise ValueError(
                "window needs an even slice count (odd number of sample points)"
            )
        for s in self.slices:
            if s.grid != self.grid:
                raise ValueError("all slices must share the window grid")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.delta, len(self.slices))

    @property
    def slice_dt(self) -> float:
        return self.delta / (len(self.slices) - 1)


def delta_rule(f_norm: float, c0: float, exponent: float) -> float:
    """Contraction window length; decreasing in the data norm."""
    if c0 <= 0:
        raise ValueError("c0 must be positive")
    if not exponent > 1:
        raise ValueError("exponent must exceed 1")
    if not (np.isfinite(f_norm) and f_norm >= 0):
        raise ValueError("data norm must be finite and >= 0")
    return c0 / (1.0 + f_norm) ** exponent


def cumulative_simpson_uniform(values: np.ndarray, h: float) -> np.ndarray:
    """Cumulative integral of uniformly spaced samples along axis 0.

    Even endpoints use composite Simpson pairs; odd endpoints integrate the
    local parabola through the surrounding three samples over its first
    half.  Works on complex data (axis 0 is time, trailing axes ride along).
    """
    n = values.shape[0]
    if n < 3 or n % 2 == 0:
        raise ValueError("need an odd number of samples (even interval count)")
    out = np.zeros_like(values)
    for i in range(2, n, 2):
        out[i] = out[i - 2] + (h / 3.0) * (
            values[i - 2] + 4.0 * values[i - 1] + values[i]
        )
    for i in range(1, n, 2):
        out[i] = out[i - 1] + (h / 12.0) * (
            5.0 * values[i - 1] + 8.0 * values[i] - values[i + 1]
        )
    return out


@lru_cache(maxsize=4)
def _window_phases(grid: Grid2D, delta: float, n_slices: int) -> np.ndarray:
    """exp(i * t_i * m) for every slice time, stacked along axis 0."""
    times = np.linspace(0.0, delta, n_slices)
    m = dispersion_symbol(grid)
    phases = np.exp(1j * times[:, None, None] * m[None, :, :])
    phases.setflags(write=False)
    return phases


def free_window(
    f: SpectralField, delta: float, slices: int = 64
) -> TimeWindowField:
    """Free evolution S(t) f sampled on the window grid."""
    phases = _window_phases(f.grid, delta, slices + 1)
    fields = tuple(f.with_coeffs(p * f.coeffs) for p in phases)
    return TimeWindowField(f.grid, delta, fields)


def duhamel_apply(
    f: SpectralField, w: TimeWindowField, nonlinear: bool = True
) -> TimeWindowField:
    """One mild-form application: free flow of f plus the driven integral.

    The propagator is commuted through the integral,
    S(t - t') = S(t) S(-t'), so a single cumulative quadrature in the
    rotated frame serves every output slice.  With ``nonlinear`` off the
    forcing is zero and the output is exactly the free window.
    """
    if f.grid != w.grid:
        raise ValueError("data and window must share a grid")
    n = len(w.slices)
    phases = _window_phases(f.grid, w.delta, n)
    if nonlinear:
        forcing = np.empty((n, f.grid.nx, f.grid.ny), dtype=np.complex128)
        for i, s in enumerate(w.slices):
            forcing[i] = x_derivative(dealias(pointwise_square(s))).coeffs
        rotated = np.conj(phases) * forcing
        cum = cumulative_simpson_uniform(rotated, w.slice_dt)
        out = phases * (f.coeffs[None, :, :] - 0.5 * cum)
    else:
        out = phases * f.coeffs[None, :, :]
    hermitian = f.hermitian and all(s.hermitian for s in w.slices)
    fields = tuple(
        SpectralField(
            f.grid, out[i], hermitian=hermitian, zero_x_mean=f.zero_x_mean
        )
        for i in range(n)
    )
    return TimeWindowField(f.grid, w.delta, fields)


def window_distance(
    a: TimeWindowField, b: TimeWindowField, sigma1: float, sigma2: float
) -> float:
    """sup over slices of the Gevrey-norm difference."""
    if len(a.slices) != len(b.slices) or a.grid != b.grid:
        raise ValueError("windows must share grid and slicing")
    worst = 0.0
    for sa, sb in zip(a.slices, b.slices):
        diff = SpectralField(
            a.grid,
            sa.coeffs - sb.coeffs,
            hermitian=sa.hermitian and sb.hermitian,
            zero_x_mean=sa.zero_x_mean and sb.zero_x_mean,
        )
        worst = max(worst, gevrey_norm(diff, sigma1, sigma2))
    return worst


@dataclass(frozen=True)
class PicardResult:
    window: TimeWindowField
    distances: tuple[float, ...]  # d_n = sup-slice norm of u_n - u_{n-1}
    ratios: tuple[float, ...]  # d_n / d_{n-1}
    sup_norms: tuple[float, ...]  # sup-slice norm of each iterate
    converged: bool
    iterations: int


def picard_iterate(
    f: SpectralField,
    delta: float,
    *,
    sigma1: float = 0.0,
    sigma2: float = 0.0,
    slices: int = 64,
    n_max: int = 30,
    tol: float = 1e-10,
    nonlinear: bool = True,
) -> PicardResult:
    """Iterate the mild form from the free window until the update
    distance drops under tol.

    Raises ``PicardDivergenceError`` after three consecutive
    non-decreasing distances: on a correctly sized window the map is a
    contraction, so sustained non-decrease means delta was too long.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    prev = free_window(f, delta, slices)
    distances: list[float] = []
    sup_norms: list[float] = []
    ratios: tuple[float, ...] = ()
    for n in range(1, n_max + 1):
        cur = duhamel_apply(f, prev, nonlinear=nonlinear)
        d = window_distance(cur, prev, sigma1, sigma2)
        distances.append(d)
        sup_norms.append(
            max(gevrey_norm(s, sigma1, sigma2) for s in cur.slices)
        )
        ratios = tuple(
            distances[i] / distances[i - 1]
            for i in range(1, len(distances))
            if distances[i - 1] > 0
        )
        if d <= tol:
            return PicardResult(
                cur, tuple(distances), ratios, tuple(sup_norms), True, n
            )
        if n >= 3 and distances[-1] >= distances[-2] >= distances[-3]:
            raise PicardDivergenceError(
                f"update distance stopped contracting after {n} iterations "
                f"({distances[-3]:.3e} -> {distances[-2]:.3e} -> "
                f"{distances[-1]:.3e}); use a shorter window (smaller delta)"
            )
        prev = cur
    return PicardResult(
        prev, tuple(distances), ratios, tuple(sup_norms), False, n_max
    )


@dataclass(frozen=True)
class DoublingResult:
    ratio: float  # sup-slice norm over data norm; 0 for zero data
    passed: bool
    sup_norm: float
    f_norm: float


def doubling_check(
    f: SpectralField,
    window: TimeWindowField,
    sigma1: float,
    sigma2: float,
    bound: float = 2.0,
) -> DoublingResult:
    """Is the window norm at most ``bound`` times the data norm?"""
    f_norm = gevrey_norm(f, sigma1, sigma2)
    sup_norm = max(gevrey_norm(s, sigma1, sigma2) for s in window.slices)
    if f_norm == 0.0:
        return DoublingResult(0.0, sup_norm == 0.0, sup_norm, f_norm)
    ratio = sup_norm / f_norm
    return DoublingResult(ratio, ratio <= bound, sup_norm, f_norm)
