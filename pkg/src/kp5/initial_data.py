"""Initial-condition families used by the simulations and experiments.

All constructors return a zero-x-mean ``SpectralField``: the flow map needs
dx^{-1}, so the j = 0 fiber is projected out.  ``amplitude`` means the peak
physical value before that projection (for the synthetic-spectrum family
the raw spectrum is rescaled to hit the requested peak), so data sizes are
comparable across families.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .spectral import (
    Grid2D,
    PhysicalField,
    SpectralField,
    forward_transform,
    inverse_transform,
    project_zero_x_mean,
)

KINDS = ("gaussian", "gaussian_dx", "line_soliton", "exp_spectrum")


def _from_values(grid: Grid2D, values: np.ndarray) -> SpectralField:
    return project_zero_x_mean(forward_transform(PhysicalField(grid, values)))


def gaussian(grid: Grid2D, amplitude: float, width: float) -> SpectralField:
    """Isotropic Gaussian bump centered in the domain."""
    x = grid.x_nodes[:, None] - grid.lx / 2.0
    y = grid.y_nodes[None, :] - grid.ly / 2.0
    values = amplitude * np.exp(-(x**2 + y**2) / width**2)
    return _from_values(grid, values)


def gaussian_dx(grid: Grid2D, amplitude: float, width: float) -> SpectralField:
    """x-derivative of a Gaussian bump, normalized to peak ``amplitude``.

    The analytic derivative profile  -2x/w^2 * exp(-r^2/w^2)  peaks at
    sqrt(2/e)/w, so the prefactor is chosen to undo that.
    """
    x = grid.x_nodes[:, None] - grid.lx / 2.0
    y = grid.y_nodes[None, :] - grid.ly / 2.0
    peak = np.sqrt(2.0 / np.e) / width
    values = (
        amplitude / peak * (-2.0 * x / width**2) * np.exp(-(x**2 + y**2) / width**2)
    )
    return _from_values(grid, values)


def line_soliton(
    grid: Grid2D, amplitude: float, width: float, ky_mod: int = 1
) -> SpectralField:
    """sech^2 ridge along y with a transverse cosine modulation."""
    x = grid.x_nodes[:, None] - grid.lx / 2.0
    y = grid.y_nodes[None, :]
    profile = amplitude / np.cosh(x / width) ** 2
    values = profile * np.cos(2.0 * np.pi * ky_mod * y / grid.ly)
    return _from_values(grid, values)


def exp_spectrum(
    grid: Grid2D,
    amplitude: float,
    decay_x: float,
    decay_y: float,
    rng: np.random.Generator | None = None,
) -> SpectralField:
    """Synthetic field with exact spectral decay exp(-dx*|xi| - dy*|eta|).

    Every non-Nyquist mode with j != 0 carries the prescribed magnitude, so
    a radius fit on this data recovers ``decay_x`` to rounding error.  With
    an ``rng``, modes get random phases (Hermitian-paired so the field stays
    real); without one the coefficients are real and positive.  The whole
    spectrum is rescaled so the physical field peaks at ``amplitude``.
    """
    if decay_x < 0 or decay_y < 0:
        raise ValueError("spectral decay rates must be >= 0")
    g = grid
    mag = np.exp(-decay_x * np.abs(g.xi_col) - decay_y * np.abs(g.eta_row))
    mag = np.broadcast_to(mag, (g.nx, g.ny)).copy()
    mag[0, :] = 0.0
    mag[g.nx // 2, :] = 0.0
    mag[:, g.ny // 2] = 0.0
    if rng is None:
        coeffs = mag.astype(np.complex128)
    else:
        theta = rng.uniform(0.0, 2.0 * np.pi, size=(g.nx, g.ny))
        # antisymmetrize phases so c(-j,-k) = conj(c(j,k)) holds exactly
        theta_refl = np.roll(theta[::-1, ::-1], shift=(1, 1), axis=(0, 1))
        theta = 0.5 * (theta - theta_refl)
        coeffs = mag * np.exp(1j * theta)
    field = SpectralField(g, coeffs, hermitian=True, zero_x_mean=True)
    peak = float(np.max(np.abs(inverse_transform(field).values)))
    if peak == 0.0:
        return field
    return field.with_coeffs(field.coeffs * (amplitude / peak))


def make_initial_field(
    grid: Grid2D, init, rng: np.random.Generator | None = None
) -> SpectralField:
    """Dispatch on an ``InitialConfig``-shaped object (see config module)."""
    kind = init.kind
    if kind == "gaussian":
        return gaussian(grid, init.amplitude, init.width)
    if kind == "gaussian_dx":
        return gaussian_dx(grid, init.amplitude, init.width)
    if kind == "line_soliton":
        return line_soliton(grid, init.amplitude, init.width, init.ky)
    if kind == "exp_spectrum":
        return exp_spectrum(
            grid,
            init.amplitude,
            init.decay_x,
            init.decay_y,
            rng=rng if init.phases == "random" else None,
        )
    raise ConfigError("initial.kind", f"unknown kind {kind!r}")
