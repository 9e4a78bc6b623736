import math
from dataclasses import replace

import numpy as np
import pytest

from conftest import random_band_field
from kp5.config import (
    GevreyConfig,
    GridConfig,
    InitialConfig,
    SimConfig,
    TimeConfig,
)
from kp5.diagnostics import (
    SpaceTimeField,
    almost_conservation_run,
    bilinear_ratio_trials,
    bourgain_norm,
    check_bilinear_admissible,
    energy_identity_check,
    radius_decay_run,
    radius_estimate,
    uniqueness_gap,
    window_taper,
)
from kp5.errors import InadmissibleParamsError, InsufficientSupportError
from kp5.initial_data import exp_spectrum, gaussian
from kp5.operators import GevreyParams, semigroup_apply
from kp5.picard import free_window
from kp5.spectral import Grid2D, SpectralField


def small_cfg(**kw):
    base = dict(
        grid=GridConfig(nx=32, ny=32),
        time=TimeConfig(horizon=0.3, samples=3),
        initial=InitialConfig(kind="gaussian", amplitude=0.5, width=2.0),
        gevrey=GevreyConfig(sigma1=0.25, sigma2=0.0),
    )
    base.update(kw)
    return SimConfig(**base)


GRID64 = Grid2D(64, 64, 32 * np.pi, 32 * np.pi)


def test_radius_estimate_recovers_planted_decay():
    for sigma in (0.4, 1.1):
        f = exp_spectrum(GRID64, 1.0, sigma, sigma)
        fit = radius_estimate(f)
        assert fit.sigma_est == pytest.approx(sigma, abs=1e-12)
        assert fit.residual < 1e-10
        assert fit.shells >= 8
        assert fit.sigma_y == pytest.approx(sigma, abs=1e-9)


def test_radius_estimate_free_flow_invariant():
    f = exp_spectrum(GRID64, 1.0, 0.8, 0.8)
    before = radius_estimate(f).sigma_est
    after = radius_estimate(semigroup_apply(f, 0.53)).sigma_est
    assert after == pytest.approx(before, abs=1e-12)


def test_radius_estimate_needs_enough_shells(grid16):
    f = gaussian(grid16, 1.0, 2.0)
    with pytest.raises(InsufficientSupportError):
        radius_estimate(f)


def test_radius_estimate_clamps_at_zero():
    """Growing spectra fit a negative rate; the estimate floors at 0."""
    f = exp_spectrum(GRID64, 1.0, 0.5, 0.5)
    # overcompensate the planted decay so the envelope grows with frequency
    c = f.coeffs * np.exp(1.0 * np.abs(GRID64.xi_col))
    g = SpectralField.from_coefficients(GRID64, c)
    fit = radius_estimate(g)
    assert fit.sigma_est == 0.0


def test_window_taper_normalized():
    for n_t, dt in ((16, 0.01), (64, 0.003)):
        psi = window_taper(n_t, dt)
        assert psi.shape == (n_t,)
        assert np.all(psi >= 0)
        assert dt * psi.sum() == pytest.approx(1.0, rel=1e-12)
        assert psi[0] < psi[n_t // 2]  # vanishes toward the ends


def test_space_time_field_shape_rules(grid16):
    f = random_band_field(grid16, seed=1)
    slices = [semigroup_apply(f, 0.01 * i) for i in range(12)]
    with pytest.raises(ValueError):
        SpaceTimeField.from_slices(slices, 0.01)  # 12 is not a power of two
    field = SpaceTimeField.from_slices(slices[:8], 0.01)
    assert field.n_t == 8
    assert field.duration == pytest.approx(0.08)
    assert np.allclose(field.tau, 2 * np.pi * np.fft.fftfreq(8, 0.01))


def test_space_time_from_window_drops_last(grid16):
    f = random_band_field(grid16, seed=2)
    w = free_window(f, 0.1, slices=16)
    field = SpaceTimeField.from_window(w)
    assert field.n_t == 16


def test_bourgain_norm_zero_params_is_tapered_l2(grid16):
    """With every exponent off, the norm is the spacetime L2 of the
    tapered window: sqrt(sum_t dt * psi(t)^2 * ||u(t)||^2) by Parseval."""
    f = random_band_field(grid16, seed=7)
    w = free_window(f, 0.2, slices=16)
    field = SpaceTimeField.from_window(w)
    psi = window_taper(field.n_t, field.slice_dt)
    slice_l2 = [
        np.sqrt(grid16.lx * grid16.ly * np.sum(np.abs(s.coeffs) ** 2))
        for s in w.slices[:-1]
    ]
    direct = np.sqrt(
        sum(
            field.slice_dt * p**2 * n**2
            for p, n in zip(psi, slice_l2)
        )
    )
    got = bourgain_norm(field, GevreyParams(b=0.0))
    assert got == pytest.approx(direct, rel=1e-12)


def test_bourgain_norm_monotone_in_b(grid16):
    f = random_band_field(grid16, seed=3)
    w = free_window(f, 0.25, slices=16)
    field = SpaceTimeField.from_window(w)
    lo = bourgain_norm(field, GevreyParams(b=0.0))
    hi = bourgain_norm(field, GevreyParams(b=0.55))
    assert 0 < lo <= hi


def test_bourgain_norm_penalizes_detuning(grid16):
    """A mode oscillating off the characteristic pays the <tau - m> weight.

    Uses the pair at (1,1), whose symbol value is 0, so the window can
    temporally resolve both the free phase and the detuned one.
    """
    c = np.zeros((16, 16), dtype=complex)
    c[grid16.mode_index(1, 1)] = 1.0
    c[grid16.mode_index(-1, -1)] = 1.0
    f = SpectralField.from_coefficients(grid16, c)
    dt, n = 0.02, 16
    on = [semigroup_apply(f, dt * i) for i in range(n)]
    detune = 2 * np.pi * 6 / (n * dt)  # six tau bins off the characteristic
    off = [
        s.with_coeffs(np.exp(1j * detune * dt * i) * s.coeffs)
        for i, s in enumerate(on)
    ]
    params = GevreyParams(b=0.55)
    n_on = bourgain_norm(SpaceTimeField.from_slices(on, dt), params)
    n_off = bourgain_norm(SpaceTimeField.from_slices(off, dt), params)
    assert n_off > 2.5 * n_on


def test_admissibility_gate():
    good = GevreyParams(s1=-1.0, s2=0.0, b=0.55, beta=0.45, eps=0.0)
    check_bilinear_admissible(good)
    bad = [
        replace(good, s1=-1.3),
        replace(good, s2=-0.1),
        replace(good, b=0.5),
        replace(good, beta=0.5),
        replace(good, beta=0.3),
        replace(good, eps=0.3),
    ]
    for p in bad:
        with pytest.raises(InadmissibleParamsError):
            check_bilinear_admissible(p)


def test_bilinear_trials_deterministic():
    params = GevreyParams(s1=-1.0, s2=0.0, b=0.55, beta=0.45, eps=0.0)
    a = bilinear_ratio_trials(params, trials=4, seed=99, nx=16, ny=16, n_t=8)
    b = bilinear_ratio_trials(params, trials=4, seed=99, nx=16, ny=16, n_t=8)
    assert a.ratios == b.ratios
    assert all(r > 0 and math.isfinite(r) for r in a.ratios)
    assert a.max_ratio == max(a.ratios)
    other = bilinear_ratio_trials(
        params, trials=4, seed=99, nx=16, ny=16, n_t=8, stream=1
    )
    assert other.ratios != a.ratios


def test_almost_conservation_scaling():
    cfg = small_cfg(initial=InitialConfig(kind="gaussian", amplitude=0.4, width=2.0))
    res = almost_conservation_run(cfg)
    assert res.sigmas == cfg.gevrey.ladder
    mags = [abs(d) for s, d in zip(res.sigmas, res.increments) if s > 0]
    assert all(m > 0 for m in mags)
    assert mags == sorted(mags)  # larger weight, larger defect
    assert 0.5 <= res.slope <= 1.5


def test_uniqueness_gap_bound():
    cfg = small_cfg()
    eps = 1e-6
    res = uniqueness_gap(cfg, eps)
    assert res.samples[0].gap == pytest.approx(eps, rel=1e-9)
    assert res.samples[0].bound == pytest.approx(res.samples[0].gap, rel=1e-12)
    assert res.passed
    assert res.max_ratio <= 1.1
    assert res.samples[-1].t == pytest.approx(cfg.time.horizon)


def test_energy_identity_orders():
    cfg = small_cfg(gevrey=GevreyConfig(sigma1=0.3, sigma2=0.0))
    res = energy_identity_check(cfg)
    assert res.rows[0].rel_err <= 1e-3
    assert all(o >= 2.5 for o in res.orders)
    dts = [row.dt for row in res.rows]
    assert dts == sorted(dts, reverse=True)


def test_radius_decay_run_short():
    cfg = SimConfig(
        grid=GridConfig(nx=64, ny=64),
        time=TimeConfig(horizon=0.5),
        initial=InitialConfig(
            kind="exp_spectrum", amplitude=0.5, decay_x=1.0, decay_y=1.0,
            phases="random",
        ),
        gevrey=GevreyConfig(sigma1=1.0, sigma2=0.0),
        seed=11,
    )
    res = radius_decay_run(cfg)
    assert res.sigma0 == pytest.approx(1.0, abs=1e-6)
    assert res.collapse_time is None
    # sample times snap to integrator steps, so spacing jitters by one dt
    spacing = np.diff([s.t for s in res.samples])
    assert np.all(np.abs(spacing - res.delta) < 0.5 * res.delta)
    assert np.mean(spacing) == pytest.approx(res.delta, rel=0.05)
    assert all(s.sigma_est > 0.9 for s in res.samples)
