import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_band_field
from kp5.errors import IllPosedInversionError, SnapshotFormatError, SpectralSymmetryError
from kp5.spectral import (
    Grid2D,
    PhysicalField,
    SNAPSHOT_MAGIC,
    SpectralField,
    conjugate_reflection,
    dealias,
    forward_transform,
    hermitian_part,
    inverse_transform,
    is_hermitian,
    load_snapshot,
    physical_l2_norm,
    pointwise_square,
    project_zero_x_mean,
    save_snapshot,
    x_antiderivative,
    x_derivative,
)


def test_grid_rejects_odd_and_tiny_sizes():
    with pytest.raises(ValueError):
        Grid2D(15, 16, 1.0, 1.0)
    with pytest.raises(ValueError):
        Grid2D(16, 6, 1.0, 1.0)
    with pytest.raises(ValueError):
        Grid2D(16, 16, -1.0, 1.0)


def test_grid_frequencies(grid16):
    # 2*pi box, so xi_j = j and eta_k = k
    assert grid16.xi[3] == pytest.approx(3.0)
    assert grid16.xi[grid16.nx - 1] == pytest.approx(-1.0)
    assert grid16.xi_max == pytest.approx(8.0)
    assert grid16.xi_dealias == pytest.approx(5.0)
    assert grid16.measure == pytest.approx(4 * np.pi**2)


def test_mode_index_wraps_negative(grid16):
    assert grid16.mode_index(3, 2) == (3, 2)
    assert grid16.mode_index(-1, -2) == (15, 14)


def test_dealias_mask_band(grid16):
    mask = grid16.dealias_mask
    j = grid16.j_index
    k = grid16.k_index
    keep = (3 * np.abs(j)[:, None] <= grid16.nx) & (3 * np.abs(k)[None, :] <= grid16.ny)
    assert np.array_equal(mask, keep)


def test_forward_matches_direct_dft():
    """Spot-check the series convention against an explicit O(n^2) sum."""
    grid = Grid2D(8, 8, 2 * np.pi, 5.0)
    rng = np.random.default_rng(3)
    u = rng.standard_normal((8, 8))
    c = forward_transform(PhysicalField(grid, u)).coeffs
    for j in (0, 1, 3, 5):
        for k in (0, 2, 7):
            acc = 0.0j
            for m in range(8):
                for p in range(8):
                    acc += u[m, p] * np.exp(-2j * np.pi * (j * m / 8 + k * p / 8))
            acc /= 64.0
            assert abs(c[j, k] - acc) <= 1e-13 * (1.0 + abs(acc))


def test_transform_round_trip(grid16):
    f = random_band_field(grid16, seed=11)
    u = inverse_transform(f)
    back = forward_transform(u)
    assert np.allclose(back.coeffs, f.coeffs, rtol=0, atol=1e-14)
    again = inverse_transform(back)
    assert np.allclose(again.values, u.values, rtol=0, atol=1e-13)


def test_parseval(grid16):
    """Discrete integral of u^2 equals the weighted coefficient sum."""
    f = random_band_field(grid16, seed=5)
    u = inverse_transform(f)
    phys = physical_l2_norm(u)
    spec = np.sqrt(grid16.lx * grid16.ly * np.sum(np.abs(f.coeffs) ** 2))
    assert phys == pytest.approx(spec, rel=1e-12)


def test_inverse_requires_hermitian_flag(grid16):
    c = np.zeros((16, 16), dtype=complex)
    c[grid16.mode_index(2, 1)] = 1.0  # no conjugate partner
    f = SpectralField.from_coefficients(grid16, c)
    assert not f.hermitian
    with pytest.raises(SpectralSymmetryError):
        inverse_transform(f)


def test_nyquist_always_zeroed(grid16):
    c = np.ones((16, 16), dtype=complex)
    f = SpectralField(grid16, c)
    assert np.all(f.coeffs[8, :] == 0.0)
    assert np.all(f.coeffs[:, 8] == 0.0)


def test_flag_detection(grid16):
    c = np.zeros((16, 16), dtype=complex)
    c[grid16.mode_index(2, 3)] = 1.0 + 2.0j
    c[grid16.mode_index(-2, -3)] = 1.0 - 2.0j
    f = SpectralField.from_coefficients(grid16, c)
    assert f.hermitian and f.zero_x_mean
    c[grid16.mode_index(0, 1)] = 0.5
    g = SpectralField.from_coefficients(grid16, c)
    assert not g.zero_x_mean
    assert not g.hermitian  # (0,1) has no partner at (0,-1)


def test_conjugate_reflection_involution(grid16):
    rng = np.random.default_rng(7)
    c = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
    assert np.allclose(conjugate_reflection(conjugate_reflection(c)), c)


def test_hermitian_part_is_hermitian_and_idempotent():
    rng = np.random.default_rng(9)
    c = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
    h = hermitian_part(c)
    assert is_hermitian(h)
    assert np.allclose(hermitian_part(h), h)


def test_x_derivative_on_planted_wave(grid16):
    x = grid16.x_nodes[:, None]
    y = grid16.y_nodes[None, :]
    u = np.sin(2 * x) * np.cos(3 * y)
    f = forward_transform(PhysicalField(grid16, u))
    du = inverse_transform(x_derivative(f))
    expected = 2 * np.cos(2 * x) * np.cos(3 * y)
    assert np.allclose(du.values, expected, atol=1e-12)


def test_x_antiderivative_round_trip(grid16):
    f = random_band_field(grid16, seed=13)
    back = x_antiderivative(x_derivative(f))
    expected = project_zero_x_mean(f)
    assert np.allclose(back.coeffs, expected.coeffs, atol=1e-13)
    assert back.zero_x_mean


def test_x_antiderivative_rejects_x_mean(grid16):
    y = grid16.y_nodes[None, :]
    u = np.tile(np.cos(3 * y), (16, 1))  # pure y-dependence, j=0 fiber mass
    f = forward_transform(PhysicalField(grid16, u))
    with pytest.raises(IllPosedInversionError):
        x_antiderivative(f)


def test_square_of_single_cosine(grid16):
    """cos(2x)^2 = 1/2 + cos(4x)/2, all inside the dealiased band."""
    x = grid16.x_nodes[:, None]
    u = np.broadcast_to(np.cos(2 * x), (16, 16)).copy()
    f = forward_transform(PhysicalField(grid16, u))
    sq = dealias(pointwise_square(f))
    c = sq.coeffs
    assert c[grid16.mode_index(0, 0)] == pytest.approx(0.5, abs=1e-14)
    assert c[grid16.mode_index(4, 0)] == pytest.approx(0.25, abs=1e-14)
    assert c[grid16.mode_index(-4, 0)] == pytest.approx(0.25, abs=1e-14)
    live = {grid16.mode_index(j, 0) for j in (0, 4, -4)}
    for j in range(16):
        for k in range(16):
            if (j, k) not in live:
                assert abs(c[j, k]) < 1e-14


def test_square_alias_is_removed(grid16):
    # 2*5 = 10 wraps to mode -6, outside the band kept by the 2/3 rule
    x = grid16.x_nodes[:, None]
    u = np.broadcast_to(np.cos(5 * x), (16, 16)).copy()
    f = dealias(forward_transform(PhysicalField(grid16, u)))
    sq = dealias(pointwise_square(f))
    c = sq.coeffs.copy()
    assert c[grid16.mode_index(0, 0)] == pytest.approx(0.5, abs=1e-14)
    c[grid16.mode_index(0, 0)] = 0.0
    assert np.max(np.abs(c)) < 1e-14


def test_dealias_idempotent(grid16):
    f = forward_transform(
        PhysicalField(grid16, np.random.default_rng(2).standard_normal((16, 16)))
    )
    once = dealias(f)
    twice = dealias(once)
    assert np.array_equal(once.coeffs, twice.coeffs)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_parseval_property(seed):
    grid = Grid2D(16, 16, 2 * np.pi, 2 * np.pi)
    f = random_band_field(grid, seed=seed)
    u = inverse_transform(f)
    spec = np.sqrt(grid.lx * grid.ly * np.sum(np.abs(f.coeffs) ** 2))
    assert physical_l2_norm(u) == pytest.approx(spec, rel=1e-11, abs=1e-13)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_round_trip_property(seed):
    grid = Grid2D(16, 16, 2 * np.pi, 2 * np.pi)
    f = random_band_field(grid, seed=seed)
    back = forward_transform(inverse_transform(f))
    scale = np.max(np.abs(f.coeffs)) + 1e-30
    assert np.max(np.abs(back.coeffs - f.coeffs)) <= 1e-13 * scale


def test_snapshot_round_trip(tmp_path, grid16):
    f = random_band_field(grid16, seed=21)
    path = tmp_path / "field.kp5s"
    save_snapshot(f, path)
    g = load_snapshot(path)
    assert g.grid == grid16
    assert np.array_equal(g.coeffs, f.coeffs)
    assert g.hermitian == f.hermitian
    assert g.zero_x_mean == f.zero_x_mean


def test_snapshot_bad_magic(tmp_path, grid16):
    f = random_band_field(grid16, seed=1)
    path = tmp_path / "field.kp5s"
    save_snapshot(f, path)
    raw = bytearray(path.read_bytes())
    raw[:4] = b"XXXX"
    path.write_bytes(bytes(raw))
    with pytest.raises(SnapshotFormatError):
        load_snapshot(path)


def test_snapshot_truncated(tmp_path, grid16):
    f = random_band_field(grid16, seed=1)
    path = tmp_path / "field.kp5s"
    save_snapshot(f, path)
    raw = path.read_bytes()
    path.write_bytes(raw[: len(raw) - 8])
    with pytest.raises(SnapshotFormatError):
        load_snapshot(path)
    path.write_bytes(raw[:10])
    with pytest.raises(SnapshotFormatError):
        load_snapshot(path)


def test_snapshot_rejects_nyquist_content(tmp_path, grid16):
    f = random_band_field(grid16, seed=1)
    path = tmp_path / "field.kp5s"
    save_snapshot(f, path)
    raw = bytearray(path.read_bytes())
    header = len(raw) - 16 * 16 * 16
    # poke a nonzero value into the Nyquist row (array row nx//2 = 8)
    offset = header + (8 * 16 + 0) * 16
    raw[offset : offset + 16] = np.complex128(1.0 + 0j).tobytes()
    path.write_bytes(bytes(raw))
    with pytest.raises(SnapshotFormatError):
        load_snapshot(path)


def test_snapshot_rejects_bad_version(tmp_path, grid16):
    f = random_band_field(grid16, seed=1)
    path = tmp_path / "field.kp5s"
    save_snapshot(f, path)
    raw = bytearray(path.read_bytes())
    assert raw[:4] == SNAPSHOT_MAGIC
    raw[4] = 99
    path.write_bytes(bytes(raw))
    with pytest.raises(SnapshotFormatError):
        load_snapshot(path)
