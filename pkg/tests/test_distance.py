import numpy as np
import pytest

from oracles import brute_force_sq_edt
from slicesurf.distance import edt_unsigned, signed_distance, slice_signed_distance
from slicesurf.errors import AllFarError
from slicesurf.grid import BinaryVolume, GridSpec


def test_edt_single_voxel_adjacent():
    spec = GridSpec(5, 5, 5)
    bits = np.zeros(spec.shape, dtype=bool)
    bits[2, 2, 2] = True
    d = edt_unsigned(BinaryVolume(spec, bits), spacing=1 / 5)
    assert d[2, 2, 2] == 0.0
    assert d[3, 2, 2] == pytest.approx(1 / 5)
    assert d[2, 3, 2] == pytest.approx(1 / 5)


def test_edt_full_mask_zero():
    spec = GridSpec(4, 4, 4)
    d = edt_unsigned(BinaryVolume(spec, np.ones(spec.shape, dtype=bool)))
    assert np.all(d == 0.0)


def test_edt_empty_mask_raises():
    spec = GridSpec(4, 4, 4)
    with pytest.raises(AllFarError):
        edt_unsigned(BinaryVolume(spec, np.zeros(spec.shape, dtype=bool)))


def test_edt_two_corner_voxels_vs_brute_force():
    bits = np.zeros((8, 8, 8), dtype=bool)
    bits[0, 0, 0] = True
    bits[7, 7, 7] = True
    d = edt_unsigned(bits, spacing=1.0)
    assert np.array_equal(np.rint(d ** 2).astype(int), brute_force_sq_edt(bits))


def test_edt_brute_force_equivalence_200_random_masks():
    rng = np.random.default_rng(42)
    for _ in range(200):
        bits = np.zeros((4, 4, 4), dtype=bool)
        n_set = rng.integers(1, 4)
        for p in rng.integers(0, 4, size=(n_set, 3)):
            bits[tuple(p)] = True
        d = edt_unsigned(bits, spacing=1.0)
        assert np.array_equal(np.rint(d ** 2).astype(int), brute_force_sq_edt(bits))


def test_signed_half_space_linear_slope():
    n = 16
    spec = GridSpec(n, n, n)
    bits = np.zeros(spec.shape, dtype=bool)
    bits[:, :, : n // 2] = True
    d = signed_distance(BinaryVolume(spec, bits)).data
    z = spec.axis_coords(2)
    expect = z - 0.5  # interface at the voxel face z = 1/2
    assert np.allclose(d, expect[None, None, :], atol=1e-12)
    slope = np.diff(d[0, 0, :]) * n
    assert np.allclose(slope, 1.0)


def test_signed_full_mask_nonpositive():
    spec = GridSpec(4, 4, 4)
    d = signed_distance(BinaryVolume(spec, np.ones(spec.shape, dtype=bool))).data
    assert np.all(d <= 0.0)


def test_signed_ball_center_value():
    n = 64
    spec = GridSpec(n, n, n)
    X, Y, Z = spec.meshgrid()
    bits = (X - 0.5) ** 2 + (Y - 0.5) ** 2 + (Z - 0.5) ** 2 <= 0.3 ** 2
    d = signed_distance(BinaryVolume(spec, bits)).data
    center = d[n // 2, n // 2, n // 2]
    assert center == pytest.approx(-0.3, abs=2 / n)


def test_signed_sign_partition():
    rng = np.random.default_rng(5)
    spec = GridSpec(6, 6, 6)
    bits = rng.random(spec.shape) > 0.5
    if not bits.any() or bits.all():
        bits[0, 0, 0] = True
        bits[3, 3, 3] = False
    d = signed_distance(BinaryVolume(spec, bits)).data
    assert np.all(d[bits] <= 0.0)
    assert np.all(d[~bits] >= 0.0)


def test_signed_metric_property():
    # |d(p) - d(q)| <= |p - q| + 2 * spacing for all voxel pairs
    rng = np.random.default_rng(6)
    n = 8
    spec = GridSpec(n, n, n)
    bits = np.zeros(spec.shape, dtype=bool)
    for p in rng.integers(1, n - 1, size=(6, 3)):
        bits[tuple(p)] = True
    d = signed_distance(BinaryVolume(spec, bits)).data
    coords = np.stack(spec.meshgrid(), axis=-1).reshape(-1, 3)
    vals = d.reshape(-1)
    idx = rng.integers(0, len(vals), size=(500, 2))
    p, q = idx[:, 0], idx[:, 1]
    dist_pq = np.linalg.norm(coords[p] - coords[q], axis=1)
    assert np.all(np.abs(vals[p] - vals[q]) <= dist_pq + 2 / n + 1e-12)


def test_slice_half_plane_slope():
    n = 32
    mask = np.zeros((n, n), dtype=bool)
    mask[: n // 2, :] = True
    d = slice_signed_distance(mask, spacing=1 / n)
    slope = np.diff(d[:, 0]) * n
    assert np.allclose(slope, 1.0)
    assert np.all(d[mask] <= 0)


def test_slice_boundary_value_small():
    n = 16
    mask = np.zeros((n, n), dtype=bool)
    mask[: n // 2, :] = True
    d = slice_signed_distance(mask, spacing=1 / n)
    # rows adjacent to the set/complement interface
    assert abs(d[n // 2 - 1, 0]) <= 1 / n
    assert abs(d[n // 2, 0]) <= 1 / n


def test_slice_disk_center_value():
    n = 64
    yy, xx = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    cx = (xx + 0.5) / n - 0.5
    cy = (yy + 0.5) / n - 0.5
    r = 0.3
    mask = cx ** 2 + cy ** 2 <= r ** 2
    d = slice_signed_distance(mask, spacing=1 / n)
    assert d[n // 2, n // 2] == pytest.approx(-r, abs=2 / n)
