import numpy as np
import pytest

from sinodiff import AngularMask, Sinogram, apply_mask, random_mask, to_bin_mask
from sinodiff.diffusion import (
    conditioning,
    consistency_fill,
    denormalize,
    merge_prediction,
    normalize,
)
from sinodiff.metrics import abs_error_map


def test_normalize_endpoints():
    assert normalize(np.array([0.0]), 8.0)[0] == -1.0
    assert normalize(np.array([8.0]), 8.0)[0] == 1.0


def test_normalize_roundtrip(rng):
    x = rng.random((30, 40)) * 17.0
    back = denormalize(normalize(x, 17.0), 17.0)
    assert np.allclose(back, x, rtol=1e-6)


def test_normalize_rejects_bad_scale():
    with pytest.raises(ValueError):
        normalize(np.ones(3), 0.0)
    with pytest.raises(ValueError):
        denormalize(np.ones(3), -1.0)


def _make_la(geo64, rng):
    gt = Sinogram(geo64, rng.random(geo64.shape, dtype=np.float32) * 5.0)
    mask = random_mask(4, 90, 1 / 3)
    return gt, apply_mask(mask, gt), mask


def test_conditioning_channels(geo64, rng):
    gt, la, mask = _make_la(geo64, rng)
    cond = conditioning(la, mask, scale=5.0)
    assert cond.shape == (2, 90, 95)
    assert cond.dtype == np.float32
    bins = to_bin_mask(mask, geo64).data
    # mask channel is the bin indicator
    assert np.array_equal(cond[1], bins)
    # observed bins carry the normalized measurements; the wedge carries the
    # normalized consistency fill
    observed = bins == 1
    expected = normalize(la.data, 5.0)[observed].astype(np.float32)
    assert np.allclose(cond[0][observed], expected, atol=1e-6)
    fill = consistency_fill(la, mask)
    expected_wedge = normalize(fill, 5.0)[bins == 0].astype(np.float32)
    assert np.allclose(cond[0][bins == 0], expected_wedge, atol=1e-6)
    assert np.isfinite(cond).all()


def test_consistency_fill_trivial_masks(geo64, rng):
    gt, la, mask = _make_la(geo64, rng)
    # no missing rows: identity
    full = consistency_fill(gt, AngularMask(90, 0, 0))
    assert full.data.tobytes() == gt.data.tobytes()
    # nothing observed: no anchors, all zeros
    empty = consistency_fill(gt, AngularMask(90, 0, 90))
    assert not empty.data.any()


def test_consistency_fill_keeps_observed_and_fills_wedge(proj64, rng):
    from sinodiff import random_phantom

    gt = proj64.forward(random_phantom(seed=11, size=64))
    mask = random_mask(4, 90, 1 / 3)
    la = apply_mask(mask, gt)
    filled = consistency_fill(la, mask)
    rows = mask.observed_rows().astype(bool)
    assert filled.data[rows].tobytes() == la.data[rows].tobytes()
    wedge = filled.data[~rows]
    assert wedge.any() and np.isfinite(wedge).all()
    # the fill should be a decent estimate of the true wedge for real sinograms
    err = np.abs(wedge - gt.data[~rows]).mean() / gt.data.max()
    assert err < 0.05


def test_merge_empty_mask_keeps_observed(geo64, rng):
    gt, _, _ = _make_la(geo64, rng)
    pred = Sinogram(geo64, rng.random(geo64.shape, dtype=np.float32))
    merged = merge_prediction(pred, gt, AngularMask(90, 0, 0))
    assert merged.data.tobytes() == gt.data.tobytes()


def test_merge_full_mask_keeps_prediction(geo64, rng):
    gt, _, _ = _make_la(geo64, rng)
    pred = Sinogram(geo64, rng.random(geo64.shape, dtype=np.float32))
    merged = merge_prediction(pred, gt, AngularMask(90, 5, 90))
    assert merged.data.tobytes() == pred.data.tobytes()


def test_merge_retains_observed_bits(geo64, rng):
    gt, la, mask = _make_la(geo64, rng)
    pred = Sinogram(geo64, rng.random(geo64.shape, dtype=np.float32))
    merged = merge_prediction(pred, la, mask)
    rows = mask.observed_rows().astype(bool)
    assert merged.data[rows].tobytes() == la.data[rows].tobytes()
    assert np.array_equal(merged.data[~rows], pred.data[~rows])


def test_merge_error_confined_to_missing_rows(geo64, rng):
    # the merged sinogram differs from GT only where data was missing
    gt, la, mask = _make_la(geo64, rng)
    pred = Sinogram(geo64, rng.random(geo64.shape, dtype=np.float32))
    merged = merge_prediction(pred, la, mask)
    err = abs_error_map(merged.data, gt.data)
    rows = mask.observed_rows().astype(bool)
    assert (err[rows] == 0).all()


def test_merge_rejects_geometry_mismatch(geo64, rng):
    from sinodiff import ProjectionGeometry

    other = ProjectionGeometry(n_angles=45, n_bins=95, image_size=64)
    pred = Sinogram(other, np.zeros(other.shape, np.float32))
    obs = Sinogram(geo64, np.zeros(geo64.shape, np.float32))
    with pytest.raises(ValueError):
        merge_prediction(pred, obs, AngularMask(90, 0, 10))
