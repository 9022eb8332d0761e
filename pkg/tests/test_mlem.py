import numpy as np
import pytest

from sinodiff import (
    EllipseSpec,
    Image,
    Sinogram,
    random_mask,
    random_phantom,
    rasterize,
    apply_mask,
)
from sinodiff.metrics import psnr
from sinodiff.mlem import MlemConfig, OsemConfig, loglikelihood, osem_reconstruct, reconstruct


def _ll_trace(proj, y, cfg):
    trace = []
    reconstruct(proj, y, cfg, callback=lambda it, img, ll: trace.append(ll))
    return np.array(trace)


def _assert_nondecreasing(trace, rtol=1e-9):
    drops = np.diff(trace) < -rtol * np.abs(trace[:-1])
    assert not drops.any(), f"log-likelihood dropped at iterations {np.nonzero(drops)[0] + 2}"


@pytest.mark.parametrize("seed", range(10))
def test_ascent_noise_free(proj64, seed):
    y = proj64.forward(random_phantom(seed, 64))
    _assert_nondecreasing(_ll_trace(proj64, y, MlemConfig(n_iterations=50)))


@pytest.mark.parametrize("seed", range(10))
def test_ascent_poisson(proj64, seed):
    clean = proj64.forward(random_phantom(seed, 64)).data
    counts = np.random.default_rng(seed).poisson(clean * 50.0).astype(np.float32)
    y = Sinogram(proj64.geometry, counts)
    _assert_nondecreasing(_ll_trace(proj64, y, MlemConfig(n_iterations=50)))


def test_count_preservation(proj64):
    y = proj64.forward(random_phantom(2, 64))
    total_y = float(y.data.sum(dtype=np.float64))
    rels = []

    def record(it, img, ll):
        total_hat = proj64.forward_array(img.data.astype(np.float64)).sum()
        rels.append(abs(total_hat - total_y) / total_y)

    reconstruct(proj64, y, MlemConfig(n_iterations=25), callback=record)
    assert max(rels) <= 1e-3, f"worst count drift {max(rels):.2e}"


def test_psnr_monotone_on_disk(proj64):
    phantom = rasterize(EllipseSpec(0.1, -0.05, 0.5, 0.5, 0.0, 0.8), 64)
    y = proj64.forward(phantom)
    scores = []
    reconstruct(
        proj64,
        y,
        MlemConfig(n_iterations=50),
        callback=lambda it, img, ll: scores.append(psnr(img.data, phantom.data)),
    )
    assert all(b > a for a, b in zip(scores, scores[1:])), "PSNR not monotone on noise-free disk"


def test_zero_measurements_give_zero_image(proj64, geo64):
    y = Sinogram(geo64, np.zeros(geo64.shape, np.float32))
    img = reconstruct(proj64, y, MlemConfig(n_iterations=1))
    assert (img.data == 0).all()


def test_iterates_nonnegative(proj64):
    y = proj64.forward(random_phantom(5, 64))
    mins = []
    reconstruct(
        proj64, y, MlemConfig(n_iterations=20), callback=lambda it, img, ll: mins.append(img.data.min())
    )
    assert min(mins) >= 0


def test_negative_observed_bins_rejected(proj64, geo64):
    data = proj64.forward(random_phantom(1, 64)).data.copy()
    data[4, 10] = -0.5
    with pytest.raises(ValueError):
        reconstruct(proj64, Sinogram(geo64, data), MlemConfig(n_iterations=1))


def test_negative_bins_in_missing_rows_tolerated(proj64, geo64):
    # rows outside the data model are ignored entirely, junk and all
    mask = random_mask(3, 90, 1 / 3)
    data = proj64.forward(random_phantom(1, 64)).data.copy()
    missing = np.nonzero(mask.observed_rows() == 0)[0]
    data[missing[0], :] = -1.0
    img = reconstruct(proj64, Sinogram(geo64, data), MlemConfig(n_iterations=2, mask=mask))
    assert np.isfinite(img.data).all()


@pytest.mark.parametrize("seed", range(5))
def test_masked_recon_worse_than_full(proj64, seed):
    phantom = random_phantom(seed + 50, 64)
    y = proj64.forward(phantom)
    mask = random_mask(seed, 90, 1 / 3)
    full = reconstruct(proj64, y, MlemConfig(n_iterations=50))
    la = reconstruct(proj64, apply_mask(mask, y), MlemConfig(n_iterations=50, mask=mask))
    assert psnr(la.data, phantom.data) < psnr(full.data, phantom.data)


def test_fully_masked_gives_zero_image(proj64, geo64):
    mask = random_mask(0, 90, 1.0)
    y = proj64.forward(random_phantom(0, 64))
    img = reconstruct(proj64, y, MlemConfig(n_iterations=3, mask=mask))
    assert (img.data == 0).all()


def test_loglikelihood_zero_zero(proj64, geo64):
    y = Sinogram(geo64, np.zeros(geo64.shape, np.float32))
    x = Image(64, 64, np.zeros((64, 64), np.float32))
    assert loglikelihood(proj64, y, x) == 0.0


def test_loglikelihood_empty_mask_matches_full(proj64):
    phantom = random_phantom(8, 64)
    y = proj64.forward(phantom)
    full = loglikelihood(proj64, y, phantom)
    masked = loglikelihood(proj64, y, phantom, mask=random_mask(0, 90, 0.0))
    assert full == masked


def test_config_validation():
    with pytest.raises(ValueError):
        MlemConfig(n_iterations=0)
    with pytest.raises(ValueError):
        MlemConfig(epsilon=0.0)


def test_geometry_mismatch_rejected(proj64):
    from sinodiff import ProjectionGeometry

    other = ProjectionGeometry(n_angles=45, n_bins=95, image_size=64)
    y = Sinogram(other, np.zeros(other.shape, np.float32))
    with pytest.raises(ValueError):
        reconstruct(proj64, y, MlemConfig(n_iterations=1))


def test_osem_config_validation():
    with pytest.raises(ValueError):
        OsemConfig(n_iterations=0)
    with pytest.raises(ValueError):
        OsemConfig(n_subsets=0)
    with pytest.raises(ValueError):
        OsemConfig(epsilon=0.0)


@pytest.mark.parametrize("masked", [False, True])
def test_osem_single_subset_is_mlem(proj64, masked):
    y = proj64.forward(random_phantom(11, 64))
    mask = random_mask(4, 90, 1 / 3) if masked else None
    if masked:
        y = apply_mask(mask, y)
    a = reconstruct(proj64, y, MlemConfig(n_iterations=8, mask=mask))
    b = osem_reconstruct(proj64, y, OsemConfig(n_iterations=8, n_subsets=1, mask=mask))
    np.testing.assert_array_equal(a.data, b.data)


def test_osem_advances_n_subsets_times_faster(proj64):
    # the whole point: S subsets at n iterations lands where plain MLEM
    # lands after about S*n, and far beyond plain MLEM at n
    phantom = random_phantom(12, 64)
    mask = random_mask(12, 90, 1 / 3)
    y = apply_mask(mask, proj64.forward(phantom))
    osem = osem_reconstruct(proj64, y, OsemConfig(n_iterations=12, n_subsets=8, mask=mask))
    slow = reconstruct(proj64, y, MlemConfig(n_iterations=12, mask=mask))
    deep = reconstruct(proj64, y, MlemConfig(n_iterations=96, mask=mask))
    p_osem = psnr(osem.data, phantom.data)
    assert p_osem > psnr(slow.data, phantom.data) + 1.0
    assert abs(p_osem - psnr(deep.data, phantom.data)) < 0.5


def test_osem_deterministic(proj64):
    mask = random_mask(7, 90, 1 / 3)
    y = apply_mask(mask, proj64.forward(random_phantom(7, 64)))
    cfg = OsemConfig(n_iterations=5, n_subsets=8, mask=mask)
    a = osem_reconstruct(proj64, y, cfg)
    b = osem_reconstruct(proj64, y, cfg)
    np.testing.assert_array_equal(a.data, b.data)
    assert np.isfinite(a.data).all() and a.data.min() >= 0


def test_osem_too_many_subsets_rejected(proj64):
    mask = random_mask(0, 90, 1 / 3)
    y = apply_mask(mask, proj64.forward(random_phantom(0, 64)))
    n_obs = int(mask.observed_rows().sum())
    with pytest.raises(ValueError):
        osem_reconstruct(proj64, y, OsemConfig(n_iterations=1, n_subsets=n_obs + 1, mask=mask))


def test_osem_negative_observed_bins_rejected(proj64, geo64):
    data = proj64.forward(random_phantom(1, 64)).data.copy()
    data[4, 10] = -0.5
    with pytest.raises(ValueError):
        osem_reconstruct(proj64, Sinogram(geo64, data), OsemConfig(n_iterations=1))


def test_osem_callback_counts_full_passes(proj64):
    y = proj64.forward(random_phantom(3, 64))
    seen = []
    osem_reconstruct(
        proj64, y, OsemConfig(n_iterations=4, n_subsets=8),
        callback=lambda it, img, ll: seen.append((it, np.isfinite(ll))),
    )
    assert [it for it, _ in seen] == [1, 2, 3, 4]
    assert all(ok for _, ok in seen)
