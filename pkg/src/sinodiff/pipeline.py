"""End-to-end orchestration: corpus generation, training, inference,
reconstruction, and evaluation. The CLI is a thin shell over these.

Torch-dependent steps import the diffusion modules lazily so that corpus
generation, reconstruction, and evaluation stay numpy-only.
"""

from __future__ import annotations

from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from .dataio import (
    DatasetManifest,
    FileFormatError,
    SampleRecord,
    load_sample,
    read_manifest,
    read_mask,
    read_sino,
    read_sinogram,
    save_checkpoint,
    write_loss_log,
    write_manifest,
    write_mask,
    write_pgm,
    write_sino,
    write_sinogram,
)
from .grid import ProjectionGeometry, Sinogram
from .masking import apply_mask, random_mask
from .metrics import EvalReport, abs_error_map, diff_map, psnr
from .mlem import MlemConfig, OsemConfig, osem_reconstruct, reconstruct
from .phantom import random_phantom
from .projector import Projector

# Disjoint per-sample seed streams, derived from the corpus base seed.
PHANTOM_SEED_STRIDE = 1_000_003
MASK_SEED_STRIDE = 2_000_003

NORM_PERCENTILE = 99.5

DEFAULT_N_TRAIN = 512
DEFAULT_N_EVAL = 32
DEFAULT_SIZE = 64
DEFAULT_ANGLES = 90
DEFAULT_BINS = 95
DEFAULT_MISSING_FRACTION = 0.3333


def generate_corpus(
    out_dir,
    n_train: int = DEFAULT_N_TRAIN,
    n_eval: int = DEFAULT_N_EVAL,
    size: int = DEFAULT_SIZE,
    n_angles: int = DEFAULT_ANGLES,
    n_bins: int = DEFAULT_BINS,
    missing_fraction: float = DEFAULT_MISSING_FRACTION,
    seed: int = 0,
) -> DatasetManifest:
    """Phantoms -> forward projections -> per-sample wedge masks, plus a
    manifest carrying the normalization scale (train-split 99.5th percentile).
    """
    if n_train < 1:
        raise ValueError("n_train must be >= 1")
    if n_eval < 0:
        raise ValueError("n_eval must be >= 0")
    geometry = ProjectionGeometry(n_angles=n_angles, n_bins=n_bins, image_size=size)
    proj = Projector(geometry)
    out_dir = Path(out_dir)
    records = {"train": [], "eval": []}
    train_values: List[np.ndarray] = []
    for split, count, offset in (("train", n_train, 0), ("eval", n_eval, n_train)):
        split_dir = out_dir / split
        split_dir.mkdir(parents=True, exist_ok=True)
        for i in range(count):
            global_idx = offset + i
            phantom_seed = seed * PHANTOM_SEED_STRIDE + global_idx
            mask_seed = seed * MASK_SEED_STRIDE + global_idx
            phantom = random_phantom(phantom_seed, size)
            gt = proj.forward(phantom)
            mask = random_mask(mask_seed, n_angles, missing_fraction)
            sid = f"{i:05d}"
            rec = SampleRecord(
                sample_id=sid,
                phantom_path=f"{split}/{sid}.phantom.sino",
                gt_path=f"{split}/{sid}.gt.sino",
                mask_path=f"{split}/{sid}.mask.bin",
                phantom_seed=phantom_seed,
                mask_seed=mask_seed,
            )
            write_sino(out_dir / rec.phantom_path, phantom.data)
            write_sinogram(out_dir / rec.gt_path, gt)
            write_mask(out_dir / rec.mask_path, mask)
            if split == "train":
                train_values.append(gt.data.ravel())
            records[split].append(rec)
    norm_scale = float(np.percentile(np.concatenate(train_values), NORM_PERCENTILE))
    if norm_scale <= 0:
        raise ValueError("degenerate corpus: normalization scale is not positive")
    manifest = DatasetManifest(
        geometry=geometry,
        n_train=n_train,
        n_eval=n_eval,
        missing_fraction=missing_fraction,
        seed=seed,
        norm_scale=norm_scale,
        samples={k: tuple(v) for k, v in records.items()},
    )
    write_manifest(out_dir, manifest)
    return manifest


def _loss_log_path(checkpoint_path) -> Path:
    p = Path(checkpoint_path)
    return p.with_name(p.stem + ".loss.csv")


def train_on_corpus(data_dir, checkpoint_path, cfg=None):
    """Train on the corpus's train split; write the checkpoint and a
    `<stem>.loss.csv` log next to it. Returns (params, loss log).
    """
    from .diffusion.training import TrainConfig, train

    if cfg is None:
        cfg = TrainConfig()
    manifest = read_manifest(data_dir)
    dataset = []
    for rec in manifest.split("train"):
        _, gt, mask = load_sample(data_dir, rec, manifest.geometry)
        dataset.append((gt, apply_mask(mask, gt), mask))
    params, log = train(dataset, cfg, norm_scale=manifest.norm_scale)
    save_checkpoint(checkpoint_path, params)
    write_loss_log(_loss_log_path(checkpoint_path), log)
    return params, log


# Deterministic samples averaged per prediction. The sampler is a pure
# function of its seed, so the seed-dependent part of the wedge error is
# zero-mean across seeds and averaging cancels it; the whole ensemble is
# still one reproducible function of the --seed argument.
ENSEMBLE_SIZE = 4


def infer_on_corpus(
    model_path,
    data_dir,
    out_dir,
    split: str = "eval",
    n_steps: int = 50,
    seed: int = 0,
    ensemble: int = ENSEMBLE_SIZE,
) -> List[str]:
    """For every sample in the split: sample the model conditioned on the LA
    sinogram (averaging ``ensemble`` deterministic draws), then write
    `<id>.pred.sino` (raw prediction, counts clipped at 0) and
    `<id>.merged.sino` (observed bins kept verbatim).
    """
    from .dataio import load_checkpoint
    from .diffusion.sampling import sample
    from .diffusion.transform import conditioning, denormalize, merge_prediction

    if ensemble < 1:
        raise ValueError("ensemble must be >= 1")
    params = load_checkpoint(model_path)
    manifest = read_manifest(data_dir)
    if params.geometry != manifest.geometry:
        raise FileFormatError(
            f"checkpoint geometry {params.geometry} does not match corpus {manifest.geometry}"
        )
    sched = params.schedule()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for i, rec in enumerate(manifest.split(split)):
        _, gt, mask = load_sample(data_dir, rec, manifest.geometry)
        la = apply_mask(mask, gt)
        cond = conditioning(la, mask, params.norm_scale)
        draws = [
            sample(params, cond[0], cond[1], sched, n_steps=n_steps, seed=seed + i * ensemble + j)
            for j in range(ensemble)
        ]
        pred_norm = np.mean(draws, axis=0, dtype=np.float64)
        pred_counts = np.clip(denormalize(pred_norm, params.norm_scale), 0.0, None)
        pred = Sinogram(manifest.geometry, pred_counts.astype(np.float32))
        merged = merge_prediction(pred, la, mask)
        write_sinogram(out_dir / f"{rec.sample_id}.pred.sino", pred)
        write_sinogram(out_dir / f"{rec.sample_id}.merged.sino", merged)
        written.append(rec.sample_id)
    return written


def reconstruct_file(sino_path, out_path, mask_path=None, n_iterations: int = 50,
                     image_size: Optional[int] = None, n_subsets: int = 1):
    """MLEM-reconstruct one sinogram file; write `<out>.sino` (image grid)
    and a `<out>.pgm` preview. Image size defaults to the bin count.
    ``n_subsets > 1`` switches to ordered-subsets MLEM for faster convergence.
    """
    data = read_sino(sino_path)
    n_angles, n_bins = data.shape
    size = n_bins if image_size is None else image_size
    geometry = ProjectionGeometry(n_angles=n_angles, n_bins=n_bins, image_size=size)
    sino = Sinogram(geometry, data)
    mask = None
    if mask_path is not None:
        mask = read_mask(mask_path)
        if mask.n_angles != n_angles:
            raise FileFormatError(
                f"{mask_path}: mask angles {mask.n_angles} != sinogram rows {n_angles}"
            )
    if n_subsets > 1:
        img = osem_reconstruct(
            Projector(geometry), sino,
            OsemConfig(n_iterations=n_iterations, n_subsets=n_subsets, mask=mask),
        )
    else:
        img = reconstruct(Projector(geometry), sino, MlemConfig(n_iterations=n_iterations, mask=mask))
    out = Path(out_path)
    if out.suffix != ".sino":
        out = out.with_name(out.name + ".sino")
    write_sino(out, img.data)
    write_pgm(out.with_suffix(".pgm"), img.data)
    return img


N_MAP_SAMPLES = 4

CSV_METHODS = ("la", "inpainted")


def evaluate_corpus(data_dir, pred_dir, report_path, n_iterations: int = 50) -> EvalReport:
    """Reconstruct each eval sample three ways (full data, LA data with the
    masked model, merged prediction) and score PSNR against the phantom.

    Writes `report.csv` (la/inpainted rows per sample plus aggregates), a
    `summary.txt` with every tracked comparison, and error-map previews for
    the first few samples.
    """
    manifest = read_manifest(data_dir)
    records = manifest.split("eval")
    if not records:
        raise FileFormatError("corpus has no eval samples")
    pred_dir = Path(pred_dir)
    report_path = Path(report_path)
    report_path.parent.mkdir(parents=True, exist_ok=True)
    geometry = manifest.geometry
    proj = Projector(geometry)

    ids = []
    methods = {
        "la": [],
        "inpainted": [],
        "full": [],
        "la_vs_full_recon": [],
        "inpainted_vs_full_recon": [],
        "merged_sinogram": [],
    }
    for i, rec in enumerate(records):
        phantom, gt, mask = load_sample(data_dir, rec, geometry)
        la = apply_mask(mask, gt)
        merged_path = pred_dir / f"{rec.sample_id}.merged.sino"
        if not merged_path.is_file():
            fallback = pred_dir / f"{rec.sample_id}.gt.sino"
            if fallback.is_file():
                merged_path = fallback
            else:
                raise FileFormatError(f"{merged_path}: no prediction for sample {rec.sample_id}")
        merged = read_sinogram(merged_path, geometry)

        recon_full = reconstruct(proj, gt, MlemConfig(n_iterations=n_iterations))
        recon_la = reconstruct(proj, la, MlemConfig(n_iterations=n_iterations, mask=mask))
        recon_inp = reconstruct(proj, merged, MlemConfig(n_iterations=n_iterations))

        ids.append(rec.sample_id)
        methods["la"].append(psnr(recon_la, phantom))
        methods["inpainted"].append(psnr(recon_inp, phantom))
        methods["full"].append(psnr(recon_full, phantom))
        methods["la_vs_full_recon"].append(psnr(recon_la, recon_full))
        methods["inpainted_vs_full_recon"].append(psnr(recon_inp, recon_full))
        methods["merged_sinogram"].append(psnr(merged, gt))

        if i < N_MAP_SAMPLES:
            base = report_path.parent
            write_pgm(base / f"{rec.sample_id}.la_recon_err.pgm", abs_error_map(recon_la.data, phantom.data))
            write_pgm(base / f"{rec.sample_id}.inpainted_recon_err.pgm", abs_error_map(recon_inp.data, phantom.data))
            write_pgm(base / f"{rec.sample_id}.merged_sino_diff.pgm", diff_map(merged.data, gt.data))

    report = EvalReport(
        sample_ids=tuple(ids), methods={k: tuple(v) for k, v in methods.items()}
    )
    report_path.write_text(report.to_csv(CSV_METHODS), encoding="ascii")
    (report_path.parent / "summary.txt").write_text(report.summary(), encoding="ascii")
    return report
