"""On-disk formats: sinogram/image containers, mask records, dataset
manifests, PGM previews, model checkpoints, and loss logs.

All multi-byte fields are little-endian; all float payloads are 32-bit.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np

from .grid import Image, ProjectionGeometry, Sinogram
from .masking import AngularMask

SINO_MAGIC = b"SINO"
MASK_MAGIC = b"MASK"
CKPT_MAGIC = b"SDIF"
FORMAT_VERSION = 1


class FileFormatError(ValueError):
    """A file failed magic/version/length validation."""


def _read_exact(f, n: int, path, what: str) -> bytes:
    buf = f.read(n)
    if len(buf) != n:
        raise FileFormatError(f"{path}: truncated while reading {what}")
    return buf


# --- sinogram / image container ---------------------------------------------


def write_sino(path, data: np.ndarray):
    """rows x cols float32 grid. Holds sinograms (angle-major) and images alike."""
    arr = np.ascontiguousarray(data, dtype="<f4")
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {arr.shape}")
    with open(path, "wb") as f:
        f.write(SINO_MAGIC)
        f.write(struct.pack("<HII", FORMAT_VERSION, arr.shape[0], arr.shape[1]))
        f.write(arr.tobytes())


def read_sino(path) -> np.ndarray:
    with open(path, "rb") as f:
        magic = _read_exact(f, 4, path, "magic")
        if magic != SINO_MAGIC:
            raise FileFormatError(f"{path}: bad magic {magic!r}, expected {SINO_MAGIC!r}")
        version, rows, cols = struct.unpack("<HII", _read_exact(f, 10, path, "header"))
        if version != FORMAT_VERSION:
            raise FileFormatError(f"{path}: unsupported version {version}")
        if rows == 0 or cols == 0:
            raise FileFormatError(f"{path}: zero dimension {rows}x{cols}")
        payload = _read_exact(f, rows * cols * 4, path, "payload")
        if f.read(1):
            raise FileFormatError(f"{path}: trailing bytes after payload")
    return np.frombuffer(payload, dtype="<f4").reshape(rows, cols).copy()


def write_sinogram(path, s: Sinogram):
    write_sino(path, s.data)


def read_sinogram(path, geometry: ProjectionGeometry) -> Sinogram:
    data = read_sino(path)
    if data.shape != geometry.shape:
        raise FileFormatError(
            f"{path}: shape {data.shape} does not match geometry {geometry.shape}"
        )
    return Sinogram(geometry, data)


# --- mask record -------------------------------------------------------------


def write_mask(path, mask: AngularMask):
    with open(path, "wb") as f:
        f.write(MASK_MAGIC)
        f.write(
            struct.pack(
                "<HIII", FORMAT_VERSION, mask.n_angles, mask.missing_start, mask.missing_len
            )
        )


def read_mask(path) -> AngularMask:
    with open(path, "rb") as f:
        magic = _read_exact(f, 4, path, "magic")
        if magic != MASK_MAGIC:
            raise FileFormatError(f"{path}: bad magic {magic!r}, expected {MASK_MAGIC!r}")
        version, n_angles, start, length = struct.unpack(
            "<HIII", _read_exact(f, 14, path, "header")
        )
        if version != FORMAT_VERSION:
            raise FileFormatError(f"{path}: unsupported version {version}")
        if f.read(1):
            raise FileFormatError(f"{path}: trailing bytes")
    return AngularMask(n_angles=n_angles, missing_start=start, missing_len=length)


# --- PGM preview --------------------------------------------------------------


def write_pgm(path, data: np.ndarray):
    """8-bit binary PGM, min-max scaled (a constant image writes as all zeros)."""
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {arr.shape}")
    lo, hi = float(arr.min()), float(arr.max())
    if hi > lo:
        scaled = np.round((arr - lo) / (hi - lo) * 255.0)
    else:
        scaled = np.zeros_like(arr)
    with open(path, "wb") as f:
        f.write(f"P5\n{arr.shape[1]} {arr.shape[0]}\n255\n".encode("ascii"))
        f.write(scaled.astype(np.uint8).tobytes())


# --- dataset manifest ----------------------------------------------------------

MANIFEST_NAME = "manifest.txt"


@dataclass(frozen=True)
class SampleRecord:
    sample_id: str
    phantom_path: str
    gt_path: str
    mask_path: str
    phantom_seed: int
    mask_seed: int


@dataclass(frozen=True)
class DatasetManifest:
    geometry: ProjectionGeometry
    n_train: int
    n_eval: int
    missing_fraction: float
    seed: int
    norm_scale: float
    samples: Dict[str, Tuple[SampleRecord, ...]]  # split -> records

    def split(self, name: str) -> Tuple[SampleRecord, ...]:
        if name not in self.samples:
            raise KeyError(f"unknown split {name!r}; have {sorted(self.samples)}")
        return self.samples[name]


def write_manifest(directory, manifest: DatasetManifest):
    g = manifest.geometry
    lines = [
        "format=sinodiff-corpus",
        f"version={FORMAT_VERSION}",
        f"image_size={g.image_size}",
        f"n_angles={g.n_angles}",
        f"n_bins={g.n_bins}",
        f"n_train={manifest.n_train}",
        f"n_eval={manifest.n_eval}",
        f"missing_fraction={manifest.missing_fraction!r}",
        f"seed={manifest.seed}",
        f"norm_scale={manifest.norm_scale!r}",
    ]
    for split in ("train", "eval"):
        for rec in manifest.samples.get(split, ()):
            p = f"{split}.{rec.sample_id}"
            lines.append(f"{p}.phantom={rec.phantom_path}")
            lines.append(f"{p}.gt={rec.gt_path}")
            lines.append(f"{p}.mask={rec.mask_path}")
            lines.append(f"{p}.phantom_seed={rec.phantom_seed}")
            lines.append(f"{p}.mask_seed={rec.mask_seed}")
    (Path(directory) / MANIFEST_NAME).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_manifest(directory) -> DatasetManifest:
    directory = Path(directory)
    path = directory / MANIFEST_NAME
    if not path.is_file():
        raise FileFormatError(f"{path}: manifest not found")
    kv: Dict[str, str] = {}
    for lineno, line in enumerate(path.read_text(encoding="ascii").splitlines(), 1):
        if not line.strip():
            continue
        if "=" not in line:
            raise FileFormatError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        if key in kv:
            raise FileFormatError(f"{path}:{lineno}: duplicate key {key!r}")
        kv[key] = value

    def need(key: str) -> str:
        if key not in kv:
            raise FileFormatError(f"{path}: missing key {key!r}")
        return kv[key]

    if need("format") != "sinodiff-corpus":
        raise FileFormatError(f"{path}: unrecognized format {kv['format']!r}")
    if int(need("version")) != FORMAT_VERSION:
        raise FileFormatError(f"{path}: unsupported version {kv['version']}")
    geometry = ProjectionGeometry(
        n_angles=int(need("n_angles")),
        n_bins=int(need("n_bins")),
        image_size=int(need("image_size")),
    )
    counts = {"train": int(need("n_train")), "eval": int(need("n_eval"))}
    samples: Dict[str, List[SampleRecord]] = {"train": [], "eval": []}
    for split, count in counts.items():
        for i in range(count):
            p = f"{split}.{i:05d}"
            rec = SampleRecord(
                sample_id=f"{i:05d}",
                phantom_path=need(f"{p}.phantom"),
                gt_path=need(f"{p}.gt"),
                mask_path=need(f"{p}.mask"),
                phantom_seed=int(need(f"{p}.phantom_seed")),
                mask_seed=int(need(f"{p}.mask_seed")),
            )
            for rel in (rec.phantom_path, rec.gt_path, rec.mask_path):
                if not (directory / rel).is_file():
                    raise FileFormatError(f"{path}: referenced file missing: {rel}")
            samples[split].append(rec)
    for field in ("phantom_seed", "mask_seed"):
        seen = [getattr(r, field) for recs in samples.values() for r in recs]
        if len(seen) != len(set(seen)):
            raise FileFormatError(f"{path}: duplicate {field} values")
    return DatasetManifest(
        geometry=geometry,
        n_train=counts["train"],
        n_eval=counts["eval"],
        missing_fraction=float(need("missing_fraction")),
        seed=int(need("seed")),
        norm_scale=float(need("norm_scale")),
        samples={k: tuple(v) for k, v in samples.items()},
    )


def load_sample(directory, rec: SampleRecord, geometry: ProjectionGeometry):
    """Returns (phantom Image, gt Sinogram, mask) for one manifest record."""
    directory = Path(directory)
    phantom_data = read_sino(directory / rec.phantom_path)
    if phantom_data.shape != (geometry.image_size, geometry.image_size):
        raise FileFormatError(f"{rec.phantom_path}: phantom shape {phantom_data.shape}")
    phantom = Image(geometry.image_size, geometry.image_size, phantom_data)
    gt = read_sinogram(directory / rec.gt_path, geometry)
    mask = read_mask(directory / rec.mask_path)
    if mask.n_angles != geometry.n_angles:
        raise FileFormatError(f"{rec.mask_path}: mask angles {mask.n_angles} != geometry")
    return phantom, gt, mask


# --- model checkpoint -----------------------------------------------------------


def save_checkpoint(path, params):
    """SDIF container: header (geometry, schedule, scale, net widths) followed
    by the named float32 weight tensors in state-dict order.
    """
    state = params.net.state_dict()
    g = params.geometry
    with open(path, "wb") as f:
        f.write(CKPT_MAGIC)
        f.write(struct.pack("<H", FORMAT_VERSION))
        f.write(struct.pack("<III", g.n_angles, g.n_bins, g.image_size))
        f.write(struct.pack("<Idd", params.T, params.beta_start, params.beta_end))
        f.write(struct.pack("<d", params.norm_scale))
        mults = params.net.channel_mults
        f.write(struct.pack("<HB", params.net.base_width, len(mults)))
        f.write(struct.pack(f"<{len(mults)}B", *mults))
        f.write(struct.pack("<I", len(state)))
        for name, tensor in state.items():
            enc = name.encode("ascii")
            arr = np.ascontiguousarray(tensor.detach().numpy(), dtype="<f4")
            f.write(struct.pack("<H", len(enc)))
            f.write(enc)
            f.write(struct.pack("<B", arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            f.write(arr.tobytes())


def load_checkpoint(path):
    """Rebuilds the denoiser and its ModelParams bundle from an SDIF file."""
    import torch

    from .diffusion.model import ConditionalDenoiser, ModelParams

    with open(path, "rb") as f:
        magic = _read_exact(f, 4, path, "magic")
        if magic != CKPT_MAGIC:
            raise FileFormatError(f"{path}: bad magic {magic!r}, expected {CKPT_MAGIC!r}")
        (version,) = struct.unpack("<H", _read_exact(f, 2, path, "version"))
        if version != FORMAT_VERSION:
            raise FileFormatError(f"{path}: unsupported version {version}")
        n_angles, n_bins, image_size = struct.unpack("<III", _read_exact(f, 12, path, "geometry"))
        T, beta_start, beta_end = struct.unpack("<Idd", _read_exact(f, 20, path, "schedule"))
        (norm_scale,) = struct.unpack("<d", _read_exact(f, 8, path, "norm_scale"))
        base_width, n_mults = struct.unpack("<HB", _read_exact(f, 3, path, "widths"))
        mults = struct.unpack(f"<{n_mults}B", _read_exact(f, n_mults, path, "mults"))
        (n_tensors,) = struct.unpack("<I", _read_exact(f, 4, path, "tensor count"))
        tensors = {}
        for _ in range(n_tensors):
            (name_len,) = struct.unpack("<H", _read_exact(f, 2, path, "tensor name length"))
            name = _read_exact(f, name_len, path, "tensor name").decode("ascii")
            (ndim,) = struct.unpack("<B", _read_exact(f, 1, path, "tensor rank"))
            shape = struct.unpack(f"<{ndim}I", _read_exact(f, 4 * ndim, path, "tensor shape"))
            count = int(np.prod(shape, dtype=np.int64)) if ndim else 1
            raw = _read_exact(f, count * 4, path, f"tensor {name}")
            tensors[name] = np.frombuffer(raw, dtype="<f4").reshape(shape).copy()
        if f.read(1):
            raise FileFormatError(f"{path}: trailing bytes after tensors")

    geometry = ProjectionGeometry(n_angles=n_angles, n_bins=n_bins, image_size=image_size)
    net = ConditionalDenoiser(base_width=base_width, channel_mults=tuple(mults))
    net.load_state_dict({k: torch.from_numpy(v) for k, v in tensors.items()}, strict=True)
    return ModelParams(
        net=net,
        geometry=geometry,
        T=T,
        beta_start=beta_start,
        beta_end=beta_end,
        norm_scale=norm_scale,
    )


# --- loss log --------------------------------------------------------------------


def write_loss_log(path, log):
    lines = ["step,loss"]
    lines += [f"{step},{loss!r}" for step, loss in log]
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_loss_log(path) -> List[Tuple[int, float]]:
    lines = Path(path).read_text(encoding="ascii").splitlines()
    if not lines or lines[0] != "step,loss":
        raise FileFormatError(f"{path}: expected 'step,loss' header")
    out = []
    for line in lines[1:]:
        step, loss = line.split(",")
        out.append((int(step), float(loss)))
    return out
