import numpy as np
import pytest
import torch

from sinodiff import ProjectionGeometry
from sinodiff.dataio import (
    FileFormatError,
    read_loss_log,
    read_manifest,
    read_mask,
    read_sino,
    load_checkpoint,
    save_checkpoint,
    write_loss_log,
    write_mask,
    write_pgm,
    write_sino,
)
from sinodiff.masking import AngularMask
from sinodiff.pipeline import generate_corpus


def test_sino_roundtrip(tmp_path, rng):
    data = rng.random((90, 95)).astype(np.float32)
    p = tmp_path / "x.sino"
    write_sino(p, data)
    back = read_sino(p)
    assert back.tobytes() == data.tobytes()


def test_sino_bad_magic(tmp_path):
    p = tmp_path / "x.sino"
    write_sino(p, np.zeros((3, 4), np.float32))
    raw = bytearray(p.read_bytes())
    raw[:4] = b"JUNK"
    p.write_bytes(bytes(raw))
    with pytest.raises(FileFormatError, match="magic"):
        read_sino(p)


def test_sino_truncated(tmp_path):
    p = tmp_path / "x.sino"
    write_sino(p, np.zeros((3, 4), np.float32))
    p.write_bytes(p.read_bytes()[:-5])
    with pytest.raises(FileFormatError, match="truncated"):
        read_sino(p)


def test_sino_trailing_bytes(tmp_path):
    p = tmp_path / "x.sino"
    write_sino(p, np.zeros((3, 4), np.float32))
    p.write_bytes(p.read_bytes() + b"\x00")
    with pytest.raises(FileFormatError, match="trailing"):
        read_sino(p)


def test_sino_bad_version(tmp_path):
    p = tmp_path / "x.sino"
    write_sino(p, np.zeros((3, 4), np.float32))
    raw = bytearray(p.read_bytes())
    raw[4] = 99
    p.write_bytes(bytes(raw))
    with pytest.raises(FileFormatError, match="version"):
        read_sino(p)


def test_mask_roundtrip(tmp_path):
    m = AngularMask(n_angles=90, missing_start=77, missing_len=30)
    p = tmp_path / "m.bin"
    write_mask(p, m)
    assert read_mask(p) == m


def test_mask_bad_magic(tmp_path):
    p = tmp_path / "m.bin"
    write_mask(p, AngularMask(10, 0, 3))
    raw = bytearray(p.read_bytes())
    raw[:4] = b"XXXX"
    p.write_bytes(bytes(raw))
    with pytest.raises(FileFormatError):
        read_mask(p)


def test_pgm_golden_bytes(tmp_path):
    p = tmp_path / "img.pgm"
    write_pgm(p, np.array([[0.0, 1.0], [2.0, 4.0]]))
    assert p.read_bytes() == b"P5\n2 2\n255\n" + bytes([0, 64, 128, 255])


def test_pgm_constant_image(tmp_path):
    p = tmp_path / "flat.pgm"
    write_pgm(p, np.full((3, 3), 7.0))
    assert p.read_bytes().endswith(bytes(9))


def _tiny_corpus(tmp_path, **kw):
    args = dict(n_train=3, n_eval=2, size=16, n_angles=10, n_bins=23, seed=5)
    args.update(kw)
    return generate_corpus(tmp_path, **args)


def test_manifest_roundtrip(tmp_path):
    manifest = _tiny_corpus(tmp_path)
    back = read_manifest(tmp_path)
    assert back == manifest
    assert len(back.split("train")) == 3
    assert len(back.split("eval")) == 2


def test_manifest_missing_file(tmp_path):
    _tiny_corpus(tmp_path)
    (tmp_path / "train" / "00001.gt.sino").unlink()
    with pytest.raises(FileFormatError, match="missing"):
        read_manifest(tmp_path)


def test_manifest_missing_key(tmp_path):
    _tiny_corpus(tmp_path)
    mf = tmp_path / "manifest.txt"
    lines = [l for l in mf.read_text().splitlines() if not l.startswith("norm_scale=")]
    mf.write_text("\n".join(lines) + "\n")
    with pytest.raises(FileFormatError, match="norm_scale"):
        read_manifest(tmp_path)


def test_manifest_duplicate_seeds(tmp_path):
    _tiny_corpus(tmp_path)
    mf = tmp_path / "manifest.txt"
    text = mf.read_text()
    # force two samples onto the same phantom seed
    a = "train.00000.phantom_seed="
    lines = text.splitlines()
    val = next(l.split("=")[1] for l in lines if l.startswith("train.00001.phantom_seed="))
    lines = [f"{a}{val}" if l.startswith(a) else l for l in lines]
    mf.write_text("\n".join(lines) + "\n")
    with pytest.raises(FileFormatError, match="duplicate phantom_seed"):
        read_manifest(tmp_path)


def test_checkpoint_roundtrip(tmp_path):
    from sinodiff.diffusion import predict_noise
    from sinodiff.diffusion.model import ConditionalDenoiser, ModelParams

    torch.manual_seed(2)
    net = ConditionalDenoiser(base_width=8)
    geo = ProjectionGeometry(n_angles=12, n_bins=23, image_size=16)
    params = ModelParams(net=net, geometry=geo, T=1000, beta_start=1e-4, beta_end=0.02,
                         norm_scale=5.5)
    p = tmp_path / "model.sdif"
    save_checkpoint(p, params)
    loaded = load_checkpoint(p)

    assert loaded.geometry == geo
    assert loaded.T == 1000
    assert loaded.norm_scale == 5.5
    for (ka, va), (kb, vb) in zip(net.state_dict().items(), loaded.net.state_dict().items()):
        assert ka == kb
        assert va.numpy().tobytes() == vb.numpy().tobytes()

    rng = np.random.default_rng(3)
    z = rng.standard_normal((12, 23))
    la = rng.standard_normal((12, 23))
    mask = np.ones((12, 23))
    a = predict_noise(params, z, 321, la, mask)
    b = predict_noise(loaded, z, 321, la, mask)
    assert a.tobytes() == b.tobytes()


def test_checkpoint_bad_magic(tmp_path):
    p = tmp_path / "model.sdif"
    p.write_bytes(b"NOPE" + bytes(100))
    with pytest.raises(FileFormatError, match="magic"):
        load_checkpoint(p)


def test_checkpoint_truncated(tmp_path):
    from sinodiff.diffusion.model import ConditionalDenoiser, ModelParams

    torch.manual_seed(0)
    net = ConditionalDenoiser(base_width=8)
    geo = ProjectionGeometry(n_angles=12, n_bins=23, image_size=16)
    p = tmp_path / "model.sdif"
    save_checkpoint(p, ModelParams(net=net, geometry=geo, T=10, beta_start=1e-4,
                                   beta_end=0.02, norm_scale=1.0))
    p.write_bytes(p.read_bytes()[:-100])
    with pytest.raises(FileFormatError, match="truncated"):
        load_checkpoint(p)


def test_loss_log_roundtrip(tmp_path):
    log = [(0, 1.0), (1, 0.75), (2, 0.5099999904632568)]
    p = tmp_path / "loss.csv"
    write_loss_log(p, log)
    assert read_loss_log(p) == log
    assert p.read_text().splitlines()[0] == "step,loss"


def test_loss_log_bad_header(tmp_path):
    p = tmp_path / "loss.csv"
    p.write_text("nope\n1,2\n")
    with pytest.raises(FileFormatError):
        read_loss_log(p)
