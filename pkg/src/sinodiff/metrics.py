"""Quantitative comparison (PSNR) and qualitative error maps, plus the
per-run evaluation report with CSV/summary serialization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np


def _as_array(x) -> np.ndarray:
    data = getattr(x, "data", x)
    return np.asarray(data, dtype=np.float64)


def _check_shapes(pred: np.ndarray, gt: np.ndarray):
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {gt.shape}")


def psnr(pred, gt) -> float:
    """Peak signal-to-noise ratio of ``pred`` against ``gt``, in dB.

    data_range is max(gt) - min(gt). Identical inputs give +inf (callers
    flag and exclude these from aggregates); a constant gt compared against
    anything different is an error, because the range is undefined.
    """
    p, g = _as_array(pred), _as_array(gt)
    _check_shapes(p, g)
    mse = float(np.mean((p - g) ** 2))
    if mse == 0.0:
        return math.inf
    rng = float(g.max() - g.min())
    if rng == 0.0:
        raise ValueError("gt is constant; PSNR data_range is undefined")
    return 10.0 * math.log10(rng * rng / mse)


def abs_error_map(pred, gt) -> np.ndarray:
    """|pred - gt| scaled so the largest error maps to 1.0 (all-zero if exact)."""
    p, g = _as_array(pred), _as_array(gt)
    _check_shapes(p, g)
    err = np.abs(p - g)
    peak = err.max()
    if peak > 0:
        err = err / peak
    return err.astype(np.float32)


def diff_map(pred, gt) -> np.ndarray:
    """Signed difference gt - pred, affinely mapped to [0, 1].

    The most negative difference maps to 0, the most positive to 1; a
    constant difference (including pred == gt) maps to flat 0.5.
    """
    p, g = _as_array(pred), _as_array(gt)
    _check_shapes(p, g)
    d = g - p
    lo, hi = float(d.min()), float(d.max())
    if hi == lo:
        return np.full(d.shape, 0.5, dtype=np.float32)
    return ((d - lo) / (hi - lo)).astype(np.float32)


AGGREGATE_NAMES = ("mean", "median", "std")


@dataclass(frozen=True)
class EvalReport:
    """Per-sample PSNR values, one list per method, aligned with sample_ids.

    Values may be +inf (identical images); aggregates are computed over the
    finite subset only, so they stay finite whenever at least one sample is.
    """

    sample_ids: Tuple[str, ...]
    methods: Dict[str, Tuple[float, ...]]

    def __post_init__(self):
        for name, values in self.methods.items():
            if len(values) != len(self.sample_ids):
                raise ValueError(
                    f"method {name!r} has {len(values)} values for {len(self.sample_ids)} samples"
                )

    def aggregates(self, method: str) -> Dict[str, float]:
        values = np.asarray(self.methods[method], dtype=np.float64)
        finite = values[np.isfinite(values)]
        if finite.size == 0:
            return {name: math.nan for name in AGGREGATE_NAMES}
        return {
            "mean": float(finite.mean()),
            "median": float(np.median(finite)),
            "std": float(finite.std()),
        }

    def n_infinite(self, method: str) -> int:
        return int(sum(1 for v in self.methods[method] if math.isinf(v)))

    def to_csv(self, csv_methods: Sequence[str]) -> str:
        """CSV rows `sample,method,psnr_db`: one row per (sample, method),
        then mean/median/std aggregate rows per method.
        """
        lines = ["sample,method,psnr_db"]
        for i, sid in enumerate(self.sample_ids):
            for m in csv_methods:
                lines.append(f"{sid},{m},{_fmt(self.methods[m][i])}")
        for m in csv_methods:
            agg = self.aggregates(m)
            for name in AGGREGATE_NAMES:
                lines.append(f"aggregate_{name},{m},{_fmt(agg[name])}")
        return "\n".join(lines) + "\n"

    def summary(self) -> str:
        """Human-readable block: per-method aggregates plus infinite-value flags."""
        lines = [f"samples: {len(self.sample_ids)}"]
        for m in self.methods:
            agg = self.aggregates(m)
            n_inf = self.n_infinite(m)
            line = (
                f"{m}: mean={_fmt(agg['mean'])} dB  median={_fmt(agg['median'])} dB  "
                f"std={_fmt(agg['std'])} dB"
            )
            if n_inf:
                line += f"  [{n_inf} sample(s) infinite (identical images), excluded]"
            lines.append(line)
        return "\n".join(lines) + "\n"


def _fmt(v: float) -> str:
    if math.isinf(v):
        return "inf"
    if math.isnan(v):
        return "nan"
    return f"{v:.6f}"
