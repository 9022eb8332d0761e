"""Limited-angle acquisition: a contiguous wedge of missing projection angles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import ProjectionGeometry, Sinogram


@dataclass(frozen=True)
class AngularMask:
    """Wedge of ``missing_len`` consecutive missing angles starting at
    ``missing_start``, wrapping modulo ``n_angles``.
    """

    n_angles: int
    missing_start: int
    missing_len: int

    def __post_init__(self):
        if self.n_angles <= 0:
            raise ValueError("n_angles must be positive")
        if not 0 <= self.missing_start < self.n_angles:
            raise ValueError("missing_start out of range")
        if not 0 <= self.missing_len <= self.n_angles:
            raise ValueError("missing_len out of range")

    def observed(self, k: int) -> bool:
        """True if angle index k is measured."""
        if self.missing_len == 0:
            return True
        off = (k - self.missing_start) % self.n_angles
        return off >= self.missing_len

    def observed_rows(self) -> np.ndarray:
        """Float64 indicator over angle indices: 1.0 observed, 0.0 missing."""
        rows = np.ones(self.n_angles, dtype=np.float64)
        idx = (self.missing_start + np.arange(self.missing_len)) % self.n_angles
        rows[idx] = 0.0
        return rows

    @property
    def n_missing(self) -> int:
        return self.missing_len

    @property
    def n_observed(self) -> int:
        return self.n_angles - self.missing_len


def random_mask(seed: int, n_angles: int, missing_fraction: float) -> AngularMask:
    """Wedge of round(missing_fraction * n_angles) angles at a seeded
    uniform-random start position.
    """
    if not 0.0 <= missing_fraction <= 1.0:
        raise ValueError(f"missing_fraction must be in [0, 1], got {missing_fraction}")
    missing_len = int(round(missing_fraction * n_angles))
    rng = np.random.default_rng(seed)
    start = int(rng.integers(0, n_angles))
    return AngularMask(n_angles, start, missing_len)


def apply_mask(m: AngularMask, s: Sinogram) -> Sinogram:
    """Zero the missing angular rows; observed rows are copied bit-exactly."""
    if m.n_angles != s.geometry.n_angles:
        raise ValueError(
            f"mask has {m.n_angles} angles, sinogram has {s.geometry.n_angles}"
        )
    data = s.data.copy()
    idx = (m.missing_start + np.arange(m.missing_len)) % m.n_angles
    data[idx, :] = 0.0
    return Sinogram(s.geometry, data)


def to_bin_mask(m: AngularMask, g: ProjectionGeometry) -> Sinogram:
    """Sinogram-shaped indicator: 1.0 on observed bins, 0.0 on missing bins."""
    if m.n_angles != g.n_angles:
        raise ValueError(f"mask has {m.n_angles} angles, geometry has {g.n_angles}")
    rows = m.observed_rows().astype(np.float32)
    return Sinogram(g, np.repeat(rows[:, None], g.n_bins, axis=1))


def interpolate_wedge(s: Sinogram, m: AngularMask) -> Sinogram:
    """Fill the missing wedge by interpolating between the bracketing measured
    rows, honoring the half-turn symmetry s(angle + pi, r) = s(angle, -r).

    Parallel-beam rows repeat with period ``2 * n_angles`` in extended angle
    index, with the radial axis reversed on the second half-turn. Anchors that
    fall across the 0/pi seam are therefore bin-flipped before interpolating.
    Observed rows are copied bit-exactly; a mask with no observed rows leaves
    the wedge at zero (no anchors exist).
    """
    if m.n_angles != s.geometry.n_angles:
        raise ValueError(
            f"mask has {m.n_angles} angles, sinogram has {s.geometry.n_angles}"
        )
    data = s.data.copy()
    if m.missing_len == 0:
        return Sinogram(s.geometry, data)
    if m.missing_len >= m.n_angles:
        return Sinogram(s.geometry, np.zeros_like(data))

    n = m.n_angles

    def extended_row(j: int) -> np.ndarray:
        # row at extended angle index j; second half-turn = flipped bins
        half, base = divmod(j % (2 * n), n)
        row = s.data[base].astype(np.float64)
        return row[::-1] if half == 1 else row

    lo = extended_row(m.missing_start - 1)
    hi = extended_row(m.missing_start + m.missing_len)
    for k in range(m.missing_len):
        w = (k + 1) / (m.missing_len + 1)
        j = m.missing_start + k
        row = (1.0 - w) * lo + w * hi
        if (j % (2 * n)) // n == 1:  # writing into the flipped half-turn
            row = row[::-1]
        data[j % n] = row.astype(np.float32)
    return Sinogram(s.geometry, data)
