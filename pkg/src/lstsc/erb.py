"""Auditory-band pooling: compress F STFT bins into B perceptual bands.

Band centers are uniformly spaced on the equivalent-rectangular-bandwidth
rate scale (``21.4 * log10(1 + 0.00437 f)``) between 0 Hz and Nyquist,
with triangular weights between adjacent centers.  Spectra are pooled as
plain weighted sums; bounded features (coherences, gains) are pooled as
weighted means so a constant field stays constant.
"""
from __future__ import annotations

import csv
import dataclasses
from pathlib import Path

import numpy as np

__all__ = [
    "ErbFilterbank",
    "erb_rate",
    "design_filterbank",
    "pool_spectrum",
    "pool_feature",
    "dump_filterbank_csv",
]


def erb_rate(freq_hz: np.ndarray | float) -> np.ndarray | float:
    """Map frequency in Hz to the ERB-rate (auditory band number) scale."""
    return 21.4 * np.log10(1.0 + 0.00437 * np.asarray(freq_hz, dtype=np.float64))


@dataclasses.dataclass(frozen=True)
class ErbFilterbank:
    """Immutable pooling weights.

    ``weights`` is (B, F) nonnegative; ``pi`` holds the per-band weight
    sums used to normalize feature pooling; ``support`` gives the
    (first, last) bin index with positive weight for each band.
    """

    weights: np.ndarray
    centers_hz: np.ndarray
    pi: np.ndarray
    support: tuple[tuple[int, int], ...]

    @property
    def num_bands(self) -> int:
        return self.weights.shape[0]

    @property
    def num_bins(self) -> int:
        return self.weights.shape[1]


def design_filterbank(sample_rate: int, fft_size: int, bands: int = 48) -> ErbFilterbank:
    """Triangular filters on the ERB-rate axis over one-sided FFT bins."""
    if fft_size % 2 != 0:
        raise ValueError("fft_size must be even")
    num_bins = fft_size // 2 + 1
    if bands < 2:
        raise ValueError("need at least 2 bands")
    if bands > num_bins:
        raise ValueError(f"more bands ({bands}) than frequency bins ({num_bins})")

    bin_hz = np.arange(num_bins) * (sample_rate / fft_size)
    bin_rate = erb_rate(bin_hz)
    center_rate = np.linspace(bin_rate[0], bin_rate[-1], bands)
    # invert the rate scale for reporting
    centers_hz = (10.0 ** (center_rate / 21.4) - 1.0) / 0.00437

    weights = np.zeros((bands, num_bins))
    for b in range(bands):
        center = center_rate[b]
        lo = center_rate[b - 1] if b > 0 else None
        hi = center_rate[b + 1] if b < bands - 1 else None
        rising = np.ones(num_bins)
        if lo is not None:
            rising = (bin_rate - lo) / (center - lo)
        falling = np.ones(num_bins)
        if hi is not None:
            falling = (hi - bin_rate) / (hi - center)
        weights[b] = np.clip(np.minimum(rising, falling), 0.0, 1.0)

    # Narrow low-frequency triangles can fall entirely between two bins;
    # give such a band its nearest bin so every band pools something.
    for b in range(bands):
        if weights[b].sum() <= 0.0:
            weights[b, int(np.argmin(np.abs(bin_rate - center_rate[b])))] = 1.0

    pi = weights.sum(axis=1)
    support = []
    for b in range(bands):
        positive = np.nonzero(weights[b] > 0.0)[0]
        support.append((int(positive[0]), int(positive[-1])))
    return ErbFilterbank(
        weights=weights,
        centers_hz=centers_hz,
        pi=pi,
        support=tuple(support),
    )


def pool_spectrum(power: np.ndarray, fb: ErbFilterbank) -> np.ndarray:
    """Banded power: plain weighted sum of nonnegative per-bin power.

    Accepts a single F-vector or an (L, F) matrix.
    """
    power = np.asarray(power, dtype=np.float64)
    if power.shape[-1] != fb.num_bins:
        raise ValueError("power frame length does not match filterbank bins")
    if power.size and power.min() < 0.0:
        raise ValueError("power values must be nonnegative")
    return power @ fb.weights.T


def pool_feature(values: np.ndarray, fb: ErbFilterbank) -> np.ndarray:
    """Banded feature: per-band weighted mean (normalized by the weight sum).

    Accepts a single F-vector or an (L, F) matrix; a constant input field
    maps to the same constant in every band.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.shape[-1] != fb.num_bins:
        raise ValueError("feature frame length does not match filterbank bins")
    return (values @ fb.weights.T) / fb.pi


def dump_filterbank_csv(fb: ErbFilterbank, path: str | Path) -> None:
    """Write centers, supports, and the full weight rows for inspection."""
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["band", "center_hz", "support_lo_bin", "support_hi_bin"]
            + [f"w{k}" for k in range(fb.num_bins)]
        )
        for b in range(fb.num_bands):
            lo, hi = fb.support[b]
            writer.writerow(
                [b, f"{fb.centers_hz[b]:.6f}", lo, hi]
                + [f"{w:.9e}" for w in fb.weights[b]]
            )
