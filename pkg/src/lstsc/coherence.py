"""Long/short-term spatial-coherence features from multichannel spectrograms.

Per time-frequency bin, a short-term relative transfer function (RTF) is
estimated from a few consecutive frames against the reference channel,
reduced to phase-only ("whitened") form, and compared with two recursively
averaged references:

* a fast **local** tracker (small forgetting factor) whose coherence
  ``gamma_local`` flags any directional activity, and
* a slow **global** tracker (forgetting factor near one) whose coherence
  ``gamma_global`` locks onto spatially stationary sources.

The comparison is a sign-sensitive cosine similarity in [-1, 1].  The
global tracker optionally runs a time-varying forgetting factor: adaptation
is halted for a whole frame while the previous frame's estimated target
mask is energetic (mean squared value above ``beta``), and otherwise each
bin adapts at ``clamp(1 - gamma_local / 20, 0.95, 1.0)`` so that only
directionally consistent frames are absorbed quickly.  An optional arcsine
warp spreads the similarity scale near +/-1, and an optional auditory
filterbank pools bins into bands.

Trackers are compared before they are updated: the coherence at frame ``l``
uses the state accumulated through frame ``l - 1``, then the state absorbs
the new vector.  Both trackers start from the first frame's vector, so the
features open at 1.
"""
from __future__ import annotations

import dataclasses
import struct
from pathlib import Path
from typing import Callable, Iterator

import numpy as np

from .erb import ErbFilterbank, design_filterbank, pool_feature

__all__ = [
    "CoherenceConfig",
    "TrackerState",
    "FrameOutput",
    "LstscFeatures",
    "VARIANT_SETTINGS",
    "short_term_whitened_rtf",
    "whiten",
    "coherence",
    "recursive_update",
    "lambda_schedule",
    "arcsine_warp",
    "stream_frames",
    "compute_lstsc",
    "write_features",
    "read_features",
    "export_features_csv",
]

# Named presets: (time-varying global forgetting factor, arcsine warp, bands)
VARIANT_SETTINGS: dict[str, dict] = {
    "lstsc-1": {"time_varying": False, "apply_arcsine": False, "erb_bands": None},
    "lstsc-2": {"time_varying": True, "apply_arcsine": False, "erb_bands": None},
    "lstsc-3": {"time_varying": True, "apply_arcsine": True, "erb_bands": None},
    "lstsc-4": {"time_varying": True, "apply_arcsine": True, "erb_bands": 48},
}

_LSTS_MAGIC = b"LSTS"
_LSTS_VERSION = 1


@dataclasses.dataclass(frozen=True)
class CoherenceConfig:
    """Settings for the coherence feature pipeline.

    ``R`` is the frame half-window of the short-term RTF average (2R + 1
    frames, truncated at the edges).  ``lambda_global`` is used when
    ``time_varying`` is False; otherwise the per-frame schedule applies.
    ``epsilon`` guards divisions: bins whose reference energy or RTF
    modulus falls at or below it are flagged low-energy and carry unit
    placeholder entries instead of unstable ratios.
    """

    R: int = 1
    lambda_local: float = 0.01
    lambda_global: float = 0.99
    time_varying: bool = False
    beta: float = 0.01
    epsilon: float = 1e-12
    apply_arcsine: bool = False
    erb_bands: int | None = None
    variant: str | None = None

    def __post_init__(self) -> None:
        if self.R < 0:
            raise ValueError("R must be >= 0")
        if not (0.0 <= self.lambda_local <= 1.0):
            raise ValueError("lambda_local must lie in [0, 1]")
        if not (0.0 <= self.lambda_global <= 1.0):
            raise ValueError("lambda_global must lie in [0, 1]")
        if self.beta <= 0.0:
            raise ValueError("beta must be positive")
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        if self.erb_bands is not None and self.erb_bands < 2:
            raise ValueError("erb_bands must be >= 2 when set")
        if self.variant is not None:
            expected = VARIANT_SETTINGS.get(self.variant)
            if expected is None:
                raise ValueError(
                    f"unknown variant {self.variant!r}; choose from "
                    f"{sorted(VARIANT_SETTINGS)}"
                )
            actual = {
                "time_varying": self.time_varying,
                "apply_arcsine": self.apply_arcsine,
                "erb_bands": self.erb_bands,
            }
            if actual != expected:
                raise ValueError(
                    f"settings {actual} are inconsistent with variant "
                    f"{self.variant!r} ({expected})"
                )

    @classmethod
    def for_variant(cls, name: str, **overrides) -> "CoherenceConfig":
        key = name.lower()
        if key not in VARIANT_SETTINGS:
            raise ValueError(
                f"unknown variant {name!r}; choose from {sorted(VARIANT_SETTINGS)}"
            )
        settings = dict(VARIANT_SETTINGS[key])
        settings.update(overrides)
        return cls(variant=key, **settings)

    @property
    def warmup_frames(self) -> int:
        """Frames whose short-term window is still truncated at the front."""
        return 2 * self.R + 1


@dataclasses.dataclass
class TrackerState:
    """Recursive average of whitened RTF vectors, one row per bin.

    ``rbar`` is (F, M-1) complex, kept pre-whitening; entry moduli stay
    <= 1 because every update is a convex combination of unit-modulus
    inputs.  ``frame_index`` is the last absorbed frame.
    """

    rbar: np.ndarray
    frame_index: int


def _as_spec_tensor(specs) -> np.ndarray:
    tensor = np.asarray(specs)
    if tensor.ndim != 3:
        raise ValueError("expected per-channel spectrograms stacked as (M, L, F)")
    if tensor.shape[0] < 2:
        raise ValueError("spatial coherence requires at least 2 microphones")
    return tensor


def short_term_whitened_rtf(
    specs, frame: int, cfg: CoherenceConfig = CoherenceConfig()
) -> tuple[np.ndarray, np.ndarray]:
    """Phase-only short-term RTF at one frame.

    Averages ``2R + 1`` frames (truncated at the signal edges) of
    cross-spectra against the reference channel, divides by the averaged
    reference auto-spectrum, and normalizes each entry to unit modulus.

    Returns ``(entries, low_energy)`` where ``entries`` is (F, M-1)
    complex with unit-modulus rows and ``low_energy`` flags bins whose
    reference energy or ratio modulus fell at or below ``cfg.epsilon``;
    flagged bins carry ``1 + 0j`` placeholders.
    """
    tensor = _as_spec_tensor(specs)
    num_frames = tensor.shape[1]
    if not (0 <= frame < num_frames):
        raise ValueError(f"frame {frame} outside [0, {num_frames})")
    lo = max(0, frame - cfg.R)
    hi = min(num_frames - 1, frame + cfg.R)
    block = tensor[:, lo : hi + 1, :]
    ref_re = block[0].real
    ref_im = block[0].imag
    oth_re = block[1:].real
    oth_im = block[1:].imag
    # z_m * conj(z_0) accumulated over the window, kept as separate real
    # and imaginary planes: plain float ufuncs round each product once,
    # whereas fused complex kernels may contract and drift by an ulp.
    cross_re = (oth_re * ref_re + oth_im * ref_im).sum(axis=1)  # (M-1, F)
    cross_im = (oth_im * ref_re - oth_re * ref_im).sum(axis=1)
    auto = (ref_re * ref_re + ref_im * ref_im).sum(axis=0)  # (F,)

    low_ref = auto <= cfg.epsilon
    safe_auto = np.where(low_ref, 1.0, auto)
    ratio_re = cross_re / safe_auto
    ratio_im = cross_im / safe_auto
    modulus = np.hypot(ratio_re, ratio_im)
    degenerate = modulus <= cfg.epsilon
    safe_mod = np.where(degenerate, 1.0, modulus)
    bad = low_ref[np.newaxis, :] | degenerate
    entries = np.empty(ratio_re.shape, dtype=np.complex128)
    entries.real = np.where(bad, 1.0, ratio_re / safe_mod)
    entries.imag = np.where(bad, 0.0, ratio_im / safe_mod)
    low_energy = low_ref | degenerate.any(axis=0)
    return entries.T.copy(), low_energy


def whiten(vectors: np.ndarray, epsilon: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Normalize each complex entry to unit modulus.

    Entries with modulus at or below ``epsilon`` become ``1 + 0j`` and the
    owning row is flagged.  Returns ``(whitened, flagged_rows)``.
    """
    vectors = np.asarray(vectors, dtype=np.complex128)
    modulus = np.hypot(vectors.real, vectors.imag)
    degenerate = modulus <= epsilon
    safe = np.where(degenerate, 1.0, modulus)
    whitened = np.empty_like(vectors)
    whitened.real = np.where(degenerate, 1.0, vectors.real / safe)
    whitened.imag = np.where(degenerate, 0.0, vectors.imag / safe)
    flagged = degenerate.any(axis=-1) if vectors.ndim > 1 else bool(degenerate.any())
    return whitened, flagged


def coherence(r: np.ndarray, rbar: np.ndarray) -> np.ndarray:
    """Sign-sensitive cosine similarity between complex vectors.

    ``gamma = Re{r^H rbar} / (||r|| * ||rbar||)`` along the last axis;
    zero-norm operands yield 0 (low-energy convention).  When both inputs
    are whitened this equals ``Re{r^H rbar} / (M - 1)``.
    """
    r = np.asarray(r, dtype=np.complex128)
    rbar = np.asarray(rbar, dtype=np.complex128)
    num = (r.real * rbar.real + r.imag * rbar.imag).sum(axis=-1)
    norms = np.sqrt((r.real * r.real + r.imag * r.imag).sum(axis=-1)) * np.sqrt(
        (rbar.real * rbar.real + rbar.imag * rbar.imag).sum(axis=-1)
    )
    zero = norms <= 0.0
    gamma = np.where(zero, 0.0, num / np.where(zero, 1.0, norms))
    return np.clip(gamma, -1.0, 1.0)


def _coherence_whitened(r: np.ndarray, rbar_whitened: np.ndarray) -> np.ndarray:
    """Fast path for unit-modulus inputs: normalized real inner product."""
    num = (r.real * rbar_whitened.real + r.imag * rbar_whitened.imag).sum(axis=-1)
    return np.clip(num / r.shape[-1], -1.0, 1.0)


def _blend(rbar: np.ndarray, r: np.ndarray, lam) -> np.ndarray:
    """Convex recursion ``lam * rbar + (1 - lam) * r`` with the endpoints
    ``lam == 1`` (state kept) and ``lam == 0`` (state replaced) exact."""
    lam = np.asarray(lam, dtype=np.float64)
    if lam.size and (lam.min() < 0.0 or lam.max() > 1.0):
        raise ValueError("forgetting factor must lie in [0, 1]")
    if lam.ndim == 1:
        lam = lam[:, np.newaxis]
    return np.where(
        lam == 1.0, rbar, np.where(lam == 0.0, r, lam * rbar + (1.0 - lam) * r)
    )


def recursive_update(state: TrackerState, r: np.ndarray, lam) -> TrackerState:
    """One tracker step: blend the new whitened vector into the average."""
    if np.asarray(r).shape != state.rbar.shape:
        raise ValueError("vector shape does not match tracker state")
    return TrackerState(rbar=_blend(state.rbar, r, lam), frame_index=state.frame_index + 1)


def _mask_is_energetic(prev_mask_row: np.ndarray | None, beta: float) -> bool:
    if prev_mask_row is None:
        return False
    return float(np.mean(np.square(prev_mask_row))) > beta


def lambda_schedule(
    prev_mask_row: np.ndarray | None,
    gamma_local_row: np.ndarray,
    cfg: CoherenceConfig = CoherenceConfig(),
) -> np.ndarray:
    """Per-bin global forgetting factor for one frame.

    If the previous frame's mask is energetic (mean squared value above
    ``beta``) adaptation halts: lambda = 1 everywhere.  Otherwise each bin
    uses ``1 - gamma_local / 20`` clamped into [0.95, 1.0]; the raw value
    exceeds 1 for negative coherence, and clamping keeps the recursion
    convex, equivalent to a halt.  At the first frame the previous mask is
    taken as all-zero (pass None).
    """
    gamma_local_row = np.asarray(gamma_local_row, dtype=np.float64)
    if _mask_is_energetic(prev_mask_row, cfg.beta):
        return np.ones_like(gamma_local_row)
    return np.clip(1.0 - gamma_local_row / 20.0, 0.95, 1.0)


def arcsine_warp(gamma: np.ndarray | float) -> np.ndarray | float:
    """Odd, monotone rescaling ``(2/pi) * arcsin(gamma)``.

    Fixes -1, 0 and 1 exactly (inputs are clamped to [-1, 1] first so
    float dust cannot leak outside the domain).
    """
    clipped = np.clip(gamma, -1.0, 1.0)
    return np.arcsin(clipped) / (0.5 * np.pi)


@dataclasses.dataclass
class FrameOutput:
    """Everything the streaming engine produced for one frame.

    ``global_rbar``/``local_rbar`` reference the live post-update tracker
    arrays (copy before storing).  ``mask_halted`` is True when the
    previous frame's feedback mask froze the global tracker for the whole
    frame, in which case ``global_rbar`` is the untouched previous array.
    """

    frame: int
    rtf: np.ndarray
    low_energy: np.ndarray
    gamma_local: np.ndarray
    gamma_global: np.ndarray
    gamma_local_warped: np.ndarray | None
    gamma_global_warped: np.ndarray | None
    lam: np.ndarray
    mask_halted: bool
    mask_row: np.ndarray | None
    local_rbar: np.ndarray
    global_rbar: np.ndarray


MaskFeedback = Callable[
    [np.ndarray, np.ndarray, np.ndarray, tuple[np.ndarray, np.ndarray] | None],
    np.ndarray,
]


def stream_frames(
    specs,
    cfg: CoherenceConfig,
    mask_feedback: MaskFeedback | None = None,
    sample_rate: int = 16000,
    filterbank: ErbFilterbank | None = None,
) -> Iterator[FrameOutput]:
    """Sequential frame-by-frame feature engine.

    Per frame: estimate the whitened short-term RTF; score it against the
    local tracker, then update the local tracker; derive the global
    forgetting factor (fixed, or the time-varying schedule fed by the
    previous frame's mask); score against the global tracker, then update
    it — skipping the update entirely on mask-halted frames so the state
    stays bit-identical.  When ``mask_feedback`` is given it is called
    with the reference-channel magnitude frame and the (warped, when
    enabled) coherence rows, and its output row becomes the next frame's
    halting input.  Latency is ``R`` frames of lookahead from the
    short-term average.
    """
    tensor = _as_spec_tensor(specs)
    num_frames = tensor.shape[1]
    num_bins = tensor.shape[2]

    if filterbank is None and cfg.erb_bands is not None:
        fft_size = 2 * (num_bins - 1)
        filterbank = design_filterbank(sample_rate, fft_size, cfg.erb_bands)

    local_rbar: np.ndarray | None = None
    global_rbar: np.ndarray | None = None
    prev_mask: np.ndarray | None = None

    for frame in range(num_frames):
        rtf, low_energy = short_term_whitened_rtf(tensor, frame, cfg)
        opening = local_rbar is None
        if opening:
            # Trackers open on the first observation, so coherence is 1 by
            # definition there (the vector is compared with itself).
            local_rbar = rtf.copy()
            global_rbar = rtf.copy()

        if opening:
            gamma_local = np.ones(num_bins)
        else:
            local_white, _ = whiten(local_rbar, cfg.epsilon)
            gamma_local = _coherence_whitened(rtf, local_white)

        if cfg.time_varying:
            mask_halted = _mask_is_energetic(prev_mask, cfg.beta)
            if mask_halted:
                lam = np.ones(num_bins)
            else:
                lam = np.clip(1.0 - gamma_local / 20.0, 0.95, 1.0)
        else:
            mask_halted = False
            lam = np.full(num_bins, cfg.lambda_global)

        if opening:
            gamma_global = np.ones(num_bins)
        else:
            global_white, _ = whiten(global_rbar, cfg.epsilon)
            gamma_global = _coherence_whitened(rtf, global_white)

        local_rbar = _blend(local_rbar, rtf, cfg.lambda_local)
        if not mask_halted:
            global_rbar = _blend(global_rbar, rtf, lam)
        # on mask-halted frames global_rbar is reused untouched (bit-identical)

        gamma_local_w = arcsine_warp(gamma_local) if cfg.apply_arcsine else None
        gamma_global_w = arcsine_warp(gamma_global) if cfg.apply_arcsine else None

        mask_row = None
        if mask_feedback is not None:
            magnitude = np.abs(tensor[0, frame])
            local_feat = gamma_local_w if cfg.apply_arcsine else gamma_local
            global_feat = gamma_global_w if cfg.apply_arcsine else gamma_global
            banded = None
            if filterbank is not None:
                banded = (
                    pool_feature(local_feat, filterbank),
                    pool_feature(global_feat, filterbank),
                )
            mask_row = np.asarray(
                mask_feedback(magnitude, local_feat, global_feat, banded),
                dtype=np.float64,
            )
            if mask_row.shape != (num_bins,):
                raise ValueError("mask estimator returned a row of the wrong length")
            if not np.all(np.isfinite(mask_row)) or mask_row.min() < 0.0 or mask_row.max() > 1.0:
                raise ValueError("mask estimator returned values outside [0, 1]")
            prev_mask = mask_row

        yield FrameOutput(
            frame=frame,
            rtf=rtf,
            low_energy=low_energy,
            gamma_local=gamma_local,
            gamma_global=gamma_global,
            gamma_local_warped=gamma_local_w,
            gamma_global_warped=gamma_global_w,
            lam=lam,
            mask_halted=mask_halted,
            mask_row=mask_row,
            local_rbar=local_rbar,
            global_rbar=global_rbar,
        )


@dataclasses.dataclass
class LstscFeatures:
    """Assembled feature tensors for one clip.

    Bin-level planes are (L, F); banded planes (when the filterbank is
    enabled) are (L, B) and pool the warped planes where warping is on
    (warp first, pool second).  ``lambda_trace`` records the applied
    global forgetting factor, ``mask_halted`` which frames were frozen by
    feedback, and ``low_energy`` which bins carried placeholder RTFs.
    The first ``warmup_frames`` frames use truncated averaging windows
    and freshly initialized trackers.
    """

    gamma_local: np.ndarray
    gamma_global: np.ndarray
    gamma_local_warped: np.ndarray | None
    gamma_global_warped: np.ndarray | None
    lambda_trace: np.ndarray
    low_energy: np.ndarray
    mask_halted: np.ndarray
    mask: np.ndarray | None
    banded_gamma_local: np.ndarray | None
    banded_gamma_global: np.ndarray | None
    banded_gamma_local_warped: np.ndarray | None
    banded_gamma_global_warped: np.ndarray | None
    banded_lambda_trace: np.ndarray | None
    warmup_frames: int
    variant: str | None

    @property
    def num_frames(self) -> int:
        return self.gamma_local.shape[0]

    @property
    def num_bins(self) -> int:
        return self.gamma_local.shape[1]


def compute_lstsc(
    specs,
    cfg: CoherenceConfig,
    mask_feedback: MaskFeedback | None = None,
    sample_rate: int = 16000,
) -> LstscFeatures:
    """Run the streaming engine over a whole clip and stack the outputs.

    The feature tensors are (L, F) regardless of the channel count; with
    ``cfg.erb_bands`` set, banded (L, B) planes are added alongside.
    """
    tensor = _as_spec_tensor(specs)
    filterbank = None
    if cfg.erb_bands is not None:
        fft_size = 2 * (tensor.shape[2] - 1)
        filterbank = design_filterbank(sample_rate, fft_size, cfg.erb_bands)

    gl, gg, lam_rows, low_rows, halted, masks = [], [], [], [], [], []
    glw, ggw = [], []
    for out in stream_frames(
        tensor, cfg, mask_feedback, sample_rate=sample_rate, filterbank=filterbank
    ):
        gl.append(out.gamma_local)
        gg.append(out.gamma_global)
        lam_rows.append(out.lam)
        low_rows.append(out.low_energy)
        halted.append(out.mask_halted)
        if cfg.apply_arcsine:
            glw.append(out.gamma_local_warped)
            ggw.append(out.gamma_global_warped)
        if out.mask_row is not None:
            masks.append(out.mask_row)

    gamma_local = np.vstack(gl)
    gamma_global = np.vstack(gg)
    lambda_trace = np.vstack(lam_rows)
    gamma_local_w = np.vstack(glw) if glw else None
    gamma_global_w = np.vstack(ggw) if ggw else None

    banded_local = banded_global = banded_lambda = None
    banded_local_w = banded_global_w = None
    if filterbank is not None:
        banded_local = pool_feature(gamma_local, filterbank)
        banded_global = pool_feature(gamma_global, filterbank)
        banded_lambda = pool_feature(lambda_trace, filterbank)
        if gamma_local_w is not None:
            # warp first, pool second
            banded_local_w = pool_feature(gamma_local_w, filterbank)
            banded_global_w = pool_feature(gamma_global_w, filterbank)

    return LstscFeatures(
        gamma_local=gamma_local,
        gamma_global=gamma_global,
        gamma_local_warped=gamma_local_w,
        gamma_global_warped=gamma_global_w,
        lambda_trace=lambda_trace,
        low_energy=np.vstack(low_rows),
        mask_halted=np.asarray(halted, dtype=bool),
        mask=np.vstack(masks) if masks else None,
        banded_gamma_local=banded_local,
        banded_gamma_global=banded_global,
        banded_gamma_local_warped=banded_local_w,
        banded_gamma_global_warped=banded_global_w,
        banded_lambda_trace=banded_lambda,
        warmup_frames=cfg.warmup_frames,
        variant=cfg.variant,
    )


def _export_planes(features: LstscFeatures) -> tuple[list[str], list[np.ndarray]]:
    """Plane selection for export, in documented order.

    ``gamma_local, gamma_global[, gamma_global_warped], lambda`` — 3 planes
    without warping, 4 with.  When the filterbank is enabled every plane is
    its banded counterpart (B-wide), with the warped plane pooled after
    warping.
    """
    banded = features.banded_gamma_local is not None
    if banded:
        names = ["gamma_local", "gamma_global"]
        planes = [features.banded_gamma_local, features.banded_gamma_global]
        if features.banded_gamma_global_warped is not None:
            names.append("gamma_global_warped")
            planes.append(features.banded_gamma_global_warped)
        names.append("lambda")
        planes.append(features.banded_lambda_trace)
        return names, planes

    names = ["gamma_local", "gamma_global"]
    planes = [features.gamma_local, features.gamma_global]
    if features.gamma_global_warped is not None:
        names.append("gamma_global_warped")
        planes.append(features.gamma_global_warped)
    names.append("lambda")
    planes.append(features.lambda_trace)
    return names, planes


def write_features(path: str | Path, features: LstscFeatures) -> None:
    """Binary feature export.

    Layout (little-endian): magic ``LSTS``, u32 version, u32 L, u32 K
    (bins or bands), u32 plane count, then each plane as row-major
    float32.  Plane order: gamma_local, gamma_global, gamma_global_warped
    (when warping is enabled), lambda trace.
    """
    names, planes = _export_planes(features)
    frames = planes[0].shape[0]
    width = planes[0].shape[1]
    with open(Path(path), "wb") as fh:
        fh.write(_LSTS_MAGIC)
        fh.write(struct.pack("<IIII", _LSTS_VERSION, frames, width, len(planes)))
        for plane in planes:
            if plane.shape != (frames, width):
                raise ValueError("feature planes disagree on shape")
            fh.write(np.ascontiguousarray(plane, dtype="<f4").tobytes())


def read_features(path: str | Path) -> dict:
    """Parse a binary feature file back into header fields and planes."""
    raw = Path(path).read_bytes()
    if raw[:4] != _LSTS_MAGIC:
        raise ValueError("not a feature file (bad magic)")
    version, frames, width, count = struct.unpack_from("<IIII", raw, 4)
    if version != _LSTS_VERSION:
        raise ValueError(f"unsupported feature file version {version}")
    expected = 20 + 4 * frames * width * count
    if len(raw) != expected:
        raise ValueError("feature file truncated or oversized")
    planes = []
    offset = 20
    for _ in range(count):
        plane = np.frombuffer(raw, dtype="<f4", count=frames * width, offset=offset)
        planes.append(plane.reshape(frames, width).astype(np.float64))
        offset += 4 * frames * width
    return {
        "version": version,
        "num_frames": frames,
        "width": width,
        "num_planes": count,
        "planes": planes,
    }


def export_features_csv(base_path: str | Path, features: LstscFeatures) -> list[Path]:
    """Write one CSV per exported plane next to ``base_path``.

    ``base_path`` may carry any suffix; files are named
    ``<stem>.<plane>.csv`` in the same directory.  Returns written paths.
    """
    base = Path(base_path)
    stem = base.stem if base.suffix else base.name
    names, planes = _export_planes(features)
    written = []
    for name, plane in zip(names, planes):
        out = base.with_name(f"{stem}.{name}.csv")
        np.savetxt(out, plane, delimiter=",", fmt="%.9e")
        written.append(out)
    return written
