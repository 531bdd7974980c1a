"""Synthetic scenario builders used by the behavioral validations."""
from __future__ import annotations

import numpy as np
import pytest

from lstsc.coherence import CoherenceConfig, arcsine_warp, compute_lstsc
from lstsc.scenarios import (
    build_misconvergence_scenario,
    build_sifting_scenario,
    frame_coverage,
    intermittent_speech,
    mean_global_warped,
    speech_like,
    stationary_noise,
)
from lstsc.signal_core import StftConfig, stft_multichannel


class TestStems:
    def test_speech_like_rms(self, rng):
        x = speech_like(rng, 16000, rms=0.05)
        assert np.sqrt(np.mean(x**2)) == pytest.approx(0.05, rel=1e-9)

    def test_speech_like_floor_keeps_activity(self, rng):
        x = speech_like(rng, 16000, envelope_floor=0.35)
        # every 100 ms window carries energy when the envelope never closes
        windows = x[: 16000 // 1600 * 1600].reshape(-1, 1600)
        assert np.all(np.sqrt(np.mean(windows**2, axis=1)) > 1e-4)

    def test_stationary_noise_rms(self, rng):
        x = stationary_noise(rng, 16000, rms=0.03)
        assert np.sqrt(np.mean(x**2)) == pytest.approx(0.03, rel=1e-9)

    def test_intermittent_speech_structure(self, rng):
        x, active = intermittent_speech(rng, 8 * 16000)
        assert x.shape == active.shape == (8 * 16000,)
        assert not active[: int(1.5 * 16000)].any()  # lead-in silence
        assert active.any() and not active.all()
        assert np.abs(x[~active]).max() == 0.0

    def test_intermittent_determinism(self):
        a = intermittent_speech(np.random.default_rng(3), 32000)
        b = intermittent_speech(np.random.default_rng(3), 32000)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


class TestFrameCoverage:
    def test_full_and_empty(self):
        cfg = StftConfig()
        active = np.zeros(16000, dtype=bool)
        active[:8000] = True
        cover = frame_coverage(active, cfg, cfg.num_frames(16000))
        assert cover[0] == 1.0
        assert cover[-1] == 0.0
        assert np.all((cover >= 0.0) & (cover <= 1.0))

    def test_partial_frame(self):
        cfg = StftConfig()
        active = np.zeros(16000, dtype=bool)
        active[:200] = True  # half of the first 400-sample frame
        cover = frame_coverage(active, cfg, 3)
        assert cover[0] == pytest.approx(0.5)


class TestSiftingScenario:
    def test_builder_invariants(self):
        scn = build_sifting_scenario(0, clip_seconds=4.0)
        num_frames = StftConfig().num_frames(scn.mixture.num_samples)
        assert scn.target_active.shape == (num_frames,)
        assert scn.interferer_only.shape == (num_frames,)
        # labels are disjoint and both present
        assert not np.any(scn.target_active & scn.interferer_only)
        assert scn.target_active.any() and scn.interferer_only.any()
        warmup = CoherenceConfig().warmup_frames
        assert not scn.target_active[:warmup].any()
        assert not scn.interferer_only[:warmup].any()
        assert scn.mixture.num_channels == 4

    def test_determinism(self):
        a = build_sifting_scenario(7, clip_seconds=2.0)
        b = build_sifting_scenario(7, clip_seconds=2.0)
        assert np.array_equal(a.mixture.samples, b.mixture.samples)
        assert np.array_equal(a.target_active, b.target_active)

    def test_distinct_seeds_differ(self):
        a = build_sifting_scenario(1, clip_seconds=2.0)
        b = build_sifting_scenario(2, clip_seconds=2.0)
        assert not np.array_equal(a.mixture.samples, b.mixture.samples)


class TestMisconvergenceScenario:
    def test_builder_invariants(self):
        scn = build_misconvergence_scenario(0, clip_seconds=4.0, utterance=(1.0, 3.5))
        assert scn.target_active.any()
        onset_frame = int(1.0 * 16000 / StftConfig().hop)
        assert not scn.target_active[: onset_frame - 1].any()
        assert np.abs(scn.stems["target"][: int(0.99 * 16000)]).max() == 0.0


class TestMeanGlobalWarped:
    def test_post_hoc_warp_matches_builtin(self, rng):
        from conftest import delayed_array_audio

        audio = delayed_array_audio(rng, 4, 16000, noise_rms=0.05)
        specs = stft_multichannel(audio)
        warped = compute_lstsc(specs, CoherenceConfig.for_variant("lstsc-3"))
        plain = compute_lstsc(specs, CoherenceConfig.for_variant("lstsc-2"))
        mask = np.zeros(warped.num_frames, dtype=bool)
        mask[10:50] = True
        a = mean_global_warped(warped, mask)
        b = mean_global_warped(plain, mask)
        want = float(arcsine_warp(plain.gamma_global[mask]).mean())
        assert b == pytest.approx(want, abs=1e-12)
        assert a == pytest.approx(b, abs=1e-9)

    def test_empty_selection_rejected(self, rng):
        from conftest import delayed_array_audio

        audio = delayed_array_audio(rng, 3, 8000)
        feats = compute_lstsc(stft_multichannel(audio), CoherenceConfig())
        with pytest.raises(ValueError, match="no frames selected"):
            mean_global_warped(feats, np.zeros(feats.num_frames, dtype=bool))
