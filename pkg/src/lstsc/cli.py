"""Batch command-line driver.

Subcommands: ``rir`` (impulse-response synthesis), ``simulate`` (scene
rendering), ``extract`` (feature extraction to the binary + CSV formats),
``enhance`` (masking-based enhancement), ``evaluate`` (scale-invariant
SDR reporting as JSON lines).  Configs are JSON with unknown keys
rejected; every run is deterministic given config + seed.

Exit codes: 0 success, 2 bad configuration or arguments, 3 missing input
file, 4 domain-constraint violation, 1 unexpected failure.  The
``LSTSC_OUTPUT_ROOT`` environment variable prefixes relative output
paths.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .coherence import (
    CoherenceConfig,
    compute_lstsc,
    export_features_csv,
    write_features,
)
from .enhance import HeuristicMaskEstimator, enhance_stream
from .metrics import si_sdr
from .roomsim import (
    ArrayGeometry,
    MixSpec,
    Rir,
    SceneConstraints,
    measure_t60,
    mix_scene,
    sample_scene,
    simulate_rir,
)
from .scenarios import intermittent_speech, speech_like, stationary_noise
from .signal_core import MultichannelAudio, StftConfig, load_wav, save_wav, stft_multichannel

EXIT_OK = 0
EXIT_OTHER = 1
EXIT_CONFIG = 2
EXIT_MISSING = 3
EXIT_CONSTRAINT = 4

_OUTPUT_ROOT_ENV = "LSTSC_OUTPUT_ROOT"


class ConfigError(Exception):
    """Malformed or unknown configuration content."""


def _resolve_out(path: str | Path) -> Path:
    path = Path(path)
    root = os.environ.get(_OUTPUT_ROOT_ENV)
    if root and not path.is_absolute():
        return Path(root) / path
    return path


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    cfg_path = Path(path)
    if not cfg_path.exists():
        raise FileNotFoundError(f"file not found: {cfg_path}")
    try:
        with open(cfg_path) as fh:
            config = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {cfg_path} is not valid JSON: {exc}") from exc
    if not isinstance(config, dict):
        raise ConfigError(f"config {cfg_path} must be a JSON object")
    return config


def _check_keys(mapping: dict, allowed: dict, context: str) -> None:
    """Reject unknown keys; recurse into nested sections."""
    for key, value in mapping.items():
        if key not in allowed:
            raise ConfigError(
                f"unknown config key {context}{key!r}; allowed: {sorted(allowed)}"
            )
        sub = allowed[key]
        if isinstance(sub, dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config section {context}{key!r} must be an object")
            _check_keys(value, sub, context=f"{context}{key}.")


_COHERENCE_KEYS = {
    "R": None,
    "lambda_local": None,
    "lambda_global": None,
    "time_varying": None,
    "beta": None,
    "epsilon": None,
    "apply_arcsine": None,
    "erb_bands": None,
}

_ARRAY_KEYS = {
    "kind": None,
    "num_mics": None,
    "spacing": None,
    "diameter": None,
    "positions": None,
}

_SCENE_KEYS = {
    "room_dims": None,
    "array_center": None,
    "range_bounds": None,
    "min_angle_deg": None,
    "azimuth_deg": None,
    "wall_margin": None,
    "max_attempts": None,
}

_STEM_KEYS = {"kind": None, "rms": None}

_RIR_CONFIG_KEYS = {
    "room": {"dims": None, "t60": None, "absorption": None},
    "source": None,
    "mics": None,
    "fs": None,
    "duration": None,
}

_SIMULATE_CONFIG_KEYS = {
    "t60": None,
    "array": _ARRAY_KEYS,
    "scene": _SCENE_KEYS,
    "mix": {"sir_db": None, "snr_db": None, "clip_seconds": None, "allow_off_grid": None},
    "stems": {"target": _STEM_KEYS, "non_target": _STEM_KEYS, "interferer": _STEM_KEYS},
}


def _array_from_config(section: dict) -> ArrayGeometry:
    kind = section.get("kind", "ula")
    if kind == "ula":
        return ArrayGeometry.ula(
            num_mics=int(section.get("num_mics", 4)),
            spacing=float(section.get("spacing", 0.08)),
        )
    if kind == "circular":
        return ArrayGeometry.circular(
            num_mics=int(section.get("num_mics", 7)),
            diameter=float(section.get("diameter", 0.08)),
        )
    if kind == "positions":
        if "positions" not in section:
            raise ConfigError("array kind 'positions' needs a positions list")
        return ArrayGeometry.arbitrary(section["positions"])
    raise ConfigError(f"unknown array kind {kind!r}")


def _coherence_from_args(variant: str, config: dict) -> CoherenceConfig:
    overrides = {k: v for k, v in config.items()}
    if "erb_bands" in overrides and overrides["erb_bands"] is not None:
        overrides["erb_bands"] = int(overrides["erb_bands"])
    return CoherenceConfig.for_variant(variant, **overrides)


def _make_stem(kind: str, rng: np.random.Generator, num_samples: int, fs: int, rms: float):
    if kind == "intermittent":
        samples, _ = intermittent_speech(rng, num_samples, fs, rms=rms)
        return samples
    if kind == "speech_like":
        return speech_like(rng, num_samples, fs, envelope_floor=0.35, rms=rms)
    if kind == "stationary_noise":
        return stationary_noise(rng, num_samples, rms=rms)
    if kind == "silence":
        return np.zeros(num_samples)
    raise ConfigError(f"unknown stem kind {kind!r}")


def _cmd_rir(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    if not config:
        raise ConfigError("rir requires a config file (room, source, mics)")
    _check_keys(config, _RIR_CONFIG_KEYS, context="")
    room = config.get("room", {})
    dims = room.get("dims")
    if dims is None:
        raise ConfigError("config needs room.dims")
    if "source" not in config or "mics" not in config:
        raise ConfigError("config needs source and mics")
    fs = int(config.get("fs", 16000))
    t60 = room.get("t60")
    absorption = room.get("absorption")

    out_dir = _resolve_out(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    meta = {"fs": fs, "room_dims": dims, "t60": t60, "absorption": absorption, "rirs": []}
    for index, mic in enumerate(config["mics"]):
        rir = simulate_rir(
            dims,
            t60,
            config["source"],
            mic,
            fs,
            absorption=absorption,
            duration=config.get("duration"),
        )
        path = out_dir / f"rir_mic{index}.wav"
        save_wav(path, MultichannelAudio(rir.taps[np.newaxis, :], fs))
        entry = {
            "mic": list(map(float, mic)),
            "file": path.name,
            "distance_m": rir.source_distance,
            "direct_delay_samples": int(round(rir.source_distance / 343.0 * fs)),
        }
        try:
            entry["measured_t60_s"] = measure_t60(rir)
        except ValueError:
            entry["measured_t60_s"] = None
        meta["rirs"].append(entry)
    with open(out_dir / "rir_meta.json", "w") as fh:
        json.dump(meta, fh, indent=2)
    print(f"wrote {len(meta['rirs'])} impulse responses to {out_dir}")
    return EXIT_OK


def _cmd_simulate(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    _check_keys(config, _SIMULATE_CONFIG_KEYS, context="")
    fs = 16000
    t60 = float(config.get("t60", 0.3))
    array = _array_from_config(config.get("array", {}))
    scene_section = dict(config.get("scene", {}))
    constraint_kwargs = {}
    for key in _SCENE_KEYS:
        if key in scene_section:
            value = scene_section[key]
            constraint_kwargs[key] = (
                tuple(value) if isinstance(value, list) else value
            )
    constraints = SceneConstraints(**constraint_kwargs)

    mix_section = config.get("mix", {})
    spec = MixSpec(
        sir_db=float(mix_section.get("sir_db", 0.0)),
        snr_db=float(mix_section.get("snr_db", 30.0)),
        clip_seconds=float(mix_section.get("clip_seconds", 8.0)),
        allow_off_grid=bool(mix_section.get("allow_off_grid", False)),
    )

    entropy = np.random.SeedSequence(args.seed)
    geo_seed, stem_seed, noise_seed = entropy.spawn(3)
    scene = sample_scene(np.random.default_rng(geo_seed), array=array, t60=t60, constraints=constraints)

    num_samples = int(round(spec.clip_seconds * fs))
    stem_rng = np.random.default_rng(stem_seed)
    stem_section = config.get("stems", {})
    default_kinds = {
        "target": "intermittent",
        "non_target": "silence",
        "interferer": "stationary_noise",
    }
    stems = {}
    stem_kinds = {}
    for role in ("target", "non_target", "interferer"):
        role_cfg = stem_section.get(role, {})
        kind = role_cfg.get("kind", default_kinds[role])
        rms = float(role_cfg.get("rms", 0.05))
        stems[role] = _make_stem(kind, stem_rng, num_samples, fs, rms)
        stem_kinds[role] = kind

    noise_seed_int = int(noise_seed.generate_state(1)[0])
    result = mix_scene(scene, stems, spec, noise_seed=noise_seed_int, fs=fs)

    out_dir = _resolve_out(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_wav(out_dir / "mixture.wav", result.mixture)
    for role, image in result.images.items():
        save_wav(out_dir / f"{role}.wav", image)
    save_wav(out_dir / "noise.wav", result.noise)

    manifest = {
        "seed": args.seed,
        "noise_seed": noise_seed_int,
        "fs": fs,
        "t60": t60,
        "room_dims": scene.room_dims.tolist(),
        "mic_positions": scene.mic_positions.tolist(),
        "sources": [
            {"role": src.role, "position": src.position.tolist()}
            for src in scene.sources
        ],
        "stem_kinds": stem_kinds,
        "mix": {
            "sir_db": spec.sir_db,
            "snr_db": spec.snr_db,
            "clip_seconds": spec.clip_seconds,
        },
        "gains": result.gains,
        "realized_sir_db": result.realized_sir_db,
        "realized_snr_db": result.realized_snr_db,
        "files": ["mixture.wav"]
        + [f"{role}.wav" for role in result.images]
        + ["noise.wav"],
        "config_echo": config,
    }
    with open(out_dir / "scene.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
    print(
        f"wrote scene to {out_dir} "
        f"(SIR {'n/a' if result.realized_sir_db is None else round(result.realized_sir_db, 3) + 0.0} dB, "
        f"SNR {round(result.realized_snr_db, 3) + 0.0} dB)"
    )
    return EXIT_OK


def _load_pipeline_audio(path: str) -> MultichannelAudio:
    audio = load_wav(path)
    if audio.sample_rate != 16000:
        raise ValueError(
            f"pipeline entry expects 16 kHz audio, got {audio.sample_rate} Hz"
        )
    return audio


def _cmd_extract(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    _check_keys(config, _COHERENCE_KEYS, context="")
    cfg = _coherence_from_args(args.variant, config)
    audio = _load_pipeline_audio(args.infile)
    if audio.num_channels < 2:
        raise ValueError("feature extraction requires at least 2 microphones")
    specs = stft_multichannel(audio, StftConfig())
    features = compute_lstsc(specs, cfg, sample_rate=audio.sample_rate)
    out_path = _resolve_out(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_features(out_path, features)
    width = features.banded_gamma_local.shape[1] if features.banded_gamma_local is not None else features.num_bins
    note = ""
    if args.csv:
        csv_paths = export_features_csv(out_path, features)
        note = f" and {len(csv_paths)} CSV planes"
    print(f"wrote {out_path} ({features.num_frames} frames x {width}){note}")
    return EXIT_OK


def _cmd_enhance(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    _check_keys(config, _COHERENCE_KEYS, context="")
    cfg = _coherence_from_args(args.variant, config)
    audio = _load_pipeline_audio(args.infile)
    result = enhance_stream(audio, cfg, HeuristicMaskEstimator())
    out_path = _resolve_out(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_wav(out_path, result.enhanced)
    mask_path = (
        _resolve_out(args.mask_out)
        if args.mask_out
        else out_path.with_suffix(".mask.csv")
    )
    np.savetxt(mask_path, result.mask.data, delimiter=",", fmt="%.9e")
    print(f"wrote {out_path} and {mask_path}")
    return EXIT_OK


def _cmd_evaluate(args: argparse.Namespace) -> int:
    ref = load_wav(args.ref)
    est = load_wav(args.est)
    report = si_sdr(ref.channel(0), est.channel(0))
    out_path = _resolve_out(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    record = {
        "ref": str(args.ref),
        "est": str(args.est),
        "si_sdr_db": report.value_db,
        "projection_gain": report.projection_gain,
    }
    if args.label:
        record["label"] = args.label
    with open(out_path, "a") as fh:
        fh.write(json.dumps(record) + "\n")
    print(f"SI-SDR {report.value_db:.3f} dB -> {out_path}")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lstsc",
        description="Spatial-coherence feature pipeline and scene synthesizer.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_rir = sub.add_parser("rir", help="simulate room impulse responses")
    p_rir.add_argument("--config", required=True, help="JSON: room, source, mics")
    p_rir.add_argument("--out", required=True, help="output directory")
    p_rir.set_defaults(func=_cmd_rir)

    p_sim = sub.add_parser("simulate", help="sample and render a scene")
    p_sim.add_argument("--config", help="JSON scene/mix/stem settings")
    p_sim.add_argument("--seed", type=int, required=True)
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.set_defaults(func=_cmd_simulate)

    p_ext = sub.add_parser("extract", help="compute coherence features")
    p_ext.add_argument("--in", dest="infile", required=True, help="multichannel WAV")
    p_ext.add_argument(
        "--variant",
        default="lstsc-3",
        choices=["lstsc-1", "lstsc-2", "lstsc-3", "lstsc-4"],
    )
    p_ext.add_argument("--config", help="JSON coherence overrides")
    p_ext.add_argument("--out", required=True, help="binary feature file path")
    p_ext.add_argument(
        "--csv", action="store_true", help="also write one CSV per feature plane"
    )
    p_ext.set_defaults(func=_cmd_extract)

    p_enh = sub.add_parser("enhance", help="masking-based enhancement")
    p_enh.add_argument("--in", dest="infile", required=True, help="multichannel WAV")
    p_enh.add_argument(
        "--variant",
        default="lstsc-3",
        choices=["lstsc-1", "lstsc-2", "lstsc-3", "lstsc-4"],
    )
    p_enh.add_argument("--config", help="JSON coherence overrides")
    p_enh.add_argument("--out", required=True, help="enhanced WAV path")
    p_enh.add_argument("--mask-out", help="mask CSV path (default: <out>.mask.csv)")
    p_enh.set_defaults(func=_cmd_enhance)

    p_eval = sub.add_parser("evaluate", help="scale-invariant SDR report")
    p_eval.add_argument("--ref", required=True, help="reference WAV (channel 0)")
    p_eval.add_argument("--est", required=True, help="estimate WAV (channel 0)")
    p_eval.add_argument("--out", required=True, help="JSON-lines report (appended)")
    p_eval.add_argument("--label", help="free-form tag copied into the record")
    p_eval.set_defaults(func=_cmd_evaluate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with code 2
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONSTRAINT
    except Exception as exc:  # pragma: no cover - safety net
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OTHER


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
