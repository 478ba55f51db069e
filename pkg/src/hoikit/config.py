"""Run configuration: a flat key=value text format with one documented schema.

Precedence is defaults < file < command-line overrides. Unknown keys and type
mismatches are fatal. Every command writes its resolved configuration next
to its outputs; re-running from that echo reproduces the artifacts in
deterministic mode.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigurationError

ENV_OUT_ROOT = "HOIKIT_OUT_ROOT"
ENV_THREADS = "HOIKIT_THREADS"


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _int_list(text: str) -> tuple[int, ...]:
    t = text.strip()
    return tuple(int(v) for v in t.split(",") if v.strip()) if t else ()


def _str_list(text: str) -> tuple[str, ...]:
    t = text.strip()
    return tuple(v.strip() for v in t.split(",") if v.strip()) if t else ()


@dataclass
class RunConfig:
    # reproducibility
    seed: int = 0
    deterministic: bool = True
    threads: int = 1
    out_dir: str = "runs/out"
    # geometry / keypoint model
    num_keypoints: int = 32
    sigma2: float = 5e-5
    image_size: int = 64
    num_clusters: int = 100
    mask_ratio: float = 0.9
    mask_patch: int = 8
    kp_iters: int = 20000
    kp_lr: float = 1e-4
    kp_batch: int = 64
    kp_base_channels: int = 16
    perceptual: bool = True
    kp_log_every: int = 1
    # detector
    top_k: int = 32
    num_classes: int = 3
    decoder_depth: int = 2
    decoder_width: int = 256
    decoder_heads: int = 4
    attention_heads: int = 1
    gamma_patch: float = 0.1
    roi_resolution: int = 5
    focal_alpha: float = 0.25
    focal_gamma: float = 2.0
    hoi_epochs: int = 30
    hoi_lr: float = 5e-5
    hoi_batch: int = 6
    trunk_channels: int = 64
    joint_finetune: bool = False
    score_threshold: float = 0.0
    use_graph: bool = True
    use_pam: bool = True
    pam_human_patches: bool = True
    pam_object_patches: bool = True
    pam_positional: bool = True
    # data generation
    num_masks: int = 500
    num_scenes: int = 200
    occluded_prob: float = 0.0
    # evaluation
    scenario: int = 2
    eval_classes: tuple[int, ...] = ()
    # sweeps
    sweep_axis: str = "num_keypoints"
    sweep_values: tuple[str, ...] = ()
    # artifact paths (inputs per command)
    masks_dir: str = ""
    scenes_path: str = ""
    eval_scenes_path: str = ""
    mask_input: str = ""
    keypoint_checkpoint: str = ""
    hoi_checkpoint: str = ""
    predictions_path: str = ""

    def echo_text(self) -> str:
        lines = []
        for f in sorted(fields(self), key=lambda f: f.name):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            elif isinstance(v, bool):
                v = "true" if v else "false"
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"


_PARSERS = {
    int: int,
    float: float,
    str: str,
    bool: _bool,
    tuple: None,  # handled by field name below
}

_TUPLE_PARSERS = {
    "eval_classes": _int_list,
    "sweep_values": _str_list,
}

_RANGE_CHECKS = {
    "num_keypoints": lambda v: 4 <= v <= 48,
    "sigma2": lambda v: v > 0,
    "mask_ratio": lambda v: 0 <= v <= 1,
    "top_k": lambda v: v >= 1,
    "gamma_patch": lambda v: 0 < v <= 1,
    "roi_resolution": lambda v: v >= 1,
    "scenario": lambda v: v in (1, 2),
    "image_size": lambda v: v >= 16 and v % 16 == 0,
    "num_classes": lambda v: v >= 1,
    "hoi_batch": lambda v: v >= 1,
    "kp_batch": lambda v: v >= 1,
    "threads": lambda v: v >= 1,
}


_FIELD_TYPES = {f.name: type(getattr(RunConfig(), f.name)) for f in fields(RunConfig)}


def _apply(cfg_dict: dict, key: str, raw: str, source: str) -> None:
    if key not in _FIELD_TYPES:
        raise ConfigurationError(f"unknown config key {key!r} ({source})")
    ftype = _FIELD_TYPES[key]
    try:
        if ftype is tuple:
            value = _TUPLE_PARSERS[key](raw)
        elif ftype is bool:
            value = _bool(raw)
        else:
            value = ftype(raw)
    except (ValueError, TypeError):
        raise ConfigurationError(
            f"config key {key!r} expects {ftype.__name__}, got {raw!r} ({source})"
        )
    check = _RANGE_CHECKS.get(key)
    if check and not check(value):
        raise ConfigurationError(f"config key {key!r} value {value!r} out of range ({source})")
    cfg_dict[key] = value


def parse_config(path: str | Path | None, overrides: list[str] | None = None) -> RunConfig:
    """Build a RunConfig from an optional file plus key=value overrides."""
    cfg_dict: dict = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigurationError(f"config file not found: {path}")
        for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigurationError(f"malformed line {lineno} in {path}: {line!r}")
            key, _, raw = stripped.partition("=")
            _apply(cfg_dict, key.strip(), raw.strip(), source=f"{path}:{lineno}")
    for item in overrides or []:
        if "=" not in item:
            raise ConfigurationError(f"override must be key=value, got {item!r}")
        key, _, raw = item.partition("=")
        _apply(cfg_dict, key.strip(), raw.strip(), source="override")

    cfg = RunConfig(**cfg_dict)
    out_root = os.environ.get(ENV_OUT_ROOT)
    if out_root:
        cfg.out_dir = str(Path(out_root) / cfg.out_dir)
    env_threads = os.environ.get(ENV_THREADS)
    if env_threads:
        _apply(cfg_dict, "threads", env_threads, source=f"env {ENV_THREADS}")
        cfg.threads = cfg_dict["threads"]
    return cfg
