"""Sweep harnesses: keypoint counts, top-K, and component ablations.

Every leg shares the base configuration except the axis variable; legs that
fail are recorded with a failure marker and the sweep continues. Results are
emitted as CSV tables plus one resolved-config echo per leg.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path

from .config import RunConfig
from .errors import ConfigurationError, HoikitError
from .workflows import (
    eval_workflow,
    train_hoi_workflow,
    train_keypoints_workflow,
    predict_workflow,
)

DEFAULT_KEYPOINT_COUNTS = (4, 8, 16, 32, 48)
DEFAULT_TOP_K = (8, 16, 32, 64)

ABLATION_VARIANTS = {
    "baseline": dict(use_graph=False, use_pam=False),
    "kip": dict(use_graph=True, use_pam=False),
    "pam_no_human": dict(use_graph=False, use_pam=True, pam_human_patches=False),
    "pam_no_object": dict(use_graph=False, use_pam=True, pam_object_patches=False),
    "pam_no_positional": dict(use_graph=False, use_pam=True, pam_positional=False),
    "pam": dict(use_graph=False, use_pam=True),
    "full": dict(use_graph=True, use_pam=True),
}

SWEEP_AXES = ("num_keypoints", "top_k", "ablation")


def _leg_config(base: RunConfig, **updates) -> RunConfig:
    return dataclasses.replace(base, **updates)


def _write_leg_echo(cfg: RunConfig, leg_dir: Path) -> None:
    leg_dir.mkdir(parents=True, exist_ok=True)
    (leg_dir / "resolved_config.txt").write_text(cfg.echo_text(), encoding="utf-8")


def _train_and_eval_leg(cfg: RunConfig, leg_dir: Path, shared_kp_ckpt: str | None) -> dict:
    """Train (keypoints if not shared, then detector), predict, evaluate both scenarios."""
    if shared_kp_ckpt is None:
        kp_out = train_keypoints_workflow(cfg, leg_dir)
        kp_ckpt = kp_out["keypoint_checkpoint"]
    else:
        kp_ckpt = shared_kp_ckpt
    cfg = _leg_config(cfg, keypoint_checkpoint=kp_ckpt)
    hoi_out = train_hoi_workflow(cfg, leg_dir)
    cfg = _leg_config(cfg, hoi_checkpoint=hoi_out["hoi_checkpoint"])
    pred_cfg = _leg_config(cfg, scenes_path=cfg.eval_scenes_path or cfg.scenes_path)
    pred_out = predict_workflow(pred_cfg, leg_dir)
    row = {}
    for scenario in (1, 2):
        eval_cfg = _leg_config(
            pred_cfg, predictions_path=pred_out["predictions_path"], scenario=scenario
        )
        report = eval_workflow(eval_cfg, leg_dir / f"scenario{scenario}")
        row[f"ap_role_{scenario}"] = report["map"]
        if scenario == 2:
            row.update(
                recall=report["recall"], precision=report["precision"], f1=report["f1"]
            )
    return row


def run_sweep(axis: str, values, base_cfg: RunConfig, workdir: str | Path) -> list[dict]:
    """Execute one sweep axis; returns table rows and writes sweep.csv.

    ``values`` empty selects the documented default set for the axis.
    """
    if axis not in SWEEP_AXES:
        raise ConfigurationError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)

    rows: list[dict] = []
    if axis == "num_keypoints":
        vals = [int(v) for v in values] if values else list(DEFAULT_KEYPOINT_COUNTS)
        for v in vals:
            leg_dir = workdir / f"n{v}"
            cfg = _leg_config(base_cfg, num_keypoints=v, out_dir=str(leg_dir))
            _write_leg_echo(cfg, leg_dir)
            row = {"num_keypoints": v}
            try:
                row.update(_train_and_eval_leg(cfg, leg_dir, shared_kp_ckpt=None))
            except HoikitError as exc:
                row["error"] = f"FAILED({exc.exit_category}): {exc}"
            rows.append(row)
        columns = ["num_keypoints", "ap_role_1", "ap_role_2"]
    elif axis == "ablation":
        names = [str(v) for v in values] if values else list(ABLATION_VARIANTS)
        unknown = [n for n in names if n not in ABLATION_VARIANTS]
        if unknown:
            raise ConfigurationError(f"unknown ablation variants: {unknown}")
        shared_dir = workdir / "shared"
        shared_dir.mkdir(parents=True, exist_ok=True)
        kp_out = train_keypoints_workflow(base_cfg, shared_dir)
        for name in names:
            leg_dir = workdir / name
            cfg = _leg_config(base_cfg, out_dir=str(leg_dir), **ABLATION_VARIANTS[name])
            _write_leg_echo(cfg, leg_dir)
            row = {"variant": name}
            try:
                row.update(
                    _train_and_eval_leg(cfg, leg_dir, shared_kp_ckpt=kp_out["keypoint_checkpoint"])
                )
            except HoikitError as exc:
                row["error"] = f"FAILED({exc.exit_category}): {exc}"
            rows.append(row)
        columns = ["variant", "ap_role_1", "ap_role_2"]
    else:  # top_k: one shared checkpoint, vary K at prediction time
        vals = [int(v) for v in values] if values else list(DEFAULT_TOP_K)
        shared_dir = workdir / "shared"
        shared_dir.mkdir(parents=True, exist_ok=True)
        kp_out = train_keypoints_workflow(base_cfg, shared_dir)
        cfg = _leg_config(base_cfg, keypoint_checkpoint=kp_out["keypoint_checkpoint"])
        hoi_out = train_hoi_workflow(cfg, shared_dir)
        for v in vals:
            leg_dir = workdir / f"k{v}"
            leg_cfg = _leg_config(
                cfg,
                top_k=v,
                out_dir=str(leg_dir),
                hoi_checkpoint=hoi_out["hoi_checkpoint"],
                scenes_path=cfg.eval_scenes_path or cfg.scenes_path,
            )
            _write_leg_echo(leg_cfg, leg_dir)
            row = {"top_k": v}
            try:
                leg_dir.mkdir(parents=True, exist_ok=True)
                pred_out = predict_workflow(leg_cfg, leg_dir)
                eval_cfg = _leg_config(
                    leg_cfg, predictions_path=pred_out["predictions_path"]
                )
                report = eval_workflow(eval_cfg, leg_dir)
                row.update(
                    ap=report["map"],
                    f1=report["f1"],
                    recall=report["recall"],
                    precision=report["precision"],
                )
            except HoikitError as exc:
                row["error"] = f"FAILED({exc.exit_category}): {exc}"
            rows.append(row)
        columns = ["top_k", "ap", "f1", "recall", "precision"]

    _write_sweep_csv(rows, columns, workdir / "sweep.csv")
    return rows


def _write_sweep_csv(rows: list[dict], columns: list[str], path: Path) -> None:
    def fmt(v):
        if isinstance(v, float):
            return f"{v:.10g}"
        return str(v)

    lines = [",".join(columns)]
    for row in rows:
        if "error" in row:
            cells = [fmt(row.get(columns[0], ""))] + [row["error"]] * (len(columns) - 1)
        else:
            cells = [fmt(row.get(c, "")) for c in columns]
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
