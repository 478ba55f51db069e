"""Command workflows shared by the service runner and the sweep harness.

Each workflow is a pure function of a RunConfig plus filesystem artifacts;
determinism is enforced here (thread pinning + seeding) so every caller gets
reproducible outputs.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch

from .clustering import ClusterBank
from .config import RunConfig
from .errors import MissingArtifactError
from .evaluation import (
    EvalReport,
    GroundTruthRecord,
    PredictionRecord,
    evaluate,
    pr_curve_csv,
    report_csv,
)
from .keypoints import (
    KeypointTrainConfig,
    load_keypoint_checkpoint,
    save_keypoint_checkpoint,
    smoothed_loss_bounds,
    train_keypoint_model,
)
from .masks import generate_shape_masks, ingest_masks, save_mask_png
from .pipeline import (
    HoiModel,
    PipelineConfig,
    load_hoi_checkpoint,
    predict,
    save_hoi_checkpoint,
    train_hoi,
)
from .scenes import (
    INTERACTION_CLASSES,
    HOITriplet,
    SceneGenConfig,
    SyntheticScene,
    generate_scenes,
    gt_triplets_for_eval,
    load_scene_dataset,
    save_scene_dataset,
)


def set_determinism(cfg: RunConfig) -> None:
    torch.set_num_threads(1 if cfg.deterministic else cfg.threads)
    torch.manual_seed(cfg.seed)


def kp_config_from(cfg: RunConfig) -> KeypointTrainConfig:
    return KeypointTrainConfig(
        n_keypoints=cfg.num_keypoints,
        sigma2=cfg.sigma2,
        iters=cfg.kp_iters,
        lr=cfg.kp_lr,
        batch=cfg.kp_batch,
        mask_ratio=cfg.mask_ratio,
        mask_patch=cfg.mask_patch,
        seed=cfg.seed,
        n_clusters=cfg.num_clusters,
        image_size=cfg.image_size,
        base_channels=cfg.kp_base_channels,
        perceptual=cfg.perceptual,
        log_every=cfg.kp_log_every,
    )


def pipeline_config_from(cfg: RunConfig) -> PipelineConfig:
    return PipelineConfig(
        n_keypoints=cfg.num_keypoints,
        top_k=cfg.top_k,
        n_classes=cfg.num_classes,
        decoder_depth=cfg.decoder_depth,
        decoder_width=cfg.decoder_width,
        decoder_heads=cfg.decoder_heads,
        attention_heads=cfg.attention_heads,
        gamma_patch=cfg.gamma_patch,
        roi_resolution=cfg.roi_resolution,
        sigma2=cfg.sigma2,
        focal_alpha=cfg.focal_alpha,
        focal_gamma=cfg.focal_gamma,
        epochs=cfg.hoi_epochs,
        lr=cfg.hoi_lr,
        batch=cfg.hoi_batch,
        seed=cfg.seed,
        image_size=cfg.image_size,
        trunk_channels=cfg.trunk_channels,
        kp_image_size=cfg.image_size,
        use_graph=cfg.use_graph,
        use_pam=cfg.use_pam,
        pam_human_patches=cfg.pam_human_patches,
        pam_object_patches=cfg.pam_object_patches,
        pam_positional=cfg.pam_positional,
        joint_finetune=cfg.joint_finetune,
        score_threshold=cfg.score_threshold,
    )


def _fmt(v: float) -> str:
    return f"{float(v):.10g}"


# --- gen-data -----------------------------------------------------------------


def gen_data_workflow(cfg: RunConfig, out_dir: Path) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    set_determinism(cfg)
    seeds = np.random.SeedSequence(cfg.seed).spawn(2)
    mask_seed = int(seeds[0].generate_state(1)[0])
    scene_seed = int(seeds[1].generate_state(1)[0])

    masks_dir = out_dir / "masks"
    masks_dir.mkdir(parents=True, exist_ok=True)
    samples = generate_shape_masks(cfg.num_masks, cfg.image_size, seed=mask_seed)
    for s in samples:
        save_mask_png(s.grid, masks_dir / f"{s.source_id}.png")

    scenes_path = out_dir / "scenes.jsonl"
    gen_cfg = SceneGenConfig(size=cfg.image_size, occluded_prob=cfg.occluded_prob)
    scenes = generate_scenes(cfg.num_scenes, seed=scene_seed, cfg=gen_cfg)
    save_scene_dataset(scenes, scenes_path)
    return {
        "masks_dir": str(masks_dir),
        "scenes_path": str(scenes_path),
        "num_masks": len(samples),
        "num_scenes": len(scenes),
    }


# --- train-keypoints ------------------------------------------------------------


def write_kp_loss_csv(records, path: Path) -> None:
    lines = ["iteration,l1,perceptual,total"]
    for r in records:
        lines.append(f"{r.iteration},{_fmt(r.l1)},{_fmt(r.perceptual)},{_fmt(r.total)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def train_keypoints_workflow(cfg: RunConfig, out_dir: Path) -> dict:
    if not cfg.masks_dir:
        raise MissingArtifactError("train-keypoints requires masks_dir")
    out_dir.mkdir(parents=True, exist_ok=True)
    set_determinism(cfg)
    samples = ingest_masks(cfg.masks_dir, size=(cfg.image_size, cfg.image_size))
    result = train_keypoint_model(samples, kp_config_from(cfg))
    ckpt = out_dir / "keypoints.ckpt"
    save_keypoint_checkpoint(ckpt, result.model, result.bank, {"seed": cfg.seed})
    write_kp_loss_csv(result.records, out_dir / "kp_loss.csv")
    first, last = smoothed_loss_bounds(result.records)
    return {
        "keypoint_checkpoint": str(ckpt),
        "loss_curve": str(out_dir / "kp_loss.csv"),
        "samples": len(samples),
        "initial_loss": first,
        "final_loss": last,
    }


# --- detect-keypoints -------------------------------------------------------------


def detect_keypoints_workflow(cfg: RunConfig, out_dir: Path) -> dict:
    from .keypoints import detect_keypoints
    from .masks import load_mask_file

    if not cfg.keypoint_checkpoint:
        raise MissingArtifactError("detect-keypoints requires keypoint_checkpoint")
    if not cfg.mask_input:
        raise MissingArtifactError("detect-keypoints requires mask_input")
    if not Path(cfg.mask_input).is_file():
        raise MissingArtifactError(f"mask input not found: {cfg.mask_input}")
    out_dir.mkdir(parents=True, exist_ok=True)
    set_determinism(cfg)
    model, bank, _ = load_keypoint_checkpoint(cfg.keypoint_checkpoint)
    sample = load_mask_file(cfg.mask_input, size=(model.image_size, model.image_size))
    kps, cluster_id = detect_keypoints(sample, model, bank)
    out = {
        "source": sample.source_id,
        "cluster": cluster_id,
        "keypoints": [[round(float(x), 10), round(float(y), 10)] for x, y in kps],
    }
    path = out_dir / "keypoints.json"
    path.write_text(json.dumps(out, separators=(",", ":")) + "\n", encoding="utf-8")
    return {"keypoints_path": str(path), "cluster": cluster_id, "keypoints": out["keypoints"]}


# --- train-hoi ----------------------------------------------------------------------


def write_hoi_loss_csv(records, path: Path) -> None:
    lines = ["epoch,step,interactiveness,classification,total"]
    for r in records:
        lines.append(
            f"{r.epoch},{r.step},{_fmt(r.interactiveness)},{_fmt(r.classification)},{_fmt(r.total)}"
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def train_hoi_workflow(cfg: RunConfig, out_dir: Path) -> dict:
    if not cfg.scenes_path:
        raise MissingArtifactError("train-hoi requires scenes_path")
    if not cfg.keypoint_checkpoint and not cfg.joint_finetune:
        raise MissingArtifactError(
            "train-hoi requires keypoint_checkpoint (or joint_finetune=true)"
        )
    out_dir.mkdir(parents=True, exist_ok=True)
    set_determinism(cfg)
    scenes = load_scene_dataset(cfg.scenes_path)
    if cfg.keypoint_checkpoint:
        kp_model, bank, _ = load_keypoint_checkpoint(cfg.keypoint_checkpoint)
    else:
        # joint training from scratch: fresh keypoint model, trivial single cluster
        from .keypoints import KeypointModel

        kp_model = KeypointModel(cfg.num_keypoints, cfg.image_size, cfg.kp_base_channels)
        bank = ClusterBank(
            np.zeros((1, 256), dtype=np.float64), n_keypoints=cfg.num_keypoints
        )
    pcfg = pipeline_config_from(cfg)
    result = train_hoi(scenes, kp_model, bank, pcfg)
    ckpt = out_dir / "hoi.ckpt"
    save_hoi_checkpoint(ckpt, result.model, kp_model, bank, {"seed": cfg.seed})
    write_hoi_loss_csv(result.records, out_dir / "hoi_loss.csv")
    return {
        "hoi_checkpoint": str(ckpt),
        "loss_curve": str(out_dir / "hoi_loss.csv"),
        "scenes": len(scenes),
        "first_epoch_loss": result.epoch_means[0] if result.epoch_means else None,
        "last_epoch_loss": result.epoch_means[-1] if result.epoch_means else None,
    }


# --- predict ---------------------------------------------------------------------------


def write_predictions(records: list[PredictionRecord], path: Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            t = rec.triplet
            f.write(
                json.dumps(
                    {
                        "scene_id": rec.scene_id,
                        "human_box": [round(float(v), 10) for v in t.human_box],
                        "object_box": [round(float(v), 10) for v in t.object_box],
                        "interaction_class": t.interaction_class,
                        "score": round(float(t.score), 12),
                    },
                    separators=(",", ":"),
                )
                + "\n"
            )


def read_predictions(path: str | Path) -> list[PredictionRecord]:
    path = Path(path)
    if not path.is_file():
        raise MissingArtifactError(f"predictions file not found: {path}")
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            out.append(
                PredictionRecord(
                    scene_id=rec["scene_id"],
                    triplet=HOITriplet(
                        human_box=tuple(rec["human_box"]),
                        object_box=tuple(rec["object_box"]),
                        interaction_class=rec["interaction_class"],
                        score=rec["score"],
                    ),
                )
            )
    return out


def predict_scenes(
    scenes: list[SyntheticScene],
    model: HoiModel,
    kp_model,
    bank,
    top_k: int | None = None,
    threshold: float | None = None,
) -> list[PredictionRecord]:
    records = []
    for scene in scenes:
        for t in predict(scene, model, kp_model, bank, top_k=top_k, threshold=threshold):
            records.append(PredictionRecord(scene_id=scene.scene_id, triplet=t))
    return records


def predict_workflow(cfg: RunConfig, out_dir: Path) -> dict:
    if not cfg.hoi_checkpoint:
        raise MissingArtifactError("predict requires hoi_checkpoint")
    if not cfg.scenes_path:
        raise MissingArtifactError("predict requires scenes_path")
    out_dir.mkdir(parents=True, exist_ok=True)
    set_determinism(cfg)
    model, kp_model, bank, _ = load_hoi_checkpoint(cfg.hoi_checkpoint)
    scenes = load_scene_dataset(cfg.scenes_path)
    records = predict_scenes(
        scenes, model, kp_model, bank, top_k=cfg.top_k, threshold=cfg.score_threshold
    )
    path = out_dir / "predictions.jsonl"
    write_predictions(records, path)
    return {"predictions_path": str(path), "num_predictions": len(records)}


# --- eval -------------------------------------------------------------------------------


def gt_records_from_scenes(scenes: list[SyntheticScene]) -> list[GroundTruthRecord]:
    out = []
    for scene in scenes:
        for t in gt_triplets_for_eval(scene):
            out.append(GroundTruthRecord(scene_id=scene.scene_id, triplet=t))
    return out


def write_report_files(report: EvalReport, out_dir: Path, prefix: str = "report") -> dict:
    class_names = {i: name for i, name in enumerate(INTERACTION_CLASSES)}
    csv_path = out_dir / f"{prefix}.csv"
    csv_path.write_text(report_csv(report, class_names), encoding="utf-8")
    summary_path = out_dir / f"{prefix}_summary.json"
    summary_path.write_text(
        json.dumps(report.summary_dict(), sort_keys=True, separators=(",", ":")) + "\n",
        encoding="utf-8",
    )
    curve_paths = {}
    for cls in sorted(report.pr_curves):
        p = out_dir / f"{prefix}_pr_{class_names.get(cls, cls)}.csv"
        p.write_text(pr_curve_csv(report, cls), encoding="utf-8")
        curve_paths[cls] = str(p)
    return {"report_csv": str(csv_path), "summary": str(summary_path), "pr_curves": curve_paths}


def eval_workflow(cfg: RunConfig, out_dir: Path) -> dict:
    if not cfg.predictions_path:
        raise MissingArtifactError("eval requires predictions_path")
    if not cfg.scenes_path:
        raise MissingArtifactError("eval requires scenes_path")
    out_dir.mkdir(parents=True, exist_ok=True)
    set_determinism(cfg)
    preds = read_predictions(cfg.predictions_path)
    scenes = load_scene_dataset(cfg.scenes_path)
    gts = gt_records_from_scenes(scenes)
    report = evaluate(
        preds, gts, scenario=cfg.scenario, class_filter=list(cfg.eval_classes) or None
    )
    outputs = write_report_files(report, out_dir)
    outputs.update(
        {
            "map": report.map,
            "recall": report.recall,
            "precision": report.precision,
            "f1": report.f1,
        }
    )
    return outputs
