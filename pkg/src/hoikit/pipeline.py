"""End-to-end interaction detector over synthetic scenes.

A small convolutional trunk replaces the external detector backbone; scene
detections come with ground-truth boxes and masks. Per scene the model pools
instance features, scores pair interactiveness over the keypoint-similarity
graph, keeps the top-K pairs, builds part-attention queries, and classifies
interactions with a transformer decoder. Ablation switches delete the graph
feature segments and/or the attended patch tail exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np
import torch
from torch import nn

from . import part_attention as pam
from .clustering import ClusterBank
from .errors import DivergenceError, InvalidInputError, MissingArtifactError
from .evaluation import iou
from .interactiveness import (
    PAIR_FEATURE_DIM,
    GraphUpdate,
    InstanceFeature,
    InteractivenessHead,
    KeypointEmbedding,
    PairCandidate,
    SemanticEmbedding,
    SpatialEncoder,
    build_adjacency,
    focal_loss,
    pair_features,
    select_top_k,
)
from .keypoints import KeypointModel, encode_keypoints
from .scenes import HOITriplet, SceneInstance, SyntheticScene


@dataclass
class PipelineConfig:
    n_keypoints: int = 32
    top_k: int = 32
    n_classes: int = 3
    n_instance_classes: int = 5  # human + four object families
    decoder_depth: int = 2
    decoder_width: int = 256
    decoder_heads: int = 4
    attention_heads: int = 1
    gamma_patch: float = 0.1
    roi_resolution: int = 5
    sigma2: float = 5e-5
    focal_alpha: float = 0.25
    focal_gamma: float = 2.0
    epochs: int = 30
    lr: float = 5e-5
    batch: int = 6
    seed: int = 0
    image_size: int = 64
    trunk_channels: int = 64
    kp_image_size: int = 64
    use_graph: bool = True
    use_pam: bool = True
    pam_human_patches: bool = True
    pam_object_patches: bool = True
    pam_positional: bool = True
    joint_finetune: bool = False
    score_threshold: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


class FeatureTrunk(nn.Module):
    """Three conv stages (stride 2, 1, 1) to a C-channel stride-2 feature map.

    Keypoint-centered patches are gamma * instance-box sized, a few percent
    of the image; the feature map must stay fine enough that those regions
    span more than one cell, or the part tokens all collapse to one blurry
    value.
    """

    def __init__(self, channels: int = 64):
        super().__init__()
        c = channels
        self.net = nn.Sequential(
            nn.Conv2d(1, c // 4, 3, stride=2, padding=1),
            nn.ReLU(inplace=True),
            nn.Conv2d(c // 4, c // 2, 3, stride=1, padding=1),
            nn.ReLU(inplace=True),
            nn.Conv2d(c // 2, c, 3, stride=1, padding=1),
            nn.ReLU(inplace=True),
        )

    def forward(self, image: torch.Tensor) -> torch.Tensor:
        return self.net(image)


class InteractionDecoder(nn.Module):
    """Transformer decoder over interaction queries with per-class sigmoid outputs.

    Pre-norm layers keep the freshly projected (widely scaled) queries stable;
    the cross-attention memory is the feature map pooled to at most 8x8 so the
    key/value projections stay cheap. Depth 0 degenerates to the classifier
    applied directly to the queries.
    """

    MEMORY_SIDE = 8

    def __init__(self, depth: int, width: int, heads: int, n_classes: int, memory_dim: int):
        super().__init__()
        self.depth = depth
        self.memory_proj = nn.Linear(memory_dim, width)
        if depth > 0:
            layer = nn.TransformerDecoderLayer(
                d_model=width,
                nhead=heads,
                dim_feedforward=2 * width,
                dropout=0.0,
                batch_first=True,
                norm_first=True,
            )
            self.decoder = nn.TransformerDecoder(layer, depth, norm=nn.LayerNorm(width))
        else:
            self.decoder = None
        self.classifier = nn.Linear(width, n_classes)

    def forward(self, queries: torch.Tensor, feature_map: torch.Tensor) -> torch.Tensor:
        if queries.shape[0] == 0:
            return torch.zeros(0, self.classifier.out_features, dtype=queries.dtype)
        x = queries.unsqueeze(0)  # (1, K, width)
        if self.decoder is not None:
            c, h, w = feature_map.shape
            side = min(self.MEMORY_SIDE, h, w)
            pooled = torch.nn.functional.adaptive_avg_pool2d(feature_map[None], side)[0]
            memory = self.memory_proj(
                pooled.reshape(c, side * side).transpose(0, 1)
            ).unsqueeze(0)
            x = self.decoder(x, memory)
        return torch.sigmoid(self.classifier(x.squeeze(0)))


@dataclass
class SceneForward:
    """All intermediates of one scene pass, for loss assembly and inspection."""

    instances: list[InstanceFeature]
    candidates: list[PairCandidate]
    retained: list[PairCandidate]
    queries: torch.Tensor  # (K', width)
    attended_tails: torch.Tensor  # (K', 2N * 128) pre-projection patch tail
    class_probs: torch.Tensor  # (K', n_classes)
    interactiveness: torch.Tensor  # (P,) in candidate order


class HoiModel(nn.Module):
    """All learnable pieces of the interaction detector."""

    def __init__(self, cfg: PipelineConfig):
        super().__init__()
        self.cfg = cfg
        c, r = cfg.trunk_channels, cfg.roi_resolution
        self.trunk = FeatureTrunk(c)
        self.instance_proj = nn.Linear(c * r * r, 256)
        self.union_proj = nn.Linear(c * r * r, 256)
        self.keypoint_embed = KeypointEmbedding(cfg.n_keypoints)
        self.graph = GraphUpdate()
        self.spatial_enc = SpatialEncoder()
        self.semantic = SemanticEmbedding(cfg.n_instance_classes)
        self.inter_head = InteractivenessHead()
        self.patch_proj = pam.PatchProjector(c, r)
        self.patch_attn = pam.PatchSelfAttention(pam.TOKEN_DIM, cfg.attention_heads)
        self.query_proj = pam.QueryProjection(
            PAIR_FEATURE_DIM, cfg.n_keypoints, cfg.decoder_width
        )
        self.decoder = InteractionDecoder(
            cfg.decoder_depth, cfg.decoder_width, cfg.decoder_heads, cfg.n_classes, c
        )

    # --- scene-level steps, exposed individually so predict() is recomposable ---

    @property
    def dtype(self) -> torch.dtype:
        return self.decoder.classifier.weight.dtype

    def feature_map(self, scene: SyntheticScene) -> torch.Tensor:
        image = torch.from_numpy(scene.image)[None, None].to(self.dtype)
        return self.trunk(image)[0]

    def instance_features(
        self,
        scene: SyntheticScene,
        fmap: torch.Tensor,
        keypoints: list[torch.Tensor],
    ) -> list[InstanceFeature]:
        boxes = torch.tensor(
            np.stack([inst.box for inst in scene.instances]), dtype=fmap.dtype
        )
        blocks = pam.area_pool_patches(fmap, boxes, self.cfg.roi_resolution)
        visuals = self.instance_proj(blocks.reshape(blocks.shape[0], -1))
        return [
            InstanceFeature(
                kind=inst.kind,
                box=inst.box,
                visual=visuals[i],
                class_id=inst.class_id,
                keypoints=keypoints[i],
            )
            for i, inst in enumerate(scene.instances)
        ]

    def graph_features(
        self, features: list[InstanceFeature]
    ) -> tuple[list[int], list[int], torch.Tensor, torch.Tensor]:
        h_idx = [i for i, f in enumerate(features) if f.kind == "human"]
        o_idx = [i for i, f in enumerate(features) if f.kind == "object"]
        if not self.cfg.use_graph or not h_idx or not o_idx:
            zeros_h = torch.zeros(len(h_idx), 256, dtype=self.dtype)
            zeros_o = torch.zeros(len(o_idx), 256, dtype=self.dtype)
            return h_idx, o_idx, zeros_h, zeros_o
        h_kps = torch.stack([features[i].keypoints for i in h_idx])
        o_kps = torch.stack([features[i].keypoints for i in o_idx])
        adjacency = build_adjacency(
            h_kps.to(self.dtype), o_kps.to(self.dtype), self.keypoint_embed
        )
        h_vis = torch.stack([features[i].visual for i in h_idx])
        o_vis = torch.stack([features[i].visual for i in o_idx])
        return h_idx, o_idx, *self.graph(h_vis, o_vis, adjacency)

    def pair_candidates(
        self, features: list[InstanceFeature], fmap: torch.Tensor
    ) -> list[PairCandidate]:
        h_idx, o_idx, graph_h, graph_o = self.graph_features(features)
        candidates = []
        union_boxes = []
        for hp, hi in enumerate(h_idx):
            for op, oi in enumerate(o_idx):
                hb, ob = features[hi].box, features[oi].box
                union_boxes.append(
                    [min(hb[0], ob[0]), min(hb[1], ob[1]), max(hb[2], ob[2]), max(hb[3], ob[3])]
                )
                candidates.append((hp, hi, op, oi))
        if not candidates:
            return []
        ub = torch.tensor(union_boxes, dtype=fmap.dtype)
        union_blocks = pam.area_pool_patches(fmap, ub, self.cfg.roi_resolution)
        union_visuals = self.union_proj(union_blocks.reshape(union_blocks.shape[0], -1))
        out = []
        for n, (hp, hi, op, oi) in enumerate(candidates):
            f = features[hi], features[oi]
            components = {
                "human_visual": f[0].visual,
                "object_visual": f[1].visual,
                "human_graph": graph_h[hp],
                "object_graph": graph_o[op],
                "union_spatial": self.spatial_enc(f[0].box, f[1].box),
                "semantic": self.semantic(f[1].class_id),
                "union_visual": union_visuals[n],
            }
            out.append(
                PairCandidate(
                    human_idx=hi,
                    object_idx=oi,
                    features=pair_features(components),
                    segments={"human_graph": graph_h[hp], "object_graph": graph_o[op]},
                )
            )
        return out

    def score_candidates(self, candidates: list[PairCandidate]) -> torch.Tensor:
        if not candidates:
            return torch.zeros(0)
        stacked = torch.stack([c.features for c in candidates])
        scores = self.inter_head(stacked)
        for c, s in zip(candidates, scores):
            c.interactiveness = s
        return scores

    def pair_tokens(
        self, features: list[InstanceFeature], pair: PairCandidate, fmap: torch.Tensor
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """(2N, 128) tokens (humans first) and their keep mask per ablation flags."""
        tokens = self._batched_tokens(features, [pair], fmap)[0]
        return tokens, self._keep_mask()

    def _keep_mask(self) -> torch.Tensor:
        n = self.cfg.n_keypoints
        return torch.tensor(
            [self.cfg.pam_human_patches] * n + [self.cfg.pam_object_patches] * n
        )

    def _batched_tokens(
        self,
        features: list[InstanceFeature],
        retained: list[PairCandidate],
        fmap: torch.Tensor,
    ) -> torch.Tensor:
        """(K', 2N, 128) patch tokens for all retained pairs in one pooling pass."""
        cfg = self.cfg
        kps_list, boxes_list = [], []
        for pair in retained:
            for inst in (features[pair.human_idx], features[pair.object_idx]):
                kps_list.append(inst.keypoints.to(fmap.dtype))
                boxes_list.append(
                    torch.as_tensor(inst.box, dtype=fmap.dtype).repeat(cfg.n_keypoints, 1)
                )
        all_kps = torch.cat(kps_list)  # (K' * 2N, 2)
        all_boxes = torch.cat(boxes_list)
        regions = pam.patch_regions(all_kps, all_boxes, cfg.gamma_patch)
        blocks = pam.pool_patches(fmap, regions, cfg.roi_resolution)
        tokens = self.patch_proj(blocks)
        if cfg.pam_positional:
            tokens = tokens + pam.positional_encoding(all_kps)
        return tokens.reshape(len(retained), 2 * cfg.n_keypoints, pam.TOKEN_DIM)

    def build_queries(
        self,
        features: list[InstanceFeature],
        retained: list[PairCandidate],
        fmap: torch.Tensor,
    ) -> tuple[torch.Tensor, torch.Tensor]:
        cfg = self.cfg
        n_tail = 2 * cfg.n_keypoints * pam.TOKEN_DIM
        if not retained:
            return (
                torch.zeros(0, cfg.decoder_width, dtype=self.dtype),
                torch.zeros(0, n_tail, dtype=self.dtype),
            )
        if cfg.use_pam:
            tokens = self._batched_tokens(features, retained, fmap)
            attended, _ = self.patch_attn(tokens, self._keep_mask())
        else:
            attended = torch.zeros(
                len(retained), 2 * cfg.n_keypoints, pam.TOKEN_DIM, dtype=self.dtype
            )
        pair_feats = torch.stack([p.features for p in retained])
        tails = attended.reshape(len(retained), n_tail)
        queries = self.query_proj.linear(torch.cat([pair_feats, tails], dim=-1))
        return queries, tails

    def forward_scene(
        self, scene: SyntheticScene, keypoints: list[torch.Tensor]
    ) -> SceneForward:
        fmap = self.feature_map(scene)
        features = self.instance_features(scene, fmap, keypoints)
        candidates = self.pair_candidates(features, fmap)
        scores = self.score_candidates(candidates)
        retained = select_top_k(candidates, self.cfg.top_k)
        queries, tails = self.build_queries(features, retained, fmap)
        class_probs = self.decoder(queries, fmap)
        return SceneForward(
            instances=features,
            candidates=candidates,
            retained=retained,
            queries=queries,
            attended_tails=tails,
            class_probs=class_probs,
            interactiveness=scores,
        )


# --- targets and losses ---------------------------------------------------------


def assign_pair_targets(
    scene: SyntheticScene, candidates: list[PairCandidate], n_classes: int
) -> tuple[torch.Tensor, list[set[int]]]:
    """Interactiveness targets and per-pair class sets by IoU >= 0.5 box matching."""
    inter = torch.zeros(len(candidates))
    class_sets: list[set[int]] = [set() for _ in candidates]
    for i, cand in enumerate(candidates):
        hb = scene.instances[cand.human_idx].box
        ob = scene.instances[cand.object_idx].box
        for t in scene.triplets:
            gt_h = scene.instances[t.human_idx].box
            gt_o = scene.instances[t.object_idx].box
            if iou(hb, gt_h) >= 0.5 and iou(ob, gt_o) >= 0.5:
                inter[i] = 1.0
                if t.interaction_class < n_classes:
                    class_sets[i].add(t.interaction_class)
    return inter, class_sets


def total_loss(
    inter_preds: torch.Tensor,
    inter_targets: torch.Tensor,
    class_preds: torch.Tensor,
    class_targets: torch.Tensor,
    focal_alpha: float = 0.25,
    focal_gamma: float = 2.0,
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Interactiveness + multi-label classification focal losses, each
    normalized by its own positive count (minimum 1)."""
    l_inter = focal_loss(inter_preds, inter_targets, focal_alpha, focal_gamma)
    l_class = focal_loss(class_preds, class_targets, focal_alpha, focal_gamma)
    return l_inter + l_class, l_inter, l_class


def scene_loss(
    model: HoiModel, scene: SyntheticScene, keypoints: list[torch.Tensor]
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor, SceneForward]:
    fwd = model.forward_scene(scene, keypoints)
    cfg = model.cfg
    inter_targets, class_sets = assign_pair_targets(scene, fwd.candidates, cfg.n_classes)
    order = {id(c): i for i, c in enumerate(fwd.candidates)}
    class_targets = torch.zeros(len(fwd.retained), cfg.n_classes)
    for r, pair in enumerate(fwd.retained):
        for cls in class_sets[order[id(pair)]]:
            class_targets[r, cls] = 1.0
    total, l_inter, l_class = total_loss(
        fwd.interactiveness,
        inter_targets,
        fwd.class_probs,
        class_targets,
        cfg.focal_alpha,
        cfg.focal_gamma,
    )
    return total, l_inter, l_class, fwd


# --- keypoint plumbing ------------------------------------------------------------


def crop_to_frame(mask: np.ndarray, box: np.ndarray, out_size: int) -> np.ndarray:
    """Nearest-resize the box crop of a mask into the keypoint model's frame."""
    h, w = mask.shape
    c0, r0 = int(box[0] * w), int(box[1] * h)
    c1, r1 = max(int(np.ceil(box[2] * w)), c0 + 1), max(int(np.ceil(box[3] * h)), r0 + 1)
    crop = mask[r0:r1, c0:c1]
    rows = np.minimum((np.arange(out_size) + 0.5) * crop.shape[0] / out_size, crop.shape[0] - 1)
    cols = np.minimum((np.arange(out_size) + 0.5) * crop.shape[1] / out_size, crop.shape[1] - 1)
    return crop[rows.astype(int)][:, cols.astype(int)].astype(np.float32)


def instance_keypoints(
    inst: SceneInstance,
    kp_model: KeypointModel,
    bank: ClusterBank,
    grad: bool = False,
) -> torch.Tensor:
    """Keypoints for one detection, in image coordinates.

    The mask is cropped to the instance box and resized into the keypoint
    model's canonical frame; decoded keypoints map back through the box. No
    foreground filter applies here: every detection gets keypoints.
    """
    frame = crop_to_frame(inst.mask, inst.box, kp_model.image_size)
    ctx = torch.enable_grad() if grad else torch.no_grad()
    with ctx:
        _, kps = encode_keypoints(torch.from_numpy(frame), kp_model)
    kps = kps[0]
    box = torch.tensor(inst.box, dtype=kps.dtype)
    origin = box[:2]
    size = box[2:] - box[:2]
    return origin + kps * size


def scene_keypoints(
    scene: SyntheticScene, kp_model: KeypointModel, bank: ClusterBank, grad: bool = False
) -> list[torch.Tensor]:
    return [instance_keypoints(inst, kp_model, bank, grad) for inst in scene.instances]


# --- training ----------------------------------------------------------------------


@dataclass
class HoiLossRecord:
    epoch: int
    step: int
    interactiveness: float
    classification: float
    total: float


@dataclass
class HoiTrainResult:
    model: HoiModel
    records: list[HoiLossRecord] = field(default_factory=list)
    epoch_means: list[float] = field(default_factory=list)


def train_hoi(
    scenes: list[SyntheticScene],
    kp_model: KeypointModel,
    bank: ClusterBank,
    cfg: PipelineConfig,
) -> HoiTrainResult:
    """Train the detector; the keypoint model stays frozen unless
    ``joint_finetune`` is set, in which case keypoint-encoder updates run on
    alternate (odd) epochs."""
    torch.manual_seed(cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    model = HoiModel(cfg)
    hoi_opt = torch.optim.AdamW(model.parameters(), lr=cfg.lr)
    kp_opt = (
        torch.optim.AdamW(kp_model.parameters(), lr=cfg.lr) if cfg.joint_finetune else None
    )

    cached_kps = None
    if not cfg.joint_finetune:
        kp_model.eval()
        cached_kps = [scene_keypoints(s, kp_model, bank) for s in scenes]

    records: list[HoiLossRecord] = []
    epoch_means: list[float] = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(scenes))
        tune_keypoints = cfg.joint_finetune and (epoch % 2 == 1)
        epoch_losses = []
        for step, start in enumerate(range(0, len(order), cfg.batch)):
            batch_idx = order[start : start + cfg.batch]
            losses, inters, classes = [], [], []
            for si in batch_idx:
                scene = scenes[si]
                kps = (
                    cached_kps[si]
                    if cached_kps is not None
                    else scene_keypoints(scene, kp_model, bank, grad=tune_keypoints)
                )
                loss, l_inter, l_class, _ = scene_loss(model, scene, kps)
                losses.append(loss)
                inters.append(float(l_inter.detach()))
                classes.append(float(l_class.detach()))
            batch_loss = torch.stack(losses).mean()
            if not torch.isfinite(batch_loss):
                raise DivergenceError(
                    f"non-finite loss at epoch {epoch} step {step}",
                    snapshot={"epoch": epoch, "step": step, "losses": inters},
                )
            hoi_opt.zero_grad()
            if kp_opt is not None:
                kp_opt.zero_grad()
            batch_loss.backward()
            if tune_keypoints and kp_opt is not None:
                kp_opt.step()
            else:
                hoi_opt.step()
            records.append(
                HoiLossRecord(
                    epoch,
                    step,
                    float(np.mean(inters)),
                    float(np.mean(classes)),
                    float(batch_loss.detach()),
                )
            )
            epoch_losses.append(float(batch_loss.detach()))
        epoch_means.append(float(np.mean(epoch_losses)))
    return HoiTrainResult(model=model, records=records, epoch_means=epoch_means)


# --- prediction ---------------------------------------------------------------------


def predict(
    scene: SyntheticScene,
    model: HoiModel,
    kp_model: KeypointModel,
    bank: ClusterBank,
    top_k: int | None = None,
    threshold: float | None = None,
) -> list[HOITriplet]:
    """Triplets for each retained pair and class above the score threshold,
    scored as interactiveness * class probability, sorted descending."""
    cfg = model.cfg
    k = cfg.top_k if top_k is None else top_k
    thr = cfg.score_threshold if threshold is None else threshold
    if not scene.instances:
        return []
    model.eval()
    kp_model.eval()
    with torch.no_grad():
        kps = scene_keypoints(scene, kp_model, bank)
        fmap = model.feature_map(scene)
        features = model.instance_features(scene, fmap, kps)
        candidates = model.pair_candidates(features, fmap)
        if not candidates:
            return []
        model.score_candidates(candidates)
        retained = select_top_k(candidates, k)
        queries, _ = model.build_queries(features, retained, fmap)
        class_probs = model.decoder(queries, fmap)
    out = []
    for r, pair in enumerate(retained):
        hb = tuple(float(v) for v in scene.instances[pair.human_idx].box)
        ob = tuple(float(v) for v in scene.instances[pair.object_idx].box)
        for cls in range(cfg.n_classes):
            score = float(pair.interactiveness) * float(class_probs[r, cls])
            if score > thr:
                out.append(HOITriplet(hb, ob, cls, score=score))
    out.sort(key=lambda t: -t.score)
    return out


# --- persistence ----------------------------------------------------------------------

from .checkpoints import (  # noqa: E402
    load_state_dict_arrays,
    read_checkpoint,
    state_dict_arrays,
    write_checkpoint,
)
from .keypoints import load_keypoint_checkpoint, save_keypoint_checkpoint  # noqa: E402

HOI_CHECKPOINT_KIND = "hoikit-hoi"


def save_hoi_checkpoint(
    path, model: HoiModel, kp_model: KeypointModel, bank: ClusterBank, extra_config: dict | None = None
) -> None:
    arrays = state_dict_arrays(model, "hoi")
    arrays.update(state_dict_arrays(kp_model.encoder, "kp.encoder"))
    arrays.update(state_dict_arrays(kp_model.decoder, "kp.decoder"))
    arrays["kp.alpha"] = kp_model.alpha.detach().numpy().reshape(1)
    arrays["bank.centroids"] = bank.centroids.numpy()
    arrays["bank.edge_raw"] = bank.edge_raw.detach().numpy()
    config = {
        "pipeline": model.cfg.to_dict(),
        "kp": {
            "n_keypoints": kp_model.n_keypoints,
            "image_size": kp_model.image_size,
            "base_channels": kp_model.base_channels,
        },
    }
    if extra_config:
        config["run"] = extra_config
    write_checkpoint(path, HOI_CHECKPOINT_KIND, config, arrays)


def load_hoi_checkpoint(path) -> tuple[HoiModel, KeypointModel, ClusterBank, dict]:
    config, arrays = read_checkpoint(path, expect_kind=HOI_CHECKPOINT_KIND)
    cfg = PipelineConfig(**config["pipeline"])
    model = HoiModel(cfg)
    load_state_dict_arrays(model, arrays, "hoi")
    kpc = config["kp"]
    kp_model = KeypointModel(kpc["n_keypoints"], kpc["image_size"], kpc["base_channels"])
    load_state_dict_arrays(kp_model.encoder, arrays, "kp.encoder")
    load_state_dict_arrays(kp_model.decoder, arrays, "kp.decoder")
    with torch.no_grad():
        kp_model.alpha.copy_(torch.from_numpy(arrays["kp.alpha"]).reshape(()))
    bank = ClusterBank(arrays["bank.centroids"], n_keypoints=kpc["n_keypoints"])
    with torch.no_grad():
        bank.edge_raw.copy_(torch.from_numpy(arrays["bank.edge_raw"]))
    return model, kp_model, bank, config
