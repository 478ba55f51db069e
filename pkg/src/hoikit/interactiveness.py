"""Keypoint-similarity interactiveness scoring over the human-object graph.

Humans and objects form a bipartite graph whose adjacency is the scaled dot
product of shared keypoint embeddings. Graph features are residual sums of
projected cross-instance visual features; pair features concatenate visual,
graph, spatial, semantic, and union components into a fixed 1836-d vector
scored by a small MLP.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from .errors import AssemblyError, InvalidInputError

VISUAL_DIM = 256
KEYPOINT_EMBED_DIM = 128
SEMANTIC_DIM = 300
PAIR_FEATURE_DIM = 6 * VISUAL_DIM + SEMANTIC_DIM  # 1836
SPATIAL_RAW_DIM = 20

PAIR_FEATURE_ORDER = (
    "human_visual",
    "object_visual",
    "human_graph",
    "object_graph",
    "union_spatial",
    "semantic",
    "union_visual",
)


class KeypointEmbedding(nn.Module):
    """Flatten (N, 2) keypoints, apply a shared affine map to 128-d, then bound the norm.

    The norm bound projects outputs into the unit ball, which keeps the
    scaled dot-product adjacency stable without breaking its symmetry.
    """

    def __init__(self, n_keypoints: int):
        super().__init__()
        self.n_keypoints = n_keypoints
        self.linear = nn.Linear(2 * n_keypoints, KEYPOINT_EMBED_DIM)

    def affine(self, keypoints: torch.Tensor) -> torch.Tensor:
        """Pre-normalization affine stage, exposed for linearity checks."""
        if keypoints.shape[-2] != self.n_keypoints:
            raise InvalidInputError(
                f"expected {self.n_keypoints} keypoints, got {keypoints.shape[-2]}"
            )
        flat = keypoints.reshape(*keypoints.shape[:-2], 2 * self.n_keypoints)
        return self.linear(flat)

    def forward(self, keypoints: torch.Tensor) -> torch.Tensor:
        v = self.affine(keypoints)
        norm = v.norm(dim=-1, keepdim=True)
        return v / torch.clamp(norm, min=1.0)


def build_adjacency(
    human_keypoints: torch.Tensor,
    object_keypoints: torch.Tensor,
    embed: KeypointEmbedding,
) -> torch.Tensor:
    """(H, O) adjacency of scaled keypoint-embedding dot products.

    A single value is stored per human-object pair, so the matrix is
    symmetric by construction; only human-object edges exist. Either side may
    be empty, producing an empty matrix.
    """
    n_h = human_keypoints.shape[0]
    n_o = object_keypoints.shape[0]
    if n_h == 0 or n_o == 0:
        return torch.zeros(n_h, n_o, dtype=human_keypoints.dtype if n_h or n_o else torch.float32)
    eh = embed(human_keypoints)
    eo = embed(object_keypoints)
    return (eh @ eo.transpose(-1, -2)) / (KEYPOINT_EMBED_DIM ** 0.5)


class GraphUpdate(nn.Module):
    """Residual cross-instance feature update with learned 256->256 projections."""

    def __init__(self):
        super().__init__()
        self.project_object_to_human = nn.Linear(VISUAL_DIM, VISUAL_DIM)
        self.project_human_to_object = nn.Linear(VISUAL_DIM, VISUAL_DIM)

    def forward(
        self,
        human_visual: torch.Tensor,
        object_visual: torch.Tensor,
        adjacency: torch.Tensor,
    ) -> tuple[torch.Tensor, torch.Tensor]:
        n_h, n_o = human_visual.shape[0], object_visual.shape[0]
        if adjacency.shape != (n_h, n_o):
            raise InvalidInputError(
                f"adjacency {tuple(adjacency.shape)} does not match instances ({n_h}, {n_o})"
            )
        if n_o:
            graph_h = human_visual + adjacency @ self.project_object_to_human(object_visual)
        else:
            graph_h = human_visual
        if n_h:
            graph_o = object_visual + adjacency.transpose(0, 1) @ self.project_human_to_object(
                human_visual
            )
        else:
            graph_o = object_visual
        return graph_h, graph_o


def box_layout_vector(human_box, object_box) -> torch.Tensor:
    """20-d raw description of a box pair: boxes, union, offsets, ratios, areas, IoU.

    Accepts (4,) boxes or batched (M, 4) boxes (returning (M, 20)).
    """
    hb = torch.as_tensor(human_box, dtype=torch.float32)
    ob = torch.as_tensor(object_box, dtype=torch.float32)
    squeeze = hb.ndim == 1
    hb = hb.reshape(-1, 4)
    ob = ob.reshape(-1, 4)
    ux1, uy1 = torch.minimum(hb[:, 0], ob[:, 0]), torch.minimum(hb[:, 1], ob[:, 1])
    ux2, uy2 = torch.maximum(hb[:, 2], ob[:, 2]), torch.maximum(hb[:, 3], ob[:, 3])
    hw, hh = (hb[:, 2] - hb[:, 0]).clamp_min(1e-6), (hb[:, 3] - hb[:, 1]).clamp_min(1e-6)
    ow, oh = (ob[:, 2] - ob[:, 0]).clamp_min(1e-6), (ob[:, 3] - ob[:, 1]).clamp_min(1e-6)
    hcx, hcy = (hb[:, 0] + hb[:, 2]) / 2, (hb[:, 1] + hb[:, 3]) / 2
    ocx, ocy = (ob[:, 0] + ob[:, 2]) / 2, (ob[:, 1] + ob[:, 3]) / 2
    ix = (torch.minimum(hb[:, 2], ob[:, 2]) - torch.maximum(hb[:, 0], ob[:, 0])).clamp_min(0.0)
    iy = (torch.minimum(hb[:, 3], ob[:, 3]) - torch.maximum(hb[:, 1], ob[:, 1])).clamp_min(0.0)
    inter = ix * iy
    union_area = hw * hh + ow * oh - inter
    iou = inter / union_area.clamp_min(1e-6)
    out = torch.stack(
        [
            hb[:, 0], hb[:, 1], hb[:, 2], hb[:, 3],
            ob[:, 0], ob[:, 1], ob[:, 2], ob[:, 3],
            ux1, uy1, ux2, uy2,
            ocx - hcx, ocy - hcy,
            torch.log(ow / hw), torch.log(oh / hh),
            iou, hw * hh, ow * oh, inter,
        ],
        dim=-1,
    )
    return out[0] if squeeze else out


class SpatialEncoder(nn.Module):
    """Affine map from the 20-d box layout vector to the 256-d spatial feature."""

    def __init__(self):
        super().__init__()
        self.linear = nn.Linear(SPATIAL_RAW_DIM, VISUAL_DIM)

    def forward(self, human_box, object_box) -> torch.Tensor:
        raw = box_layout_vector(human_box, object_box).to(self.linear.weight.dtype)
        return self.linear(raw)


class SemanticEmbedding(nn.Module):
    """Learnable 300-d embedding table over object class ids."""

    def __init__(self, num_classes: int):
        super().__init__()
        self.table = nn.Embedding(num_classes, SEMANTIC_DIM)

    def forward(self, class_id: int | torch.Tensor) -> torch.Tensor:
        idx = torch.as_tensor(class_id, dtype=torch.long)
        return self.table(idx)


@dataclass
class InstanceFeature:
    kind: str  # "human" | "object"
    box: np.ndarray  # (4,) x1, y1, x2, y2 in normalized coords
    visual: torch.Tensor  # (256,)
    class_id: int
    keypoints: torch.Tensor  # (N, 2)

    def __post_init__(self):
        x1, y1, x2, y2 = [float(v) for v in self.box]
        if not (x1 < x2 and y1 < y2):
            raise InvalidInputError(f"degenerate box {self.box}")
        if self.visual.shape[-1] != VISUAL_DIM:
            raise InvalidInputError(f"visual feature must be {VISUAL_DIM}-d")


@dataclass
class PairCandidate:
    human_idx: int
    object_idx: int
    features: torch.Tensor = None  # (1836,)
    interactiveness: torch.Tensor | float = 0.0
    segments: dict = field(default_factory=dict)

    @property
    def score(self) -> float:
        v = self.interactiveness
        return float(v.detach()) if isinstance(v, torch.Tensor) else float(v)


def pair_features(components: dict[str, torch.Tensor]) -> torch.Tensor:
    """Concatenate the seven pair components in the fixed documented order.

    Missing or None components raise AssemblyError naming the component.
    """
    parts = []
    for name in PAIR_FEATURE_ORDER:
        part = components.get(name)
        if part is None:
            raise AssemblyError(f"pair feature component missing: {name}")
        parts.append(part)
    out = torch.cat(parts, dim=-1)
    if out.shape[-1] != PAIR_FEATURE_DIM:
        raise InvalidInputError(
            f"pair feature is {out.shape[-1]}-d, expected {PAIR_FEATURE_DIM}"
        )
    return out


class InteractivenessHead(nn.Module):
    """Two-hidden-layer MLP from the 1836-d pair feature to a probability."""

    def __init__(self, hidden: tuple[int, int] = (512, 128)):
        super().__init__()
        self.mlp = nn.Sequential(
            nn.Linear(PAIR_FEATURE_DIM, hidden[0]),
            nn.ReLU(inplace=True),
            nn.Linear(hidden[0], hidden[1]),
            nn.ReLU(inplace=True),
            nn.Linear(hidden[1], 1),
        )

    def forward(self, f_pair: torch.Tensor) -> torch.Tensor:
        if f_pair.shape[-1] != PAIR_FEATURE_DIM:
            raise InvalidInputError(
                f"pair feature is {f_pair.shape[-1]}-d, expected {PAIR_FEATURE_DIM}"
            )
        return torch.sigmoid(self.mlp(f_pair)).squeeze(-1)


def select_top_k(pairs: list[PairCandidate], k: int) -> list[PairCandidate]:
    """Top-K pairs by descending interactiveness.

    Ties break on ascending (human_idx, object_idx); fewer than K candidates
    returns them all. Selections are nested across increasing K.
    """
    if k < 1:
        raise InvalidInputError(f"k must be >= 1, got {k}")
    ranked = sorted(pairs, key=lambda p: (-p.score, p.human_idx, p.object_idx))
    return ranked[:k]


# --- focal loss ---------------------------------------------------------------

FOCAL_CLAMP_EPS = 1e-7
_clamp_events = 0


def focal_clamp_events() -> int:
    """Number of predictions clamped away from {0, 1} since the last reset."""
    return _clamp_events


def reset_focal_clamp_events() -> None:
    global _clamp_events
    _clamp_events = 0


def focal_loss(
    pred: torch.Tensor,
    target: torch.Tensor,
    alpha: float | None = 0.25,
    gamma: float = 2.0,
) -> torch.Tensor:
    """Focal loss, summed and normalized by the positive count (minimum 1).

    Elementwise term: -alpha_t * (1 - p_t)^gamma * log(p_t) with
    p_t = pred if target else 1 - pred. ``alpha=None`` disables the class
    balance weight (alpha_t = 1 everywhere); with gamma = 0 that reduces to
    plain cross-entropy. Predictions outside (0, 1) are clamped to
    [1e-7, 1 - 1e-7], counted in a debug counter.
    """
    global _clamp_events
    pred = torch.as_tensor(pred)
    target = torch.as_tensor(target, dtype=pred.dtype)
    outside = int((pred <= 0).sum() + (pred >= 1).sum())
    if outside:
        _clamp_events += outside
    p = pred.clamp(FOCAL_CLAMP_EPS, 1.0 - FOCAL_CLAMP_EPS)
    p_t = p * target + (1 - p) * (1 - target)
    if alpha is None:
        a_t = torch.ones_like(p_t)
    else:
        a_t = alpha * target + (1 - alpha) * (1 - target)
    elems = -a_t * (1 - p_t) ** gamma * torch.log(p_t)
    n_pos = target.sum().clamp_min(1.0)
    return elems.sum() / n_pos
