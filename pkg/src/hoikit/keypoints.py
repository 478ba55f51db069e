"""Self-supervised keypoint learning on binary masks.

A convolutional encoder maps a mask to N heatmaps decoded into keypoints by
spatial softmax + soft-argmax. Keypoint pairs are rasterized into an edge map
weighted by per-cluster learnable edge weights; a decoder reconstructs the
mask from the channel concatenation of (alpha * masked mask, edge map). The
whole stack trains end-to-end with an L1 + feature-space reconstruction loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from . import geometry
from .clustering import ClusterBank, cluster_fit
from .errors import DivergenceError, InvalidInputError
from .masks import MaskSample, mask_out, require_valid_ratio

# The loss-feature extractor is frozen from this constant so loss values are
# comparable across runs and configs.
PERCEPTUAL_SEED = 7771

ALPHA_FLOOR = 1e-4


class _Hourglass(nn.Module):
    """Four stride-2 stages mirrored by four upsampling stages with skip links.

    The skips keep full-resolution structure flowing to the output; without
    them the 16x bottleneck washes the logits spatially flat and soft-argmax
    collapses to the image center.
    """

    def __init__(self, in_channels: int, out_channels: int, c: int):
        super().__init__()
        self.input_conv = nn.Conv2d(in_channels, c, 3, stride=2, padding=1)
        self.d2 = nn.Conv2d(c, 2 * c, 3, stride=2, padding=1)
        self.d3 = nn.Conv2d(2 * c, 4 * c, 3, stride=2, padding=1)
        self.d4 = nn.Conv2d(4 * c, 8 * c, 3, stride=2, padding=1)
        self.u1 = nn.Conv2d(8 * c + 4 * c, 4 * c, 3, padding=1)
        self.u2 = nn.Conv2d(4 * c + 2 * c, 2 * c, 3, padding=1)
        self.u3 = nn.Conv2d(2 * c + c, c, 3, padding=1)
        self.u4 = nn.Conv2d(c, c, 3, padding=1)
        self.head = nn.Conv2d(c, out_channels, 1)
        self.act = nn.ReLU(inplace=True)
        self.upsample = nn.Upsample(scale_factor=2, mode="nearest")

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        s1 = self.act(self.input_conv(x))
        s2 = self.act(self.d2(s1))
        s3 = self.act(self.d3(s2))
        s4 = self.act(self.d4(s3))
        u = self.act(self.u1(torch.cat([self.upsample(s4), s3], dim=1)))
        u = self.act(self.u2(torch.cat([self.upsample(u), s2], dim=1)))
        u = self.act(self.u3(torch.cat([self.upsample(u), s1], dim=1)))
        u = self.act(self.u4(self.upsample(u)))
        return self.head(u)


class MaskEncoder(nn.Module):
    """Mask -> N heatmaps via the hourglass.

    Raw conv outputs are far too flat for a 4096-way spatial softmax (std
    ~1e-2), which parks every soft-argmax at the image center and starves the
    encoder of gradient. A learnable output scale (softmax temperature)
    sharpens the heatmaps from the start.
    """

    LOGIT_SCALE_INIT = 100.0

    def __init__(self, n_keypoints: int, base_channels: int = 16):
        super().__init__()
        self.net = _Hourglass(1, n_keypoints, base_channels)
        self.logit_scale = nn.Parameter(torch.tensor(self.LOGIT_SCALE_INIT))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x) * self.logit_scale


class MaskDecoder(nn.Module):
    """(alpha * masked mask || edge map) -> reconstructed mask in [0, 1]."""

    def __init__(self, base_channels: int = 16):
        super().__init__()
        self.net = _Hourglass(2, 1, base_channels)

    @property
    def input_conv(self) -> nn.Conv2d:
        return self.net.input_conv

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(self.net(x))


class KeypointModel(nn.Module):
    """Encoder + decoder + the learnable channel-balance scalar alpha."""

    def __init__(self, n_keypoints: int, image_size: int, base_channels: int = 16):
        super().__init__()
        if not 4 <= n_keypoints <= 48:
            raise InvalidInputError(f"n_keypoints must be in [4, 48], got {n_keypoints}")
        if image_size % 16:
            raise InvalidInputError(f"image_size must be divisible by 16, got {image_size}")
        self.n_keypoints = n_keypoints
        self.image_size = image_size
        self.base_channels = base_channels
        self.encoder = MaskEncoder(n_keypoints, base_channels)
        self.decoder = MaskDecoder(base_channels)
        self.alpha = nn.Parameter(torch.tensor(1.0))

    def reproject_alpha(self) -> None:
        """Keep alpha strictly positive after optimizer updates."""
        with torch.no_grad():
            if self.alpha.item() <= 0:
                self.alpha.fill_(ALPHA_FLOOR)


class PerceptualExtractor(nn.Module):
    """Fixed three-stage convolutional feature extractor for the loss.

    Untrained: weights are drawn once from a frozen seed and never updated.
    """

    def __init__(self, seed: int = PERCEPTUAL_SEED):
        super().__init__()
        self.net = nn.Sequential(
            nn.Conv2d(1, 8, 3, stride=2, padding=1),
            nn.ReLU(inplace=True),
            nn.Conv2d(8, 16, 3, stride=2, padding=1),
            nn.ReLU(inplace=True),
            nn.Conv2d(16, 32, 3, stride=2, padding=1),
        )
        g = torch.Generator().manual_seed(seed)
        with torch.no_grad():
            for p in self.parameters():
                fan_in = p[0].numel() if p.ndim > 1 else p.numel()
                p.normal_(0.0, math.sqrt(2.0 / fan_in), generator=g)
        for p in self.parameters():
            p.requires_grad_(False)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x)


def _as_batch(grid: torch.Tensor) -> torch.Tensor:
    if grid.ndim == 2:
        return grid[None, None]
    if grid.ndim == 3:
        return grid[:, None]
    return grid


def encode_keypoints(grid: torch.Tensor, model: KeypointModel) -> tuple[torch.Tensor, torch.Tensor]:
    """Run the encoder and decode keypoints.

    Returns (heatmaps (B, N, H, W), keypoints (B, N, 2)); keypoints are the
    soft-argmax of the spatially normalized heatmaps, inside the unit square.
    """
    x = _as_batch(grid)
    if x.shape[-2:] != (model.image_size, model.image_size):
        raise InvalidInputError(
            f"grid is {tuple(x.shape[-2:])}, model expects {model.image_size}x{model.image_size}"
        )
    heatmaps = model.encoder(x)
    probs = geometry.spatial_normalize(heatmaps)
    # float32 softmax over H*W pixels rounds slightly past the float64 gate
    mass_tol = 1e-6 if probs.dtype == torch.float64 else 1e-4
    keypoints = geometry.soft_argmax(probs, mass_tol=mass_tol)
    return heatmaps, keypoints


_compiled_edge_logits = None


def _edge_logits_kernel():
    """Fused edge-logit kernel, compiled when the backend allows it.

    Set HOIKIT_NO_COMPILE=1 to force the eager path; compiled and eager
    kernels agree to float tolerance and both are deterministic per run.
    """
    global _compiled_edge_logits
    if _compiled_edge_logits is None:
        import os

        if os.environ.get("HOIKIT_NO_COMPILE"):
            _compiled_edge_logits = geometry.weighted_edge_logits
        else:
            try:
                _compiled_edge_logits = torch.compile(
                    geometry.weighted_edge_logits, dynamic=False
                )
            except Exception:
                _compiled_edge_logits = geometry.weighted_edge_logits
    return _compiled_edge_logits


def render_cluster_edge_maps(
    keypoints: torch.Tensor,
    cluster_ids: np.ndarray | torch.Tensor,
    bank: ClusterBank,
    sigma2: float,
    h: int,
    w: int,
    fused: bool = False,
) -> torch.Tensor:
    """Edge maps for a batch of keypoint sets using each sample's cluster weights.

    keypoints: (B, N, 2) -> (B, H, W) weighted-max composition over all pairs.
    The fused path maximizes in log space with a compiled kernel (training
    throughput); the default path composes the contract-level ops exactly.
    """
    n = keypoints.shape[-2]
    idx = torch.triu_indices(n, n, offset=1, device=keypoints.device)
    a = keypoints[:, idx[0], :]
    b = keypoints[:, idx[1], :]
    cl = torch.as_tensor(np.asarray(cluster_ids), dtype=torch.long, device=keypoints.device)
    raw = bank.edge_raw[cl]  # (B, N, N)
    if fused:
        log_w = torch.nn.functional.logsigmoid(raw[:, idx[0], idx[1]])
        logits = _edge_logits_kernel()(a, b, log_w, sigma2, h, w)
        return torch.exp(logits.max(dim=1).values)
    maps = geometry.render_edge_maps_batch(a, b, sigma2, h, w)  # (B, P, H, W)
    weights = torch.sigmoid(raw[:, idx[0], idx[1]])  # (B, P)
    return geometry.compose_edge_maps(maps, weights)


def reconstruct(b_masked: torch.Tensor, edge_map: torch.Tensor, model: KeypointModel) -> torch.Tensor:
    """Decode the 2-channel concatenation (alpha * masked mask, edge map)."""
    bm = _as_batch(b_masked)
    em = _as_batch(edge_map)
    if bm.shape[-2:] != em.shape[-2:]:
        raise InvalidInputError(
            f"masked grid {tuple(bm.shape[-2:])} and edge map {tuple(em.shape[-2:])} disagree"
        )
    stacked = torch.cat([model.alpha * bm, em], dim=1)
    return model.decoder(stacked)


def reconstruction_loss(
    b: torch.Tensor,
    b_rec: torch.Tensor,
    use_perceptual: bool = True,
    extractor: PerceptualExtractor | None = None,
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Mean absolute difference plus (optionally) squared feature distance.

    Returns (total, l1_term, perceptual_term) as scalar tensors.
    """
    if b.shape != b_rec.shape:
        raise InvalidInputError(f"shape mismatch {tuple(b.shape)} vs {tuple(b_rec.shape)}")
    l1 = (b - b_rec).abs().mean()
    if use_perceptual:
        if extractor is None:
            extractor = PerceptualExtractor()
        fa = extractor(_as_batch(b))
        fb = extractor(_as_batch(b_rec))
        perc = ((fa - fb) ** 2).mean()
    else:
        perc = torch.zeros((), dtype=l1.dtype)
    return l1 + perc, l1, perc


@dataclass
class KeypointTrainConfig:
    n_keypoints: int = 32
    sigma2: float = 5e-5
    iters: int = 20000
    lr: float = 1e-4
    batch: int = 64
    mask_ratio: float = 0.9
    mask_patch: int = 8
    seed: int = 0
    n_clusters: int = 100
    image_size: int = 64
    base_channels: int = 16
    perceptual: bool = True
    log_every: int = 1


@dataclass
class LossRecord:
    iteration: int
    l1: float
    perceptual: float
    total: float


@dataclass
class KeypointTrainResult:
    model: KeypointModel
    bank: ClusterBank
    records: list[LossRecord] = field(default_factory=list)


def batch_mask_patterns(
    batch: int, h: int, w: int, ratio: float, patch: int, rng: np.random.Generator
) -> np.ndarray:
    ones = np.ones((h, w), dtype=np.float32)
    return np.stack([mask_out(ones, ratio, patch, rng) for _ in range(batch)])


def train_keypoint_model(
    samples: list[MaskSample],
    cfg: KeypointTrainConfig,
    bank: ClusterBank | None = None,
) -> KeypointTrainResult:
    """Train encoder/decoder/edge-weights/alpha on a mask corpus.

    Single-threaded-deterministic per seed. Edge weights of clusters absent
    from a batch are never updated (optimizer momentum is masked out by
    restoring their rows after each step). Raises DivergenceError with a
    diagnostic snapshot when the loss goes non-finite.
    """
    torch.manual_seed(cfg.seed)
    rng = np.random.default_rng(cfg.seed)

    model = KeypointModel(cfg.n_keypoints, cfg.image_size, cfg.base_channels)
    if bank is None:
        bank = cluster_fit(samples, cfg.n_clusters, cfg.n_keypoints, seed=cfg.seed)
    labels = bank.assign_many(samples)
    grids = torch.from_numpy(np.stack([s.grid for s in samples]))[:, None]  # (M,1,H,W)

    extractor = PerceptualExtractor() if cfg.perceptual else None
    opt = torch.optim.Adam(list(model.parameters()) + [bank.edge_raw], lr=cfg.lr)

    records: list[LossRecord] = []
    m = len(samples)
    for it in range(cfg.iters):
        idx = rng.integers(0, m, size=cfg.batch)
        b = grids[idx]
        cl = labels[idx]

        _, kps = encode_keypoints(b, model)
        edge = render_cluster_edge_maps(
            kps, cl, bank, cfg.sigma2, cfg.image_size, cfg.image_size, fused=True
        )
        patterns = torch.from_numpy(
            batch_mask_patterns(len(idx), cfg.image_size, cfg.image_size, cfg.mask_ratio, cfg.mask_patch, rng)
        )
        b_masked = b * patterns[:, None]
        rec = reconstruct(b_masked[:, 0], edge, model)
        total, l1, perc = reconstruction_loss(b, rec, cfg.perceptual, extractor)

        if not torch.isfinite(total):
            raise DivergenceError(
                f"non-finite loss at iteration {it}",
                snapshot={
                    "iteration": it,
                    "l1": float(l1),
                    "perceptual": float(perc),
                    "alpha": float(model.alpha),
                    "edge_raw_absmax": float(bank.edge_raw.detach().abs().max()),
                },
            )

        present = np.unique(cl)
        absent = np.setdiff1d(np.arange(bank.n_clusters), present)
        frozen_rows = bank.edge_raw.detach()[absent].clone()

        opt.zero_grad()
        total.backward()
        opt.step()
        model.reproject_alpha()
        with torch.no_grad():
            bank.edge_raw[absent] = frozen_rows

        if it % cfg.log_every == 0 or it == cfg.iters - 1:
            records.append(
                LossRecord(it, float(l1.detach()), float(perc.detach()), float(total.detach()))
            )

    return KeypointTrainResult(model=model, bank=bank, records=records)


def smoothed_loss_bounds(records: list[LossRecord], window: int = 50) -> tuple[float, float]:
    """(mean of first `window` totals, mean of last `window` totals)."""
    totals = [r.total for r in records]
    w = min(window, len(totals))
    return float(np.mean(totals[:w])), float(np.mean(totals[-w:]))


def detect_keypoints(
    sample: MaskSample, model: KeypointModel, bank: ClusterBank
) -> tuple[np.ndarray, int]:
    """Cluster-assign then encode; returns ((N, 2) coordinates, cluster id).

    Masks below the foreground-ratio floor are rejected.
    """
    require_valid_ratio(sample)
    cluster_id = bank.assign(sample)
    with torch.no_grad():
        _, kps = encode_keypoints(torch.from_numpy(sample.grid), model)
    return kps[0].numpy(), cluster_id


# --- persistence -------------------------------------------------------------

from .checkpoints import (  # noqa: E402
    load_state_dict_arrays,
    read_checkpoint,
    state_dict_arrays,
    write_checkpoint,
)

KEYPOINT_CHECKPOINT_KIND = "hoikit-keypoints"


def save_keypoint_checkpoint(path, model: KeypointModel, bank: ClusterBank, config: dict) -> None:
    arrays = {}
    arrays.update(state_dict_arrays(model.encoder, "encoder"))
    arrays.update(state_dict_arrays(model.decoder, "decoder"))
    arrays["alpha"] = model.alpha.detach().numpy().reshape(1)
    arrays["bank.centroids"] = bank.centroids.numpy()
    arrays["bank.edge_raw"] = bank.edge_raw.detach().numpy()
    meta = dict(config)
    meta.update(
        n_keypoints=model.n_keypoints,
        image_size=model.image_size,
        base_channels=model.base_channels,
        n_clusters=bank.n_clusters,
    )
    write_checkpoint(path, KEYPOINT_CHECKPOINT_KIND, meta, arrays)


def load_keypoint_checkpoint(path) -> tuple[KeypointModel, ClusterBank, dict]:
    config, arrays = read_checkpoint(path, expect_kind=KEYPOINT_CHECKPOINT_KIND)
    model = KeypointModel(config["n_keypoints"], config["image_size"], config["base_channels"])
    load_state_dict_arrays(model.encoder, arrays, "encoder")
    load_state_dict_arrays(model.decoder, arrays, "decoder")
    with torch.no_grad():
        model.alpha.copy_(torch.from_numpy(arrays["alpha"]).reshape(()))
    bank = ClusterBank(arrays["bank.centroids"], n_keypoints=config["n_keypoints"])
    with torch.no_grad():
        bank.edge_raw.copy_(torch.from_numpy(arrays["bank.edge_raw"]))
    return model, bank, config
