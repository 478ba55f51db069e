"""Part-level attention over keypoint-centered feature patches.

For one human-object pair, every keypoint contributes a token: a bilinear
RoI pool of the backbone feature map around the keypoint, projected to 128-d
and tagged with a sinusoidal positional encoding of the keypoint location.
Single-head self-attention over the 2N tokens produces the attended part
features concatenated into the interaction query.
"""

from __future__ import annotations

import math

import torch
from torch import nn

from .errors import AssemblyError, InvalidInputError, InvalidParameterError

TOKEN_DIM = 128


def patch_region(keypoint, box, gamma: float) -> torch.Tensor:
    """Region centered on a keypoint, sized gamma * instance box, clamped to the image."""
    if not 0.0 < gamma <= 1.0:
        raise InvalidParameterError(f"gamma must be in (0, 1], got {gamma}")
    if isinstance(keypoint, torch.Tensor):
        k = keypoint
    elif hasattr(keypoint, "x"):
        k = torch.tensor([keypoint.x, keypoint.y], dtype=torch.float64)
    else:
        k = torch.as_tensor(keypoint, dtype=torch.float64)
    b = torch.as_tensor(box, dtype=k.dtype)
    bw, bh = b[2] - b[0], b[3] - b[1]
    if float(bw) <= 0 or float(bh) <= 0:
        raise InvalidInputError(f"degenerate instance box {box}")
    half_w, half_h = gamma * bw / 2, gamma * bh / 2
    region = torch.stack([k[0] - half_w, k[1] - half_h, k[0] + half_w, k[1] + half_h])
    return region.clamp(0.0, 1.0)


def patch_regions(keypoints: torch.Tensor, boxes: torch.Tensor, gamma: float) -> torch.Tensor:
    """Vectorized patch_region: (M, 2) keypoints + (M, 4) boxes -> (M, 4) regions."""
    if not 0.0 < gamma <= 1.0:
        raise InvalidParameterError(f"gamma must be in (0, 1], got {gamma}")
    half_w = gamma * (boxes[:, 2] - boxes[:, 0]) / 2
    half_h = gamma * (boxes[:, 3] - boxes[:, 1]) / 2
    region = torch.stack(
        [
            keypoints[:, 0] - half_w,
            keypoints[:, 1] - half_h,
            keypoints[:, 0] + half_w,
            keypoints[:, 1] + half_h,
        ],
        dim=-1,
    )
    return region.clamp(0.0, 1.0)


def pool_patches(feature_map: torch.Tensor, regions: torch.Tensor, resolution: int) -> torch.Tensor:
    """Bilinearly sample a batch of regions into (M, C, R, R) blocks at cell centers.

    Samples land at the center of each of the R x R cells of every region;
    feature-map pixel centers follow the (col + 0.5) / W convention and
    out-of-range samples clamp to the border. Differentiable w.r.t. the
    feature map and the regions. Degenerate (zero-area) regions must be
    filtered by the caller; see pool_patch for the flagged single-region API.
    """
    if feature_map.ndim != 3:
        raise InvalidInputError(f"feature map must be (C, H, W), got {tuple(feature_map.shape)}")
    c, h, w = feature_map.shape
    regions = regions.reshape(-1, 4).to(feature_map.dtype)
    m = regions.shape[0]
    steps = (
        torch.arange(resolution, dtype=feature_map.dtype, device=feature_map.device) + 0.5
    ) / resolution
    xs = regions[:, 0:1] + steps * (regions[:, 2:3] - regions[:, 0:1])  # (M, R)
    ys = regions[:, 1:2] + steps * (regions[:, 3:4] - regions[:, 1:2])
    fx = (xs * w - 0.5).clamp(0.0, w - 1.0)
    fy = (ys * h - 0.5).clamp(0.0, h - 1.0)
    x0 = fx.floor().clamp(0.0, max(w - 2, 0))
    y0 = fy.floor().clamp(0.0, max(h - 2, 0))
    tx = (fx - x0).clamp(0.0, 1.0)
    ty = (fy - y0).clamp(0.0, 1.0)
    x0l, y0l = x0.long(), y0.long()
    x1l = (x0l + 1).clamp(max=w - 1)
    y1l = (y0l + 1).clamp(max=h - 1)
    flat = feature_map.reshape(c, h * w)  # gather on flattened spatial dims

    def gather(yi, xi):
        # yi: (M, R) rows, xi: (M, R) cols -> (M, C, R, R)
        lin = (yi.unsqueeze(-1) * w + xi.unsqueeze(-2)).reshape(m, -1)  # (M, R*R)
        return flat[:, lin].permute(1, 0, 2).reshape(m, c, resolution, resolution)

    f00 = gather(y0l, x0l)
    f01 = gather(y0l, x1l)
    f10 = gather(y1l, x0l)
    f11 = gather(y1l, x1l)
    wx = tx.view(m, 1, 1, resolution)
    wy = ty.view(m, 1, resolution, 1)
    top = f00 * (1 - wx) + f01 * wx
    bot = f10 * (1 - wx) + f11 * wx
    return top * (1 - wy) + bot * wy


def pool_patch(
    feature_map: torch.Tensor, region: torch.Tensor, resolution: int
) -> tuple[torch.Tensor, bool]:
    """Single-region pooling; an empty region yields a zero block flagged invalid."""
    c = feature_map.shape[0]
    region = torch.as_tensor(region) if not isinstance(region, torch.Tensor) else region
    x1, y1, x2, y2 = region
    if float(x2 - x1) <= 0 or float(y2 - y1) <= 0:
        return torch.zeros(c, resolution, resolution, dtype=feature_map.dtype), False
    return pool_patches(feature_map, region.reshape(1, 4), resolution)[0], True


def area_pool_patches(
    feature_map: torch.Tensor, regions: torch.Tensor, resolution: int, samples: int = 4
) -> torch.Tensor:
    """Anti-aliased pooling: average a samples x samples bilinear grid per cell.

    Instance- and union-box summaries cover large regions; point sampling at
    R x R centers aliases away thin structure, so each output cell averages a
    dense sample grid instead. Keypoint patches keep the exact cell-center
    contract of pool_patches.
    """
    dense = pool_patches(feature_map, regions, resolution * samples)
    return torch.nn.functional.avg_pool2d(dense, samples)


def positional_encoding(point: torch.Tensor) -> torch.Tensor:
    """Fixed 128-d sinusoidal encoding of a unit-square point: 64 dims per axis.

    Standard frequency ladder with the coordinate scaled by 2*pi; every
    component lies in [-1, 1] and points one grid cell apart encode
    distinctly.
    """
    p = torch.as_tensor(point, dtype=torch.float32) if not isinstance(point, torch.Tensor) else point
    half = TOKEN_DIM // 2  # 64 per axis
    n_freq = half // 2
    k = torch.arange(n_freq, dtype=p.dtype, device=p.device)
    freqs = (2 * math.pi) / (10000.0 ** (k / n_freq))
    out = []
    for axis in range(2):
        ang = p[..., axis : axis + 1] * freqs
        out.append(torch.sin(ang))
        out.append(torch.cos(ang))
    return torch.cat(out, dim=-1)


class PatchProjector(nn.Module):
    """Flatten a pooled (C, R, R) block and map it to the 128-d token space."""

    def __init__(self, channels: int, resolution: int):
        super().__init__()
        self.linear = nn.Linear(channels * resolution * resolution, TOKEN_DIM)

    def forward(self, block: torch.Tensor) -> torch.Tensor:
        return self.linear(block.reshape(*block.shape[:-3], -1))


class PatchSelfAttention(nn.Module):
    """Scaled dot-product self-attention over patch tokens (single head by default)."""

    def __init__(self, dim: int = TOKEN_DIM, heads: int = 1):
        super().__init__()
        if dim % heads:
            raise InvalidParameterError(f"dim {dim} not divisible by heads {heads}")
        self.dim = dim
        self.heads = heads
        self.w_q = nn.Linear(dim, dim)
        self.w_k = nn.Linear(dim, dim)
        self.w_v = nn.Linear(dim, dim)

    def forward(
        self, tokens: torch.Tensor, keep: torch.Tensor | None = None
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """tokens: (..., T, dim) -> (attended (..., T, dim), weights (..., heads, T, T)).

        ``keep`` is an optional boolean mask over the T axis; dropped tokens
        neither attend nor are attended to, and their outputs are zero.
        """
        if tokens.shape[-1] != self.dim:
            raise InvalidInputError(f"token dim {tokens.shape[-1]} != {self.dim}")
        lead = tokens.shape[:-2]
        t = tokens.shape[-2]
        if keep is not None and not bool(keep.any()):
            return (
                torch.zeros_like(tokens),
                torch.zeros(*lead, self.heads, t, t, dtype=tokens.dtype),
            )
        d_head = self.dim // self.heads

        def split(x):
            return x.reshape(*lead, t, self.heads, d_head).transpose(-3, -2)

        q, k, v = split(self.w_q(tokens)), split(self.w_k(tokens)), split(self.w_v(tokens))
        scores = q @ k.transpose(-1, -2) / math.sqrt(d_head)
        if keep is not None:
            scores = scores.masked_fill(~keep.view(1, 1, t), float("-inf"))
        weights = torch.softmax(scores, dim=-1)
        out = (weights @ v).transpose(-3, -2).reshape(*lead, t, self.dim)
        if keep is not None:
            weights = weights * keep.view(1, t, 1)
            out = out * keep.view(t, 1)
        return out, weights


class QueryProjection(nn.Module):
    """Project (pair feature || concatenated attended patches) to the decoder width."""

    def __init__(self, pair_dim: int, n_keypoints: int, out_dim: int = 256):
        super().__init__()
        self.pair_dim = pair_dim
        self.n_tokens = 2 * n_keypoints
        self.linear = nn.Linear(pair_dim + self.n_tokens * TOKEN_DIM, out_dim)

    def raw_query(self, f_pair: torch.Tensor, attended: torch.Tensor) -> torch.Tensor:
        """Concatenate in the fixed order: pair feature, then tokens (humans first)."""
        if attended is None or attended.shape[0] != self.n_tokens:
            raise AssemblyError(
                f"expected {self.n_tokens} attended tokens, got "
                f"{None if attended is None else attended.shape[0]}"
            )
        return torch.cat([f_pair, attended.reshape(-1)], dim=-1)

    def forward(self, f_pair: torch.Tensor, attended: torch.Tensor) -> torch.Tensor:
        return self.linear(self.raw_query(f_pair, attended))
