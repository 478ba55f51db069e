"""Differentiable geometric primitives shared by the learning modules.

All functions are pure, dtype-preserving, and operate on torch tensors so
gradients flow through keypoint coordinates. Coordinates live in the unit
square with pixel centers at ((col + 0.5) / W, (row + 0.5) / H); points are
(x, y) pairs, x along width, y along height.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import torch

from .errors import ContractViolationError, InvalidInputError, InvalidParameterError

_EPS = 1e-12


@dataclass(frozen=True)
class NormalizedPoint:
    """A point in the unit square; coordinates are clamped at construction."""

    x: float
    y: float

    def __post_init__(self):
        for name in ("x", "y"):
            v = float(getattr(self, name))
            if v != v or v in (float("inf"), float("-inf")):
                raise InvalidInputError(f"non-finite coordinate {name}={v!r}")
            object.__setattr__(self, name, min(1.0, max(0.0, v)))

    def as_tensor(self, dtype=torch.float64) -> torch.Tensor:
        return torch.tensor([self.x, self.y], dtype=dtype)


def points_from_tensor(t: torch.Tensor) -> list[NormalizedPoint]:
    """Convert an (N, 2) coordinate tensor to a list of NormalizedPoint."""
    return [NormalizedPoint(float(x), float(y)) for x, y in t.detach().cpu().tolist()]


def keypoint_pairs(n: int) -> list[tuple[int, int]]:
    """Canonical enumeration of unordered keypoint pairs: i < j, lexicographic."""
    return list(itertools.combinations(range(n), 2))


def pixel_center_grid(h: int, w: int, dtype=torch.float64, device=None) -> torch.Tensor:
    """(H, W, 2) grid of normalized pixel-center coordinates, (x, y) per cell."""
    ys = (torch.arange(h, dtype=dtype, device=device) + 0.5) / h
    xs = (torch.arange(w, dtype=dtype, device=device) + 0.5) / w
    gy, gx = torch.meshgrid(ys, xs, indexing="ij")
    return torch.stack([gx, gy], dim=-1)


def spatial_normalize(heat: torch.Tensor) -> torch.Tensor:
    """Softmax over the pixels of each heatmap channel.

    Accepts (..., H, W); returns a nonnegative grid of the same shape whose
    last two dimensions sum to 1. Differentiable everywhere.
    """
    if heat.ndim < 2:
        raise InvalidInputError(f"heatmap must have >= 2 dims, got {heat.ndim}")
    if not torch.isfinite(heat).all():
        raise InvalidInputError("heatmap contains non-finite entries")
    flat = heat.reshape(*heat.shape[:-2], -1)
    return torch.softmax(flat, dim=-1).reshape(heat.shape)


def soft_argmax(grid: torch.Tensor, mass_tol: float = 1e-6) -> torch.Tensor:
    """Expected pixel-center coordinate under a probability grid.

    Accepts (..., H, W) with unit mass over the last two dims; returns
    (..., 2) coordinates (x, y) inside the unit square.
    """
    if grid.ndim < 2:
        raise InvalidInputError(f"grid must have >= 2 dims, got {grid.ndim}")
    h, w = grid.shape[-2], grid.shape[-1]
    mass = grid.reshape(*grid.shape[:-2], -1).sum(dim=-1)
    if (mass - 1.0).abs().max().item() > mass_tol:
        raise ContractViolationError(
            f"probability mass deviates from 1 by {(mass - 1.0).abs().max().item():.3e}"
        )
    coords = pixel_center_grid(h, w, dtype=grid.dtype, device=grid.device)
    x = (grid * coords[..., 0]).reshape(*grid.shape[:-2], -1).sum(dim=-1)
    y = (grid * coords[..., 1]).reshape(*grid.shape[:-2], -1).sum(dim=-1)
    return torch.stack([x, y], dim=-1)


def segment_distance(p: torch.Tensor, a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Distance from point(s) p to the segment [a, b].

    The projection parameter t = (p-a)·(b-a)/|b-a|^2 selects the closest of
    the three regimes: before a (t <= 0), on the segment (0 < t < 1), past b
    (t >= 1). Degenerate segments (a == b) reduce to point distance. Inputs
    broadcast over leading dimensions; the last dimension holds (x, y).
    """
    diff = b - a
    denom = (diff * diff).sum(dim=-1)
    safe = denom.clamp_min(_EPS)
    t = ((p - a) * diff).sum(dim=-1) / safe
    t = torch.where(denom > _EPS, t, torch.zeros_like(t))
    t = t.clamp(0.0, 1.0)
    closest = a + t.unsqueeze(-1) * diff
    d2 = ((p - closest) ** 2).sum(dim=-1)
    return torch.sqrt(d2.clamp_min(_EPS * _EPS)) if d2.requires_grad else torch.sqrt(d2)


def segment_distance_sq(p: torch.Tensor, a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Squared segment distance; preferred in gradients (smooth at d = 0)."""
    diff = b - a
    denom = (diff * diff).sum(dim=-1)
    safe = denom.clamp_min(_EPS)
    t = ((p - a) * diff).sum(dim=-1) / safe
    t = torch.where(denom > _EPS, t, torch.zeros_like(t))
    t = t.clamp(0.0, 1.0)
    closest = a + t.unsqueeze(-1) * diff
    return ((p - closest) ** 2).sum(dim=-1)


def render_edge_map(
    a: torch.Tensor,
    b: torch.Tensor,
    sigma2: float,
    h: int,
    w: int,
) -> torch.Tensor:
    """Rasterize the segment [a, b] as exp(-d^2 / sigma2) over pixel centers.

    Pixels whose centers lie on the segment get exactly 1; values decay with
    squared distance. Differentiable w.r.t. both endpoints.
    """
    if sigma2 <= 0:
        raise InvalidParameterError(f"sigma2 must be positive, got {sigma2}")
    coords = pixel_center_grid(h, w, dtype=a.dtype, device=a.device)
    d2 = segment_distance_sq(coords, a, b)
    return torch.exp(-d2 / sigma2)


def render_edge_maps_batch(
    endpoints_a: torch.Tensor,
    endpoints_b: torch.Tensor,
    sigma2: float,
    h: int,
    w: int,
) -> torch.Tensor:
    """Vectorized edge rasterization: (..., 2) endpoint tensors -> (..., H, W)."""
    if sigma2 <= 0:
        raise InvalidParameterError(f"sigma2 must be positive, got {sigma2}")
    coords = pixel_center_grid(h, w, dtype=endpoints_a.dtype, device=endpoints_a.device)
    a = endpoints_a.unsqueeze(-2).unsqueeze(-2)
    b = endpoints_b.unsqueeze(-2).unsqueeze(-2)
    d2 = segment_distance_sq(coords, a, b)
    return torch.exp(-d2 / sigma2)


def weighted_edge_logits(
    a: torch.Tensor,
    b: torch.Tensor,
    log_weights: torch.Tensor,
    sigma2: float,
    h: int,
    w: int,
) -> torch.Tensor:
    """log(weight) - d^2/sigma2 per pair and pixel, scalarized for throughput.

    exp(max over pairs) of this equals compose_edge_maps over rendered maps
    (exactly in real arithmetic); the training loop maximizes in log space so
    only one exp per pixel is needed. a, b: (B, P, 2); log_weights: (B, P);
    returns (B, P, H, W).
    """
    dtype = a.dtype
    xs = ((torch.arange(w, dtype=dtype, device=a.device) + 0.5) / w).view(1, 1, 1, w)
    ys = ((torch.arange(h, dtype=dtype, device=a.device) + 0.5) / h).view(1, 1, h, 1)
    ax = a[..., 0].unsqueeze(-1).unsqueeze(-1)
    ay = a[..., 1].unsqueeze(-1).unsqueeze(-1)
    ex = b[..., 0].unsqueeze(-1).unsqueeze(-1) - ax
    ey = b[..., 1].unsqueeze(-1).unsqueeze(-1) - ay
    seg_len2 = (ex * ex + ey * ey).clamp_min(_EPS)
    dx = xs - ax
    dy = ys - ay
    t = ((dx * ex + dy * ey) / seg_len2).clamp(0.0, 1.0)
    rx = dx - t * ex
    ry = dy - t * ey
    return log_weights.unsqueeze(-1).unsqueeze(-1) - (rx * rx + ry * ry) / sigma2


def compose_edge_maps(maps: torch.Tensor, weights: torch.Tensor) -> torch.Tensor:
    """Weighted max composition: out(p) = max_k weights[k] * maps[k, p].

    ``maps`` is (K, H, W) (or (..., K, H, W)), one map per unordered keypoint
    pair; ``weights`` holds the matching effective edge weights in (0, 1).
    Monotone in every weight; output stays in [0, 1].
    """
    if maps.ndim < 3:
        raise InvalidInputError(f"expected (..., K, H, W) maps, got shape {tuple(maps.shape)}")
    if weights.shape != maps.shape[:-2]:
        raise InvalidInputError(
            f"weights shape {tuple(weights.shape)} does not match maps {tuple(maps.shape[:-2])}"
        )
    weighted = maps * weights.unsqueeze(-1).unsqueeze(-1)
    return weighted.max(dim=-3).values


class EdgeWeights(torch.nn.Module):
    """Learnable per-pair edge weights for an N-keypoint graph.

    Raw parameters are unconstrained reals (upper triangle used); effective
    weights pass through a logistic transform into (0, 1) and are symmetric
    by construction.
    """

    def __init__(self, n_keypoints: int, init: float = 0.0):
        super().__init__()
        self.n_keypoints = n_keypoints
        self.raw = torch.nn.Parameter(torch.full((n_keypoints, n_keypoints), float(init)))

    def effective(self) -> torch.Tensor:
        """(N, N) symmetric matrix of effective weights in (0, 1)."""
        upper = torch.triu(self.raw, diagonal=1)
        sym = upper + upper.transpose(-1, -2)
        return torch.sigmoid(sym)

    def pair_weights(self) -> torch.Tensor:
        """Effective weights in canonical pair order (i < j lexicographic)."""
        idx = torch.triu_indices(self.n_keypoints, self.n_keypoints, offset=1)
        return torch.sigmoid(self.raw[idx[0], idx[1]])


def pair_weights_from_raw(raw: torch.Tensor) -> torch.Tensor:
    """Effective pair weights from raw (..., N, N) tensors, canonical order."""
    n = raw.shape[-1]
    idx = torch.triu_indices(n, n, offset=1, device=raw.device)
    return torch.sigmoid(raw[..., idx[0], idx[1]])
