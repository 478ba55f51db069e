"""Binary mask samples: ingestion from image files, block masking, synthesis.

Masks are single-channel grids in {0, 1}. Samples whose foreground covers
less than 20% of the grid are rejected at ingestion: tiny masks do not carry
enough pixels to describe a shape.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import IngestionError, InvalidParameterError, RejectedInputError

log = logging.getLogger(__name__)

MIN_FOREGROUND_RATIO = 0.2
FOREGROUND_THRESHOLD = 128  # 8-bit grayscale; value >= 128 is foreground


@dataclass
class MaskSample:
    grid: np.ndarray  # (H, W) float32 in {0, 1}
    source_id: str
    foreground_ratio: float

    @classmethod
    def from_grid(cls, grid: np.ndarray, source_id: str) -> "MaskSample":
        grid = (np.asarray(grid) > 0.5).astype(np.float32)
        ratio = float(grid.sum() / grid.size)
        return cls(grid=grid, source_id=source_id, foreground_ratio=ratio)


def load_mask_file(path: str | Path, size: tuple[int, int]) -> MaskSample:
    """Read one 8-bit grayscale image as a binary mask, resized nearest-neighbor."""
    h, w = size
    with Image.open(path) as img:
        gray = img.convert("L").resize((w, h), resample=Image.NEAREST)
    grid = (np.asarray(gray) >= FOREGROUND_THRESHOLD).astype(np.float32)
    return MaskSample.from_grid(grid, source_id=Path(path).name)


def ingest_masks(directory: str | Path, size: tuple[int, int]) -> list[MaskSample]:
    """Load every readable mask in a directory, dropping low-foreground samples.

    Unreadable files are skipped with a warning; zero retained samples is a
    fatal ingestion error.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise IngestionError(f"mask directory does not exist: {directory}")
    samples = []
    for path in sorted(directory.iterdir()):
        if not path.is_file():
            continue
        try:
            sample = load_mask_file(path, size)
        except (UnidentifiedImageError, OSError, ValueError) as exc:
            log.warning("skipping unreadable mask file %s: %s", path, exc)
            continue
        if sample.foreground_ratio < MIN_FOREGROUND_RATIO:
            continue
        samples.append(sample)
    if not samples:
        raise IngestionError(f"no usable mask samples in {directory}")
    return samples


def require_valid_ratio(sample: MaskSample) -> None:
    if sample.foreground_ratio < MIN_FOREGROUND_RATIO:
        raise RejectedInputError(
            f"mask {sample.source_id!r} rejected: foreground ratio "
            f"{sample.foreground_ratio:.3f} < {MIN_FOREGROUND_RATIO}"
        )


def mask_out(grid: np.ndarray, ratio: float, patch: int, rng: np.random.Generator) -> np.ndarray:
    """Zero out ceil(ratio * #patches) patch-aligned blocks of the grid.

    Deterministic given the generator state; retained pixels are unmodified.
    """
    if not 0.0 <= ratio <= 1.0:
        raise InvalidParameterError(f"mask ratio must be in [0, 1], got {ratio}")
    h, w = grid.shape
    if h % patch or w % patch:
        raise InvalidParameterError(f"patch {patch} does not divide grid dims {h}x{w}")
    ph, pw = h // patch, w // patch
    n_blocks = ph * pw
    k = math.ceil(ratio * n_blocks)
    out = grid.copy()
    if k == 0:
        return out
    chosen = rng.permutation(n_blocks)[:k]
    rows, cols = np.divmod(chosen, pw)
    for r, c in zip(rows, cols):
        out[r * patch : (r + 1) * patch, c * patch : (c + 1) * patch] = 0
    return out


# --- synthetic shape corpus -------------------------------------------------
#
# The families mirror what the detector sees as instance crops: convex blobs,
# boxy and concave objects, and articulated person-like figures.

SHAPE_FAMILIES = (
    "ellipse",
    "rectangle",
    "superellipse",
    "blob",
    "triangle",
    "ring",
    "figure",
)


def _coord_grids(size: int) -> tuple[np.ndarray, np.ndarray]:
    c = (np.arange(size) + 0.5) / size
    gy, gx = np.meshgrid(c, c, indexing="ij")
    return gx, gy


def _rotate(gx, gy, cx, cy, theta):
    dx, dy = gx - cx, gy - cy
    ct, st = math.cos(theta), math.sin(theta)
    return dx * ct + dy * st, -dx * st + dy * ct


def _segment_mask(gx, gy, p0, p1, thickness):
    dx, dy = p1[0] - p0[0], p1[1] - p0[1]
    denom = dx * dx + dy * dy
    px, py = gx - p0[0], gy - p0[1]
    if denom < 1e-12:
        d2 = px * px + py * py
    else:
        t = np.clip((px * dx + py * dy) / denom, 0.0, 1.0)
        d2 = (px - t * dx) ** 2 + (py - t * dy) ** 2
    return d2 <= thickness * thickness


def _figure_mask(gx, gy, rng: np.random.Generator) -> np.ndarray:
    """Articulated person-like silhouette: torso, head, nose, arms, legs."""
    cx, cy = rng.uniform(0.45, 0.55, size=2)
    tw = rng.uniform(0.24, 0.32)
    th = rng.uniform(0.42, 0.5)
    head_r = rng.uniform(0.1, 0.13)
    head = (cx, cy - th / 2 - head_r)
    grid = (np.abs(gx - cx) <= tw / 2) & (np.abs(gy - cy) <= th / 2)
    ang = rng.uniform(0, 2 * math.pi)
    u, v = _rotate(gx, gy, head[0], head[1], ang)
    grid |= (u / (1.6 * head_r)) ** 2 + (v / head_r) ** 2 <= 1.0
    nose = (head[0] + 3.0 * head_r * math.cos(ang), head[1] + 3.0 * head_r * math.sin(ang))
    grid |= _segment_mask(gx, gy, head, nose, 0.04)
    for side in (-1, 1):
        shoulder = (cx + side * tw / 2, cy - th / 2 + 0.04)
        a = rng.uniform(-0.3 * math.pi, 0.55 * math.pi)
        ln = rng.uniform(0.22, 0.32)
        hand = (shoulder[0] + side * ln * math.cos(a), shoulder[1] + ln * math.sin(a))
        grid |= _segment_mask(gx, gy, shoulder, hand, 0.035)
        grid |= (gx - hand[0]) ** 2 + (gy - hand[1]) ** 2 <= 0.05**2
        hip = (cx + side * tw / 4, cy + th / 2)
        foot = (hip[0] + side * rng.uniform(0, 0.1), hip[1] + rng.uniform(0.18, 0.26))
        grid |= _segment_mask(gx, gy, hip, foot, 0.04)
    return grid


def synth_shape_mask(size: int, rng: np.random.Generator, family: str | None = None) -> np.ndarray:
    """One random filled shape with foreground ratio >= 0.2, resampled if needed."""
    gx, gy = _coord_grids(size)
    for _ in range(200):
        fam = family or SHAPE_FAMILIES[rng.integers(len(SHAPE_FAMILIES))]
        cx, cy = rng.uniform(0.35, 0.65, size=2)
        theta = rng.uniform(0, math.pi)
        ax = rng.uniform(0.18, 0.42)
        ay = rng.uniform(0.18, 0.42)
        u, v = _rotate(gx, gy, cx, cy, theta)
        if fam == "ellipse":
            grid = (u / ax) ** 2 + (v / ay) ** 2 <= 1.0
        elif fam == "rectangle":
            grid = (np.abs(u) <= ax) & (np.abs(v) <= ay)
        elif fam == "superellipse":
            p = rng.uniform(2.5, 5.0)
            grid = np.abs(u / ax) ** p + np.abs(v / ay) ** p <= 1.0
        elif fam == "triangle":
            base = v + ay
            half = np.clip((ay - v) / (2 * ay), 0, 1) * ax
            grid = (base >= 0) & (v <= ay) & (np.abs(u) <= half)
        elif fam == "ring":
            outer = (u / ax) ** 2 + (v / ay) ** 2 <= 1.0
            inner = (u / (0.45 * ax)) ** 2 + (v / (0.45 * ay)) ** 2 <= 1.0
            grid = outer & ~inner
        elif fam == "figure":
            grid = _figure_mask(gx, gy, rng)
        else:  # blob: union of two overlapping ellipses
            ox, oy = rng.uniform(-0.12, 0.12, size=2)
            g1 = (u / ax) ** 2 + (v / ay) ** 2 <= 1.0
            g2 = ((u - ox) / (0.7 * ax)) ** 2 + ((v - oy) / (0.7 * ay)) ** 2 <= 1.0
            grid = g1 | g2
        mask = grid.astype(np.float32)
        if mask.mean() >= MIN_FOREGROUND_RATIO:
            return mask
    raise RuntimeError("shape sampler failed to reach the foreground-ratio floor")


def generate_shape_masks(count: int, size: int, seed: int) -> list[MaskSample]:
    rng = np.random.default_rng(seed)
    return [
        MaskSample.from_grid(synth_shape_mask(size, rng), source_id=f"synth-{seed}-{i:05d}")
        for i in range(count)
    ]


def save_mask_png(grid: np.ndarray, path: str | Path) -> None:
    img = Image.fromarray((np.asarray(grid) > 0.5).astype(np.uint8) * 255, mode="L")
    img.save(path, format="PNG")
