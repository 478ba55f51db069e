"""Shape clusters: descriptor extraction, K-means fitting, and the cluster bank.

Each cluster owns its own learnable keypoint-graph edge weights; samples are
assigned to the nearest centroid of a 256-d downsampled-mask descriptor.
"""

from __future__ import annotations

import numpy as np
import torch

from .errors import ConfigurationError
from .masks import MaskSample

DESCRIPTOR_SIDE = 16  # masks are pooled to 16x16 and flattened to 256-d


def mask_descriptor(grid: np.ndarray) -> np.ndarray:
    """Block-mean downsample of a binary mask to 16x16, flattened (float64)."""
    h, w = grid.shape
    side = DESCRIPTOR_SIDE
    if h % side == 0 and w % side == 0:
        pooled = grid.reshape(side, h // side, side, w // side).mean(axis=(1, 3))
    else:
        t = torch.from_numpy(np.asarray(grid, dtype=np.float32))[None, None]
        pooled = torch.nn.functional.interpolate(
            t, size=(side, side), mode="bilinear", align_corners=False
        )[0, 0].numpy()
    return pooled.astype(np.float64).reshape(-1)


def _kmeans_pp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centroids = np.empty((k, x.shape[1]), dtype=x.dtype)
    centroids[0] = x[rng.integers(n)]
    d2 = ((x - centroids[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0:
            centroids[i] = x[rng.integers(n)]
        else:
            probs = d2 / total
            centroids[i] = x[rng.choice(n, p=probs)]
        d2 = np.minimum(d2, ((x - centroids[i]) ** 2).sum(axis=1))
    return centroids


def kmeans_fit(
    x: np.ndarray, k: int, seed: int, max_iters: int = 100, tol: float = 1e-8
) -> np.ndarray:
    """Plain Lloyd's algorithm with k-means++ seeding.

    Deterministic given the seed; assignment ties resolve to the lowest
    cluster index (argmin keeps the first minimum). Empty clusters are
    reseeded to the point farthest from its centroid.
    """
    if x.shape[0] < k:
        raise ConfigurationError(f"need at least {k} samples to fit {k} clusters, got {x.shape[0]}")
    rng = np.random.default_rng(seed)
    centroids = _kmeans_pp_init(x, k, rng)
    for _ in range(max_iters):
        d2 = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        labels = d2.argmin(axis=1)
        new_centroids = centroids.copy()
        for c in range(k):
            members = x[labels == c]
            if len(members):
                new_centroids[c] = members.mean(axis=0)
            else:
                worst = d2[np.arange(len(x)), labels].argmax()
                new_centroids[c] = x[worst]
        shift = ((new_centroids - centroids) ** 2).sum()
        centroids = new_centroids
        if shift < tol:
            break
    return centroids


class ClusterBank(torch.nn.Module):
    """Centroids plus one raw edge-weight matrix per cluster.

    Raw weights are learnable; the effective per-pair weights pass through a
    logistic transform (see geometry.pair_weights_from_raw). Assignment is
    nearest-centroid with ties broken toward the lowest cluster index.
    """

    def __init__(self, centroids: np.ndarray, n_keypoints: int, edge_init: float = 0.0):
        super().__init__()
        self.register_buffer("centroids", torch.from_numpy(np.asarray(centroids, np.float64)))
        self.n_keypoints = n_keypoints
        c = centroids.shape[0]
        self.edge_raw = torch.nn.Parameter(
            torch.full((c, n_keypoints, n_keypoints), float(edge_init))
        )

    @property
    def n_clusters(self) -> int:
        return self.centroids.shape[0]

    def assign(self, sample_or_descriptor) -> int:
        if isinstance(sample_or_descriptor, MaskSample):
            desc = mask_descriptor(sample_or_descriptor.grid)
        else:
            desc = np.asarray(sample_or_descriptor, dtype=np.float64).reshape(-1)
        d2 = ((self.centroids.numpy() - desc[None, :]) ** 2).sum(axis=1)
        return int(d2.argmin())

    def assign_many(self, samples: list[MaskSample]) -> np.ndarray:
        descs = np.stack([mask_descriptor(s.grid) for s in samples])
        d2 = ((descs[:, None, :] - self.centroids.numpy()[None, :, :]) ** 2).sum(axis=2)
        return d2.argmin(axis=1)


def cluster_fit(samples: list[MaskSample], n_clusters: int, n_keypoints: int, seed: int) -> ClusterBank:
    if len(samples) < n_clusters:
        raise ConfigurationError(
            f"cannot fit {n_clusters} clusters from {len(samples)} samples"
        )
    descriptors = np.stack([mask_descriptor(s.grid) for s in samples])
    centroids = kmeans_fit(descriptors, n_clusters, seed=seed)
    return ClusterBank(centroids, n_keypoints=n_keypoints)


def cluster_assign(sample: MaskSample, bank: ClusterBank) -> int:
    return bank.assign(sample)
