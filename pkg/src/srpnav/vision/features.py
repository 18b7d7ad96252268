"""Grid-restricted descriptor matching with a direction-vector consistency test."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

IMAGE_SIZE = (640, 480)
GRID_CELL = 40  # px


def grid_ids(pixels, cell: int = GRID_CELL, image_size=IMAGE_SIZE) -> np.ndarray:
    """Cell index floor(u/cell) * n + floor(v/cell), with n the number of cells along v."""
    n = math.ceil(image_size[1] / cell)
    P = np.asarray(pixels, dtype=float).reshape(-1, 2)
    return (np.floor(P[:, 0] / cell) * n + np.floor(P[:, 1] / cell)).astype(np.int64)


@dataclass(frozen=True)
class FeatureSet:
    pixels: np.ndarray  # (N, 2)
    descriptors: np.ndarray  # (N, D)
    directions: np.ndarray  # (N, 2)
    grid: np.ndarray  # (N,)

    @classmethod
    def build(cls, pixels, descriptors, directions, cell: int = GRID_CELL, image_size=IMAGE_SIZE) -> "FeatureSet":
        pixels = np.asarray(pixels, dtype=float).reshape(-1, 2)
        descriptors = np.asarray(descriptors, dtype=float)
        directions = np.asarray(directions, dtype=float).reshape(-1, 2)
        if descriptors.ndim != 2 or len(descriptors) != len(pixels) or len(directions) != len(pixels):
            raise ValueError("pixels, descriptors and directions must have one row per feature")
        return cls(pixels, descriptors, directions, grid_ids(pixels, cell, image_size))

    def __len__(self) -> int:
        return len(self.pixels)


@dataclass(frozen=True)
class Matches:
    pairs: np.ndarray  # (M, 2) of (i_prev, j_curr)
    distances: np.ndarray  # descriptor Euclidean distance
    cosines: np.ndarray  # direction-vector cosine similarity

    def __len__(self) -> int:
        return len(self.pairs)

    def subset(self, mask) -> "Matches":
        mask = np.asarray(mask, dtype=bool)
        return Matches(self.pairs[mask], self.distances[mask], self.cosines[mask])

    @classmethod
    def empty(cls) -> "Matches":
        return cls(np.zeros((0, 2), dtype=np.int64), np.zeros(0), np.zeros(0))


def _cosine(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    na = np.linalg.norm(a, axis=-1)
    nb = np.linalg.norm(b, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        c = np.sum(a * b, axis=-1) / (na * nb)
    return np.where((na > 0) & (nb > 0), c, 0.0)


def match_features(prev: FeatureSet, curr: FeatureSet, cos_threshold: float = 0.9) -> Matches:
    """Mutual nearest neighbours in descriptor space within the same grid cell.

    Pairs whose direction vectors have cosine similarity below
    ``cos_threshold`` are dropped.
    """
    if len(prev) == 0 or len(curr) == 0:
        return Matches.empty()
    pairs, dists = [], []
    for cell in np.intersect1d(prev.grid, curr.grid):
        I = np.flatnonzero(prev.grid == cell)
        J = np.flatnonzero(curr.grid == cell)
        D = np.linalg.norm(prev.descriptors[I][:, None] - curr.descriptors[J][None], axis=-1)
        fwd = np.argmin(D, axis=1)
        bwd = np.argmin(D, axis=0)
        for a, b in enumerate(fwd):
            if bwd[b] == a:
                pairs.append((I[a], J[b]))
                dists.append(D[a, b])
    if not pairs:
        return Matches.empty()
    pairs = np.array(pairs, dtype=np.int64)
    order = np.argsort(pairs[:, 0], kind="stable")
    pairs = pairs[order]
    dists = np.array(dists)[order]
    cos = _cosine(prev.directions[pairs[:, 0]], curr.directions[pairs[:, 1]])
    keep = cos >= cos_threshold
    return Matches(pairs[keep], dists[keep], cos[keep])
