"""Fundamental-matrix estimation and epipolar outlier rejection."""

from __future__ import annotations

import numpy as np

from .features import Matches

RANSAC_THRESHOLD = 2.0  # px
RANSAC_MAX_ITERS = 2000


class DegenerateLine(ValueError):
    pass


class TooFewMatches(ValueError):
    pass


class DegenerateConfiguration(ValueError):
    pass


def _homog(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return np.concatenate([p, np.ones(p.shape[:-1] + (1,))], axis=-1) if p.shape[-1] == 2 else p


def epipolar_distances(F, p1, p2) -> np.ndarray:
    """Distance of each p2 to the epipolar line F p1 (pixels); vectorized over rows."""
    F = np.asarray(F, dtype=float)
    P1 = _homog(np.atleast_2d(p1))
    P2 = _homog(np.atleast_2d(p2))
    L = P1 @ F.T
    norm = np.hypot(L[:, 0], L[:, 1])
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.abs(np.sum(P2 * L, axis=1)) / norm


def epipolar_distance(F, p1, p2) -> float:
    F = np.asarray(F, dtype=float)
    if not np.any(F):
        raise DegenerateLine("F is zero")
    l = F @ _homog(p1)
    n = float(np.hypot(l[0], l[1]))
    if n == 0.0 or n <= 1e-14 * float(np.max(np.abs(l))):
        raise DegenerateLine(f"epipolar line of {tuple(np.asarray(p1))} has no direction")
    return float(abs(_homog(p2) @ l) / n)


def _normalizer(P: np.ndarray) -> np.ndarray:
    """Similarity moving the centroid to 0 and the mean distance to sqrt(2)."""
    c = P.mean(axis=-2)
    d = np.linalg.norm(P - c[..., None, :], axis=-1).mean(axis=-1)
    s = np.sqrt(2.0) / np.maximum(d, 1e-300)
    T = np.zeros(P.shape[:-2] + (3, 3))
    T[..., 0, 0] = s
    T[..., 1, 1] = s
    T[..., 0, 2] = -s * c[..., 0]
    T[..., 1, 2] = -s * c[..., 1]
    T[..., 2, 2] = 1.0
    return T


def eight_point(p1, p2) -> np.ndarray:
    """Normalized 8-point estimate (batched over leading axes), rank 2, unit Frobenius norm."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    T1, T2 = _normalizer(p1), _normalizer(p2)
    q1 = _homog(p1) @ np.swapaxes(T1, -1, -2)
    q2 = _homog(p2) @ np.swapaxes(T2, -1, -2)
    # row k of A: kron(q2_k, q1_k) so that A vec(F) = q2' F q1
    A = (q2[..., :, :, None] * q1[..., :, None, :]).reshape(q1.shape[:-1] + (9,))
    _, _, Vt = np.linalg.svd(A)
    Fn = Vt[..., -1, :].reshape(q1.shape[:-2] + (3, 3))
    U, S, Vt = np.linalg.svd(Fn)
    S[..., 2] = 0.0
    Fn = (U * S[..., None, :]) @ Vt
    F = np.swapaxes(T2, -1, -2) @ Fn @ T1
    return F / np.linalg.norm(F, axis=(-2, -1), keepdims=True)


def _score(F: np.ndarray, p1, p2, threshold: float):
    D = epipolar_distances(F, p1, p2)
    D = np.where(np.isfinite(D), D, np.inf)
    inl = D <= threshold
    return inl, float(np.sum(D[inl]))


def estimate_fundamental_ransac(
    p1,
    p2,
    threshold: float = RANSAC_THRESHOLD,
    max_iters: int = RANSAC_MAX_ITERS,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Return (F, inlier mask) for pixel correspondences p1[i] <-> p2[i].

    Every hypothesis is scored in one batch; the winner has the most inliers,
    ties going to the lower summed inlier distance, so the result does not
    depend on evaluation order. The model is then refit on its consensus set
    until the set stops changing.
    """
    p1 = np.asarray(p1, dtype=float).reshape(-1, 2)
    p2 = np.asarray(p2, dtype=float).reshape(-1, 2)
    n = len(p1)
    if len(p2) != n:
        raise ValueError("p1 and p2 must have the same length")
    if n < 8:
        raise TooFewMatches(f"need at least 8 matches, got {n}")
    rng = np.random.default_rng(seed)
    idx = np.stack([rng.choice(n, 8, replace=False) for _ in range(max_iters)])
    Fs = eight_point(p1[idx], p2[idx])
    P1 = _homog(p1)
    P2 = _homog(p2)
    L = np.einsum("kij,nj->kni", Fs, P1)
    with np.errstate(invalid="ignore", divide="ignore"):
        D = np.abs(np.einsum("kni,ni->kn", L, P2)) / np.hypot(L[..., 0], L[..., 1])
    D = np.where(np.isfinite(D), D, np.inf)
    inl = D <= threshold
    counts = inl.sum(axis=1)
    resid = np.where(inl, D, 0.0).sum(axis=1)
    best = int(np.lexsort((resid, -counts))[0])
    mask = inl[best]
    if mask.sum() < 8:
        raise DegenerateConfiguration(f"best consensus has only {int(mask.sum())} matches")
    F = Fs[best]
    for _ in range(10):
        F_new = eight_point(p1[mask], p2[mask])
        new_mask, _ = _score(F_new, p1, p2, threshold)
        if new_mask.sum() < 8:
            break
        F = F_new
        if np.array_equal(new_mask, mask):
            break
        mask = new_mask
    mask, _ = _score(F, p1, p2, threshold)
    return F, mask


def filter_outliers(matches: Matches, p_prev, p_curr, F, threshold: float = RANSAC_THRESHOLD) -> Matches:
    """Keep the matches whose current point lies within ``threshold`` px of its epipolar line."""
    if len(matches) == 0:
        return matches
    if np.isinf(threshold):
        return matches
    a = np.asarray(p_prev, dtype=float)[matches.pairs[:, 0]]
    b = np.asarray(p_curr, dtype=float)[matches.pairs[:, 1]]
    return matches.subset(epipolar_distances(F, a, b) <= threshold)
