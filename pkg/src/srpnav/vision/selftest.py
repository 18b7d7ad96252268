"""End-to-end checks of the vision pipeline on seeded synthetic scenes."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .ba import local_ba, motion_only_ba, rms_reprojection
from .camera import Sim3, correct_points_sim3, so3_exp
from .epipolar import epipolar_distances, estimate_fundamental_ransac
from .features import FeatureSet, match_features
from .scene import SceneSpec, generate_scene


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    threshold: float
    passed: bool
    seconds: float
    comparison: str = "<="

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{self.name}: value={self.value:.6g} {self.comparison} {self.threshold:g} [{status}] ({self.seconds:.3f}s)"


def _unit(rng) -> np.ndarray:
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def _ransac_checks(seed: int, sigma: float):
    sc = generate_scene(SceneSpec(noise_sigma=sigma, outlier_fraction=0.3), seed)
    _, mask = estimate_fundamental_ransac(sc.p1, sc.p2, seed=seed)
    inl = ~sc.outliers
    tp = float(np.sum(mask & inl))
    precision = tp / max(float(mask.sum()), 1.0)
    recall = tp / float(inl.sum())
    return precision, recall


def _noiseless_fundamental(seed: int):
    sc = generate_scene(SceneSpec(noise_sigma=0.0, outlier_fraction=0.0), seed)
    F, _ = estimate_fundamental_ransac(sc.p1, sc.p2, seed=seed)
    s = np.linalg.svd(F, compute_uv=False)
    return float(np.max(epipolar_distances(F, sc.p1, sc.p2))), float(s[2] / s[0])


def _motion_only(seed: int):
    sc = generate_scene(SceneSpec(n_landmarks=50, noise_sigma=0.0, outlier_fraction=0.0), seed)
    rng = np.random.default_rng(seed)
    gt = sc.poses[1]
    init = gt.perturbed(0.1 * _unit(rng), 0.1 * _unit(rng))
    res = motion_only_ba(sc.landmarks, sc.clean[1], init, sc.K)
    return res.x.rotation_error(gt), res.x.translation_error(gt)


def _local(seed: int):
    sc = generate_scene(SceneSpec(n_landmarks=100, n_frames=4, noise_sigma=0.0, outlier_fraction=0.0), seed)
    rng = np.random.default_rng(seed)
    fixed = {0: sc.poses[0], 1: sc.poses[1]}
    before = {k: (p.R.tobytes(), p.t.tobytes()) for k, p in fixed.items()}
    local = {k: sc.poses[k].perturbed(rng.normal(0, 0.02, 3), rng.normal(0, 0.05, 3)) for k in (2, 3)}
    points = sc.landmarks + rng.normal(0.0, 0.05, sc.landmarks.shape)
    obs = sc.observations(noisy=False)
    res = local_ba(local, fixed, points, obs, sc.K)
    moved = sum((res.poses[k].R.tobytes(), res.poses[k].t.tobytes()) != before[k] for k in fixed)
    return float(moved), rms_reprojection(res.poses, res.points, obs, sc.K)


def _matching(seed: int):
    rng = np.random.default_rng(seed)
    n = 150
    pix = rng.uniform([0, 0], [640, 480], (n, 2))
    desc = rng.normal(size=(n, 32))
    ang = rng.uniform(-np.pi, np.pi, n)
    dirs = np.column_stack([np.cos(ang), np.sin(ang)])
    perm = rng.permutation(n)
    prev = FeatureSet.build(pix, desc, dirs)
    curr = FeatureSet.build(pix[perm], desc[perm], dirs[perm])
    m = match_features(prev, curr)
    # curr[j] is prev[perm[j]]
    ok = len(m) == n and np.array_equal(perm[m.pairs[:, 1]], m.pairs[:, 0])
    return 1.0 if ok else 0.0


def _sim3(seed: int):
    rng = np.random.default_rng(seed)
    a = Sim3(float(rng.uniform(0.5, 2)), so3_exp(rng.normal(size=3)), rng.normal(size=3))
    b = Sim3(float(rng.uniform(0.5, 2)), so3_exp(rng.normal(size=3)), rng.normal(size=3))
    pts = rng.normal(size=(50, 3))
    M = b.matrix() @ a.matrix()
    ref = pts @ M[:3, :3].T + M[:3, 3]
    return float(np.max(np.abs(correct_points_sim3(pts, a, b) - ref)))


def run_selftest(seed: int = 0, noise_sigma: float = 0.5) -> list[CheckResult]:
    """Every check runs once; ``noise_sigma`` applies to the RANSAC scene."""
    results = []

    def timed(fn, *args):
        t0 = time.perf_counter()
        out = fn(*args)
        return out, time.perf_counter() - t0

    (max_d, rank_ratio), t = timed(_noiseless_fundamental, seed)
    results.append(CheckResult("fundamental_noiseless_max_distance_px", max_d, 1e-6, max_d < 1e-6, t, "<"))
    results.append(CheckResult("fundamental_rank2_singular_ratio", rank_ratio, 1e-12, rank_ratio <= 1e-12, t))
    (prec, rec), t = timed(_ransac_checks, seed, noise_sigma)
    results.append(CheckResult("ransac_inlier_precision", prec, 0.95, prec >= 0.95, t, ">="))
    results.append(CheckResult("ransac_inlier_recall", rec, 0.95, rec >= 0.95, t, ">="))
    (rot, trans), t = timed(_motion_only, seed)
    results.append(CheckResult("motion_only_ba_rotation_error_rad", rot, 1e-3, rot < 1e-3, t, "<"))
    results.append(CheckResult("motion_only_ba_translation_error_m", trans, 1e-3, trans < 1e-3, t, "<"))
    (moved, rms), t = timed(_local, seed)
    results.append(CheckResult("local_ba_fixed_frames_changed", moved, 0.0, moved == 0.0, t, "=="))
    results.append(CheckResult("local_ba_rms_reprojection_px", rms, 1e-6, rms < 1e-6, t, "<"))
    rec_perm, t = timed(_matching, seed)
    results.append(CheckResult("matching_permutation_recovered", rec_perm, 1.0, rec_perm == 1.0, t, "=="))
    err, t = timed(_sim3, seed)
    results.append(CheckResult("sim3_composition_error", err, 1e-12, err <= 1e-12, t))
    return results


def format_report(results) -> str:
    lines = [r.line() for r in results]
    n_pass = sum(r.passed for r in results)
    lines.append(f"{n_pass}/{len(results)} checks passed")
    return "\n".join(lines) + "\n"
