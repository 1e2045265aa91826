"""Keypoint-invariance metrics.

Detections from the original frames act as ground truth; similarity per
keypoint follows the Gaussian falloff exp(-d^2 / (2 s^2 kappa^2)), gated
by ground-truth visibility, and the visible terms are averaged into a
per-instance score. AP/AR are swept over a threshold grid (default
0.50:0.05:0.95).
"""

from __future__ import annotations

import dataclasses
import enum
import math

import numpy as np

from .errors import DataError


class Skeleton(enum.Enum):
    COCO17 = "coco17"
    BODY25 = "body25"


COCO17_NAMES = [
    "nose", "left_eye", "right_eye", "left_ear", "right_ear",
    "left_shoulder", "right_shoulder", "left_elbow", "right_elbow",
    "left_wrist", "right_wrist", "left_hip", "right_hip",
    "left_knee", "right_knee", "left_ankle", "right_ankle",
]

# COCO17 slot <- BODY25 index; neck (1), mid-hip (8) and feet (19-24) are dropped.
BODY25_TO_COCO17 = [0, 16, 15, 18, 17, 5, 2, 6, 3, 7, 4, 12, 9, 13, 10, 14, 11]

# Per-keypoint annotation-variance constants of the COCO evaluation convention.
COCO_SIGMAS = np.array([
    0.026, 0.025, 0.025, 0.035, 0.035, 0.079, 0.079, 0.072, 0.072,
    0.062, 0.062, 0.107, 0.107, 0.087, 0.087, 0.089, 0.089,
])

DEFAULT_KAPPAS = 2.0 * COCO_SIGMAS
DEFAULT_THRESHOLDS = tuple(round(0.50 + 0.05 * i, 2) for i in range(10))

HISTOGRAM_BINS = 100  # fixed 0.01-wide bins over [0, 1]


@dataclasses.dataclass
class KeypointInstance:
    frame_id: str
    skeleton: Skeleton
    points: np.ndarray  # (n, 3) rows of (x, y, confidence)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        expected = 17 if self.skeleton is Skeleton.COCO17 else 25
        if self.points.shape != (expected, 3):
            raise DataError(
                f"{self.frame_id!r}: {self.skeleton.value} needs {expected} points, "
                f"got shape {self.points.shape}"
            )
        conf = self.points[:, 2]
        if np.any(conf < 0) or np.any(conf > 1):
            raise DataError(f"{self.frame_id!r}: confidences must lie in [0, 1]")


@dataclasses.dataclass
class OksConfig:
    kappas: np.ndarray = dataclasses.field(default_factory=lambda: DEFAULT_KAPPAS.copy())
    visibility_threshold: float = 0.0
    scale_factor: float = 0.53
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS

    def __post_init__(self):
        self.kappas = np.asarray(self.kappas, dtype=np.float64)
        if self.kappas.shape != (17,) or np.any(self.kappas <= 0):
            raise DataError("kappas must be 17 positive values")
        if not 0 <= self.visibility_threshold < 1:
            raise DataError("visibility_threshold must lie in [0, 1)")
        if self.scale_factor <= 0:
            raise DataError("scale_factor must be positive")
        ts = tuple(float(t) for t in self.thresholds)
        if not ts or any(t <= 0 or t > 1 for t in ts) or any(b <= a for a, b in zip(ts, ts[1:])):
            raise DataError("thresholds must be strictly increasing values in (0, 1]")
        self.thresholds = ts


@dataclasses.dataclass
class OksResult:
    per_keypoint: list[float | None]  # 17 slots, None where GT invisible
    oks: float
    visible_count: int


@dataclasses.dataclass
class EvalSummary:
    thresholds: tuple[float, ...]
    ap: dict[float, float]
    ar: dict[float, float]
    ap_mean: float
    ar_mean: float
    oks_values: list[float]
    oks_histogram: list[int]                  # HISTOGRAM_BINS counts over [0, 1]
    per_keypoint_histograms: dict[str, list[int]]
    evaluable_count: int
    unevaluable_count: int


def map_body25_to_coco17(kp: KeypointInstance) -> KeypointInstance:
    if kp.skeleton is not Skeleton.BODY25:
        raise DataError(f"{kp.frame_id!r}: expected BODY25 input, got {kp.skeleton.value}")
    return KeypointInstance(kp.frame_id, Skeleton.COCO17, kp.points[BODY25_TO_COCO17].copy())


def visible_mask(kp: KeypointInstance, cfg: OksConfig) -> np.ndarray:
    return kp.points[:, 2] > cfg.visibility_threshold


def estimate_scale(gt: KeypointInstance, cfg: OksConfig) -> float:
    """Object scale from the tight box of visible GT keypoints:
    sqrt(scale_factor * w * h)."""
    vis = visible_mask(gt, cfg)
    if int(vis.sum()) < 2:
        raise DataError(f"{gt.frame_id!r}: need >= 2 visible keypoints to estimate scale")
    pts = gt.points[vis, :2]
    w = float(pts[:, 0].max() - pts[:, 0].min())
    h = float(pts[:, 1].max() - pts[:, 1].min())
    if w <= 0 or h <= 0:
        raise DataError(f"{gt.frame_id!r}: visible keypoints have zero-area extent")
    return math.sqrt(cfg.scale_factor * w * h)


def keypoint_similarity(d: float, s: float, kappa: float) -> float:
    if s <= 0 or kappa <= 0:
        raise DataError(f"scale and kappa must be positive, got s={s} kappa={kappa}")
    try:
        return math.exp(-(d * d) / (2.0 * s * s * kappa * kappa))
    except OverflowError:  # huge d underflows to 0
        return 0.0


def oks(gt: KeypointInstance, pred: KeypointInstance, cfg: OksConfig) -> OksResult:
    """Visibility-gated mean keypoint similarity for one instance pair.

    Prediction keypoints with confidence 0 (the pose tool's "missing"
    convention, stored at (0,0)) are scored from their stored coordinates,
    which penalizes the drop.
    """
    if gt.skeleton is not Skeleton.COCO17 or pred.skeleton is not Skeleton.COCO17:
        raise DataError("oks requires COCO17 instances on both sides")
    if gt.frame_id != pred.frame_id:
        raise DataError(f"frame_id mismatch: {gt.frame_id!r} vs {pred.frame_id!r}")
    vis = visible_mask(gt, cfg)
    if not vis.any():
        raise DataError(f"{gt.frame_id!r}: no visible ground-truth keypoints")
    s = estimate_scale(gt, cfg)
    per_keypoint: list[float | None] = [None] * 17
    total = 0.0
    count = 0
    for i in range(17):
        if not vis[i]:
            continue
        d = math.hypot(gt.points[i, 0] - pred.points[i, 0], gt.points[i, 1] - pred.points[i, 1])
        sim = keypoint_similarity(d, s, float(cfg.kappas[i]))
        per_keypoint[i] = sim
        total += sim
        count += 1
    return OksResult(per_keypoint=per_keypoint, oks=total / count, visible_count=count)


def _histogram(values) -> list[int]:
    counts = [0] * HISTOGRAM_BINS
    for v in values:
        counts[min(int(v * HISTOGRAM_BINS), HISTOGRAM_BINS - 1)] += 1
    return counts


def threshold_metrics(oks_values: list[float], thresholds=DEFAULT_THRESHOLDS) -> tuple[dict, dict]:
    """Fraction-mode AP/AR per threshold: the fraction of instances at or
    above each threshold."""
    if not oks_values:
        raise DataError("no OKS values to evaluate")
    n = len(oks_values)
    ap = {t: sum(1 for v in oks_values if v >= t) / n for t in thresholds}
    return ap, dict(ap)


def _ranked_metrics(oks_values, scores, frame_ids, thresholds):
    """COCO-convention AP (101-point interpolated PR area) and AR (final
    recall), ranking single detections by score, ties broken by frame_id."""
    order = sorted(range(len(oks_values)), key=lambda i: (-scores[i], frame_ids[i]))
    n = len(oks_values)
    recall_grid = np.linspace(0.0, 1.0, 101)
    ap = {}
    ar = {}
    for t in thresholds:
        tp = 0
        precisions = []
        recalls = []
        for rank, i in enumerate(order, start=1):
            if oks_values[i] >= t:
                tp += 1
            precisions.append(tp / rank)
            recalls.append(tp / n)
        precisions = np.array(precisions)
        recalls = np.array(recalls)
        # interpolated precision: max precision at recall >= r
        interp = np.zeros(101)
        for j, r in enumerate(recall_grid):
            mask = recalls >= r - 1e-12
            interp[j] = precisions[mask].max() if mask.any() else 0.0
        ap[t] = float(interp.mean())
        ar[t] = float(recalls[-1])
    return ap, ar


def evaluate_set(pairs, cfg: OksConfig, mode: str = "fraction") -> EvalSummary:
    """Aggregate OKS over (gt, pred) pairs into AP/AR and distributions.

    Pairs whose ground truth cannot be evaluated (no visible keypoints or
    degenerate scale) are counted separately, not failed.
    """
    if mode not in ("fraction", "ranked"):
        raise DataError(f"unknown evaluation mode {mode!r}")
    if not pairs:
        raise DataError("evaluate_set needs at least one (gt, pred) pair")
    oks_values = []
    scores = []
    frame_ids = []
    kp_sims: dict[str, list[float]] = {name: [] for name in COCO17_NAMES}
    unevaluable = 0
    for gt, pred in pairs:
        try:
            result = oks(gt, pred, cfg)
        except DataError:
            unevaluable += 1
            continue
        oks_values.append(result.oks)
        frame_ids.append(gt.frame_id)
        vis = visible_mask(gt, cfg)
        scores.append(float(pred.points[vis, 2].mean()))
        for i, sim in enumerate(result.per_keypoint):
            if sim is not None:
                kp_sims[COCO17_NAMES[i]].append(sim)
    if not oks_values:
        raise DataError("no evaluable (gt, pred) pairs")
    if mode == "fraction":
        ap, ar = threshold_metrics(oks_values, cfg.thresholds)
    else:
        ap, ar = _ranked_metrics(oks_values, scores, frame_ids, cfg.thresholds)
    return EvalSummary(
        thresholds=cfg.thresholds,
        ap=ap,
        ar=ar,
        ap_mean=sum(ap.values()) / len(ap),
        ar_mean=sum(ar.values()) / len(ar),
        oks_values=oks_values,
        oks_histogram=_histogram(oks_values),
        per_keypoint_histograms={name: _histogram(v) for name, v in kp_sims.items()},
        evaluable_count=len(oks_values),
        unevaluable_count=unevaluable,
    )


def per_keypoint_distribution(pairs, cfg: OksConfig) -> dict[str, list[int]]:
    """Histogram of similarities per keypoint name over all pairs where that
    keypoint was GT-visible."""
    return evaluate_set(pairs, cfg).per_keypoint_histograms
