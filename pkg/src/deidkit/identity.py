"""De-identification reliability metrics over precomputed face descriptors.

Works on 128-d (configurable) identity embeddings grouped into labeled
subsets such as "swapped_F" / "original_F" / "original_A". Provides the
distance table, threshold matching at the 0.6 convention, ROC/AUC with
TAR = genuine-below-threshold and FAR = impostor-below-threshold, a
cluster-separation score, and a deterministic 2-D principal-component
embedding for cluster plots.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .errors import DataError

DEFAULT_MATCH_THRESHOLD = 0.6


@dataclasses.dataclass
class FaceDescriptor:
    id: str
    subset: str
    vector: np.ndarray

    def __post_init__(self):
        self.vector = np.asarray(self.vector, dtype=np.float64)
        if self.vector.ndim != 1 or self.vector.size < 1:
            raise DataError(f"descriptor {self.id!r}: vector must be 1-D and non-empty")


@dataclasses.dataclass
class SubsetStats:
    subset: str
    centroid: np.ndarray
    intra_mean: float
    intra_std: float  # population convention (divisor n)


@dataclasses.dataclass
class DistanceRow:
    subset: str
    intra: tuple[float, float]
    to_original: tuple[float, float] | None
    to_avg_original: tuple[float, float] | None
    to_avg_target: tuple[float, float]


@dataclasses.dataclass
class DistanceReport:
    target_subset: str
    rows: list[DistanceRow]


@dataclasses.dataclass
class RocCurve:
    points: list[tuple[float, float]]  # (FAR, TAR), FAR non-decreasing
    thresholds: list[float]
    auc: float


def euclidean_distance(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DataError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def _vectors(descriptors) -> np.ndarray:
    if not descriptors:
        raise DataError("empty descriptor set")
    vecs = [d.vector if isinstance(d, FaceDescriptor) else np.asarray(d, dtype=np.float64)
            for d in descriptors]
    dims = {v.shape for v in vecs}
    if len(dims) != 1:
        raise DataError(f"descriptors have mixed dimensions: {sorted(dims)}")
    return np.stack(vecs)


def centroid(descriptors) -> np.ndarray:
    return _vectors(descriptors).mean(axis=0)


def _mean_std(values: np.ndarray) -> tuple[float, float]:
    return float(values.mean()), float(values.std())  # population std


def intra_stats(subset: str, descriptors) -> SubsetStats:
    vecs = _vectors(descriptors)
    c = vecs.mean(axis=0)
    dists = np.linalg.norm(vecs - c, axis=1)
    mean, std = _mean_std(dists)
    return SubsetStats(subset=subset, centroid=c, intra_mean=mean, intra_std=std)


def default_original_of(subsets) -> dict[str, str]:
    """Pair each "swapped_<tag>" subset with "original_<tag>" when present."""
    mapping = {}
    for label in subsets:
        if label.startswith("swapped_"):
            orig = "original_" + label[len("swapped_"):]
            if orig in subsets:
                mapping[label] = orig
    return mapping


def distance_table(
    by_subset: dict[str, list[FaceDescriptor]],
    pairing: dict[str, str],
    target_subset: str,
    original_of: dict[str, str] | None = None,
) -> DistanceReport:
    """Per-subset distance statistics, Table-1 shape.

    Swapped subsets report all four columns; other subsets report only
    intra and to-average-target. `pairing` maps a swapped descriptor id to
    its source-frame original descriptor id.
    """
    if target_subset not in by_subset:
        raise DataError(f"unknown target subset {target_subset!r}")
    for label, members in by_subset.items():
        if not members:
            raise DataError(f"subset {label!r} is empty")
    if original_of is None:
        original_of = default_original_of(by_subset)
    centroids = {label: centroid(members) for label, members in by_subset.items()}
    rows = []
    for label in sorted(by_subset):
        members = by_subset[label]
        stats = intra_stats(label, members)
        vecs = _vectors(members)
        to_original = None
        to_avg_original = None
        if label in original_of:
            orig_label = original_of[label]
            by_id = {d.id: d for d in by_subset[orig_label]}
            unmatched = [d.id for d in members if pairing.get(d.id) not in by_id]
            if unmatched:
                raise DataError(
                    f"subset {label!r}: no paired original descriptor for ids {unmatched[:5]}"
                    + ("..." if len(unmatched) > 5 else "")
                )
            paired = np.array([
                euclidean_distance(d.vector, by_id[pairing[d.id]].vector) for d in members
            ])
            to_original = _mean_std(paired)
            to_avg_original = _mean_std(np.linalg.norm(vecs - centroids[orig_label], axis=1))
        to_avg_target = _mean_std(np.linalg.norm(vecs - centroids[target_subset], axis=1))
        rows.append(DistanceRow(
            subset=label,
            intra=(stats.intra_mean, stats.intra_std),
            to_original=to_original,
            to_avg_original=to_avg_original,
            to_avg_target=to_avg_target,
        ))
    return DistanceReport(target_subset=target_subset, rows=rows)


def verify_identity(descriptor, center, threshold: float = DEFAULT_MATCH_THRESHOLD) -> bool:
    """Match iff the descriptor lies strictly inside the threshold radius."""
    return euclidean_distance(descriptor, center) < threshold


def roc(genuine: list[float], impostor: list[float]) -> RocCurve:
    """Step ROC over the sorted union of observed distances plus sentinels.

    TAR(t) = fraction of genuine distances < t, FAR(t) likewise for
    impostors; AUC by trapezoidal integration over (FAR, TAR).
    """
    if not genuine or not impostor:
        raise DataError("roc needs non-empty genuine and impostor lists")
    gen = np.sort(np.asarray(genuine, dtype=np.float64))
    imp = np.sort(np.asarray(impostor, dtype=np.float64))
    observed = sorted(set(gen.tolist()) | set(imp.tolist()))
    thresholds = [observed[0] - 1.0] + observed + [observed[-1] + 1.0]
    points = []
    for t in thresholds:
        tar = float(np.searchsorted(gen, t, side="left")) / len(gen)
        far = float(np.searchsorted(imp, t, side="left")) / len(imp)
        points.append((far, tar))
    fars = np.array([p[0] for p in points])
    tars = np.array([p[1] for p in points])
    integrate = getattr(np, "trapezoid", None) or np.trapz
    auc = float(integrate(tars, fars))
    return RocCurve(points=points, thresholds=thresholds, auc=auc)


def pca_embed_2d(descriptors) -> np.ndarray:
    """Deterministic 2-D projection onto the top two principal components.

    Sign convention: each component's largest-magnitude coordinate is made
    positive, so the embedding is reproducible across runs.
    """
    vecs = _vectors(descriptors)
    if vecs.shape[0] < 3:
        raise DataError("pca_embed_2d needs at least 3 descriptors")
    if vecs.shape[1] < 2:
        raise DataError("pca_embed_2d needs dimension >= 2")
    centered = vecs - vecs.mean(axis=0)
    if not centered.any():
        raise DataError("degenerate covariance: all descriptors identical")
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:2].copy()
    for comp in components:
        j = int(np.argmax(np.abs(comp)))
        if comp[j] < 0:
            comp *= -1.0
    return centered @ components.T


def cluster_separation(by_subset: dict[str, list[FaceDescriptor]]) -> float:
    """Min pairwise centroid distance over the largest subset radius
    (intra_mean + 2*intra_std); infinity when every subset has zero radius."""
    if len(by_subset) < 2:
        raise DataError("cluster_separation needs >= 2 subsets")
    stats = [intra_stats(label, members) for label, members in sorted(by_subset.items())]
    min_dist = min(
        euclidean_distance(a.centroid, b.centroid)
        for i, a in enumerate(stats) for b in stats[i + 1:]
    )
    radius = max(s.intra_mean + 2.0 * s.intra_std for s in stats)
    if radius == 0.0:
        return 0.0 if min_dist == 0.0 else math.inf
    return min_dist / radius
