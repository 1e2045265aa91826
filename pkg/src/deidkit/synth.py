"""Seeded synthetic-data generators.

Every generator is a pure function of (spec, seed) on numpy's PCG64
stream, so re-running yields bit-identical data on any platform. The
planted structure (cluster geometry, perturbation sigmas, identity
templates) gives each metric module an independent oracle.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .errors import DataError
from .faceswap import IMAGE_SIDE, TinyFaceSample
from .identity import FaceDescriptor
from .keypoints import KeypointInstance, Skeleton

HEAD_KEYPOINTS = (0, 1, 2, 3, 4)  # nose, eyes, ears


# ---------------------------------------------------------------------------
# Descriptor clusters
# ---------------------------------------------------------------------------

@dataclasses.dataclass
class ClusterSpec:
    label: str
    centroid: np.ndarray
    sigma: float
    count: int

    def __post_init__(self):
        self.centroid = np.asarray(self.centroid, dtype=np.float64)
        if self.sigma < 0:
            raise DataError(f"cluster {self.label!r}: sigma must be >= 0")
        if self.count < 1:
            raise DataError(f"cluster {self.label!r}: count must be >= 1")


@dataclasses.dataclass
class DescriptorClusterSpec:
    dimension: int
    clusters: list[ClusterSpec]

    def __post_init__(self):
        labels = [c.label for c in self.clusters]
        if len(set(labels)) != len(labels):
            raise DataError("cluster labels must be unique")
        for c in self.clusters:
            if c.centroid.shape != (self.dimension,):
                raise DataError(f"cluster {c.label!r}: centroid dimension mismatch")


def gen_descriptor_clusters(spec: DescriptorClusterSpec, seed: int) -> list[FaceDescriptor]:
    """Draw each subset i.i.d. Gaussian(centroid, sigma^2 I).

    Descriptor ids are "<label>:<index>" so same-index members of paired
    subsets share a frame."""
    rng = np.random.default_rng(seed)
    out = []
    for cluster in spec.clusters:
        draws = cluster.centroid + cluster.sigma * rng.standard_normal(
            (cluster.count, spec.dimension))
        for i in range(cluster.count):
            out.append(FaceDescriptor(id=f"{cluster.label}:{i:04d}",
                                      subset=cluster.label,
                                      vector=draws[i]))
    return out


def frame_pairing(swapped_label: str, original_label: str, count: int) -> dict[str, str]:
    return {f"{swapped_label}:{i:04d}": f"{original_label}:{i:04d}" for i in range(count)}


def table1_cluster_spec(
    dimension: int = 128,
    count: int = 500,
    intra_mean: float = 0.19,
    to_target_centroid: float = 0.46,
    to_original_centroid: float = 0.65,
) -> tuple[DescriptorClusterSpec, dict[str, float]]:
    """Three-cluster geometry mirroring the observed distance-table shape.

    Centroids are placed on orthogonal axes so that the expected member
    distances hit the requested means; the second return value holds the
    analytic expectations for every table column (planted oracle).
    """
    sigma = intra_mean / math.sqrt(dimension)
    var = sigma * sigma * dimension  # = intra_mean^2
    if to_target_centroid ** 2 <= var or to_original_centroid ** 2 <= var:
        raise DataError("requested centroid distances are below the cluster radius")
    c_target = math.sqrt(to_target_centroid ** 2 - var)
    c_orig = math.sqrt(to_original_centroid ** 2 - var)
    zero = np.zeros(dimension)
    e1 = np.zeros(dimension); e1[0] = 1.0
    e2 = np.zeros(dimension); e2[1] = 1.0
    spec = DescriptorClusterSpec(dimension=dimension, clusters=[
        ClusterSpec("swapped_F", zero, sigma, count),
        ClusterSpec("original_F", c_orig * e1, sigma, count),
        ClusterSpec("original_A", c_target * e2, sigma, count),
    ])
    expected = {
        "intra_mean": intra_mean,
        "swapped_to_original_paired": math.sqrt(c_orig ** 2 + 2 * var),
        "swapped_to_avg_original": to_original_centroid,
        "swapped_to_avg_target": to_target_centroid,
        "original_to_avg_target": math.sqrt(c_orig ** 2 + c_target ** 2 + var),
    }
    return spec, expected


# ---------------------------------------------------------------------------
# Keypoint instances and perturbations
# ---------------------------------------------------------------------------

# Upright COCO17 skeleton template in a unit body box (x right, y down).
_TEMPLATE = np.array([
    [0.50, 0.06],  # nose
    [0.54, 0.04], [0.46, 0.04],  # eyes
    [0.58, 0.06], [0.42, 0.06],  # ears
    [0.66, 0.22], [0.34, 0.22],  # shoulders
    [0.72, 0.40], [0.28, 0.40],  # elbows
    [0.74, 0.57], [0.26, 0.57],  # wrists
    [0.60, 0.55], [0.40, 0.55],  # hips
    [0.58, 0.76], [0.42, 0.76],  # knees
    [0.56, 0.97], [0.44, 0.97],  # ankles
])


@dataclasses.dataclass
class PerturbationModel:
    head_sigma: float = 0.0
    body_sigma: float = 0.0
    head_dropout: float = 0.0
    body_dropout: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.head_sigma) and math.isfinite(self.body_sigma)):
            raise DataError("sigmas must be finite")
        if self.head_sigma < 0 or self.body_sigma < 0:
            raise DataError("sigmas must be >= 0")
        for p in (self.head_dropout, self.body_dropout):
            if not 0 <= p < 1:
                raise DataError("dropout probabilities must lie in [0, 1)")


def gen_keypoint_instances(n: int, frame_size=(640, 480), seed: int = 0,
                           height_range=(200.0, 400.0)) -> list[KeypointInstance]:
    """Plausible upright skeletons: the fixed template under a random
    similarity transform that keeps all points inside the frame."""
    if n < 1:
        raise DataError("need n >= 1 instances")
    rng = np.random.default_rng(seed)
    fw, fh = frame_size
    out = []
    for i in range(n):
        height = rng.uniform(*height_range)
        height = min(height, fh - 2.0, fw - 2.0)
        tx = rng.uniform(1.0, fw - height - 1.0)
        ty = rng.uniform(1.0, fh - height - 1.0)
        pts = np.empty((17, 3))
        pts[:, 0] = tx + height * _TEMPLATE[:, 0]
        pts[:, 1] = ty + height * _TEMPLATE[:, 1]
        pts[:, 2] = rng.uniform(0.5, 1.0, size=17)
        out.append(KeypointInstance(f"frame_{i:05d}", Skeleton.COCO17, pts))
    return out


def perturb_keypoints(instances, model: PerturbationModel, seed: int = 0):
    """Gaussian coordinate noise per group (head vs body) plus optional
    dropout that zeroes the keypoint, mimicking the pose tool's missing
    convention."""
    rng = np.random.default_rng(seed)
    out = []
    for inst in instances:
        if inst.skeleton is not Skeleton.COCO17:
            raise DataError(f"{inst.frame_id!r}: perturbation expects COCO17 instances")
        pts = inst.points.copy()
        for i in range(17):
            head = i in HEAD_KEYPOINTS
            sigma = model.head_sigma if head else model.body_sigma
            drop = model.head_dropout if head else model.body_dropout
            pts[i, 0] += sigma * rng.standard_normal()
            pts[i, 1] += sigma * rng.standard_normal()
            if drop > 0 and rng.uniform() < drop:
                pts[i] = (0.0, 0.0, 0.0)
        out.append(KeypointInstance(inst.frame_id, Skeleton.COCO17, pts))
    return out


# ---------------------------------------------------------------------------
# Two-identity toy face datasets
# ---------------------------------------------------------------------------

@dataclasses.dataclass
class IdentitySpec:
    face_axes: tuple[float, float] = (5.5, 6.5)   # semi-axes in pixels
    eye_dx: float = 2.0
    eye_row: float = 6.0
    mouth_row: float = 11.0
    mouth_curve: float = 1.0
    base_intensity: float = 0.8
    background: float = 0.1
    jitter: float = 0.03


def default_identity_specs() -> tuple[IdentitySpec, IdentitySpec]:
    x = IdentitySpec(face_axes=(4.5, 6.5), eye_dx=2.0, eye_row=5.0,
                     mouth_row=11.0, mouth_curve=-1.2, base_intensity=0.85,
                     background=0.08)
    y = IdentitySpec(face_axes=(7.0, 5.0), eye_dx=3.0, eye_row=6.0,
                     mouth_row=10.0, mouth_curve=1.5, base_intensity=0.45,
                     background=0.22)
    return x, y


def _render_face(spec: IdentitySpec, rng: np.random.Generator | None) -> np.ndarray:
    ax, ay = spec.face_axes
    base = spec.base_intensity
    eye_dx, eye_row = spec.eye_dx, spec.eye_row
    mouth_row, curve = spec.mouth_row, spec.mouth_curve
    if rng is not None and spec.jitter > 0:
        j = spec.jitter
        ax += rng.normal(0, 10 * j)
        ay += rng.normal(0, 10 * j)
        base += rng.normal(0, j)
        eye_row += rng.normal(0, 10 * j)
        mouth_row += rng.normal(0, 10 * j)
        curve += rng.normal(0, 10 * j)
    cx = cy = (IMAGE_SIDE - 1) / 2.0
    yy, xx = np.mgrid[0:IMAGE_SIDE, 0:IMAGE_SIDE].astype(np.float64)
    img = np.full((IMAGE_SIDE, IMAGE_SIDE), spec.background)
    face = ((xx - cx) / max(ax, 1.0)) ** 2 + ((yy - cy) / max(ay, 1.0)) ** 2 <= 1.0
    img[face] = base
    for sign in (-1.0, 1.0):
        ex = int(round(cx + sign * eye_dx))
        ey = int(round(eye_row))
        if 0 <= ex < IMAGE_SIDE and 0 <= ey < IMAGE_SIDE:
            img[ey, ex] = 0.02
    for dx in range(-3, 4):
        mx = int(round(cx + dx))
        my = int(round(mouth_row + curve * (dx / 3.0) ** 2))
        if 0 <= mx < IMAGE_SIDE and 0 <= my < IMAGE_SIDE:
            img[my, mx] = 0.05
    return np.clip(img, 0.0, 1.0)


def gen_identity_dataset(spec_x: IdentitySpec, spec_y: IdentitySpec,
                         n_per_identity: int, seed: int = 0) -> list[TinyFaceSample]:
    """n jittered samples per identity; zero jitter makes all samples of one
    identity identical."""
    if n_per_identity < 1:
        raise DataError("need n_per_identity >= 1")
    rng = np.random.default_rng(seed)
    samples = []
    for identity, spec in (("X", spec_x), ("Y", spec_y)):
        for i in range(n_per_identity):
            pixels = _render_face(spec, rng if spec.jitter > 0 else None)
            samples.append(TinyFaceSample(pixels=pixels, identity=identity,
                                          params={"spec": dataclasses.asdict(spec),
                                                  "index": i}))
    return samples
