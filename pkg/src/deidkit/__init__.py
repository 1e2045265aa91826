"""deidkit: face de-identification transforms and evaluation metrics."""

from .errors import ConfigError, DataError, DeidError
from .raster import FaceBox, RasterImage, apply_blur, apply_mask, read_raster, write_raster
from .keypoints import (
    KeypointInstance,
    OksConfig,
    OksResult,
    Skeleton,
    estimate_scale,
    evaluate_set,
    keypoint_similarity,
    map_body25_to_coco17,
    oks,
    per_keypoint_distribution,
)
from .identity import (
    FaceDescriptor,
    centroid,
    cluster_separation,
    distance_table,
    euclidean_distance,
    intra_stats,
    pca_embed_2d,
    roc,
    verify_identity,
)
from .faceswap import (
    SwapModel,
    TinyFaceSample,
    TrainConfig,
    decode,
    encode,
    init_model,
    reconstruction_loss,
    swap,
    train,
    train_step,
)

__version__ = "0.1.0"
