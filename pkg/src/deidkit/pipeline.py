"""Pipeline orchestration: de-identification passes over frame
directories, metric evaluation across pose/descriptor sidecars, the
bundled synthetic dataset, and the end-to-end run.

Configuration errors are raised before any output file is created.
Per-frame work is pure, so stages could run concurrently; the default
single-threaded order is kept for bit-reproducible outputs.
"""

from __future__ import annotations

import configparser
import dataclasses
from pathlib import Path

import numpy as np

from . import identity as idm
from . import keypoints as kpm
from . import report as rpt
from . import synth
from .errors import ConfigError, DataError
from .formats import (
    parse_descriptor_csv,
    parse_facebox_manifest,
    parse_pairing_csv,
    parse_pose_json,
    write_descriptor_csv,
    write_facebox_manifest,
    write_pairing_csv,
    write_pose_json,
)
from .raster import FaceBox, RasterImage, apply_blur, apply_mask, read_raster, write_raster

RASTER_SUFFIXES = (".png", ".ppm", ".pgm")


@dataclasses.dataclass
class PipelineConfig:
    frames_dir: Path | None = None
    out_dir: Path | None = None
    facebox_manifest: Path | None = None
    pose_original_dir: Path | None = None
    pose_method_dirs: dict[str, Path] = dataclasses.field(default_factory=dict)
    descriptors_csv: Path | None = None
    pairing_csv: Path | None = None
    target_subset: str | None = None
    mode: str = "fraction"
    select_largest: bool = False
    oks: kpm.OksConfig = dataclasses.field(default_factory=kpm.OksConfig)
    seed: int = 0


_KNOWN_KEYS = {
    "paths": {"frames_dir", "out_dir", "facebox_manifest", "pose_original_dir",
              "descriptors_csv", "pairing_csv"},
    "oks": {"scale_factor", "visibility_threshold", "thresholds", "kappas"},
    "eval": {"mode", "select_largest", "target_subset"},
    "run": {"seed"},
}


def load_config(path: str | Path) -> PipelineConfig:
    """Parse the flat key-value config file; unknown sections or keys are
    errors, not warnings."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"{path}: config file not found")
    parser = configparser.ConfigParser()
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: malformed config: {exc}") from exc
    for section in parser.sections():
        if section == "pose_methods":
            continue
        if section not in _KNOWN_KEYS:
            raise ConfigError(f"{path}: unknown section [{section}]")
        unknown = set(parser[section]) - _KNOWN_KEYS[section]
        if unknown:
            raise ConfigError(f"{path}: unknown keys in [{section}]: {sorted(unknown)}")
    cfg = PipelineConfig()
    paths = parser["paths"] if parser.has_section("paths") else {}
    for key in ("frames_dir", "out_dir", "facebox_manifest", "pose_original_dir",
                "descriptors_csv", "pairing_csv"):
        if key in paths:
            setattr(cfg, key if key != "pose_original_dir" else "pose_original_dir",
                    Path(paths[key]))
    if parser.has_section("pose_methods"):
        cfg.pose_method_dirs = {name: Path(v) for name, v in parser["pose_methods"].items()}
    oks_kwargs = {}
    if parser.has_section("oks"):
        sec = parser["oks"]
        if "scale_factor" in sec:
            oks_kwargs["scale_factor"] = float(sec["scale_factor"])
        if "visibility_threshold" in sec:
            oks_kwargs["visibility_threshold"] = float(sec["visibility_threshold"])
        if "thresholds" in sec:
            oks_kwargs["thresholds"] = tuple(float(v) for v in sec["thresholds"].split(","))
        if "kappas" in sec:
            oks_kwargs["kappas"] = np.array([float(v) for v in sec["kappas"].split(",")])
    cfg.oks = kpm.OksConfig(**oks_kwargs)
    if parser.has_section("eval"):
        sec = parser["eval"]
        if "mode" in sec:
            if sec["mode"] not in ("fraction", "ranked"):
                raise ConfigError(f"{path}: eval.mode must be fraction or ranked")
            cfg.mode = sec["mode"]
        if "select_largest" in sec:
            cfg.select_largest = sec.getboolean("select_largest")
        if "target_subset" in sec:
            cfg.target_subset = sec["target_subset"]
    if parser.has_section("run") and "seed" in parser["run"]:
        cfg.seed = int(parser["run"]["seed"])
    return cfg


# ---------------------------------------------------------------------------
# De-identification pass
# ---------------------------------------------------------------------------

@dataclasses.dataclass
class DeidLog:
    method: str
    processed: int
    skipped: int
    skipped_ids: list[str]


def list_frames(frames_dir: Path) -> list[Path]:
    if not frames_dir.is_dir():
        raise ConfigError(f"{frames_dir}: frames directory not found")
    return sorted(p for p in frames_dir.iterdir() if p.suffix.lower() in RASTER_SUFFIXES)


def run_deid(frames_dir: str | Path, manifest_path: str | Path,
             out_dir: str | Path, method: str) -> DeidLog:
    """Apply mask or blur to every frame that has a manifest box; frames
    without one are skipped and logged."""
    if method not in ("mask", "blur"):
        raise ConfigError(f"unknown de-identification method {method!r}")
    frames_dir = Path(frames_dir)
    out_dir = Path(out_dir)
    frames = list_frames(frames_dir)
    if not frames:
        raise DataError(f"{frames_dir}: no raster frames found")
    boxes = parse_facebox_manifest(manifest_path)
    transform = apply_mask if method == "mask" else apply_blur
    out_dir.mkdir(parents=True, exist_ok=True)
    processed = 0
    skipped_ids = []
    for frame_path in frames:
        frame_id = frame_path.stem
        box = boxes.get(frame_id)
        if box is None:
            skipped_ids.append(frame_id)
            continue
        img = read_raster(frame_path)
        write_raster(transform(img, box), out_dir / frame_path.name)
        processed += 1
    return DeidLog(method=method, processed=processed, skipped=len(skipped_ids),
                   skipped_ids=skipped_ids)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _load_pose_dir(pose_dir: Path, select_largest: bool) -> dict[str, kpm.KeypointInstance]:
    if not pose_dir.is_dir():
        raise ConfigError(f"{pose_dir}: pose directory not found")
    instances = {}
    for path in sorted(pose_dir.glob("*.json")):
        inst = parse_pose_json(path, select_largest=select_largest)
        if inst.skeleton is kpm.Skeleton.BODY25:
            inst = kpm.map_body25_to_coco17(inst)
        instances[inst.frame_id] = inst
    if not instances:
        raise DataError(f"{pose_dir}: no pose JSON files found")
    return instances


def evaluate_pose_dirs(original_dir: str | Path, method_dirs: dict[str, Path],
                       cfg: kpm.OksConfig, mode: str = "fraction",
                       select_largest: bool = False) -> dict:
    """Frame-id join of original (ground truth) vs each method's detections,
    then OKS evaluation per method. Unmatched frame ids are excluded and
    counted."""
    if not method_dirs:
        raise ConfigError("need at least one method pose directory")
    original = _load_pose_dir(Path(original_dir), select_largest)
    section = {}
    for method in sorted(method_dirs):
        detections = _load_pose_dir(Path(method_dirs[method]), select_largest)
        shared = sorted(set(original) & set(detections))
        if not shared:
            raise DataError(f"method {method!r}: no frame ids in common with the originals")
        pairs = [(original[fid], detections[fid]) for fid in shared]
        summary = kpm.evaluate_set(pairs, cfg, mode=mode)
        entry = rpt.summary_to_jsonable(summary, mode)
        entry["joined_frames"] = len(shared)
        entry["unmatched_frames"] = len(set(original) ^ set(detections))
        section[method] = entry
    return section


def evaluate_identity(descriptors_csv: str | Path, pairing_csv: str | Path,
                      target_subset: str) -> dict:
    """Distance table, ROC/AUC and threshold matching over swapped subsets."""
    descriptors = parse_descriptor_csv(descriptors_csv)
    pairing = parse_pairing_csv(pairing_csv)
    by_subset: dict[str, list] = {}
    for d in descriptors:
        by_subset.setdefault(d.subset, []).append(d)
    if target_subset not in by_subset:
        raise ConfigError(f"target subset {target_subset!r} not present in descriptors")
    table = idm.distance_table(by_subset, pairing, target_subset)
    original_of = idm.default_original_of(by_subset)
    centroids = {label: idm.centroid(members) for label, members in by_subset.items()}
    genuine = []
    impostor = []
    matches_target = 0
    matches_original = 0
    total = 0
    for swapped_label, orig_label in sorted(original_of.items()):
        for d in by_subset[swapped_label]:
            dist_target = idm.euclidean_distance(d.vector, centroids[target_subset])
            dist_orig = idm.euclidean_distance(d.vector, centroids[orig_label])
            genuine.append(dist_target)
            impostor.append(dist_orig)
            matches_target += dist_target < idm.DEFAULT_MATCH_THRESHOLD
            matches_original += dist_orig < idm.DEFAULT_MATCH_THRESHOLD
            total += 1
    section = {"distance_table": rpt.distance_report_to_jsonable(table),
               "cluster_separation": idm.cluster_separation(by_subset)}
    if genuine:
        curve = idm.roc(genuine, impostor)
        section["roc"] = rpt.roc_to_jsonable(curve)
        section["verify"] = {"threshold": idm.DEFAULT_MATCH_THRESHOLD,
                             "matches_target": matches_target,
                             "matches_original": matches_original,
                             "total": total}
    return section


# ---------------------------------------------------------------------------
# Bundled synthetic dataset and the end-to-end run
# ---------------------------------------------------------------------------

N_SYNTH_FRAMES = 8
N_SYNTH_POSES = 60
N_SYNTH_DESCRIPTORS = 150

SWAP_LIKE = synth.PerturbationModel(head_sigma=0.5, body_sigma=0.5)
MASK_LIKE = synth.PerturbationModel(head_sigma=25.0, body_sigma=0.5)
BLUR_LIKE = synth.PerturbationModel(head_sigma=25.0, body_sigma=0.5)


def gen_synthetic_dataset(out_dir: str | Path, seed: int) -> dict[str, Path]:
    """Write the bundled synthetic dataset: frames with face boxes (one
    frame deliberately lacks a box to exercise skip logging), original and
    perturbed pose JSONs for the three de-identification conditions, and a
    descriptor CSV with frame pairing."""
    out_dir = Path(out_dir)
    rng = np.random.default_rng(seed)
    frames_dir = out_dir / "frames"
    frames_dir.mkdir(parents=True, exist_ok=True)
    boxes = {}
    for i in range(N_SYNTH_FRAMES):
        frame_id = f"frame_{i:05d}"
        arr = rng.integers(0, 256, size=(64, 64, 3), dtype=np.uint8)
        write_raster(RasterImage.from_array(arr), frames_dir / f"{frame_id}.png")
        if i != N_SYNTH_FRAMES - 1:  # last frame has no face box
            boxes[frame_id] = FaceBox(frame_id=frame_id, x=14 + int(rng.integers(0, 8)),
                                      y=10 + int(rng.integers(0, 8)), w=24, h=28)
    manifest = out_dir / "faceboxes.csv"
    write_facebox_manifest(boxes, manifest)

    originals = synth.gen_keypoint_instances(N_SYNTH_POSES, seed=seed + 1)
    pose_dirs = {"original": originals,
                 "swap": synth.perturb_keypoints(originals, SWAP_LIKE, seed=seed + 2),
                 "mask": synth.perturb_keypoints(originals, MASK_LIKE, seed=seed + 3),
                 "blur": synth.perturb_keypoints(originals, BLUR_LIKE, seed=seed + 4)}
    paths = {"frames_dir": frames_dir, "facebox_manifest": manifest}
    for name, instances in pose_dirs.items():
        pose_dir = out_dir / "poses" / name
        pose_dir.mkdir(parents=True, exist_ok=True)
        for inst in instances:
            write_pose_json(inst, pose_dir / f"{inst.frame_id}.json")
        paths[f"pose_{name}_dir"] = pose_dir

    spec, _ = synth.table1_cluster_spec(count=N_SYNTH_DESCRIPTORS)
    descriptors = synth.gen_descriptor_clusters(spec, seed=seed + 5)
    descriptors_csv = out_dir / "descriptors.csv"
    write_descriptor_csv(descriptors, descriptors_csv)
    pairing_csv = out_dir / "pairing.csv"
    write_pairing_csv(synth.frame_pairing("swapped_F", "original_F", N_SYNTH_DESCRIPTORS),
                      pairing_csv)
    paths["descriptors_csv"] = descriptors_csv
    paths["pairing_csv"] = pairing_csv
    return paths


def run_all(out_dir: str | Path, seed: int = 0,
            oks_cfg: kpm.OksConfig | None = None, mode: str = "fraction") -> dict:
    """Synthetic dataset -> mask/blur passes -> keypoint and identity
    evaluation -> report JSON, CSV and SVG plots. Deterministic given the
    seed: rerunning produces byte-identical outputs."""
    out_dir = Path(out_dir)
    oks_cfg = oks_cfg or kpm.OksConfig()
    paths = gen_synthetic_dataset(out_dir / "synth", seed)
    deid_section = {}
    for method in ("mask", "blur"):
        log = run_deid(paths["frames_dir"], paths["facebox_manifest"],
                       out_dir / "deid" / method, method)
        deid_section[method] = {"processed": log.processed, "skipped": log.skipped,
                                "skipped_ids": log.skipped_ids,
                                "input_frames": log.processed + log.skipped}
    method_dirs = {name: paths[f"pose_{name}_dir"] for name in ("swap", "mask", "blur")}
    keypoints_section = evaluate_pose_dirs(paths["pose_original_dir"], method_dirs,
                                           oks_cfg, mode=mode)
    identity_section = evaluate_identity(paths["descriptors_csv"], paths["pairing_csv"],
                                         target_subset="original_A")
    provenance = {
        "seed": seed,
        "mode": mode,
        "config_hash": rpt.config_hash({"seed": seed, "mode": mode,
                                        "thresholds": list(oks_cfg.thresholds),
                                        "scale_factor": oks_cfg.scale_factor}),
        "input_counts": {"frames": N_SYNTH_FRAMES, "poses": N_SYNTH_POSES,
                         "descriptors_per_subset": N_SYNTH_DESCRIPTORS},
    }
    report = rpt.build_report(provenance, deid=deid_section,
                              keypoints=keypoints_section, identity=identity_section)
    report_dir = out_dir / "report"
    report_dir.mkdir(parents=True, exist_ok=True)
    rpt.emit_report(report, report_dir / "report.json", format="json")
    rpt.emit_report(report, report_dir / "report.csv", format="csv")
    rpt.emit_plots(report, report_dir / "plots")
    return report
