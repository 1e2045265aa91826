"""Sidecar file formats: pose JSON, face-box manifest, descriptor and
pairing CSVs, and the swap-model checkpoint.

Synthetic generators emit exactly these formats, so synthetic and real
data flow through identical parsing code. All writers are deterministic:
floats use shortest round-trip decimals and rows are emitted in input
order.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

from .errors import DataError
from .faceswap import PARAM_NAMES, SwapModel
from .identity import FaceDescriptor
from .keypoints import KeypointInstance, Skeleton
from .raster import FaceBox

POSE_JSON_VERSION = 1.3


# ---------------------------------------------------------------------------
# Pose JSON (pose-tool-compatible)
# ---------------------------------------------------------------------------

def parse_pose_json(path: str | Path, select_largest: bool = False) -> KeypointInstance:
    """Read one person's keypoints from a pose-tool JSON file.

    The file holds `people`, each with a flat `pose_keypoints_2d` array of
    (x, y, c) triples; 25 triples mean BODY25, 17 mean COCO17. Multiple
    people are an error unless select_largest picks the one with the
    largest keypoint bounding box. The frame id is the filename stem.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise DataError(f"{path}: file not found") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: malformed JSON: {exc}") from exc
    people = doc.get("people")
    if not isinstance(people, list) or not people:
        raise DataError(f"{path}: no people in pose file")
    if len(people) > 1 and not select_largest:
        raise DataError(f"{path}: {len(people)} people found; pass select_largest to pick one")

    def unflatten(person):
        flat = person.get("pose_keypoints_2d")
        if not isinstance(flat, list) or len(flat) % 3 != 0:
            raise DataError(f"{path}: pose_keypoints_2d must be a flat list of triples")
        return np.asarray(flat, dtype=np.float64).reshape(-1, 3)

    candidates = [unflatten(p) for p in people]
    counts = {c.shape[0] for c in candidates}
    if counts - {17, 25}:
        raise DataError(f"{path}: unexpected keypoint count {sorted(counts - {17, 25})}")

    def bbox_area(pts):
        vis = pts[:, 2] > 0
        if not vis.any():
            return 0.0
        xs, ys = pts[vis, 0], pts[vis, 1]
        return float((xs.max() - xs.min()) * (ys.max() - ys.min()))

    pts = max(candidates, key=bbox_area)
    skeleton = Skeleton.BODY25 if pts.shape[0] == 25 else Skeleton.COCO17
    if np.any(pts[:, 2] < 0) or np.any(pts[:, 2] > 1):
        raise DataError(f"{path}: confidences must lie in [0, 1]")
    return KeypointInstance(frame_id=path.stem, skeleton=skeleton, points=pts)


def write_pose_json(instance: KeypointInstance, path: str | Path) -> None:
    flat = [float(v) for row in instance.points for v in row]
    doc = {"version": POSE_JSON_VERSION,
           "people": [{"pose_keypoints_2d": flat}]}
    Path(path).write_text(json.dumps(doc, sort_keys=True), encoding="utf-8")


# ---------------------------------------------------------------------------
# Face-box manifest CSV: frame_id,x,y,w,h
# ---------------------------------------------------------------------------

FACEBOX_HEADER = ["frame_id", "x", "y", "w", "h"]


def parse_facebox_manifest(path: str | Path) -> dict[str, FaceBox]:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except FileNotFoundError as exc:
        raise DataError(f"{path}: file not found") from exc
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration as exc:
        raise DataError(f"{path}: empty manifest") from exc
    if header != FACEBOX_HEADER:
        raise DataError(f"{path}: bad header {header!r}, expected {FACEBOX_HEADER!r}")
    boxes: dict[str, FaceBox] = {}
    for lineno, row in enumerate(reader, start=2):
        if len(row) != 5:
            raise DataError(f"{path}:{lineno}: expected 5 columns, got {len(row)}")
        frame_id = row[0]
        if frame_id in boxes:
            raise DataError(f"{path}:{lineno}: duplicate frame_id {frame_id!r}")
        try:
            x, y, w, h = (int(v) for v in row[1:])
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: non-integer box field in {row!r}") from exc
        boxes[frame_id] = FaceBox(frame_id=frame_id, x=x, y=y, w=w, h=h)
    return boxes


def write_facebox_manifest(boxes: dict[str, FaceBox], path: str | Path) -> None:
    lines = [",".join(FACEBOX_HEADER)]
    for frame_id in boxes:
        b = boxes[frame_id]
        lines.append(f"{frame_id},{b.x},{b.y},{b.w},{b.h}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Descriptor CSV: id,subset,d0..d{D-1} and pairing CSV: swapped_id,original_id
# ---------------------------------------------------------------------------

def parse_descriptor_csv(path: str | Path) -> list[FaceDescriptor]:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except FileNotFoundError as exc:
        raise DataError(f"{path}: file not found") from exc
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration as exc:
        raise DataError(f"{path}: empty descriptor file") from exc
    if len(header) < 3 or header[:2] != ["id", "subset"]:
        raise DataError(f"{path}: bad header, expected id,subset,d0,...")
    dim = len(header) - 2
    if header[2:] != [f"d{i}" for i in range(dim)]:
        raise DataError(f"{path}: descriptor columns must be d0..d{dim - 1}")
    out = []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != dim + 2:
            raise DataError(f"{path}:{lineno}: expected {dim + 2} columns, got {len(row)}")
        try:
            vec = np.array([float(v) for v in row[2:]])
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: non-numeric descriptor value") from exc
        out.append(FaceDescriptor(id=row[0], subset=row[1], vector=vec))
    return out


def write_descriptor_csv(descriptors: list[FaceDescriptor], path: str | Path) -> None:
    if not descriptors:
        raise DataError("no descriptors to write")
    dim = descriptors[0].vector.size
    lines = ["id,subset," + ",".join(f"d{i}" for i in range(dim))]
    for d in descriptors:
        if d.vector.size != dim:
            raise DataError(f"descriptor {d.id!r}: dimension {d.vector.size} != {dim}")
        lines.append(f"{d.id},{d.subset}," + ",".join(repr(float(v)) for v in d.vector))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def parse_pairing_csv(path: str | Path) -> dict[str, str]:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except FileNotFoundError as exc:
        raise DataError(f"{path}: file not found") from exc
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration as exc:
        raise DataError(f"{path}: empty pairing file") from exc
    if header != ["swapped_id", "original_id"]:
        raise DataError(f"{path}: bad header {header!r}")
    pairing = {}
    for lineno, row in enumerate(reader, start=2):
        if len(row) != 2:
            raise DataError(f"{path}:{lineno}: expected 2 columns")
        if row[0] in pairing:
            raise DataError(f"{path}:{lineno}: duplicate swapped_id {row[0]!r}")
        pairing[row[0]] = row[1]
    return pairing


def write_pairing_csv(pairing: dict[str, str], path: str | Path) -> None:
    lines = ["swapped_id,original_id"]
    for swapped_id in pairing:
        lines.append(f"{swapped_id},{pairing[swapped_id]}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Swap-model checkpoint: versioned binary dump, bit-exact round trip
# ---------------------------------------------------------------------------

_CKPT_MAGIC = b"SWAPCKPT"
_CKPT_VERSION = 1


def save_checkpoint(model: SwapModel, path: str | Path) -> None:
    parts = [_CKPT_MAGIC,
             struct.pack("<Iq I", _CKPT_VERSION, model.seed, len(model.params))]
    for name in PARAM_NAMES:
        tensor = np.ascontiguousarray(model.params[name], dtype="<f8")
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<I", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<I", tensor.ndim))
        parts.append(struct.pack(f"<{tensor.ndim}I", *tensor.shape))
        parts.append(tensor.tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_checkpoint(path: str | Path) -> SwapModel:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except FileNotFoundError as exc:
        raise DataError(f"{path}: file not found") from exc
    if raw[:8] != _CKPT_MAGIC:
        raise DataError(f"{path}: not a swap-model checkpoint")
    pos = 8
    try:
        version, seed, n_tensors = struct.unpack_from("<Iq I", raw, pos)
        pos += struct.calcsize("<Iq I")
        if version != _CKPT_VERSION:
            raise DataError(f"{path}: unsupported checkpoint version {version}")
        params = {}
        for _ in range(n_tensors):
            (name_len,) = struct.unpack_from("<I", raw, pos)
            pos += 4
            name = raw[pos:pos + name_len].decode("utf-8")
            pos += name_len
            (ndim,) = struct.unpack_from("<I", raw, pos)
            pos += 4
            shape = struct.unpack_from(f"<{ndim}I", raw, pos)
            pos += 4 * ndim
            count = int(np.prod(shape)) if shape else 1
            tensor = np.frombuffer(raw, dtype="<f8", count=count, offset=pos).reshape(shape)
            pos += count * 8
            params[name] = tensor.copy()
    except (struct.error, ValueError) as exc:
        raise DataError(f"{path}: truncated checkpoint at byte {pos}") from exc
    missing = set(PARAM_NAMES) - set(params)
    if missing:
        raise DataError(f"{path}: checkpoint missing tensors {sorted(missing)}")
    return SwapModel(params=params, seed=seed)
