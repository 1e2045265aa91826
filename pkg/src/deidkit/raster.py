"""8-bit raster frames and the two classical de-identification transforms.

Frames are stored row-major, channel-interleaved, 1 or 3 channels.
Both transforms are pure: they return a new image and never touch the
input, so they are safe to run concurrently over distinct frames.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DataError


@dataclasses.dataclass(eq=False)
class RasterImage:
    width: int
    height: int
    channels: int
    data: np.ndarray  # uint8, shape (height, width, channels)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise DataError(f"image dimensions must be >= 1, got {self.width}x{self.height}")
        if self.channels not in (1, 3):
            raise DataError(f"unsupported channel count {self.channels} (must be 1 or 3)")
        self.data = np.asarray(self.data, dtype=np.uint8)
        expected = (self.height, self.width, self.channels)
        if self.data.shape != expected:
            raise DataError(f"data shape {self.data.shape} does not match {expected}")

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "RasterImage":
        arr = np.asarray(arr, dtype=np.uint8)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        h, w, c = arr.shape
        return cls(width=w, height=h, channels=c, data=arr)

    def copy(self) -> "RasterImage":
        return RasterImage(self.width, self.height, self.channels, self.data.copy())

    def __eq__(self, other):
        if not isinstance(other, RasterImage):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and self.channels == other.channels
            and np.array_equal(self.data, other.data)
        )


@dataclasses.dataclass(frozen=True)
class FaceBox:
    """Face-detector box; may extend past the frame, the effective region is
    the intersection with image bounds."""

    frame_id: str
    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise DataError(f"box {self.frame_id!r}: w and h must be >= 1, got w={self.w} h={self.h}")

    def clipped(self, img: RasterImage) -> tuple[int, int, int, int]:
        """Intersection with the image as (x0, y0, x1, y1); empty if x0>=x1 or y0>=y1."""
        x0 = max(self.x, 0)
        y0 = max(self.y, 0)
        x1 = min(self.x + self.w, img.width)
        y1 = min(self.y + self.h, img.height)
        return x0, y0, x1, y1


def apply_mask(img: RasterImage, box: FaceBox) -> RasterImage:
    """Black out the box region; pixels outside are untouched."""
    out = img.copy()
    x0, y0, x1, y1 = box.clipped(img)
    if x0 < x1 and y0 < y1:
        out.data[y0:y1, x0:x1, :] = 0
    return out


def blur_kernel_size(w: int, h: int) -> int:
    """Kernel edge for a w*h face box: half the short side, forced odd, >= 1."""
    k = min(w, h) // 2
    if k % 2 == 0:
        k += 1
    return max(1, k)


def apply_blur(img: RasterImage, box: FaceBox) -> RasterImage:
    """Average-filter the box region with a k*k window, k from blur_kernel_size.

    Windows are centered per pixel, clamped to image bounds, and read the
    ORIGINAL image (including pixels outside the box). Means are rounded
    half-up, so results are bit-exact across platforms.
    """
    out = img.copy()
    x0, y0, x1, y1 = box.clipped(img)
    if x0 >= x1 or y0 >= y1:
        return out
    k = blur_kernel_size(box.w, box.h)
    if k == 1:
        return out
    half = k // 2
    h_img, w_img = img.height, img.width
    rows = np.arange(y0, y1)
    cols = np.arange(x0, x1)
    r0 = np.clip(rows - half, 0, h_img)
    r1 = np.clip(rows + half + 1, 0, h_img)
    c0 = np.clip(cols - half, 0, w_img)
    c1 = np.clip(cols + half + 1, 0, w_img)
    counts = (r1 - r0)[:, None] * (c1 - c0)[None, :]
    for ch in range(img.channels):
        integ = np.zeros((h_img + 1, w_img + 1), dtype=np.int64)
        integ[1:, 1:] = img.data[:, :, ch].astype(np.int64).cumsum(0).cumsum(1)
        sums = integ[np.ix_(r1, c1)] - integ[np.ix_(r0, c1)] - integ[np.ix_(r1, c0)] + integ[np.ix_(r0, c0)]
        # integer round-half-up of sums/counts
        out.data[y0:y1, x0:x1, ch] = ((2 * sums + counts) // (2 * counts)).astype(np.uint8)
    return out


# ---------------------------------------------------------------------------
# Lossless raster I/O: binary PPM/PGM (bit-exact golden files) and 8-bit PNG.
# ---------------------------------------------------------------------------

def _parse_pnm(raw: bytes, path: str) -> RasterImage:
    magic = raw[:2]
    if magic not in (b"P5", b"P6"):
        raise DataError(f"{path}: not a binary PGM/PPM file (magic {magic!r})")
    channels = 1 if magic == b"P5" else 3
    pos = 2
    fields = []
    while len(fields) < 3:
        if pos >= len(raw):
            raise DataError(f"{path}: truncated header at byte {pos}")
        ch = raw[pos:pos + 1]
        if ch == b"#":
            nl = raw.find(b"\n", pos)
            if nl < 0:
                raise DataError(f"{path}: unterminated comment at byte {pos}")
            pos = nl + 1
        elif ch.isspace():
            pos += 1
        elif ch.isdigit():
            start = pos
            while pos < len(raw) and raw[pos:pos + 1].isdigit():
                pos += 1
            fields.append(int(raw[start:pos]))
        else:
            raise DataError(f"{path}: unexpected byte {ch!r} in header at byte {pos}")
    width, height, maxval = fields
    if maxval != 255:
        raise DataError(f"{path}: only maxval 255 supported, got {maxval}")
    pos += 1  # single whitespace byte separates header and pixel data
    expected = width * height * channels
    pixels = raw[pos:pos + expected]
    if len(pixels) != expected:
        raise DataError(
            f"{path}: truncated pixel data at byte {pos + len(pixels)}: "
            f"expected {expected} bytes, got {len(pixels)}"
        )
    arr = np.frombuffer(pixels, dtype=np.uint8).reshape(height, width, channels)
    return RasterImage(width, height, channels, arr.copy())


def _pnm_bytes(img: RasterImage) -> bytes:
    magic = b"P5" if img.channels == 1 else b"P6"
    header = magic + b"\n%d %d\n255\n" % (img.width, img.height)
    return header + img.data.tobytes()


def read_raster(path: str | Path) -> RasterImage:
    path = Path(path)
    suffix = path.suffix.lower()
    if not path.exists():
        raise DataError(f"{path}: file not found")
    if suffix in (".ppm", ".pgm"):
        return _parse_pnm(path.read_bytes(), str(path))
    if suffix == ".png":
        try:
            with Image.open(path) as im:
                im.load()
                if im.mode == "L":
                    arr = np.asarray(im, dtype=np.uint8)[:, :, None]
                elif im.mode == "RGB":
                    arr = np.asarray(im, dtype=np.uint8)
                else:
                    raise DataError(f"{path}: unsupported PNG mode {im.mode} (need 8-bit L or RGB)")
        except UnidentifiedImageError as exc:
            raise DataError(f"{path}: not a valid PNG file") from exc
        h, w, c = arr.shape
        return RasterImage(w, h, c, arr)
    raise DataError(f"{path}: unsupported raster format {suffix!r} (use .ppm/.pgm/.png)")


def write_raster(img: RasterImage, path: str | Path) -> None:
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".ppm":
        if img.channels != 3:
            raise DataError(f"{path}: PPM requires 3 channels, image has {img.channels}")
        path.write_bytes(_pnm_bytes(img))
    elif suffix == ".pgm":
        if img.channels != 1:
            raise DataError(f"{path}: PGM requires 1 channel, image has {img.channels}")
        path.write_bytes(_pnm_bytes(img))
    elif suffix == ".png":
        mode = "L" if img.channels == 1 else "RGB"
        arr = img.data[:, :, 0] if img.channels == 1 else img.data
        Image.fromarray(arr, mode=mode).save(path, format="PNG")
    else:
        raise DataError(f"{path}: unsupported raster format {suffix!r} (use .ppm/.pgm/.png)")
