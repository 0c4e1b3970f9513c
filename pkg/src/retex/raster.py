"""Core raster types, color conversion, cropping, and PNG I/O.

All raster types are immutable after construction: the backing numpy
arrays are copied in and marked non-writeable, so instances are safe to
share across threads.
"""

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (
    OutOfBounds,
    UnknownClass,
    UnknownLabelValue,
    UnreadableFile,
    UnsupportedFormat,
    ZeroDimension,
)

# ITU-R BT.601 luma coefficients.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def _check_dims(height: int, width: int) -> None:
    if height < 1 or width < 1:
        raise ZeroDimension(f"raster dimensions must be >= 1, got {width}x{height}")


@dataclass(frozen=True, eq=False)
class RasterImage:
    """8-bit RGB image; ``pixels`` has shape (height, width, 3)."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError(f"expected (h, w, 3) pixel array, got shape {px.shape}")
        _check_dims(px.shape[0], px.shape[1])
        if px.dtype != np.uint8:
            if np.any((px < 0) | (px > 255)):
                raise ValueError("channel values must lie in [0, 255]")
        object.__setattr__(self, "pixels", _freeze(px.astype(np.uint8, copy=True)))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True, eq=False)
class GrayRaster:
    """Luminance raster; ``values`` has shape (height, width), range [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError(f"expected (h, w) value array, got shape {v.shape}")
        _check_dims(v.shape[0], v.shape[1])
        if not np.all(np.isfinite(v)) or v.min() < 0.0 or v.max() > 1.0:
            raise ValueError("luminance values must be finite and in [0, 1]")
        object.__setattr__(self, "values", _freeze(v.copy()))

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class MaskRaster:
    """Boolean raster; ``bits`` has shape (height, width)."""

    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits)
        if b.ndim != 2:
            raise ValueError(f"expected (h, w) bit array, got shape {b.shape}")
        _check_dims(b.shape[0], b.shape[1])
        object.__setattr__(self, "bits", _freeze(b.astype(bool, copy=True)))

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    def true_count(self) -> int:
        return int(self.bits.sum())


@dataclass(frozen=True, eq=False)
class LabelRaster:
    """Per-pixel class labels plus the class-id-to-name table."""

    labels: np.ndarray
    class_names: dict[int, str]

    def __post_init__(self):
        lab = np.asarray(self.labels)
        if lab.ndim != 2:
            raise ValueError(f"expected (h, w) label array, got shape {lab.shape}")
        _check_dims(lab.shape[0], lab.shape[1])
        names = {int(k): str(v) for k, v in self.class_names.items()}
        present = set(np.unique(lab).tolist())
        missing = present - set(names)
        if missing:
            raise UnknownLabelValue(f"label values {sorted(missing)} not in class map")
        object.__setattr__(self, "labels", _freeze(lab.astype(np.uint8, copy=True)))
        object.__setattr__(self, "class_names", names)

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    def class_id(self, name: str) -> int:
        """Look up a class id by name."""
        for cid, cname in self.class_names.items():
            if cname == name:
                return cid
        raise UnknownClass(f"no class named {name!r}")


def _png_header_dims(path: Path) -> tuple[int, int] | None:
    """Return (width, height) from a PNG IHDR chunk, or None if not a PNG."""
    try:
        with open(path, "rb") as fh:
            head = fh.read(24)
    except OSError as exc:
        raise UnreadableFile(f"cannot read {path}: {exc}") from exc
    if len(head) < 24 or not head.startswith(_PNG_SIGNATURE):
        return None
    width, height = struct.unpack(">II", head[16:24])
    return width, height


def _open_png(path: str | Path) -> Image.Image:
    p = Path(path)
    if not p.is_file():
        raise UnreadableFile(f"no such file: {p}")
    dims = _png_header_dims(p)
    if dims is not None and (dims[0] == 0 or dims[1] == 0):
        raise ZeroDimension(f"{p} declares {dims[0]}x{dims[1]} dimensions")
    try:
        img = Image.open(p)
        img.load()
    except UnidentifiedImageError as exc:
        raise UnsupportedFormat(f"{p} is not a supported raster file") from exc
    except OSError as exc:
        raise UnreadableFile(f"cannot read {p}: {exc}") from exc
    if img.format != "PNG":
        raise UnsupportedFormat(f"{p} is {img.format}, expected PNG")
    return img


def load_image(path: str | Path) -> RasterImage:
    """Load an 8-bit RGB(A) PNG; alpha is ignored."""
    img = _open_png(path)
    if img.mode not in ("RGB", "RGBA"):
        raise UnsupportedFormat(f"{path}: mode {img.mode}, expected RGB or RGBA")
    arr = np.asarray(img)[:, :, :3]
    return RasterImage(arr)


def save_image(img: RasterImage, path: str | Path) -> None:
    """Write a lossless RGB PNG."""
    Image.fromarray(img.pixels, mode="RGB").save(Path(path), format="PNG")


def load_mask(path: str | Path) -> MaskRaster:
    """Load an 8-bit grayscale PNG as a mask; nonzero pixels are true."""
    img = _open_png(path)
    if img.mode != "L":
        raise UnsupportedFormat(f"{path}: mode {img.mode}, expected 8-bit grayscale")
    return MaskRaster(np.asarray(img) != 0)


def save_mask(mask: MaskRaster, path: str | Path) -> None:
    """Write a mask as an 8-bit grayscale PNG (true -> 255)."""
    arr = np.where(mask.bits, 255, 0).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(Path(path), format="PNG")


def load_labels(path: str | Path, class_map: dict[int, str]) -> LabelRaster:
    """Load an 8-bit single-channel or palette PNG as a label raster.

    Every pixel value must appear in ``class_map``; otherwise
    UnknownLabelValue is raised.
    """
    img = _open_png(path)
    if img.mode not in ("L", "P"):
        raise UnsupportedFormat(f"{path}: mode {img.mode}, expected L or P")
    arr = np.asarray(img, dtype=np.uint8)
    return LabelRaster(arr, class_map)


def save_labels(labels: LabelRaster, path: str | Path) -> None:
    """Write a label raster as an 8-bit grayscale PNG of raw class ids."""
    Image.fromarray(labels.labels, mode="L").save(Path(path), format="PNG")


def to_grayscale(img: RasterImage) -> GrayRaster:
    """Convert to luminance in [0, 1] using BT.601 coefficients."""
    px = img.pixels.astype(np.float64)
    wr, wg, wb = LUMA_WEIGHTS
    g = (wr * px[:, :, 0] + wg * px[:, :, 1] + wb * px[:, :, 2]) / 255.0
    return GrayRaster(np.clip(g, 0.0, 1.0))


def mask_from_labels(labels: LabelRaster, target_class: int) -> MaskRaster:
    """Mask that is true exactly where the label equals ``target_class``."""
    if int(target_class) not in labels.class_names:
        raise UnknownClass(f"class id {target_class} not in class map")
    return MaskRaster(labels.labels == int(target_class))


def crop(img: RasterImage, x: int, y: int, w: int, h: int) -> RasterImage:
    """Extract the w x h sub-image with top-left corner (x, y)."""
    if w < 1 or h < 1:
        raise ZeroDimension(f"crop dimensions must be >= 1, got {w}x{h}")
    if x < 0 or y < 0 or x + w > img.width or y + h > img.height:
        raise OutOfBounds(
            f"crop ({x},{y},{w},{h}) exceeds image {img.width}x{img.height}"
        )
    return RasterImage(img.pixels[y : y + h, x : x + w])


def bilinear_resize(values: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize a (h, w) or (h, w, c) float array with bilinear sampling.

    Uses pixel-center alignment: output center (i + .5) maps to input
    coordinate (i + .5) * scale - .5, clamped at the edges. Resizing to
    the same shape is exact identity.
    """
    src = np.asarray(values, dtype=np.float64)
    h, w = src.shape[0], src.shape[1]
    ys = (np.arange(out_h) + 0.5) * (h / out_h) - 0.5
    xs = (np.arange(out_w) + 0.5) * (w / out_w) - 0.5
    y0 = np.clip(np.floor(ys).astype(np.int64), 0, h - 1)
    x0 = np.clip(np.floor(xs).astype(np.int64), 0, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = np.clip(ys - y0, 0.0, 1.0)
    fx = np.clip(xs - x0, 0.0, 1.0)
    if src.ndim == 2:
        top = src[y0[:, None], x0] * (1 - fx) + src[y0[:, None], x1] * fx
        bot = src[y1[:, None], x0] * (1 - fx) + src[y1[:, None], x1] * fx
        return top * (1 - fy[:, None]) + bot * fy[:, None]
    fx3 = fx[None, :, None]
    fy3 = fy[:, None, None]
    top = src[y0[:, None], x0] * (1 - fx3) + src[y0[:, None], x1] * fx3
    bot = src[y1[:, None], x0] * (1 - fx3) + src[y1[:, None], x1] * fx3
    return top * (1 - fy3) + bot * fy3
