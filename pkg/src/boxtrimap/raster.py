"""Pixel grids, box geometry, resampling and the on-disk mask/probability codecs.

Conventions used throughout the package:

* arrays are row-major ``(height, width[, channels])`` numpy arrays;
* boxes are real-valued ``[x0, x1) x [y0, y1)`` rectangles, origin top-left;
* a box is rasterized with ``origin = floor(x0)`` and ``size = round(width)``
  (half rounds up), never smaller than one pixel;
* bilinear sampling maps output sample ``i`` to source ``(i + 0.5) * scale - 0.5``
  (pixel-centre alignment) with edge clamping, unless ``align_corners`` is set.
"""
from __future__ import annotations

import enum
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Tuple, Union

import numpy as np
from PIL import Image

from .errors import BoxOutsideImage, CorruptMask, CorruptProbMap

PathLike = Union[str, Path]

PMAP_MAGIC = b"PMAP"
_PMAP_HEADER = struct.Struct("<4sII")

# palette index -> RGB
TRIMAP_PALETTE = ((0, 0, 0), (255, 0, 0), (255, 255, 0))


class Label(enum.IntEnum):
    """Trimap labels; the values double as PNG palette indices."""

    BACKGROUND = 0
    FOREGROUND = 1
    UNCERTAIN = 2


# background < uncertain < foreground, indexed by label value
LABEL_RANK = np.array([0, 2, 1], dtype=np.uint8)


def _frozen(array: np.ndarray, dtype) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True, order="C")
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Box:
    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        coords = (self.x0, self.y0, self.x1, self.y1)
        if not all(math.isfinite(c) for c in coords):
            raise ValueError(f"non-finite box coordinates {coords}")
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError(f"degenerate box {coords}")

    @classmethod
    def from_xywh(cls, x: float, y: float, w: float, h: float) -> "Box":
        return cls(float(x), float(y), float(x) + float(w), float(y) + float(h))

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def area(self) -> float:
        return self.width * self.height

    def contains(self, other: "Box", tol: float = 1e-9) -> bool:
        return (
            self.x0 <= other.x0 + tol
            and self.y0 <= other.y0 + tol
            and self.x1 >= other.x1 - tol
            and self.y1 >= other.y1 - tol
        )

    def clip(self, image_w: float, image_h: float) -> "Box | None":
        """Intersection with ``[0, image_w] x [0, image_h]``, ``None`` if empty."""
        x0, y0 = max(self.x0, 0.0), max(self.y0, 0.0)
        x1, y1 = min(self.x1, float(image_w)), min(self.y1, float(image_h))
        if x1 <= x0 or y1 <= y0:
            return None
        return Box(x0, y0, x1, y1)

    def as_list(self):
        return [self.x0, self.y0, self.x1, self.y1]


def round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


def rasterize(b: Box) -> Tuple[int, int, int, int]:
    """Integer pixel rectangle ``(x, y, w, h)`` covered by ``b``."""
    return (
        int(math.floor(b.x0)),
        int(math.floor(b.y0)),
        max(1, round_half_up(b.width)),
        max(1, round_half_up(b.height)),
    )


def pixel_slices(b: Box, image_w: int, image_h: int) -> Tuple[slice, slice]:
    """Row and column slices of the rasterized box, clipped to the image.

    Raises ``BoxOutsideImage`` when nothing of the box falls on the image.
    """
    x, y, w, h = rasterize(b)
    c0, c1 = max(x, 0), min(x + w, image_w)
    r0, r1 = max(y, 0), min(y + h, image_h)
    if c1 <= c0 or r1 <= r0:
        raise BoxOutsideImage(f"box {b.as_list()} does not intersect {image_w}x{image_h} image")
    return slice(r0, r1), slice(c0, c1)


class Raster:
    """Immutable 8-bit image with one (grey) or three (RGB) channels."""

    __slots__ = ("data",)

    def __init__(self, data: np.ndarray):
        data = np.asarray(data)
        if data.ndim == 3 and data.shape[2] == 1:
            data = data[:, :, 0]
        if data.ndim not in (2, 3) or (data.ndim == 3 and data.shape[2] != 3):
            raise ValueError(f"unsupported raster shape {data.shape}")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError("raster must be at least 1x1")
        if data.dtype != np.uint8:
            if np.any(data < 0) or np.any(data > 255):
                raise ValueError("raster samples must lie in [0, 255]")
        object.__setattr__(self, "data", _frozen(data, np.uint8))

    def __setattr__(self, name, value):
        raise AttributeError("Raster is immutable")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.data.ndim == 2 else 3

    def __eq__(self, other):
        return isinstance(other, Raster) and np.array_equal(self.data, other.data)

    def __repr__(self):
        return f"Raster({self.width}x{self.height}x{self.channels})"

    def gray(self) -> np.ndarray:
        """ITU-R 601 luma as float64."""
        if self.channels == 1:
            return self.data.astype(np.float64)
        rgb = self.data.astype(np.float64)
        return rgb[..., 0] * 0.299 + rgb[..., 1] * 0.587 + rgb[..., 2] * 0.114

    def rgb(self) -> np.ndarray:
        if self.channels == 3:
            return self.data
        return np.repeat(self.data[:, :, None], 3, axis=2)


class ProbMap:
    """Immutable per-pixel foreground probability grid."""

    __slots__ = ("values",)

    def __init__(self, values: np.ndarray):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise ValueError(f"probability map must be a non-empty 2-D grid, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("probability map contains NaN or Inf")
        if values.min() < 0.0 or values.max() > 1.0:
            raise ValueError("probability values must lie in [0, 1]")
        object.__setattr__(self, "values", _frozen(values, np.float64))

    def __setattr__(self, name, value):
        raise AttributeError("ProbMap is immutable")

    @classmethod
    def constant(cls, width: int, height: int, value: float) -> "ProbMap":
        return cls(np.full((height, width), value, dtype=np.float64))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def __eq__(self, other):
        return isinstance(other, ProbMap) and np.array_equal(self.values, other.values)

    def __repr__(self):
        return f"ProbMap({self.width}x{self.height})"


class TrimapMask:
    """Immutable per-pixel ``Label`` grid."""

    __slots__ = ("labels",)

    def __init__(self, labels: np.ndarray):
        labels = np.asarray(labels)
        if labels.ndim != 2 or labels.shape[0] < 1 or labels.shape[1] < 1:
            raise ValueError(f"mask must be a non-empty 2-D grid, got {labels.shape}")
        if labels.size and (labels.min() < 0 or labels.max() > 2):
            raise ValueError("mask labels must be 0, 1 or 2")
        object.__setattr__(self, "labels", _frozen(labels, np.uint8))

    def __setattr__(self, name, value):
        raise AttributeError("TrimapMask is immutable")

    @classmethod
    def filled(cls, width: int, height: int, label: Label = Label.BACKGROUND) -> "TrimapMask":
        return cls(np.full((height, width), int(label), dtype=np.uint8))

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    def count(self, label: Label) -> int:
        return int(np.count_nonzero(self.labels == int(label)))

    def fraction(self, label: Label) -> float:
        return self.count(label) / self.labels.size

    def __eq__(self, other):
        return isinstance(other, TrimapMask) and np.array_equal(self.labels, other.labels)

    def __repr__(self):
        return f"TrimapMask({self.width}x{self.height})"


# -- geometry ---------------------------------------------------------------


def enlarge_box(b: Box, factor: float, image_w: int, image_h: int) -> Box:
    """Grow ``b`` by ``factor`` of its size per dimension (half on each side), then clamp."""
    if factor < 0:
        raise ValueError("enlargement factor must be non-negative")
    dx = b.width * factor / 2.0
    dy = b.height * factor / 2.0
    grown = Box(b.x0 - dx, b.y0 - dy, b.x1 + dx, b.y1 + dy)
    clamped = grown.clip(image_w, image_h)
    if clamped is None:
        raise BoxOutsideImage(f"box {b.as_list()} lies outside the {image_w}x{image_h} image")
    return clamped


def crop(img: Raster, b: Box) -> Raster:
    rows, cols = pixel_slices(b, img.width, img.height)
    return Raster(img.data[rows, cols])


def _axis_weights(n_in: int, n_out: int, align_corners: bool):
    i = np.arange(n_out, dtype=np.float64)
    if align_corners:
        src = i * ((n_in - 1) / (n_out - 1)) if n_out > 1 else np.zeros(1)
    else:
        src = (i + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    lo = np.floor(src).astype(np.intp)
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, src - lo


def bilinear(array: np.ndarray, out_h: int, out_w: int, align_corners: bool = False) -> np.ndarray:
    """Separable bilinear resampling of a 2-D or HxWxC array, returned as float64."""
    a = np.asarray(array, dtype=np.float64)
    in_h, in_w = a.shape[:2]
    if (in_h, in_w) == (out_h, out_w):
        return a.copy()
    r0, r1, rw = _axis_weights(in_h, out_h, align_corners)
    c0, c1, cw = _axis_weights(in_w, out_w, align_corners)
    extra = (None,) * (a.ndim - 2)
    rw = rw[(slice(None), None) + extra]
    cw = cw[(None, slice(None)) + extra]
    top = a[r0][:, c0] * (1 - cw) + a[r0][:, c1] * cw
    bottom = a[r1][:, c0] * (1 - cw) + a[r1][:, c1] * cw
    return top * (1 - rw) + bottom * rw


def min_side_dims(width: int, height: int, target: int) -> Tuple[int, int]:
    if target < 1:
        raise ValueError("target must be >= 1")
    if width <= height:
        return target, max(1, round_half_up(height * target / width))
    return max(1, round_half_up(width * target / height)), target


def resize_min_side(img: Raster, target: int) -> Raster:
    """Bilinear resize so that the shorter side equals ``target`` (up- or downscaling)."""
    out_w, out_h = min_side_dims(img.width, img.height, target)
    if (out_w, out_h) == (img.width, img.height):
        return img
    resized = bilinear(img.data, out_h, out_w)
    return Raster(np.clip(np.floor(resized + 0.5), 0, 255).astype(np.uint8))


def resample_probmap(p: ProbMap, out_w: int, out_h: int, align_corners: bool = False) -> ProbMap:
    if out_w < 1 or out_h < 1:
        raise ValueError("output dimensions must be >= 1")
    return ProbMap(np.clip(bilinear(p.values, out_h, out_w, align_corners), 0.0, 1.0))


# -- codecs -----------------------------------------------------------------


def encode_mask(m: TrimapMask, path: PathLike) -> None:
    """Write ``m`` as an indexed-colour PNG using ``TRIMAP_PALETTE``."""
    image = Image.fromarray(np.ascontiguousarray(m.labels), mode="P")
    image.putpalette([c for rgb in TRIMAP_PALETTE for c in rgb])
    image.save(path, format="PNG", optimize=False)


def decode_mask(path: PathLike) -> TrimapMask:
    with Image.open(path) as image:
        if image.mode != "P":
            raise CorruptMask(f"{path}: expected a palette PNG, got mode {image.mode}")
        labels = np.array(image)
    if labels.size and labels.max() > 2:
        raise CorruptMask(f"{path}: unknown palette index {int(labels.max())}")
    return TrimapMask(labels)


def encode_pmap(p: ProbMap) -> bytes:
    header = _PMAP_HEADER.pack(PMAP_MAGIC, p.width, p.height)
    return header + p.values.astype("<f4").tobytes()


def decode_pmap(payload: bytes, source: str = "<bytes>") -> ProbMap:
    if len(payload) < _PMAP_HEADER.size:
        raise CorruptProbMap(f"{source}: truncated header")
    magic, width, height = _PMAP_HEADER.unpack_from(payload)
    if magic != PMAP_MAGIC:
        raise CorruptProbMap(f"{source}: bad magic {magic!r}")
    if width < 1 or height < 1:
        raise CorruptProbMap(f"{source}: empty map {width}x{height}")
    expected = _PMAP_HEADER.size + 4 * width * height
    if len(payload) != expected:
        raise CorruptProbMap(f"{source}: expected {expected} bytes, got {len(payload)}")
    values = np.frombuffer(payload, dtype="<f4", offset=_PMAP_HEADER.size).reshape(height, width)
    if not np.all(np.isfinite(values)) or values.min() < 0.0 or values.max() > 1.0:
        raise CorruptProbMap(f"{source}: values outside [0, 1]")
    return ProbMap(values.astype(np.float64))


def write_pmap(p: ProbMap, path: PathLike) -> None:
    Path(path).write_bytes(encode_pmap(p))


def read_pmap(path: PathLike) -> ProbMap:
    return decode_pmap(Path(path).read_bytes(), source=str(path))


def load_image(path: PathLike) -> Raster:
    with Image.open(path) as image:
        if image.mode not in ("L", "RGB"):
            image = image.convert("L" if image.mode in ("1", "I", "I;16", "F") else "RGB")
        return Raster(np.array(image))


def save_image(img: Raster, path: PathLike) -> None:
    Image.fromarray(np.ascontiguousarray(img.data)).save(path, format="PNG", optimize=False)


def overlay(img: Raster, m: TrimapMask, alpha: float = 0.5) -> Raster:
    """Blend foreground (red) and uncertain (yellow) labels over ``img``."""
    rgb = img.rgb().astype(np.float64)
    palette = np.array(TRIMAP_PALETTE, dtype=np.float64)
    colour = palette[m.labels]
    marked = (m.labels != Label.BACKGROUND)[..., None]
    blended = np.where(marked, rgb * (1 - alpha) + colour * alpha, rgb)
    return Raster(np.floor(blended + 0.5).astype(np.uint8))
