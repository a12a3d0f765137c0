"""Flat synthetic text crops with exact ground truth.

Each sample is one word rendered (optionally rotated) onto a background
canvas. The mask marks pixels whose glyph coverage is at least one half, the
word box is the tight bound of all covered pixels and the crop box is the word
box grown by the pipeline's enlargement factor.

Sample ``i`` draws from ``numpy.random.default_rng([seed, i])`` (PCG64), so
any subset of indices can be regenerated independently.
"""
from __future__ import annotations

import functools
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Tuple

import numpy as np
from PIL import Image, ImageDraw, ImageFont

from .annotations import BBoxAnnotation, ImageRecord, dump_annotations
from .errors import ConfigError, FontError, GenerationExhausted
from .raster import Box, Label, Raster, TrimapMask, encode_mask, enlarge_box, save_image

logger = logging.getLogger(__name__)

BACKGROUND_KINDS = ("flat", "gradient", "noise", "image_patch")
LUMA = np.array([0.299, 0.587, 0.114])
# RGB directions with zero luma, used to tint colours without moving their luma
_CHROMA_BASIS = np.array([[0.587, -0.299, 0.0], [0.114, 0.0, -0.299]])

DEFAULT_WORDS = (
    "EXIT", "STOP", "open", "Coffee", "SALE", "Hotel", "police", "Taxi", "Bus", "PARKING",
    "street", "menu", "bakery", "Station", "pizza", "NORTH", "welcome", "market", "Bank", "delta",
)


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    count: int = 10
    font_paths: Tuple[str, ...] = ()
    word_list: Tuple[str, ...] = DEFAULT_WORDS
    size_range: Tuple[int, int] = (28, 56)
    fg_bg_contrast_min: float = 0.3
    rotation_range_deg: Tuple[float, float] = (0.0, 0.0)
    background_kind: str = "flat"
    canvas_size: Tuple[int, int] = (320, 160)
    background_paths: Tuple[str, ...] = ()
    enlarge_factor: float = 0.3
    max_retries: int = 25

    def __post_init__(self):
        for name in ("font_paths", "word_list", "size_range", "rotation_range_deg", "canvas_size", "background_paths"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer", "seed")
        if int(self.count) < 1:
            raise ConfigError("count must be >= 1", "count")
        if not self.word_list or not all(isinstance(w, str) and w.strip() for w in self.word_list):
            raise ConfigError("word_list must contain non-empty words", "word_list")
        lo, hi = self.size_range
        if not 1 <= lo <= hi:
            raise ConfigError("size_range must satisfy 1 <= min <= max", "size_range")
        if not 0.0 <= self.fg_bg_contrast_min <= 1.0:
            raise ConfigError("fg_bg_contrast_min must lie in [0, 1]", "fg_bg_contrast_min")
        if len(self.rotation_range_deg) != 2 or self.rotation_range_deg[0] > self.rotation_range_deg[1]:
            raise ConfigError("rotation_range_deg must be (lo, hi) with lo <= hi", "rotation_range_deg")
        if self.background_kind not in BACKGROUND_KINDS:
            raise ConfigError(f"background_kind must be one of {BACKGROUND_KINDS}", "background_kind")
        if self.background_kind == "image_patch" and not self.background_paths:
            raise ConfigError("image_patch backgrounds need background_paths", "background_paths")
        if len(self.canvas_size) != 2 or min(self.canvas_size) < 8:
            raise ConfigError("canvas_size must be (width, height), each >= 8", "canvas_size")
        if self.max_retries < 1:
            raise ConfigError("max_retries must be >= 1", "max_retries")


@dataclass(frozen=True)
class SynthSample:
    index: int
    image: Raster
    mask: TrimapMask
    word_box: Box
    crop_box: Box
    word: str
    contrast: float = field(default=0.0)


@functools.lru_cache(maxsize=64)
def _font(path: Optional[str], size: int):
    try:
        if path is None:
            return ImageFont.load_default(size=size)
        return ImageFont.truetype(path, size=size)
    except (OSError, ValueError) as exc:
        raise FontError(f"cannot load font {path or '<builtin>'}: {exc}") from exc


def check_fonts(cfg: SynthConfig) -> None:
    for path in cfg.font_paths or (None,):
        _font(path, cfg.size_range[0])


def render_coverage(word: str, font, angle: float) -> np.ndarray:
    """Anti-aliased glyph coverage (uint8), cropped to its non-zero bounds."""
    left, top, right, bottom = font.getbbox(word)
    pad = 4
    layer = Image.new("L", (right - left + 2 * pad, bottom - top + 2 * pad), 0)
    ImageDraw.Draw(layer).text((pad - left, pad - top), word, fill=255, font=font)
    if angle:
        layer = layer.rotate(angle, resample=Image.BILINEAR, expand=True, fillcolor=0)
    bounds = layer.getbbox()
    if bounds is None:
        return np.zeros((0, 0), dtype=np.uint8)
    return np.array(layer.crop(bounds))


def _tint(rgb_luma: float, rng: np.random.Generator, spread: float = 60.0) -> np.ndarray:
    colour = np.full(3, rgb_luma) + rng.uniform(-spread, spread, 2) @ _CHROMA_BASIS
    if np.any(colour < 0) or np.any(colour > 255):
        return np.full(3, rgb_luma)
    return colour


def _background(cfg: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    w, h = cfg.canvas_size
    base = _tint(rng.uniform(0, 255), rng)
    kind = cfg.background_kind
    if kind == "flat":
        return np.broadcast_to(base, (h, w, 3)).copy()
    if kind == "gradient":
        other = np.clip(base + rng.uniform(-50, 50, 3), 0, 255)
        theta = rng.uniform(0, 2 * np.pi)
        yy, xx = np.mgrid[0:h, 0:w]
        ramp = xx * np.cos(theta) + yy * np.sin(theta)
        ramp = (ramp - ramp.min()) / max(float(np.ptp(ramp)), 1e-9)
        return base * (1 - ramp[..., None]) + other * ramp[..., None]
    if kind == "noise":
        return np.clip(base + rng.normal(0.0, 12.0, (h, w, 3)), 0, 255)
    path = cfg.background_paths[int(rng.integers(len(cfg.background_paths)))]
    with Image.open(path) as src:
        src = src.convert("RGB")
        scale = max(w / src.width, h / src.height, 1.0)
        if scale > 1.0:
            src = src.resize((int(np.ceil(src.width * scale)), int(np.ceil(src.height * scale))), Image.BILINEAR)
        x = int(rng.integers(src.width - w + 1))
        y = int(rng.integers(src.height - h + 1))
        return np.array(src.crop((x, y, x + w, y + h)), dtype=np.float64)


def _text_colour(bg_luma: float, cfg: SynthConfig, rng: np.random.Generator) -> Optional[np.ndarray]:
    gap = cfg.fg_bg_contrast_min * 255.0
    intervals = [(lo, hi) for lo, hi in ((0.0, bg_luma - gap), (bg_luma + gap, 255.0)) if hi >= lo]
    if not intervals:
        return None
    lengths = np.array([hi - lo for lo, hi in intervals])
    pick = int(rng.choice(len(intervals), p=lengths / lengths.sum())) if lengths.sum() > 0 else 0
    lo, hi = intervals[pick]
    return _tint(rng.uniform(lo, hi), rng)


def sample(cfg: SynthConfig, index: int) -> SynthSample:
    """Render sample ``index``; retries placement up to ``cfg.max_retries`` times."""
    rng = np.random.default_rng([int(cfg.seed), int(index)])
    fonts = cfg.font_paths or (None,)
    canvas_w, canvas_h = cfg.canvas_size
    for _ in range(cfg.max_retries):
        word = cfg.word_list[int(rng.integers(len(cfg.word_list)))]
        font = _font(fonts[int(rng.integers(len(fonts)))], int(rng.integers(cfg.size_range[0], cfg.size_range[1] + 1)))
        lo, hi = cfg.rotation_range_deg
        angle = float(rng.uniform(lo, hi)) if hi > lo else float(lo)
        coverage = render_coverage(word, font, angle)
        ch, cw = coverage.shape
        if ch == 0 or cw > canvas_w or ch > canvas_h or not np.any(coverage >= 128):
            continue
        x = int(rng.integers(canvas_w - cw + 1))
        y = int(rng.integers(canvas_h - ch + 1))
        bg = _background(cfg, rng)
        text = np.zeros((canvas_h, canvas_w), dtype=bool)
        text[y : y + ch, x : x + cw] = coverage >= 128
        bg_luma = bg @ LUMA
        fg = _text_colour(float(bg_luma[text].mean()), cfg, rng)
        if fg is None:
            continue
        contrast = float(np.mean(np.abs(fg @ LUMA - bg_luma[text]))) / 255.0
        if contrast < cfg.fg_bg_contrast_min:
            continue
        alpha = np.zeros((canvas_h, canvas_w, 1))
        alpha[y : y + ch, x : x + cw, 0] = coverage / 255.0
        image = np.floor(bg * (1 - alpha) + fg * alpha + 0.5).clip(0, 255).astype(np.uint8)
        labels = np.where(text, int(Label.FOREGROUND), int(Label.BACKGROUND)).astype(np.uint8)
        word_box = Box(x, y, x + cw, y + ch)
        return SynthSample(
            index=index,
            image=Raster(image),
            mask=TrimapMask(labels),
            word_box=word_box,
            crop_box=enlarge_box(word_box, cfg.enlarge_factor, canvas_w, canvas_h),
            word=word,
            contrast=contrast,
        )
    raise GenerationExhausted(f"sample {index}: no valid rendering after {cfg.max_retries} attempts")


def generate(cfg: SynthConfig) -> Iterator[SynthSample]:
    check_fonts(cfg)
    for i in range(cfg.count):
        yield sample(cfg, i)


def sample_name(index: int) -> str:
    return f"{index:06d}"


def _write_sample(cfg: SynthConfig, index: int, out_dir: str):
    s = sample(cfg, index)
    name = sample_name(index)
    save_image(s.image, Path(out_dir) / "images" / f"{name}.png")
    encode_mask(s.mask, Path(out_dir) / "masks" / f"{name}.png")
    b = s.word_box
    return ImageRecord(
        image_id=name,
        file_name=f"images/{name}.png",
        width=s.image.width,
        height=s.image.height,
        boxes=(BBoxAnnotation(id=f"{name}_0", x=b.x0, y=b.y0, w=b.width, h=b.height),),
    ), s.word, s.contrast


def emit_dataset(cfg: SynthConfig, out_dir, workers: int = 1) -> dict:
    """Write ``images/``, ``masks/``, ``annotations.json`` and ``manifest.json``; return the manifest."""
    check_fonts(cfg)
    out = Path(out_dir)
    for sub in ("images", "masks"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    indices = range(cfg.count)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_write_sample, [cfg] * cfg.count, indices, [str(out)] * cfg.count))
    else:
        results = [_write_sample(cfg, i, str(out)) for i in indices]

    records = [r for r, _, _ in results]
    _write_json(out / "annotations.json", dump_annotations(records))
    manifest = {
        "seed": int(cfg.seed),
        "count": cfg.count,
        "images": len(records),
        "masks": len(records),
        "annotations": sum(len(r.boxes) for r in records),
        "background_kind": cfg.background_kind,
        "fg_bg_contrast_min": cfg.fg_bg_contrast_min,
        "min_contrast_observed": round(min(c for _, _, c in results), 6),
        "samples": [
            {"image_id": r.image_id, "word": word, "box": [b.x, b.y, b.w, b.h]}
            for (r, word, _) in results
            for b in r.boxes
        ],
    }
    _write_json(out / "manifest.json", manifest)
    return manifest


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
