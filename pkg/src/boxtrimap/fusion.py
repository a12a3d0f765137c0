"""Box-level probability maps to an image-level trimap.

The image map is zero outside every box, the maximum of the covering maps
inside; a dual threshold turns it into background / uncertain / foreground,
and the regions of disqualified boxes are finally forced to uncertain.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, List, Sequence

import numpy as np

from .annotations import ImageRecord, partition_boxes
from .errors import BoxOutsideImage, ConfigError, ShapeMismatch
from .raster import (
    Box,
    Label,
    ProbMap,
    Raster,
    TrimapMask,
    crop,
    enlarge_box,
    pixel_slices,
    rasterize,
    resample_probmap,
)
from .scorer import ScorerConfig, score_crop

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FusionConfig:
    th1: float = 0.3
    th2: float = 0.7
    enlarge_factor: float = 0.3

    def __post_init__(self):
        if not (0.0 <= self.th1 <= self.th2 <= 1.0):
            raise ConfigError(f"thresholds must satisfy 0 <= th1 <= th2 <= 1, got {self.th1}, {self.th2}", "th1")
        if not self.enlarge_factor >= 0:
            raise ConfigError("enlarge_factor must be >= 0", "enlarge_factor")


@dataclass(frozen=True)
class PlacedProbMap:
    box: Box
    map: ProbMap

    def __post_init__(self):
        _, _, w, h = rasterize(self.box)
        if (self.map.width, self.map.height) != (w, h):
            raise ShapeMismatch(
                f"map is {self.map.width}x{self.map.height} but box rasterizes to {w}x{h}"
            )


def _inside_slices(b: Box, image_w: int, image_h: int):
    x, y, w, h = rasterize(b)
    if x < 0 or y < 0 or x + w > image_w or y + h > image_h:
        raise BoxOutsideImage(f"box {b.as_list()} exceeds the {image_w}x{image_h} image")
    return slice(y, y + h), slice(x, x + w)


def fuse(image_w: int, image_h: int, placed: Iterable[PlacedProbMap]) -> ProbMap:
    out = np.zeros((image_h, image_w), dtype=np.float64)
    for item in placed:
        rows, cols = _inside_slices(item.box, image_w, image_h)
        np.maximum(out[rows, cols], item.map.values, out=out[rows, cols])
    return ProbMap(out)


def label(p: ProbMap, cfg: FusionConfig = FusionConfig()) -> TrimapMask:
    """Background below ``th1``, foreground above ``th2``, uncertain otherwise (bounds inclusive)."""
    v = p.values
    out = np.full(v.shape, int(Label.UNCERTAIN), dtype=np.uint8)
    out[v < cfg.th1] = Label.BACKGROUND
    out[v > cfg.th2] = Label.FOREGROUND
    return TrimapMask(out)


def stamp_disqualified(m: TrimapMask, boxes: Sequence[Box]) -> TrimapMask:
    if not boxes:
        return m
    out = m.labels.copy()
    for b in boxes:
        rows, cols = pixel_slices(b, m.width, m.height)
        out[rows, cols] = Label.UNCERTAIN
    return TrimapMask(out)


def _score_one(img: Raster, box: Box, box_id: str, scorer_cfg: ScorerConfig) -> PlacedProbMap:
    patch = crop(img, box)
    scored = score_crop(patch, scorer_cfg, box_id=box_id)
    return PlacedProbMap(box, resample_probmap(scored, patch.width, patch.height))


def generate_supervision(
    img: Raster,
    record: ImageRecord,
    scorer_cfg: ScorerConfig = ScorerConfig(),
    fusion_cfg: FusionConfig = FusionConfig(),
    workers: int = 1,
) -> TrimapMask:
    """Trimap for one image from its box annotations.

    Qualified boxes are enlarged, cropped and scored; their maps are fused and
    thresholded. Disqualified boxes, enlarged the same way, become uncertain.
    Boxes falling entirely outside the image are skipped with a warning.
    ``workers > 1`` scores boxes on a thread pool; the result does not depend on it.
    """
    if (img.width, img.height) != (record.width, record.height):
        raise ShapeMismatch(
            f"image {record.image_id} is {img.width}x{img.height}, "
            f"annotations say {record.width}x{record.height}"
        )
    qualified, disqualified = partition_boxes(record)

    def enlarged(anns):
        out = []
        for ann in anns:
            try:
                out.append((ann.id, enlarge_box(ann.to_box(), fusion_cfg.enlarge_factor, img.width, img.height)))
            except BoxOutsideImage:
                logger.warning("image %s: box %s lies outside the image, skipped", record.image_id, ann.id)
        return out

    jobs = enlarged(qualified)
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            placed: List[PlacedProbMap] = list(
                pool.map(lambda job: _score_one(img, job[1], job[0], scorer_cfg), jobs)
            )
    else:
        placed = [_score_one(img, box, box_id, scorer_cfg) for box_id, box in jobs]

    fused = fuse(img.width, img.height, placed)
    mask = label(fused, fusion_cfg)
    return stamp_disqualified(mask, [box for _, box in enlarged(disqualified)])
