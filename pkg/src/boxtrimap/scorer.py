"""Per-crop foreground probability scorers.

A scorer maps a box crop to a ``ProbMap`` at the resolution of the crop after
``resize_min_side``. Two kinds exist:

``otsu_logistic``
    Classical stand-in: Otsu threshold on the luma histogram, polarity from the
    one-pixel border ring, logistic soft assignment scaled by the intensity
    standard deviation.
``external``
    Maps computed offline (e.g. by a trained network) and stored as
    ``<external_dir>/<box_id>.pmap``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError, MissingProbMap
from .raster import ProbMap, Raster, read_pmap, resample_probmap, resize_min_side

logger = logging.getLogger(__name__)

SCORER_KINDS = ("otsu_logistic", "external")


@dataclass(frozen=True)
class ScorerConfig:
    kind: str = "otsu_logistic"
    logistic_scale: float = 1.0
    min_side: int = 185
    external_dir: Optional[str] = None

    def __post_init__(self):
        if self.kind not in SCORER_KINDS:
            raise ConfigError(f"scorer kind must be one of {SCORER_KINDS}, got {self.kind!r}", "kind")
        if not self.logistic_scale > 0:
            raise ConfigError("logistic_scale must be > 0", "logistic_scale")
        if int(self.min_side) != self.min_side or self.min_side < 1:
            raise ConfigError("min_side must be an integer >= 1", "min_side")
        if self.kind == "external" and not self.external_dir:
            raise ConfigError("external scorer requires external_dir", "external_dir")


def otsu_threshold(gray: np.ndarray) -> Optional[float]:
    """Otsu threshold of ``gray`` (float luma, 0-255) on a 256-bin histogram.

    Returns the cut as a real intensity, or ``None`` when fewer than two bins
    are occupied. Between-class variance is compared exactly; among a run of
    equally good cuts the midpoint is returned, so the threshold between two
    flat levels ``a < b`` is ``(a + b) / 2``.
    """
    levels = np.clip(np.floor(gray + 0.5), 0, 255).astype(np.int64)
    hist = np.bincount(levels.ravel(), minlength=256)
    occupied = np.flatnonzero(hist)
    if occupied.size < 2:
        return None
    total = int(hist.sum())
    total_sum = int(np.dot(hist, np.arange(256)))
    n0 = s0 = 0
    best, run = None, []
    for k in range(int(occupied[0]), int(occupied[-1])):
        n0 += int(hist[k])
        s0 += k * int(hist[k])
        score = Fraction((total * s0 - n0 * total_sum) ** 2, n0 * (total - n0))
        if best is None or score > best:
            best, run = score, [k]
        elif score == best and run and run[-1] == k - 1:
            run.append(k)
    # cut between bins k and k + 1 sits at k + 0.5
    return (run[0] + run[-1]) / 2.0 + 0.5


def _border_ring(a: np.ndarray) -> np.ndarray:
    if a.shape[0] <= 2 or a.shape[1] <= 2:
        return a.ravel()
    return np.concatenate([a[0, :], a[-1, :], a[1:-1, 0], a[1:-1, -1]])


def builtin_otsu_logistic(crop: Raster, logistic_scale: float = 1.0) -> ProbMap:
    gray = crop.gray()
    spread = float(gray.std())
    t = otsu_threshold(gray)
    if t is None or spread == 0.0:
        return ProbMap.constant(crop.width, crop.height, 0.5)
    ring = _border_ring(gray)
    bright = int(np.count_nonzero(ring > t))
    dark = ring.size - bright
    # majority of the ring is background; ties assume dark text on a light ground
    sign = 1.0 if dark > bright else -1.0
    z = sign * (gray - t) / (logistic_scale * spread)
    return ProbMap(np.clip(0.5 * (1.0 + np.tanh(0.5 * z)), 0.0, 1.0))


def load_external_probmap(directory, box_id: str) -> ProbMap:
    path = Path(directory) / f"{box_id}.pmap"
    if not path.is_file():
        raise MissingProbMap(f"no probability map for box {box_id!r} at {path}")
    return read_pmap(path)


def score_crop(crop: Raster, cfg: ScorerConfig, box_id: Optional[str] = None) -> ProbMap:
    """Resize ``crop`` to ``cfg.min_side`` and return its foreground map at that size."""
    resized = resize_min_side(crop, cfg.min_side)
    if cfg.kind == "otsu_logistic":
        return builtin_otsu_logistic(resized, cfg.logistic_scale)
    if box_id is None:
        raise MissingProbMap("external scorer needs a box id")
    external = load_external_probmap(cfg.external_dir, box_id)
    return resample_probmap(external, resized.width, resized.height)
