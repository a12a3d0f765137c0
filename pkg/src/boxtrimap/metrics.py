"""Pixel-level precision / recall / F1 of trimaps against ground truth.

Text is the positive class. Uncertain pixels are resolved by an
``UncertainPolicy`` before counting; excluded pixels enter no count.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Tuple

import numpy as np

from .errors import EmptyCorpus, ShapeMismatch
from .raster import Label, TrimapMask


class PredictionUncertain(enum.Enum):
    AS_TEXT = "as_text"
    AS_BACKGROUND = "as_background"
    EXCLUDED = "excluded"


class GroundTruthUncertain(enum.Enum):
    EXCLUDED = "excluded"
    AS_TEXT = "as_text"


@dataclass(frozen=True)
class UncertainPolicy:
    prediction_uncertain: PredictionUncertain = PredictionUncertain.AS_TEXT
    groundtruth_uncertain: GroundTruthUncertain = GroundTruthUncertain.EXCLUDED

    def as_dict(self):
        return {
            "prediction_uncertain": self.prediction_uncertain.value,
            "groundtruth_uncertain": self.groundtruth_uncertain.value,
        }

    @classmethod
    def from_dict(cls, d) -> "UncertainPolicy":
        return cls(PredictionUncertain(d["prediction_uncertain"]), GroundTruthUncertain(d["groundtruth_uncertain"]))


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def derive_scores(tp: int, fp: int, fn: int) -> Tuple[float, float, float]:
    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    f1 = _ratio(2 * precision * recall, precision + recall)
    return precision, recall, f1


def f1_from(precision: float, recall: float) -> float:
    return _ratio(2 * precision * recall, precision + recall)


@dataclass(frozen=True)
class PixelMetrics:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def precision(self) -> float:
        return derive_scores(self.tp, self.fp, self.fn)[0]

    @property
    def recall(self) -> float:
        return derive_scores(self.tp, self.fp, self.fn)[1]

    @property
    def f1(self) -> float:
        return derive_scores(self.tp, self.fp, self.fn)[2]

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: "PixelMetrics") -> "PixelMetrics":
        return PixelMetrics(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn)


@dataclass(frozen=True)
class MacroMetrics:
    """Per-image scores averaged over the corpus, plus the summed counts."""

    counts: PixelMetrics
    precision: float
    recall: float
    f1: float
    images: int


def _resolve(labels: np.ndarray, uncertain_as_text: bool | None):
    """(is_text, is_valid) arrays; ``None`` excludes uncertain pixels."""
    text = labels == Label.FOREGROUND
    uncertain = labels == Label.UNCERTAIN
    if uncertain_as_text is None:
        return text, ~uncertain
    if uncertain_as_text:
        text = text | uncertain
    return text, np.ones(labels.shape, dtype=bool)


def evaluate_pair(pred: TrimapMask, gt: TrimapMask, policy: UncertainPolicy = UncertainPolicy()) -> PixelMetrics:
    if (pred.width, pred.height) != (gt.width, gt.height):
        raise ShapeMismatch(f"prediction is {pred.width}x{pred.height}, ground truth {gt.width}x{gt.height}")
    pred_mode = {
        PredictionUncertain.AS_TEXT: True,
        PredictionUncertain.AS_BACKGROUND: False,
        PredictionUncertain.EXCLUDED: None,
    }[policy.prediction_uncertain]
    gt_mode = True if policy.groundtruth_uncertain is GroundTruthUncertain.AS_TEXT else None
    p_text, p_valid = _resolve(pred.labels, pred_mode)
    g_text, g_valid = _resolve(gt.labels, gt_mode)
    valid = p_valid & g_valid
    tp = int(np.count_nonzero(p_text & g_text & valid))
    fp = int(np.count_nonzero(p_text & ~g_text & valid))
    fn = int(np.count_nonzero(~p_text & g_text & valid))
    tn = int(np.count_nonzero(valid)) - tp - fp - fn
    return PixelMetrics(tp, fp, fn, tn)


def evaluate_corpus(
    pairs: Iterable[Tuple[TrimapMask, TrimapMask]],
    policy: UncertainPolicy = UncertainPolicy(),
) -> PixelMetrics:
    """Micro average: counts summed over every pair, scores derived once."""
    total = None
    for pred, gt in pairs:
        m = evaluate_pair(pred, gt, policy)
        total = m if total is None else total + m
    if total is None:
        raise EmptyCorpus("no (prediction, ground truth) pairs to evaluate")
    return total


def evaluate_corpus_macro(
    pairs: Iterable[Tuple[TrimapMask, TrimapMask]],
    policy: UncertainPolicy = UncertainPolicy(),
) -> MacroMetrics:
    per_image = [evaluate_pair(pred, gt, policy) for pred, gt in pairs]
    if not per_image:
        raise EmptyCorpus("no (prediction, ground truth) pairs to evaluate")
    counts = per_image[0]
    for m in per_image[1:]:
        counts = counts + m
    n = len(per_image)
    return MacroMetrics(
        counts=counts,
        precision=sum(m.precision for m in per_image) / n,
        recall=sum(m.recall for m in per_image) / n,
        f1=sum(m.f1 for m in per_image) / n,
        images=n,
    )


def report_dict(m, policy: UncertainPolicy = UncertainPolicy()) -> dict:
    """JSON-ready report; accepts ``PixelMetrics`` or ``MacroMetrics``."""
    counts = m.counts if isinstance(m, MacroMetrics) else m
    out = {
        "tp": counts.tp,
        "fp": counts.fp,
        "fn": counts.fn,
        "tn": counts.tn,
        "precision": round(m.precision, 4),
        "recall": round(m.recall, 4),
        "f1": round(m.f1, 4),
        "policy": policy.as_dict(),
        "aggregate": "macro" if isinstance(m, MacroMetrics) else "micro",
    }
    if isinstance(m, MacroMetrics):
        out["images"] = m.images
    return out


def report(m, path, policy: UncertainPolicy = UncertainPolicy()) -> None:
    Path(path).write_text(json.dumps(report_dict(m, policy), indent=2) + "\n", encoding="utf-8")


def load_report(path) -> Tuple[PixelMetrics, UncertainPolicy]:
    """Read a micro-averaged report, checking the stored scores against the counts."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    m = PixelMetrics(int(doc["tp"]), int(doc["fp"]), int(doc["fn"]), int(doc["tn"]))
    if doc.get("aggregate", "micro") == "micro":
        for key, value in zip(("precision", "recall", "f1"), derive_scores(m.tp, m.fp, m.fn)):
            if abs(round(value, 4) - float(doc[key])) > 1e-9:
                raise ValueError(f"{path}: stored {key} {doc[key]} disagrees with counts ({value:.6f})")
    return m, UncertainPolicy.from_dict(doc["policy"])
