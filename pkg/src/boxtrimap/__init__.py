"""Pixel-level trimap supervision generated from text bounding boxes."""
from .annotations import BBoxAnnotation, ImageRecord, load_annotations, partition_boxes, select_images
from .fusion import FusionConfig, PlacedProbMap, fuse, generate_supervision, label, stamp_disqualified
from .metrics import PixelMetrics, UncertainPolicy, evaluate_corpus, evaluate_pair
from .raster import Box, Label, ProbMap, Raster, TrimapMask
from .scorer import ScorerConfig, score_crop

__version__ = "0.1.0"

__all__ = [
    "BBoxAnnotation",
    "Box",
    "FusionConfig",
    "ImageRecord",
    "Label",
    "PixelMetrics",
    "PlacedProbMap",
    "ProbMap",
    "Raster",
    "ScorerConfig",
    "TrimapMask",
    "UncertainPolicy",
    "evaluate_corpus",
    "evaluate_pair",
    "fuse",
    "generate_supervision",
    "label",
    "load_annotations",
    "partition_boxes",
    "score_crop",
    "select_images",
    "stamp_disqualified",
]
