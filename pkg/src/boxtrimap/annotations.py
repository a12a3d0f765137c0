"""COCO-Text style annotation ingestion and the legibility filter.

Only a minimal subset of the COCO-Text schema is read::

    {"imgs": {"<id>": {"file_name": str, "width": int, "height": int}},
     "anns": {"<id>": {"image_id": str, "bbox": [x, y, w, h],
                       "legibility": str, "class": str, "language": str}}}

Attribute strings are compared case-insensitively after trimming (``_`` and
``-`` count as spaces); anything unrecognised maps to the disqualifying variant.
"""
from __future__ import annotations

import enum
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

from .errors import AnnotationError
from .raster import Box

logger = logging.getLogger(__name__)


class Legibility(enum.Enum):
    LEGIBLE = "legible"
    ILLEGIBLE = "illegible"


class TextClass(enum.Enum):
    MACHINE_PRINTED = "machine printed"
    HANDWRITTEN = "handwritten"
    OTHER = "other"


class Language(enum.Enum):
    ENGLISH = "english"
    OTHER = "other"


def _normalise(value) -> str:
    if not isinstance(value, str):
        return ""
    return " ".join(value.strip().lower().replace("_", " ").replace("-", " ").split())


def parse_legibility(value) -> Legibility:
    return Legibility.LEGIBLE if _normalise(value) == "legible" else Legibility.ILLEGIBLE


def parse_text_class(value) -> TextClass:
    v = _normalise(value)
    if v == "machine printed":
        return TextClass.MACHINE_PRINTED
    if v == "handwritten":
        return TextClass.HANDWRITTEN
    return TextClass.OTHER


def parse_language(value) -> Language:
    return Language.ENGLISH if _normalise(value) == "english" else Language.OTHER


@dataclass(frozen=True)
class BBoxAnnotation:
    id: str
    x: float
    y: float
    w: float
    h: float
    legibility: Legibility = Legibility.LEGIBLE
    text_class: TextClass = TextClass.MACHINE_PRINTED
    language: Language = Language.ENGLISH

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"annotation {self.id}: non-positive box size")
        if not all(math.isfinite(v) for v in (self.x, self.y, self.w, self.h)):
            raise ValueError(f"annotation {self.id}: non-finite box")

    @property
    def qualified(self) -> bool:
        return (
            self.legibility is Legibility.LEGIBLE
            and self.text_class is TextClass.MACHINE_PRINTED
            and self.language is Language.ENGLISH
        )

    def to_box(self) -> Box:
        return Box.from_xywh(self.x, self.y, self.w, self.h)


@dataclass(frozen=True)
class ImageRecord:
    image_id: str
    file_name: str
    width: int
    height: int
    boxes: Tuple[BBoxAnnotation, ...] = ()

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"image {self.image_id}: dimensions must be >= 1")
        ids = [b.id for b in self.boxes]
        if len(set(ids)) != len(ids):
            raise ValueError(f"image {self.image_id}: duplicate box ids")
        object.__setattr__(self, "boxes", tuple(self.boxes))


def _reject_duplicate_keys(pairs):
    out = {}
    for key, value in pairs:
        if key in out:
            raise AnnotationError(f"duplicate key {key!r}", field=key)
        out[key] = value
    return out


def _require(entry: dict, key: str, where: str):
    if not isinstance(entry, dict):
        raise AnnotationError(f"{where}: expected an object", field=where)
    if key not in entry:
        raise AnnotationError(f"{where}: missing required field '{key}'", field=key)
    return entry[key]


def _as_int(value, key: str, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value):
        raise AnnotationError(f"{where}: field '{key}' must be an integer", field=key)
    if value < 1:
        raise AnnotationError(f"{where}: field '{key}' must be >= 1", field=key)
    return int(value)


def parse_annotations(doc: dict, source: str = "<memory>") -> List[ImageRecord]:
    """Build records from an already-decoded annotation document."""
    imgs = _require(doc, "imgs", source)
    anns = _require(doc, "anns", source)
    if not isinstance(imgs, dict):
        raise AnnotationError(f"{source}: 'imgs' must be an object", field="imgs")
    if not isinstance(anns, dict):
        raise AnnotationError(f"{source}: 'anns' must be an object", field="anns")

    boxes_by_image: Dict[str, List[BBoxAnnotation]] = {str(k): [] for k in imgs}
    dangling = []
    for ann_id, ann in anns.items():
        where = f"anns[{ann_id}]"
        image_id = str(_require(ann, "image_id", where))
        bbox = _require(ann, "bbox", where)
        legibility = _require(ann, "legibility", where)
        text_class = _require(ann, "class", where)
        language = _require(ann, "language", where)
        if (
            not isinstance(bbox, (list, tuple))
            or len(bbox) != 4
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in bbox)
        ):
            raise AnnotationError(f"{where}: field 'bbox' must be [x, y, w, h]", field="bbox")
        x, y, w, h = (float(v) for v in bbox)
        if image_id not in boxes_by_image:
            dangling.append(str(ann_id))
            continue
        if not (w > 0 and h > 0) or not all(math.isfinite(v) for v in (x, y, w, h)):
            logger.warning("%s: dropping degenerate box %s", source, [x, y, w, h])
            continue
        boxes_by_image[image_id].append(
            BBoxAnnotation(
                id=str(ann_id),
                x=x,
                y=y,
                w=w,
                h=h,
                legibility=parse_legibility(legibility),
                text_class=parse_text_class(text_class),
                language=parse_language(language),
            )
        )
    if dangling:
        raise AnnotationError(
            f"{source}: annotations reference unknown images: {', '.join(sorted(dangling))}",
            ids=sorted(dangling),
        )

    records = []
    for image_id, entry in imgs.items():
        where = f"imgs[{image_id}]"
        file_name = _require(entry, "file_name", where)
        if not isinstance(file_name, str) or not file_name:
            raise AnnotationError(f"{where}: field 'file_name' must be a non-empty string", field="file_name")
        width = _as_int(_require(entry, "width", where), "width", where)
        height = _as_int(_require(entry, "height", where), "height", where)
        records.append(
            ImageRecord(str(image_id), file_name, width, height, tuple(boxes_by_image[str(image_id)]))
        )
    return records


def load_annotations(path) -> List[ImageRecord]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise AnnotationError(f"{path}: {exc.strerror or exc}", path=str(path)) from exc
    try:
        doc = json.loads(text, object_pairs_hook=_reject_duplicate_keys)
    except json.JSONDecodeError as exc:
        raise AnnotationError(
            f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}",
            path=str(path),
            line=exc.lineno,
            column=exc.colno,
        ) from exc
    except AnnotationError as exc:
        exc.path = str(path)
        raise
    try:
        return parse_annotations(doc, source=str(path))
    except AnnotationError as exc:
        exc.path = str(path)
        raise


def partition_boxes(record: ImageRecord) -> Tuple[List[BBoxAnnotation], List[BBoxAnnotation]]:
    """Split boxes into (legible, machine printed, English) and everything else."""
    qualified, disqualified = [], []
    for box in record.boxes:
        (qualified if box.qualified else disqualified).append(box)
    return qualified, disqualified


def select_images(records: Sequence[ImageRecord]) -> List[ImageRecord]:
    """Keep records carrying at least one qualified box."""
    return [r for r in records if any(b.qualified for b in r.boxes)]


def dump_annotations(records: Sequence[ImageRecord]) -> dict:
    """Inverse of ``parse_annotations`` (attribute strings in COCO-Text spelling)."""
    imgs, anns = {}, {}
    for r in records:
        imgs[r.image_id] = {"file_name": r.file_name, "width": r.width, "height": r.height}
        for b in r.boxes:
            anns[b.id] = {
                "image_id": r.image_id,
                "bbox": [b.x, b.y, b.w, b.h],
                "legibility": b.legibility.value,
                "class": b.text_class.value,
                "language": b.language.value,
            }
    return {"imgs": imgs, "anns": anns}
