"""Command line entry point: ``synth``, ``generate`` and ``evaluate``.

Exit codes: 0 success, 1 runtime or total batch failure, 2 usage/config error.
Log verbosity comes from ``BOXTRIMAP_LOG`` (``DEBUG``, ``INFO``, ``WARNING``...).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path
from typing import List, Optional

from .annotations import ImageRecord, load_annotations, partition_boxes, select_images
from .config import PipelineConfig, load_pipeline_config, load_synth_config
from .errors import BoxTrimapError, ConfigError
from .fusion import FusionConfig, generate_supervision
from .metrics import (
    GroundTruthUncertain,
    PredictionUncertain,
    UncertainPolicy,
    evaluate_corpus,
    evaluate_corpus_macro,
    report_dict,
)
from .raster import Label, decode_mask, encode_mask, load_image, overlay, save_image
from .scorer import ScorerConfig
from .synthgen import emit_dataset

logger = logging.getLogger("boxtrimap")

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2


def _configure_logging() -> None:
    level = os.environ.get("BOXTRIMAP_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _error(message: str) -> None:
    print(f"boxtrimap: error: {message}", file=sys.stderr)


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# -- synth ------------------------------------------------------------------


def cmd_synth(config: str, output: Optional[str] = None, workers: int = 1) -> int:
    try:
        cfg, out_dir = load_synth_config(config, output)
    except (ConfigError, TypeError) as exc:
        _error(str(exc))
        return EXIT_USAGE
    try:
        manifest = emit_dataset(cfg, out_dir, workers=workers)
    except OSError as exc:
        _error(f"cannot write dataset to {exc.filename or out_dir}: {exc.strerror or exc}")
        return EXIT_FAILURE
    except BoxTrimapError as exc:
        _error(str(exc))
        return EXIT_FAILURE
    logger.info("wrote %d samples to %s", manifest["count"], out_dir)
    return EXIT_OK


# -- generate ---------------------------------------------------------------


def _process_image(record: ImageRecord, images_dir: str, output_dir: str, scorer: ScorerConfig,
                   fusion: FusionConfig, want_overlay: bool) -> dict:
    """Produce one mask; returns a manifest entry with ``status`` processed/skipped."""
    try:
        img = load_image(Path(images_dir) / record.file_name)
        mask = generate_supervision(img, record, scorer, fusion)
        mask_name = f"{record.image_id}.png"
        encode_mask(mask, Path(output_dir) / mask_name)
        if want_overlay:
            save_image(overlay(img, mask), Path(output_dir) / "overlays" / mask_name)
    except (BoxTrimapError, OSError, ValueError) as exc:
        logger.warning("image %s skipped: %s", record.image_id, exc)
        return {"status": "skipped", "image_id": record.image_id, "reason": f"{type(exc).__name__}: {exc}"}
    qualified, disqualified = partition_boxes(record)
    return {
        "status": "processed",
        "image_id": record.image_id,
        "mask": mask_name,
        "qualified_boxes": len(qualified),
        "disqualified_boxes": len(disqualified),
        "background_fraction": round(mask.fraction(Label.BACKGROUND), 6),
        "foreground_fraction": round(mask.fraction(Label.FOREGROUND), 6),
        "uncertain_fraction": round(mask.fraction(Label.UNCERTAIN), 6),
    }


def run_generate(cfg: PipelineConfig) -> dict:
    """Run supervision generation for every selected image and write the manifest.

    The manifest deliberately omits worker count and absolute paths so that
    runs differing only in scheduling produce identical bytes.
    """
    records = load_annotations(cfg.annotations_path)
    selected = select_images(records)
    selected_ids = {r.image_id for r in selected}
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    if cfg.overlay:
        (cfg.output_dir / "overlays").mkdir(exist_ok=True)

    args = [(r, str(cfg.images_dir), str(cfg.output_dir), cfg.scorer, cfg.fusion, cfg.overlay) for r in selected]
    if cfg.workers > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_process_image, *zip(*args)))
    else:
        results = [_process_image(*a) for a in args]
    by_id = {entry["image_id"]: entry for entry in results}

    processed, skipped = [], []
    for r in records:
        if r.image_id not in selected_ids:
            skipped.append({"image_id": r.image_id, "reason": "no legible machine-printed English box"})
            continue
        entry = dict(by_id[r.image_id])
        status = entry.pop("status")
        (processed if status == "processed" else skipped).append(entry)

    scorer = asdict(cfg.scorer)
    if scorer["external_dir"] is not None:
        scorer["external_dir"] = Path(scorer["external_dir"]).name
    manifest = {
        "annotations": cfg.annotations_path.name,
        "scorer": scorer,
        "fusion": asdict(cfg.fusion),
        "images": len(records),
        "selected": len(selected),
        "processed": processed,
        "skipped": skipped,
        "failed": sum(1 for e in results if e["status"] == "skipped"),
    }
    _write_json(cfg.output_dir / "manifest.json", manifest)
    return manifest


def cmd_generate(config: str, workers: Optional[int] = None, overlay_flag: Optional[bool] = None,
                 output: Optional[str] = None) -> int:
    try:
        cfg = load_pipeline_config(config, workers=workers, overlay=overlay_flag, output_dir=output)
    except (ConfigError, TypeError) as exc:
        _error(str(exc))
        return EXIT_USAGE
    try:
        manifest = run_generate(cfg)
    except (BoxTrimapError, OSError) as exc:
        _error(str(exc))
        return EXIT_FAILURE
    if manifest["selected"] and not manifest["processed"]:
        _error("every selected image failed; see manifest.json")
        return EXIT_FAILURE
    logger.info("%d masks written to %s, %d skipped", len(manifest["processed"]), cfg.output_dir,
                len(manifest["skipped"]))
    return EXIT_OK


# -- evaluate ---------------------------------------------------------------


def _png_names(directory: Path) -> set:
    return {p.name for p in directory.glob("*.png") if p.is_file()}


def cmd_evaluate(pred_dir: str, gt_dir: str, policy: UncertainPolicy = UncertainPolicy(),
                 aggregate: str = "micro", out: Optional[str] = None, allow_unmatched: bool = False) -> int:
    pred_path, gt_path = Path(pred_dir), Path(gt_dir)
    for p in (pred_path, gt_path):
        if not p.is_dir():
            _error(f"not a directory: {p}")
            return EXIT_USAGE
    pred_names, gt_names = _png_names(pred_path), _png_names(gt_path)
    matched = sorted(pred_names & gt_names)
    unmatched = sorted(pred_names ^ gt_names)
    if not matched:
        _error("no matching mask names between the two directories")
        return EXIT_USAGE
    if unmatched and not allow_unmatched:
        _error("unmatched mask names: " + ", ".join(unmatched))
        return EXIT_USAGE

    def pairs():
        for name in matched:
            yield decode_mask(pred_path / name), decode_mask(gt_path / name)

    try:
        if aggregate == "macro":
            metrics = evaluate_corpus_macro(pairs(), policy)
        else:
            metrics = evaluate_corpus(pairs(), policy)
        doc = report_dict(metrics, policy)
        doc["pairs"] = len(matched)
        target = Path(out) if out else pred_path / "metrics.json"
        _write_json(target, doc)
    except (BoxTrimapError, OSError) as exc:
        _error(str(exc))
        return EXIT_FAILURE
    print(json.dumps(doc, indent=2, sort_keys=True))
    return EXIT_OK


# -- argument parsing -------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boxtrimap", description="Trimap supervision from text bounding boxes.")
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="render a synthetic text dataset with ground-truth masks")
    synth.add_argument("--config", required=True)
    synth.add_argument("--output", help="override [synth] output_dir")
    synth.add_argument("--workers", type=int, default=1)

    gen = sub.add_parser("generate", help="generate trimaps from box annotations")
    gen.add_argument("--config", required=True)
    gen.add_argument("--workers", type=int)
    gen.add_argument("--output", help="override [pipeline] output_dir")
    gen.add_argument("--overlay", dest="overlay", action="store_true", default=None,
                     help="also write red/yellow overlays for inspection")
    gen.add_argument("--no-overlay", dest="overlay", action="store_false")

    ev = sub.add_parser("evaluate", help="pixel-level P/R/F1 of predicted masks against ground truth")
    ev.add_argument("pred_dir")
    ev.add_argument("gt_dir")
    ev.add_argument("--policy-uncertain", choices=["as-text", "as-background", "excluded"], default="as-text")
    ev.add_argument("--gt-uncertain", choices=["excluded", "as-text"], default="excluded")
    ev.add_argument("--aggregate", choices=["micro", "macro"], default="micro")
    ev.add_argument("--out", help="report path (default: <pred_dir>/metrics.json)")
    ev.add_argument("--allow-unmatched", action="store_true",
                    help="evaluate the common names instead of failing on mismatches")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "workers", None) is not None and args.workers < 1:
        _error("--workers must be >= 1")
        return EXIT_USAGE
    if args.command == "synth":
        return cmd_synth(args.config, args.output, args.workers)
    if args.command == "generate":
        return cmd_generate(args.config, args.workers, args.overlay, args.output)
    policy = UncertainPolicy(
        PredictionUncertain(args.policy_uncertain.replace("-", "_")),
        GroundTruthUncertain(args.gt_uncertain.replace("-", "_")),
    )
    return cmd_evaluate(args.pred_dir, args.gt_dir, policy, args.aggregate, args.out, args.allow_unmatched)


if __name__ == "__main__":
    sys.exit(main())
