"""INI-style run configuration (``configparser``).

A synthetic-data config has one ``[synth]`` section; a supervision run uses
``[pipeline]``, ``[scorer]`` and ``[fusion]``. Lists are comma separated,
relative paths resolve against the config file's directory. Unknown keys are
rejected so typos fail loudly.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

from .errors import ConfigError
from .fusion import FusionConfig
from .scorer import ScorerConfig
from .synthgen import SynthConfig


@dataclass(frozen=True)
class PipelineConfig:
    annotations_path: Path
    images_dir: Path
    output_dir: Path
    scorer: ScorerConfig = ScorerConfig()
    fusion: FusionConfig = FusionConfig()
    workers: int = 1
    overlay: bool = False

    def __post_init__(self):
        if self.workers < 1:
            raise ConfigError("workers must be >= 1", "workers")
        for name in ("annotations_path", "images_dir", "output_dir"):
            if not str(getattr(self, name)):
                raise ConfigError(f"{name} must not be empty", name)


def _read(path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}", "config") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}", "config") from exc
    return parser


def _section(parser, name: str, allowed, required=True) -> dict:
    if not parser.has_section(name):
        if required:
            raise ConfigError(f"missing section [{name}]", name)
        return {}
    values = dict(parser.items(name))
    unknown = sorted(set(values) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(unknown)}", unknown[0])
    return values


def _convert(key: str, raw: str, kind):
    try:
        if kind is bool:
            lowered = raw.strip().lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return kind(raw.strip())
    except ValueError:
        raise ConfigError(f"invalid value for {key}: {raw!r}", key) from None


def _list(raw: str):
    return tuple(item.strip() for item in raw.split(",") if item.strip())


def _pair(key: str, raw: str, kind):
    items = _list(raw)
    if len(items) != 2:
        raise ConfigError(f"{key} needs two comma-separated values", key)
    return tuple(_convert(key, v, kind) for v in items)


def _path(base: Path, raw: str) -> Path:
    p = Path(raw.strip()).expanduser()
    return p if p.is_absolute() else base / p


def load_synth_config(path, output_override: Optional[str] = None):
    """Return ``(SynthConfig, output_dir)``."""
    base = Path(path).resolve().parent
    allowed = [f.name for f in fields(SynthConfig)] + ["output_dir"]
    raw = _section(_read(path), "synth", allowed)
    kw = {}
    for key, value in raw.items():
        if key == "output_dir":
            continue
        if key in ("seed", "count", "max_retries"):
            kw[key] = _convert(key, value, int)
        elif key in ("fg_bg_contrast_min", "enlarge_factor"):
            kw[key] = _convert(key, value, float)
        elif key in ("size_range", "canvas_size"):
            kw[key] = _pair(key, value, int)
        elif key == "rotation_range_deg":
            kw[key] = _pair(key, value, float)
        elif key in ("font_paths", "background_paths"):
            kw[key] = tuple(str(_path(base, v)) for v in _list(value))
        elif key == "word_list":
            kw[key] = _list(value)
        else:
            kw[key] = value.strip()
    out = output_override or raw.get("output_dir")
    if not out:
        raise ConfigError("output_dir is required (config or --output)", "output_dir")
    out_dir = Path(out) if output_override else _path(base, out)
    return SynthConfig(**kw), out_dir


def load_pipeline_config(path, **overrides) -> PipelineConfig:
    """Parse a supervision-run config; non-``None`` keyword overrides win."""
    base = Path(path).resolve().parent
    parser = _read(path)
    pipe = _section(parser, "pipeline", ["annotations", "images_dir", "output_dir", "workers", "overlay"])
    scorer_raw = _section(parser, "scorer", ["kind", "logistic_scale", "min_side", "external_dir"], required=False)
    fusion_raw = _section(parser, "fusion", ["th1", "th2", "enlarge_factor"], required=False)

    scorer_kw = {}
    if "kind" in scorer_raw:
        scorer_kw["kind"] = scorer_raw["kind"].strip()
    if "logistic_scale" in scorer_raw:
        scorer_kw["logistic_scale"] = _convert("logistic_scale", scorer_raw["logistic_scale"], float)
    if "min_side" in scorer_raw:
        scorer_kw["min_side"] = _convert("min_side", scorer_raw["min_side"], int)
    if scorer_raw.get("external_dir", "").strip():
        scorer_kw["external_dir"] = str(_path(base, scorer_raw["external_dir"]))
    fusion_kw = {k: _convert(k, v, float) for k, v in fusion_raw.items()}

    for key in ("annotations", "images_dir"):
        if not pipe.get(key, "").strip():
            raise ConfigError(f"[pipeline] {key} is required", key)
    output = overrides.get("output_dir")
    if output is None:
        if not pipe.get("output_dir", "").strip():
            raise ConfigError("[pipeline] output_dir is required (config or --output)", "output_dir")
        output = _path(base, pipe["output_dir"])
    workers = overrides.get("workers")
    if workers is None:
        workers = _convert("workers", pipe["workers"], int) if "workers" in pipe else 1
    overlay = overrides.get("overlay")
    if overlay is None:
        overlay = _convert("overlay", pipe["overlay"], bool) if "overlay" in pipe else False
    return PipelineConfig(
        annotations_path=_path(base, pipe["annotations"]),
        images_dir=_path(base, pipe["images_dir"]),
        output_dir=Path(output),
        scorer=ScorerConfig(**scorer_kw),
        fusion=FusionConfig(**fusion_kw),
        workers=workers,
        overlay=overlay,
    )
