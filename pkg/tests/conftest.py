import json

import numpy as np
import pytest

from boxtrimap.raster import Raster

ACCEPTANCE_RESULTS = []


def write_annotations(path, imgs, anns):
    path.write_text(json.dumps({"imgs": imgs, "anns": anns}), encoding="utf-8")
    return path


def ann(image_id, bbox, legibility="legible", cls="machine printed", language="english"):
    return {"image_id": image_id, "bbox": list(bbox), "legibility": legibility, "class": cls, "language": language}


@pytest.fixture
def two_image_file(tmp_path):
    imgs = {
        "1": {"file_name": "a.png", "width": 64, "height": 48},
        "2": {"file_name": "b.png", "width": 32, "height": 32},
    }
    anns = {
        "10": ann("1", [4, 4, 20, 10]),
        "11": ann("1", [30, 20, 10, 10], legibility="illegible"),
        "12": ann("2", [2, 2, 8, 8], cls="handwritten"),
    }
    return write_annotations(tmp_path / "anns.json", imgs, anns)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def two_level(size=8, inner=(2, 6), border_level=50, inner_level=200):
    data = np.full((size, size), border_level, dtype=np.uint8)
    lo, hi = inner
    data[lo:hi, lo:hi] = inner_level
    return Raster(data)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number}. {title}  ({detail})")
