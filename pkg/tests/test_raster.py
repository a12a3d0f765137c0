import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from PIL import Image

from boxtrimap.errors import BoxOutsideImage, CorruptMask, CorruptProbMap
from boxtrimap.raster import (
    Box,
    Label,
    ProbMap,
    Raster,
    TrimapMask,
    crop,
    decode_mask,
    decode_pmap,
    encode_mask,
    encode_pmap,
    enlarge_box,
    min_side_dims,
    overlay,
    rasterize,
    read_pmap,
    resample_probmap,
    resize_min_side,
    write_pmap,
)


# -- enlarge_box --------------------------------------------------------------

def test_enlarge_hand_example():
    # width 100 -> 130, height 50 -> 65, centred
    out = enlarge_box(Box(100, 100, 200, 150), 0.3, 1000, 1000)
    assert out.as_list() == pytest.approx([85, 92.5, 215, 157.5])


def test_enlarge_zero_factor_is_identity():
    b = Box(3.5, 4, 20, 30.25)
    assert enlarge_box(b, 0.0, 100, 100) == b


def test_enlarge_clamps_to_image():
    out = enlarge_box(Box(0, 0, 10, 10), 0.3, 1000, 1000)
    assert out.as_list() == pytest.approx([0, 0, 11.5, 11.5])


def test_enlarge_outside_image_raises():
    with pytest.raises(BoxOutsideImage):
        enlarge_box(Box(200, 200, 210, 210), 0.3, 100, 100)


def test_enlarge_rejects_negative_factor():
    with pytest.raises(ValueError):
        enlarge_box(Box(0, 0, 1, 1), -0.1, 10, 10)


coords = st.floats(-50, 150, allow_nan=False)
sizes = st.floats(0.5, 120, allow_nan=False)


@given(coords, coords, sizes, sizes, st.floats(0, 2))
def test_enlarge_contains_clipped_original(x, y, w, h, factor):
    b = Box(x, y, x + w, y + h)
    inside = b.clip(100, 100)
    if inside is None:
        return
    out = enlarge_box(b, factor, 100, 100)
    assert out.contains(inside)
    assert 0 <= out.x0 and out.x1 <= 100 and 0 <= out.y0 and out.y1 <= 100


@given(coords, coords, sizes, sizes)
def test_enlarge_area_bound(x, y, w, h):
    b = Box(x, y, x + w, y + h)
    if b.clip(100, 100) is None:
        return
    out = enlarge_box(b, 0.3, 100, 100)
    ratio = out.area / b.area
    assert ratio <= 1.69 + 1e-9
    unclamped = b.x0 - 0.15 * w >= 0 and b.y0 - 0.15 * h >= 0 and b.x1 + 0.15 * w <= 100 and b.y1 + 0.15 * h <= 100
    if unclamped:
        assert ratio == pytest.approx(1.69)


# -- crop ---------------------------------------------------------------------

def test_rasterize_rounding_rule():
    assert rasterize(Box(0.4, 0.4, 10.4, 10.4)) == (0, 0, 10, 10)
    assert rasterize(Box(2.7, 1.2, 3.5, 9.9)) == (2, 1, 1, 9)
    assert rasterize(Box(0, 0, 2.5, 1.5)) == (0, 0, 3, 2)  # half rounds up
    assert rasterize(Box(5, 5, 5.1, 5.1)) == (5, 5, 1, 1)


def test_crop_full_image_identity(rng):
    img = Raster(rng.integers(0, 256, (12, 17, 3), dtype=np.uint8))
    assert crop(img, Box(0, 0, 17, 12)) == img


def test_crop_translation(rng):
    data = rng.integers(0, 256, (40, 30), dtype=np.uint8)
    out = crop(Raster(data), Box(10, 10, 20, 20))
    assert (out.width, out.height) == (10, 10)
    assert out.data[0, 0] == data[10, 10]
    assert np.array_equal(out.data, data[10:20, 10:20])


def test_crop_subpixel_origin(rng):
    data = rng.integers(0, 256, (40, 30), dtype=np.uint8)
    out = crop(Raster(data), Box(0.4, 0.4, 10.4, 10.4))
    assert np.array_equal(out.data, data[0:10, 0:10])


def test_crop_outside_image():
    with pytest.raises(BoxOutsideImage):
        crop(Raster(np.zeros((5, 5), np.uint8)), Box(10, 10, 12, 12))


# -- resize -------------------------------------------------------------------

@pytest.mark.parametrize(
    "size, expected",
    [((370, 740), (185, 370)), ((185, 200), (185, 200)), ((100, 50), (370, 185))],
)
def test_resize_min_side_examples(size, expected):
    w, h = size
    out = resize_min_side(Raster(np.zeros((h, w), np.uint8)), 185)
    assert (out.width, out.height) == expected


def test_resize_keeps_constant_image():
    img = Raster(np.full((7, 13, 3), 88, np.uint8))
    out = resize_min_side(img, 20)
    assert np.all(out.data == 88)


@given(st.integers(1, 600), st.integers(1, 600), st.integers(1, 300))
def test_min_side_dims_property(w, h, target):
    out_w, out_h = min_side_dims(w, h, target)
    assert min(out_w, out_h) == target
    # aspect preserved within the rounding of one side
    if w <= h:
        assert abs(out_h - h * target / w) <= 0.5
    else:
        assert abs(out_w - w * target / h) <= 0.5


# -- resample -----------------------------------------------------------------

def test_resample_constant_is_fixed_point():
    out = resample_probmap(ProbMap.constant(5, 3, 0.5), 17, 9)
    assert np.all(out.values == 0.5)


def test_resample_identity_dims(rng):
    p = ProbMap(rng.random((6, 4)))
    assert resample_probmap(p, 4, 6) == p


def test_resample_pixel_centre_example():
    # source samples at x = -0.25, 0.25, 0.75, 1.25, edge-clamped
    out = resample_probmap(ProbMap(np.array([[0.0, 1.0]])), 4, 1)
    assert out.values[0].tolist() == pytest.approx([0.0, 0.25, 0.75, 1.0])


def test_resample_align_corners_example():
    out = resample_probmap(ProbMap(np.array([[0.0, 1.0]])), 4, 1, align_corners=True)
    assert out.values[0].tolist() == pytest.approx([0.0, 1 / 3, 2 / 3, 1.0])


def test_resample_matches_pointwise_oracle(rng):
    src = rng.random((5, 7))
    out = resample_probmap(ProbMap(src), 11, 3).values

    def sample(i, n_in, n_out):
        s = min(max((i + 0.5) * n_in / n_out - 0.5, 0.0), n_in - 1)
        lo = int(np.floor(s))
        return lo, min(lo + 1, n_in - 1), s - lo

    for r in range(3):
        r0, r1, fr = sample(r, 5, 3)
        for c in range(11):
            c0, c1, fc = sample(c, 7, 11)
            top = src[r0, c0] * (1 - fc) + src[r0, c1] * fc
            bot = src[r1, c0] * (1 - fc) + src[r1, c1] * fc
            assert out[r, c] == pytest.approx(top * (1 - fr) + bot * fr, abs=1e-12)


@settings(max_examples=50)
@given(arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 8)), elements=st.floats(0, 1)),
       st.integers(1, 20), st.integers(1, 20))
def test_resample_stays_in_unit_interval(values, out_w, out_h):
    out = resample_probmap(ProbMap(values), out_w, out_h).values
    assert out.min() >= values.min() - 1e-12 and out.max() <= values.max() + 1e-12


# -- types --------------------------------------------------------------------

def test_probmap_validation():
    with pytest.raises(ValueError):
        ProbMap(np.array([[1.5]]))
    with pytest.raises(ValueError):
        ProbMap(np.array([[np.nan]]))


def test_types_are_immutable():
    m = TrimapMask.filled(2, 2)
    with pytest.raises(ValueError):
        m.labels[0, 0] = 1
    with pytest.raises(AttributeError):
        m.labels = None


def test_box_rejects_degenerate():
    with pytest.raises(ValueError):
        Box(1, 1, 1, 2)


# -- codecs -------------------------------------------------------------------

def test_all_background_mask_round_trip(tmp_path):
    m = TrimapMask.filled(9, 4)
    encode_mask(m, tmp_path / "m.png")
    with Image.open(tmp_path / "m.png") as im:
        assert im.mode == "P"
        assert np.all(np.array(im) == 0)
    assert decode_mask(tmp_path / "m.png") == m


def test_mask_colours(tmp_path):
    labels = np.zeros((5, 6), np.uint8)
    labels[1, 2] = Label.FOREGROUND
    labels[3, :] = Label.UNCERTAIN
    encode_mask(TrimapMask(labels), tmp_path / "m.png")
    with Image.open(tmp_path / "m.png") as im:
        rgb = np.array(im.convert("RGB"))
    assert tuple(rgb[1, 2]) == (255, 0, 0)
    assert all(tuple(px) == (255, 255, 0) for px in rgb[3])
    assert tuple(rgb[0, 0]) == (0, 0, 0)


def test_decode_rejects_unknown_index(tmp_path):
    im = Image.fromarray(np.full((3, 3), 7, np.uint8), mode="P")
    im.putpalette([0] * 768)
    im.save(tmp_path / "bad.png")
    with pytest.raises(CorruptMask):
        decode_mask(tmp_path / "bad.png")


def test_decode_rejects_non_palette(tmp_path):
    Image.new("RGB", (2, 2)).save(tmp_path / "rgb.png")
    with pytest.raises(CorruptMask):
        decode_mask(tmp_path / "rgb.png")


@settings(max_examples=30, deadline=None)
@given(arrays(np.uint8, st.tuples(st.integers(1, 40), st.integers(1, 40)), elements=st.integers(0, 2)))
def test_mask_round_trip_property(tmp_path_factory, labels):
    path = tmp_path_factory.mktemp("m") / "m.png"
    encode_mask(TrimapMask(labels), path)
    assert np.array_equal(decode_mask(path).labels, labels)


def test_pmap_layout():
    p = ProbMap(np.array([[0.0, 0.3], [0.7, 1.0]]))
    blob = encode_pmap(p)
    assert blob[:4] == b"PMAP"
    assert blob[4:12] == (2).to_bytes(4, "little") + (2).to_bytes(4, "little")
    assert len(blob) == 12 + 16
    back = decode_pmap(blob)
    assert back.values.ravel().tolist() == pytest.approx([0.0, 0.3, 0.7, 1.0], abs=1e-7)


def test_pmap_file_round_trip(tmp_path, rng):
    p = ProbMap(rng.random((3, 5)).astype(np.float32))
    write_pmap(p, tmp_path / "x.pmap")
    assert read_pmap(tmp_path / "x.pmap") == p


@pytest.mark.parametrize(
    "blob",
    [
        b"",
        b"PMA",
        b"XMAP" + (1).to_bytes(4, "little") * 2 + np.float32(0.5).tobytes(),
        b"PMAP" + (2).to_bytes(4, "little") + (1).to_bytes(4, "little") + np.float32(0.5).tobytes(),
        b"PMAP" + (1).to_bytes(4, "little") * 2 + np.float32(1.5).tobytes(),
        b"PMAP" + (1).to_bytes(4, "little") * 2 + np.float32(np.nan).tobytes(),
        b"PMAP" + (0).to_bytes(4, "little") * 2,
    ],
)
def test_pmap_corruption(blob):
    with pytest.raises(CorruptProbMap):
        decode_pmap(blob)


def test_overlay_colours():
    img = Raster(np.full((2, 2, 3), 100, np.uint8))
    labels = np.array([[0, 1], [2, 0]], np.uint8)
    out = overlay(img, TrimapMask(labels)).data
    assert tuple(out[0, 0]) == (100, 100, 100)
    assert tuple(out[0, 1]) == (178, 50, 50)
    assert tuple(out[1, 0]) == (178, 178, 50)
