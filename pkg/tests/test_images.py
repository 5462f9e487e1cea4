import numpy as np
import pytest

from rendersim.errors import ConfigurationError, ContractViolation
from rendersim.images import (compare_arrays, compare_images, read_image, read_pfm, read_ppm,
                              to_uint8, write_pfm, write_ppm)


def _ramp(h=5, w=7):
    rng = np.random.default_rng(0)
    return rng.uniform(size=(h, w, 3))


def test_pfm_roundtrip_is_lossless_at_float32(tmp_path):
    img = _ramp()
    write_pfm(tmp_path / "a.pfm", img)
    back = read_pfm(tmp_path / "a.pfm")
    assert back.dtype == np.float32
    assert np.array_equal(back, img.astype(np.float32))


def test_pfm_rows_are_stored_bottom_up(tmp_path):
    img = np.zeros((2, 1, 3))
    img[0] = 1.0  # top row white
    write_pfm(tmp_path / "a.pfm", img)
    raw = (tmp_path / "a.pfm").read_bytes()
    payload = np.frombuffer(raw[-24:], "<f4").reshape(2, 3)
    assert np.all(payload[0] == 0.0) and np.all(payload[1] == 1.0)


def test_ppm_roundtrip(tmp_path):
    img = _ramp()
    write_ppm(tmp_path / "a.ppm", img)
    assert np.array_equal(read_ppm(tmp_path / "a.ppm"), to_uint8(img))
    assert (tmp_path / "a.ppm").read_bytes().startswith(b"P6\n7 5\n255\n")


def test_ppm_clips_out_of_range():
    assert to_uint8(np.array([-1.0, 0.5, 2.0])).tolist() == [0, 128, 255]


def test_ppm_with_header_comment(tmp_path):
    body = bytes([10, 20, 30])
    (tmp_path / "c.ppm").write_bytes(b"P6\n# made by hand\n1 1\n255\n" + body)
    assert read_ppm(tmp_path / "c.ppm").tolist() == [[[10, 20, 30]]]


def test_bad_shapes_rejected(tmp_path):
    with pytest.raises(ContractViolation):
        write_ppm(tmp_path / "x.ppm", np.zeros((2, 2)))
    with pytest.raises(ContractViolation):
        write_pfm(tmp_path / "x.pfm", np.zeros((2, 2, 4)))


def test_black_vs_white_differs_by_255(tmp_path):
    write_ppm(tmp_path / "k.ppm", np.zeros((3, 3, 3)))
    write_ppm(tmp_path / "w.ppm", np.ones((3, 3, 3)))
    res = compare_images(tmp_path / "k.ppm", tmp_path / "w.ppm", 0.0)
    assert res.max_abs == (255.0, 255.0, 255.0)
    assert not res.passed


def test_identical_images_pass_at_zero_tolerance(tmp_path):
    img = _ramp()
    write_pfm(tmp_path / "a.pfm", img)
    write_pfm(tmp_path / "b.pfm", img)
    assert compare_images(tmp_path / "a.pfm", tmp_path / "b.pfm", 0.0).passed


def test_compare_reports_per_channel():
    a = np.zeros((2, 2, 3))
    b = a.copy()
    b[1, 0, 2] = 0.25
    res = compare_arrays(a, b, 0.1)
    assert res.max_abs == (0.0, 0.0, 0.25)
    assert res.worst == 0.25 and not res.passed


def test_compare_shape_mismatch():
    with pytest.raises(ContractViolation):
        compare_arrays(np.zeros((2, 2, 3)), np.zeros((2, 3, 3)), 0.0)


def test_unknown_and_missing_files(tmp_path):
    (tmp_path / "x.img").write_bytes(b"GIF89a")
    with pytest.raises(ContractViolation):
        read_image(tmp_path / "x.img")
    with pytest.raises(ConfigurationError):
        read_image(tmp_path / "missing.ppm")


def test_write_leaves_no_temp_files(tmp_path):
    write_ppm(tmp_path / "a.ppm", _ramp())
    assert [p.name for p in tmp_path.iterdir()] == ["a.ppm"]
