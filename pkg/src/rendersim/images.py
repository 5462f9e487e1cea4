"""Image files: binary PPM (P6) for viewing, PFM float32 for lossless diffs."""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, ContractViolation


def atomic_write_bytes(path, data: bytes) -> Path:
    """Write ``data`` to a sibling temp file, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp{os.getpid()}")
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)
    return path


def to_uint8(image) -> np.ndarray:
    img = np.asarray(image, dtype=np.float64)
    return np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)


def write_ppm(path, image) -> Path:
    """``image`` is ``(H, W, 3)`` reals in [0, 1] (clipped) or uint8."""
    img = np.asarray(image)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ContractViolation(f"PPM needs an (H, W, 3) image, got {img.shape}")
    px = img if img.dtype == np.uint8 else to_uint8(img)
    h, w, _ = px.shape
    return atomic_write_bytes(path, f"P6\n{w} {h}\n255\n".encode("ascii") + px.tobytes())


def _ppm_tokens(data: bytes, count: int):
    tokens, pos = [], 0
    while len(tokens) < count:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while end < len(data) and not data[end:end + 1].isspace():
            end += 1
        tokens.append(data[pos:end])
        pos = end
    return tokens, pos + 1


def read_ppm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    (magic, w, h, maxval), pos = _ppm_tokens(data, 4)
    if magic != b"P6" or int(maxval) != 255:
        raise ContractViolation(f"{path}: only 8-bit P6 PPM is supported")
    w, h = int(w), int(h)
    px = np.frombuffer(data, dtype=np.uint8, count=w * h * 3, offset=pos)
    return px.reshape(h, w, 3).copy()


def write_pfm(path, image) -> Path:
    """Little-endian colour PFM; rows stored top to bottom (scale -1)."""
    img = np.asarray(image, dtype="<f4")
    if img.ndim != 3 or img.shape[2] != 3:
        raise ContractViolation(f"PFM needs an (H, W, 3) image, got {img.shape}")
    h, w, _ = img.shape
    header = f"PF\n{w} {h}\n-1.0\n".encode("ascii")
    # PFM rows run bottom-to-top.
    return atomic_write_bytes(path, header + np.ascontiguousarray(img[::-1]).tobytes())


def read_pfm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    (magic, w, h, scale), pos = _ppm_tokens(data, 4)
    if magic != b"PF":
        raise ContractViolation(f"{path}: not a colour PFM file")
    w, h, scale = int(w), int(h), float(scale)
    dtype = "<f4" if scale < 0 else ">f4"
    img = np.frombuffer(data, dtype=dtype, count=w * h * 3, offset=pos).reshape(h, w, 3)
    return img[::-1].astype(np.float32)


def read_image(path) -> np.ndarray:
    """Load PPM as 0..255 floats, PFM as stored floats."""
    try:
        head = Path(path).read_bytes()[:2]
    except OSError as exc:
        raise ConfigurationError(f"cannot read image {path}: {exc}") from None
    if head == b"P6":
        return read_ppm(path).astype(np.float64)
    if head == b"PF":
        return read_pfm(path).astype(np.float64)
    raise ContractViolation(f"{path}: unrecognised image format")


@dataclass(frozen=True)
class ImageComparison:
    max_abs: tuple[float, float, float]
    tolerance: float

    @property
    def worst(self) -> float:
        return max(self.max_abs)

    @property
    def passed(self) -> bool:
        return self.worst <= self.tolerance


def compare_arrays(a, b, tolerance: float) -> ImageComparison:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ContractViolation(f"image shapes differ: {a.shape} vs {b.shape}")
    diff = np.abs(a - b).reshape(-1, a.shape[-1])
    per = diff.max(axis=0) if diff.size else np.zeros(a.shape[-1])
    return ImageComparison(tuple(float(x) for x in per), float(tolerance))


def compare_images(path_a, path_b, tolerance: float) -> ImageComparison:
    """Per-channel max absolute difference between two image files.

    PPM values compare on the 0..255 scale, PFM values as stored.
    """
    return compare_arrays(read_image(path_a), read_image(path_b), tolerance)
