"""Reading and writing mask files.

Supported inputs are 8-bit grayscale images (PNG, PGM in both the binary
"P5" and ASCII "P2" encodings) and a raw dump format: little-endian u32
height, u32 width, then height*width intensity bytes in row-major order.

Prediction files map intensity to a score via value / 255. Ground-truth
files treat any nonzero intensity as foreground (GT masks are
conventionally stored as 0/255 images).
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .exceptions import MaskDecodeError
from .masks import BinaryMask, ScoreMask

RAW_SUFFIXES = (".raw", ".bin")
IMAGE_SUFFIXES = (".png", ".pgm")
MASK_SUFFIXES = IMAGE_SUFFIXES + RAW_SUFFIXES


def read_gray8(path) -> np.ndarray:
    """Read one supported file into a uint8 (H, W) array."""
    path = Path(path)
    if path.suffix.lower() in RAW_SUFFIXES:
        return _read_raw(path)
    try:
        with Image.open(path) as img:
            if img.mode == "1":
                img = img.convert("L")
            if img.mode != "L":
                raise MaskDecodeError(
                    f"{path}: expected 8-bit grayscale, got mode {img.mode!r}"
                )
            return np.asarray(img, dtype=np.uint8)
    except UnidentifiedImageError as exc:
        raise MaskDecodeError(f"{path}: not a recognized image file") from exc


def _read_raw(path: Path) -> np.ndarray:
    data = path.read_bytes()
    if len(data) < 8:
        raise MaskDecodeError(f"{path}: raw file shorter than its 8-byte header")
    height, width = struct.unpack_from("<II", data)
    if height < 1 or width < 1:
        raise MaskDecodeError(f"{path}: raw header declares empty shape {height}x{width}")
    expected = 8 + height * width
    if len(data) != expected:
        raise MaskDecodeError(
            f"{path}: raw payload is {len(data) - 8} bytes, header requires {height * width}"
        )
    arr = np.frombuffer(data, dtype=np.uint8, offset=8)
    return arr.reshape(height, width).copy()


def load_score_mask(path) -> ScoreMask:
    """Load a prediction file; score = intensity / 255."""
    return ScoreMask(read_gray8(path).astype(np.float64) / 255.0)


def load_binary_mask(path) -> BinaryMask:
    """Load a ground-truth file; any nonzero intensity is foreground."""
    return BinaryMask(read_gray8(path) != 0)


def write_gray8(path, values: np.ndarray) -> None:
    """Write a uint8 (H, W) array in the format implied by the file suffix."""
    path = Path(path)
    values = np.ascontiguousarray(values, dtype=np.uint8)
    if values.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {values.shape}")
    suffix = path.suffix.lower()
    if suffix in RAW_SUFFIXES:
        header = struct.pack("<II", values.shape[0], values.shape[1])
        path.write_bytes(header + values.tobytes())
    elif suffix in IMAGE_SUFFIXES:
        Image.fromarray(values, mode="L").save(path)
    else:
        raise ValueError(f"unsupported mask suffix {suffix!r} (use one of {MASK_SUFFIXES})")


def write_binary_mask(path, mask: BinaryMask) -> None:
    """Write a mask as a 0/255 grayscale file."""
    write_gray8(path, mask.bits.astype(np.uint8) * 255)
