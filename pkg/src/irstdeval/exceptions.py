"""Toolkit exception types."""


class ShapeMismatchError(ValueError):
    """Two masks (or regions from them) do not share the same (H, W) shape."""


class MaskDecodeError(ValueError):
    """An input file could not be decoded as an 8-bit grayscale mask."""


class DatasetError(RuntimeError):
    """A dataset-level problem: orphan files, zero pairs, unreadable samples."""
