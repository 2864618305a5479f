"""Mask primitives: score maps, binary masks, and connected target regions.

Foreground structure is extracted once per mask and reused by the matching
and metric layers. Everything here is immutable after construction, so
masks and target sets can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .exceptions import ShapeMismatchError

# 3x3 footprints for connected-component labeling.
_STRUCTURE_4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
_STRUCTURE_8 = np.ones((3, 3), dtype=bool)

DEFAULT_CONNECTIVITY = 8


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ScoreMask:
    """Per-pixel prediction scores in [0, 1], row-major, shape (H, W)."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.size == 0:
            raise ValueError(f"score mask must be a non-empty 2-D array, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("score mask contains non-finite values")
        if values.min() < 0.0 or values.max() > 1.0:
            raise ValueError("score values must lie in [0, 1]")
        object.__setattr__(self, "values", _frozen(values))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True)
class BinaryMask:
    """Boolean foreground mask, row-major, shape (H, W)."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 2 or bits.size == 0:
            raise ValueError(f"binary mask must be a non-empty 2-D array, got shape {bits.shape}")
        object.__setattr__(self, "bits", _frozen(bits.astype(bool)))

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.bits.shape

    def foreground_count(self) -> int:
        return int(self.bits.sum())


@dataclass(frozen=True)
class TargetRegion:
    """One connected foreground component of a mask.

    ``pixels`` is the exact (row, col) set; ``centroid`` is the unweighted
    mean of integer pixel coordinates (no half-pixel offset -- consistent
    offsets cancel in centroid distances).
    """

    id: int
    pixels: frozenset[tuple[int, int]]
    area: int
    centroid: tuple[float, float]
    bbox: tuple[int, int, int, int]  # (min_row, min_col, max_row, max_col), inclusive
    source_shape: tuple[int, int]

    @classmethod
    def from_coords(cls, region_id: int, rows: np.ndarray, cols: np.ndarray,
                    source_shape: tuple[int, int]) -> "TargetRegion":
        if rows.size == 0:
            raise ValueError("target region must contain at least one pixel")
        pixels = frozenset(zip(rows.tolist(), cols.tolist()))
        centroid = (float(rows.mean()), float(cols.mean()))
        bbox = (int(rows.min()), int(cols.min()), int(rows.max()), int(cols.max()))
        return cls(region_id, pixels, int(rows.size), centroid, bbox, source_shape)


@dataclass(frozen=True)
class TargetSet:
    """All target regions of one mask, ordered by ascending (min_row, min_col)."""

    regions: tuple[TargetRegion, ...]
    source_shape: tuple[int, int]

    def __len__(self) -> int:
        return len(self.regions)

    def total_area(self) -> int:
        return sum(r.area for r in self.regions)


def binarize(scores: ScoreMask, threshold: float) -> BinaryMask:
    """Threshold scores to a foreground mask; a score equal to the threshold counts as foreground."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must lie in [0, 1], got {threshold}")
    return BinaryMask(scores.values >= threshold)


def extract_targets(mask: BinaryMask, connectivity: int = DEFAULT_CONNECTIVITY) -> TargetSet:
    """Partition mask foreground into maximal connected components.

    ``connectivity`` is 4 (edge-adjacent) or 8 (edge- or corner-adjacent).
    Regions are ordered by ascending (min_row, min_col) and re-numbered
    0..n-1 in that order, so output is deterministic regardless of how the
    underlying labeling scans the image.
    """
    if connectivity == 4:
        structure = _STRUCTURE_4
    elif connectivity == 8:
        structure = _STRUCTURE_8
    else:
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")

    labels, count = ndimage.label(mask.bits, structure=structure)
    regions = []
    for label in range(1, count + 1):
        rows, cols = np.nonzero(labels == label)
        regions.append((int(rows.min()), int(cols.min()), rows, cols))
    regions.sort(key=lambda item: (item[0], item[1]))
    ordered = tuple(
        TargetRegion.from_coords(i, rows, cols, mask.shape)
        for i, (_, _, rows, cols) in enumerate(regions)
    )
    return TargetSet(ordered, mask.shape)


def region_iou(a: TargetRegion, b: TargetRegion) -> float:
    """Intersection-over-union of two regions' pixel sets."""
    if a.source_shape != b.source_shape:
        raise ShapeMismatchError(
            f"regions come from masks of different shapes: {a.source_shape} vs {b.source_shape}"
        )
    inter = len(a.pixels & b.pixels)
    if inter == 0:
        return 0.0
    union = a.area + b.area - inter
    return inter / union


def centroid_distance(a: TargetRegion, b: TargetRegion) -> float:
    """Euclidean distance between region centroids, in pixels."""
    dr = a.centroid[0] - b.centroid[0]
    dc = a.centroid[1] - b.centroid[1]
    return float(np.hypot(dr, dc))


def mask_from_regions(regions, shape: tuple[int, int]) -> BinaryMask:
    """Rasterize an iterable of TargetRegion back into a mask."""
    bits = np.zeros(shape, dtype=bool)
    for region in regions:
        for r, c in region.pixels:
            bits[r, c] = True
    return BinaryMask(bits)
