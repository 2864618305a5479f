"""Dataset attribute statistics over intensity images and their GT masks.

Exact definitions (fixed here and versioned with the toolkit, since several
of these are folklore with multiple variants in circulation):

* brightness mean / std: mean and standard deviation of intensities
  normalized to [0, 1] (value / 255), averaged over images;
* RMS contrast: identical to the brightness standard deviation by
  definition (std of normalized intensities);
* Laplacian noise: per-image variance of the response to the 3x3 Laplacian
  kernel [[0,1,0],[1,-4,1],[0,1,0]] applied to raw 0..255 intensities with
  reflected borders, averaged over images;
* average target count: mean number of GT components per image;
* average target size: mean pixel area over all GT targets, pooled;
* target-background contrast: per target, |mean raw intensity inside the
  target - mean raw intensity in its background ring|, where the ring is
  the target dilated three times by a 3x3 square minus all foreground;
  pooled mean over targets (targets with an empty ring are skipped);
* foreground/background area ratio: per-image foreground pixel count over
  background pixel count, averaged over images.

These are computed only when intensity images are supplied; the metric
pipeline itself never looks at intensity data.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from .exceptions import ShapeMismatchError
from .masks import BinaryMask, extract_targets

_LAPLACIAN = np.array([[0, 1, 0], [1, -4, 1], [0, 1, 0]], dtype=np.float64)
_SQUARE_3X3 = np.ones((3, 3), dtype=bool)
_RING_DILATIONS = 3


@dataclass(frozen=True)
class AttributeStats:
    brightness_mean: float
    brightness_std: float
    rms_contrast: float
    laplacian_noise: float
    avg_target_count: float
    avg_target_size: float
    target_background_contrast: float
    fg_bg_area_ratio: float

    def as_dict(self) -> dict[str, float]:
        return {
            "brightness_mean": self.brightness_mean,
            "brightness_std": self.brightness_std,
            "rms_contrast": self.rms_contrast,
            "laplacian_noise": self.laplacian_noise,
            "avg_target_count": self.avg_target_count,
            "avg_target_size": self.avg_target_size,
            "target_background_contrast": self.target_background_contrast,
            "fg_bg_area_ratio": self.fg_bg_area_ratio,
        }


def dataset_stats(images: Sequence[np.ndarray], gt_masks: Sequence[BinaryMask],
                  connectivity: int = 8) -> AttributeStats:
    """Compute attribute statistics over paired (intensity image, GT mask) lists."""
    if len(images) == 0:
        raise ValueError("cannot compute statistics over zero images")
    if len(images) != len(gt_masks):
        raise ValueError("images and GT masks must pair up one-to-one")

    bright_means = []
    bright_stds = []
    noise = []
    counts = []
    sizes: list[int] = []
    contrasts: list[float] = []
    ratios = []
    for img, gt in zip(images, gt_masks):
        img = np.asarray(img, dtype=np.float64)
        if img.shape != gt.shape:
            raise ShapeMismatchError(f"image shape {img.shape} != GT shape {gt.shape}")
        # scale after the moments: std(x)/255 == std(x/255) but stays an
        # exact zero on constant images
        bright_means.append(float(img.mean()) / 255.0)
        bright_stds.append(float(img.std()) / 255.0)
        lap = ndimage.convolve(img, _LAPLACIAN, mode="reflect")
        noise.append(float(lap.var()))

        targets = extract_targets(gt, connectivity)
        counts.append(len(targets))
        fg = int(gt.bits.sum())
        bg = gt.bits.size - fg
        ratios.append(fg / bg if bg else float(fg))
        for region in targets.regions:
            sizes.append(region.area)
            target_bits = np.zeros(gt.shape, dtype=bool)
            rows = np.array([r for r, _ in region.pixels])
            cols = np.array([c for _, c in region.pixels])
            target_bits[rows, cols] = True
            ring = ndimage.binary_dilation(target_bits, structure=_SQUARE_3X3,
                                           iterations=_RING_DILATIONS) & ~gt.bits
            if not ring.any():
                continue
            contrasts.append(abs(float(img[target_bits].mean()) - float(img[ring].mean())))

    return AttributeStats(
        brightness_mean=float(np.mean(bright_means)),
        brightness_std=float(np.mean(bright_stds)),
        rms_contrast=float(np.mean(bright_stds)),
        laplacian_noise=float(np.mean(noise)),
        avg_target_count=float(np.mean(counts)),
        avg_target_size=float(np.mean(sizes)) if sizes else 0.0,
        target_background_contrast=float(np.mean(contrasts)) if contrasts else 0.0,
        fg_bg_area_ratio=float(np.mean(ratios)),
    )
