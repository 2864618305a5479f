import numpy as np
import pytest

from irstdeval import BinaryMask, ScoreMask


def grid(text: str) -> BinaryMask:
    """Build a mask from rows of '.'/'X' characters."""
    rows = [line.strip() for line in text.strip().splitlines()]
    bits = np.array([[ch == "X" for ch in row] for row in rows], dtype=bool)
    return BinaryMask(bits)


def block_mask(shape, *blocks) -> BinaryMask:
    """Mask with rectangular blocks given as (r0, r1, c0, c1) half-open ranges."""
    bits = np.zeros(shape, dtype=bool)
    for r0, r1, c0, c1 in blocks:
        bits[r0:r1, c0:c1] = True
    return BinaryMask(bits)


def scores_from_bits(mask: BinaryMask, fg=1.0, bg=0.0) -> ScoreMask:
    return ScoreMask(np.where(mask.bits, fg, bg))


@pytest.fixture
def merged_prediction():
    """Two 3x3 GT blocks spanned by one 3x7 prediction (the worked construction)."""
    gt = block_mask((5, 9), (0, 3, 0, 3), (0, 3, 4, 7))
    pred = block_mask((5, 9), (0, 3, 0, 7))
    return gt, pred
