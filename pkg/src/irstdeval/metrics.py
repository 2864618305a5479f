"""Scalar metrics over pixel confusions and target tallies.

Pixel-level metrics follow the global-sum formulation (sum counts over all
samples, then divide) except the normalized IoU, which averages per-sample
IoU values. Target-level metrics use matched/unmatched target counts; the
hybrid metrics combine target-level localization IoU with the mean IoU of
matched pairs.

Degenerate denominators use two conventions, kept behind named constants:
agreement-style metrics score 1.0 when both sides are empty (perfect
agreement on absence), error-style quantities score 0.0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .exceptions import ShapeMismatchError
from .masks import BinaryMask, TargetSet, region_iou
from .matching import MatchResult

#: Score for an agreement metric whose denominator vanished (nothing to
#: detect and nothing predicted).
EMPTY_AGREEMENT_SCORE = 1.0
#: Score for an error-like quantity with an empty denominator.
EMPTY_ERROR_SCORE = 0.0


@dataclass(frozen=True)
class PixelConfusion:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class TargetTallies:
    """Per-sample target-level counts produced by one matching strategy."""

    tp_tgt: int
    fp_tgt: int
    fn_tgt: int
    fp_area: int
    image_area: int
    pair_ious: tuple[float, ...]

    def __post_init__(self):
        if self.tp_tgt != len(self.pair_ious):
            raise ValueError("tp_tgt must equal the number of matched-pair IoU values")


@dataclass(frozen=True)
class MetricReport:
    """All dataset-level scalar metrics for one matching strategy."""

    iou_pix: float
    niou_pix: float
    pre_pix: float
    rec_pix: float
    f1_pix: float
    pd: float
    fa: float
    fa_e6: float
    f1_tgt: float
    iou_loc: float
    iou_seg: float
    hiou: float
    aiou: float

    def as_dict(self) -> dict[str, float]:
        return {
            "iou_pix": self.iou_pix,
            "niou_pix": self.niou_pix,
            "pre_pix": self.pre_pix,
            "rec_pix": self.rec_pix,
            "f1_pix": self.f1_pix,
            "pd": self.pd,
            "fa": self.fa,
            "fa_e6": self.fa_e6,
            "f1_tgt": self.f1_tgt,
            "iou_loc": self.iou_loc,
            "iou_seg": self.iou_seg,
            "hiou": self.hiou,
            "aiou": self.aiou,
        }


def pixel_confusion(pred: BinaryMask, gt: BinaryMask) -> PixelConfusion:
    """Exact per-pixel confusion counts for one sample."""
    if pred.shape != gt.shape:
        raise ShapeMismatchError(f"mask shapes differ: {pred.shape} vs {gt.shape}")
    p = pred.bits
    g = gt.bits
    tp = int((p & g).sum())
    fp = int((p & ~g).sum())
    fn = int((~p & g).sum())
    tn = p.size - tp - fp - fn
    return PixelConfusion(tp=tp, fp=fp, tn=tn, fn=fn)


def _ratio(num: float, den: float, empty: float) -> float:
    if den == 0:
        return empty
    return num / den


def _require_nonempty(items: Sequence, what: str) -> None:
    if len(items) == 0:
        raise ValueError(f"cannot aggregate an empty list of {what}")


def iou_pix_dataset(confusions: Sequence[PixelConfusion]) -> float:
    """Globally pooled IoU: sum tp / sum (tp + fp + fn) over all samples."""
    _require_nonempty(confusions, "pixel confusions")
    tp = sum(c.tp for c in confusions)
    den = sum(c.tp + c.fp + c.fn for c in confusions)
    return _ratio(tp, den, EMPTY_AGREEMENT_SCORE)


def niou_pix_dataset(confusions: Sequence[PixelConfusion]) -> float:
    """Mean of per-sample IoU values; an all-empty sample contributes 1.0."""
    _require_nonempty(confusions, "pixel confusions")
    total = 0.0
    for c in confusions:
        total += _ratio(c.tp, c.tp + c.fp + c.fn, EMPTY_AGREEMENT_SCORE)
    return total / len(confusions)


def f1_pix_dataset(confusions: Sequence[PixelConfusion]) -> tuple[float, float, float]:
    """Globally pooled (precision, recall, F1)."""
    _require_nonempty(confusions, "pixel confusions")
    tp = sum(c.tp for c in confusions)
    fp = sum(c.fp for c in confusions)
    fn = sum(c.fn for c in confusions)
    pre = _ratio(tp, tp + fp, EMPTY_AGREEMENT_SCORE)
    rec = _ratio(tp, tp + fn, EMPTY_AGREEMENT_SCORE)
    f1 = _ratio(2.0 * pre * rec, pre + rec, EMPTY_ERROR_SCORE)
    return pre, rec, f1


def target_tallies(match: MatchResult, gt: TargetSet, pred: TargetSet) -> TargetTallies:
    """Target-level counts for one sample under one matching result."""
    fp_area = sum(pred.regions[j].area for j in match.unmatched_pred)
    h, w = gt.source_shape
    return TargetTallies(
        tp_tgt=len(match.pairs),
        fp_tgt=len(match.unmatched_pred),
        fn_tgt=len(match.unmatched_gt),
        fp_area=int(fp_area),
        image_area=h * w,
        pair_ious=tuple(p.iou for p in match.pairs),
    )


def recompute_pair_ious(match: MatchResult, gt: TargetSet, pred: TargetSet) -> tuple[float, ...]:
    """Independent recomputation of matched-pair IoUs from the region pixel sets."""
    return tuple(region_iou(gt.regions[p.gt_id], pred.regions[p.pred_id]) for p in match.pairs)


def pd(tallies: Sequence[TargetTallies]) -> float:
    """Probability of detection: matched GT targets over all GT targets."""
    _require_nonempty(tallies, "target tallies")
    tp = sum(t.tp_tgt for t in tallies)
    den = sum(t.tp_tgt + t.fn_tgt for t in tallies)
    return _ratio(tp, den, EMPTY_AGREEMENT_SCORE)


def fa(tallies: Sequence[TargetTallies]) -> float:
    """False-alarm rate: unmatched prediction area over total image area (raw, not scaled)."""
    _require_nonempty(tallies, "target tallies")
    area = sum(t.fp_area for t in tallies)
    total = sum(t.image_area for t in tallies)
    return _ratio(area, total, EMPTY_ERROR_SCORE)


def f1_tgt(tallies: Sequence[TargetTallies]) -> float:
    """Target-level F1: 2 tp / (2 tp + fp + fn) over pooled counts."""
    _require_nonempty(tallies, "target tallies")
    tp = sum(t.tp_tgt for t in tallies)
    fp = sum(t.fp_tgt for t in tallies)
    fn = sum(t.fn_tgt for t in tallies)
    return _ratio(2 * tp, 2 * tp + fp + fn, EMPTY_AGREEMENT_SCORE)


def hierarchical_iou(tallies: Sequence[TargetTallies]) -> tuple[float, float, float, float]:
    """(iou_loc, iou_seg, hiou, aiou) over pooled tallies.

    iou_loc pools matched/unmatched target counts; iou_seg averages the
    matched pairs' IoU values. With zero matched pairs, iou_seg is 0 when
    any target exists (a total miss must not score segmentation as perfect)
    and 1 when there are no targets at all. hiou is the product of the two
    components; aiou is their mean, reported for comparison only.
    """
    _require_nonempty(tallies, "target tallies")
    tp = sum(t.tp_tgt for t in tallies)
    den = sum(t.tp_tgt + t.fp_tgt + t.fn_tgt for t in tallies)
    if den == 0:
        return (EMPTY_AGREEMENT_SCORE,) * 4
    iou_loc = tp / den
    if tp == 0:
        iou_seg = 0.0
    else:
        iou_seg = sum(iou for t in tallies for iou in t.pair_ious) / tp
    hiou = iou_loc * iou_seg
    aiou = 0.5 * (iou_loc + iou_seg)
    return iou_loc, iou_seg, hiou, aiou


def metric_report(confusions: Sequence[PixelConfusion],
                  tallies: Sequence[TargetTallies]) -> MetricReport:
    """Assemble the full dataset-level report for one matching strategy."""
    pre, rec, f1 = f1_pix_dataset(confusions)
    iou_loc, iou_seg, hiou, aiou = hierarchical_iou(tallies)
    fa_raw = fa(tallies)
    return MetricReport(
        iou_pix=iou_pix_dataset(confusions),
        niou_pix=niou_pix_dataset(confusions),
        pre_pix=pre,
        rec_pix=rec,
        f1_pix=f1,
        pd=pd(tallies),
        fa=fa_raw,
        fa_e6=fa_raw * 1e6,
        f1_tgt=f1_tgt(tallies),
        iou_loc=iou_loc,
        iou_seg=iou_seg,
        hiou=hiou,
        aiou=aiou,
    )
