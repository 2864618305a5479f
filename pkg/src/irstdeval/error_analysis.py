"""Exact decomposition of localization and segmentation error.

The localization shortfall 1 - iou_loc splits into four target-level
subtypes, classified by whether an unmatched target had any candidate
relation (it lost an assignment competition) or none (a plain false alarm
or miss):

* s2m: unmatched GT with at least one candidate prediction;
* m2s: unmatched prediction with at least one candidate GT;
* itf: unmatched prediction with no candidate GT (clutter);
* pcp: unmatched GT with no candidate prediction (missed target).

The segmentation shortfall 1 - iou_seg splits per matched pair (g, p) with
union size U into three pixel-level subtypes:

* mrg: prediction pixels outside g but inside some other GT region / U;
* itf: prediction pixels outside every GT region / U;
* pcp: GT pixels of g missing from p / U.

Both decompositions are complementary by construction: the subtype sums
equal the corresponding 1 - IoU value for every sample and any aggregate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .masks import TargetSet
from .matching import MatchResult

LOC_SUBTYPES = ("s2m", "m2s", "itf", "pcp")
SEG_SUBTYPES = ("mrg", "itf", "pcp")


@dataclass(frozen=True)
class LocErrors:
    e_s2m: float
    e_m2s: float
    e_itf: float
    e_pcp: float
    counts: tuple[int, int, int, int]  # (s2m, m2s, itf, pcp)
    denominator: int  # tp + fp + fn target count

    def total(self) -> float:
        return self.e_s2m + self.e_m2s + self.e_itf + self.e_pcp

    def as_dict(self) -> dict[str, float]:
        return {"s2m": self.e_s2m, "m2s": self.e_m2s, "itf": self.e_itf, "pcp": self.e_pcp}


@dataclass(frozen=True)
class SegErrors:
    e_mrg: float
    e_itf: float
    e_pcp: float
    #: per matched pair: (pair index within the match result, mrg, itf, pcp),
    #: each fraction normalized by that pair's union size.
    per_pair: tuple[tuple[int, float, float, float], ...]

    def total(self) -> float:
        return self.e_mrg + self.e_itf + self.e_pcp

    def as_dict(self) -> dict[str, float]:
        return {"mrg": self.e_mrg, "itf": self.e_itf, "pcp": self.e_pcp}


def decompose_localization(match: MatchResult, gt: TargetSet, pred: TargetSet) -> LocErrors:
    """Classify every unmatched target into exactly one localization subtype."""
    s2m = m2s = itf = pcp = 0
    candidate_gt = {g for g, _ in match.candidates}
    candidate_pred = {p for _, p in match.candidates}
    for g in match.unmatched_gt:
        if g in candidate_gt:
            s2m += 1
        else:
            pcp += 1
    for p in match.unmatched_pred:
        if p in candidate_pred:
            m2s += 1
        else:
            itf += 1
    denominator = len(match.pairs) + len(match.unmatched_gt) + len(match.unmatched_pred)
    if denominator == 0:
        fracs = (0.0, 0.0, 0.0, 0.0)
    else:
        fracs = tuple(c / denominator for c in (s2m, m2s, itf, pcp))
    return LocErrors(*fracs, counts=(s2m, m2s, itf, pcp), denominator=denominator)


def decompose_segmentation(match: MatchResult, gt: TargetSet, pred: TargetSet) -> SegErrors:
    """Split each matched pair's non-overlap pixels into mrg/itf/pcp fractions.

    The merge test checks prediction pixels against the union of all GT
    regions other than the matched one, including unmatched GT regions.
    Aggregate values average the per-pair fractions over the matched-pair
    count; with no pairs all errors are zero.
    """
    per_pair = []
    for idx, pair in enumerate(match.pairs):
        g_pixels = gt.regions[pair.gt_id].pixels
        p_pixels = pred.regions[pair.pred_id].pixels
        union = len(g_pixels | p_pixels)
        other_gt = set()
        for k, region in enumerate(gt.regions):
            if k != pair.gt_id:
                other_gt |= region.pixels
        stray = p_pixels - g_pixels
        mrg_px = len(stray & other_gt)
        itf_px = len(stray) - mrg_px
        pcp_px = len(g_pixels - p_pixels)
        per_pair.append((idx, mrg_px / union, itf_px / union, pcp_px / union))

    n = len(per_pair)
    if n == 0:
        return SegErrors(0.0, 0.0, 0.0, per_pair=())
    e_mrg = sum(t[1] for t in per_pair) / n
    e_itf = sum(t[2] for t in per_pair) / n
    e_pcp = sum(t[3] for t in per_pair) / n
    return SegErrors(e_mrg, e_itf, e_pcp, per_pair=tuple(per_pair))


def aggregate_errors(samples: Sequence[tuple[LocErrors, SegErrors]]) -> tuple[LocErrors, SegErrors]:
    """Fold per-sample decompositions into dataset-level ones.

    Localization sums subtype counts and denominators across samples;
    segmentation pools per-pair contributions and divides by the total pair
    count, so complementarity with the pooled IoU values is preserved.
    """
    if not samples:
        raise ValueError("cannot aggregate an empty list of error decompositions")
    counts = [0, 0, 0, 0]
    denominator = 0
    per_pair: list[tuple[int, float, float, float]] = []
    for loc, seg in samples:
        for i in range(4):
            counts[i] += loc.counts[i]
        denominator += loc.denominator
        per_pair.extend(seg.per_pair)

    if denominator == 0:
        loc_fracs = (0.0, 0.0, 0.0, 0.0)
    else:
        loc_fracs = tuple(c / denominator for c in counts)
    loc_agg = LocErrors(*loc_fracs, counts=tuple(counts), denominator=denominator)

    n = len(per_pair)
    if n == 0:
        seg_agg = SegErrors(0.0, 0.0, 0.0, per_pair=())
    else:
        seg_agg = SegErrors(
            sum(t[1] for t in per_pair) / n,
            sum(t[2] for t in per_pair) / n,
            sum(t[3] for t in per_pair) / n,
            per_pair=tuple(per_pair),
        )
    return loc_agg, seg_agg
