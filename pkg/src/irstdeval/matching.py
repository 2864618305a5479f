"""One-to-one target matching between ground-truth and predicted regions.

Two strategies are provided:

* overlap-priority matching with distance compensation: a first assignment
  pass over the full centroid-distance matrix keeps only pairs whose
  region IoU reaches the overlap threshold, then a second assignment pass
  over the leftovers keeps pairs whose centroid distance is under the
  (strict) distance threshold;
* the legacy distance-only protocol: a single assignment pass keeping
  pairs under the distance threshold.

The assignment solver is rectangular minimum-cost (it returns min(M, N)
pairs) and breaks ties deterministically by returning the lexicographically
smallest optimal pair list.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .exceptions import ShapeMismatchError
from .masks import TargetSet, centroid_distance, region_iou

#: Large finite cost marking forbidden entries. Finite so the solver stays
#: numerically stable; callers drop any returned pair that sits on it.
SENTINEL_COST = 1e12

PHASE_OVERLAP = "overlap"
PHASE_COMPENSATION = "compensation"

STRATEGY_OPDC = "opdc"
STRATEGY_DISTANCE_ONLY = "distance_only"
STRATEGIES = (STRATEGY_OPDC, STRATEGY_DISTANCE_ONLY)


@dataclass(frozen=True)
class CostMatrix:
    """Non-negative M x N cost matrix with a sentinel marking forbidden entries."""

    costs: np.ndarray
    sentinel: float = SENTINEL_COST

    def __post_init__(self):
        costs = np.asarray(self.costs, dtype=np.float64)
        if costs.ndim != 2:
            raise ValueError(f"cost matrix must be 2-D, got shape {costs.shape}")
        if costs.size and costs.min() < 0.0:
            raise ValueError("costs must be non-negative")
        if costs.size and costs.max() > self.sentinel:
            raise ValueError("costs must not exceed the sentinel value")
        costs = np.ascontiguousarray(costs)
        costs.flags.writeable = False
        object.__setattr__(self, "costs", costs)

    @property
    def rows(self) -> int:
        return self.costs.shape[0]

    @property
    def cols(self) -> int:
        return self.costs.shape[1]


@dataclass(frozen=True)
class MatchConfig:
    """Matching thresholds and strategy selection.

    IoU uses a >= comparison against ``overlap_threshold``; distance uses a
    strict < against ``distance_threshold``.
    """

    overlap_threshold: float = 0.5
    distance_threshold: float = 3.0
    strategy: str = STRATEGY_OPDC

    def __post_init__(self):
        if not 0.0 < self.overlap_threshold <= 1.0:
            raise ValueError(f"overlap_threshold must lie in (0, 1], got {self.overlap_threshold}")
        if self.distance_threshold <= 0.0:
            raise ValueError(f"distance_threshold must be > 0, got {self.distance_threshold}")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")


@dataclass(frozen=True)
class MatchedPair:
    gt_id: int
    pred_id: int
    iou: float
    distance: float
    phase: str


@dataclass(frozen=True)
class MatchResult:
    """One-to-one pairing plus the candidate relations that informed it.

    ``candidates`` holds every (gt_id, pred_id) satisfying either matching
    criterion, whether or not the pair was retained; the error decomposition
    uses it to tell assignment-competition losses from plain misses.
    """

    pairs: tuple[MatchedPair, ...]
    unmatched_gt: tuple[int, ...]
    unmatched_pred: tuple[int, ...]
    candidates: frozenset[tuple[int, int]]

    def matched_gt_ids(self) -> frozenset[int]:
        return frozenset(p.gt_id for p in self.pairs)

    def matched_pred_ids(self) -> frozenset[int]:
        return frozenset(p.pred_id for p in self.pairs)


def _lsa_total(costs: np.ndarray) -> float:
    rows, cols = linear_sum_assignment(costs)
    return float(costs[rows, cols].sum())


def solve_assignment(costs: CostMatrix) -> list[tuple[int, int]]:
    """Minimum-total-cost one-to-one assignment of min(M, N) pairs.

    Among all optimal assignments, returns the lexicographically smallest
    pair list (pairs sorted by row). The refinement runs one sub-solve per
    candidate column, so it is O(M * N) solver calls in the worst case;
    target counts per image are small, so this is cheap in practice.

    Ties are resolved within a tolerance scaled to the matrix magnitude;
    with sentinel-sized entries in play that tolerance is a fraction of a
    hundredth of a pixel, which no downstream threshold can distinguish.
    """
    c = costs.costs
    m, n = c.shape
    if m == 0 or n == 0:
        return []
    k = min(m, n)
    opt = _lsa_total(c)
    eps = 32.0 * k * float(np.spacing(max(1.0, float(c.max()))))

    pairs: list[tuple[int, int]] = []
    used_cols: set[int] = set()
    fixed_cost = 0.0
    row_floor = 0
    for i in range(k):
        need = k - i - 1
        chosen = None
        for r in range(row_floor, m):
            if m - r - 1 < need and n - i - 1 > m - r - 1:
                break  # not enough rows left below r to finish
            cols_left = [col for col in range(n) if col not in used_cols]
            for col in cols_left:
                sub_cols = [x for x in cols_left if x != col]
                sub = c[r + 1:, sub_cols] if sub_cols else c[r + 1:, 0:0]
                if min(sub.shape) != need:
                    continue
                total = fixed_cost + float(c[r, col]) + (_lsa_total(sub) if need else 0.0)
                if total <= opt + eps:
                    chosen = (r, col)
                    break
            if chosen is not None:
                break
        if chosen is None:  # numerically unreachable; keep the solver total honest
            rows_idx, cols_idx = linear_sum_assignment(c)
            return sorted(zip(rows_idx.tolist(), cols_idx.tolist()))
        pairs.append(chosen)
        fixed_cost += float(c[chosen])
        used_cols.add(chosen[1])
        row_floor = chosen[0] + 1
    return pairs


def _pairwise_tables(gt: TargetSet, pred: TargetSet) -> tuple[np.ndarray, np.ndarray]:
    m, n = len(gt), len(pred)
    dist = np.zeros((m, n), dtype=np.float64)
    iou = np.zeros((m, n), dtype=np.float64)
    for i, g in enumerate(gt.regions):
        for j, p in enumerate(pred.regions):
            dist[i, j] = centroid_distance(g, p)
            iou[i, j] = region_iou(g, p)
    return dist, iou


def _candidate_set(dist: np.ndarray, iou: np.ndarray, cfg: MatchConfig,
                   distance_only: bool = False) -> frozenset[tuple[int, int]]:
    if distance_only:
        hits = dist < cfg.distance_threshold
    else:
        hits = (iou >= cfg.overlap_threshold) | (dist < cfg.distance_threshold)
    rows, cols = np.nonzero(hits)
    return frozenset(zip(rows.tolist(), cols.tolist()))


def _check_shapes(gt: TargetSet, pred: TargetSet) -> None:
    if gt.source_shape != pred.source_shape:
        raise ShapeMismatchError(
            f"target sets come from masks of different shapes: "
            f"{gt.source_shape} vs {pred.source_shape}"
        )


def match_opdc(gt: TargetSet, pred: TargetSet, cfg: MatchConfig = MatchConfig()) -> MatchResult:
    """Overlap-priority matching with distance compensation.

    Phase 1 assigns on the full centroid-distance matrix and keeps assigned
    pairs whose IoU reaches the overlap threshold. Phase 2 re-assigns the
    leftovers on a distance matrix where entries at or beyond the distance
    threshold are replaced by the sentinel, keeping pairs strictly under
    the threshold. No further rounds are run.
    """
    _check_shapes(gt, pred)
    m, n = len(gt), len(pred)
    dist, iou = _pairwise_tables(gt, pred)
    candidates = _candidate_set(dist, iou, cfg)

    pairs: list[MatchedPair] = []
    if m and n:
        for r, col in solve_assignment(CostMatrix(dist)):
            if iou[r, col] >= cfg.overlap_threshold:
                pairs.append(MatchedPair(r, col, float(iou[r, col]), float(dist[r, col]),
                                         PHASE_OVERLAP))

    gt_left = [i for i in range(m) if i not in {p.gt_id for p in pairs}]
    pred_left = [j for j in range(n) if j not in {p.pred_id for p in pairs}]
    if gt_left and pred_left:
        comp = np.full((len(gt_left), len(pred_left)), SENTINEL_COST)
        for a, i in enumerate(gt_left):
            for b, j in enumerate(pred_left):
                if dist[i, j] < cfg.distance_threshold:
                    comp[a, b] = dist[i, j]
        for a, b in solve_assignment(CostMatrix(comp)):
            i, j = gt_left[a], pred_left[b]
            if dist[i, j] < cfg.distance_threshold:
                pairs.append(MatchedPair(i, j, float(iou[i, j]), float(dist[i, j]),
                                         PHASE_COMPENSATION))

    matched_gt = {p.gt_id for p in pairs}
    matched_pred = {p.pred_id for p in pairs}
    return MatchResult(
        pairs=tuple(pairs),
        unmatched_gt=tuple(i for i in range(m) if i not in matched_gt),
        unmatched_pred=tuple(j for j in range(n) if j not in matched_pred),
        candidates=candidates,
    )


def match_distance_only(gt: TargetSet, pred: TargetSet,
                        cfg: MatchConfig = MatchConfig()) -> MatchResult:
    """Legacy protocol: one assignment pass gated by centroid distance only."""
    _check_shapes(gt, pred)
    m, n = len(gt), len(pred)
    dist, iou = _pairwise_tables(gt, pred)
    candidates = _candidate_set(dist, iou, cfg, distance_only=True)

    pairs: list[MatchedPair] = []
    if m and n:
        gated = np.where(dist < cfg.distance_threshold, dist, SENTINEL_COST)
        for r, col in solve_assignment(CostMatrix(gated)):
            if dist[r, col] < cfg.distance_threshold:
                pairs.append(MatchedPair(r, col, float(iou[r, col]), float(dist[r, col]),
                                         PHASE_COMPENSATION))

    matched_gt = {p.gt_id for p in pairs}
    matched_pred = {p.pred_id for p in pairs}
    return MatchResult(
        pairs=tuple(pairs),
        unmatched_gt=tuple(i for i in range(m) if i not in matched_gt),
        unmatched_pred=tuple(j for j in range(n) if j not in matched_pred),
        candidates=candidates,
    )


def match_targets(gt: TargetSet, pred: TargetSet, cfg: MatchConfig) -> MatchResult:
    """Dispatch on ``cfg.strategy``."""
    if cfg.strategy == STRATEGY_OPDC:
        return match_opdc(gt, pred, cfg)
    return match_distance_only(gt, pred, cfg)
