import itertools

import numpy as np
import pytest

from irstdeval import (CostMatrix, MatchConfig, ShapeMismatchError, extract_targets,
                       match_distance_only, match_opdc, solve_assignment)
from irstdeval.matching import PHASE_COMPENSATION, PHASE_OVERLAP, SENTINEL_COST
from conftest import block_mask, grid


def brute_force_assignments(costs: np.ndarray):
    """All optimal pair lists and the optimal total, by exhaustive enumeration."""
    m, n = costs.shape
    k = min(m, n)
    best = None
    optimal = []
    if m <= n:
        for cols in itertools.permutations(range(n), k):
            pairs = sorted(zip(range(m), cols))
            total = sum(costs[r, c] for r, c in pairs)
            if best is None or total < best - 1e-12:
                best, optimal = total, [pairs]
            elif abs(total - best) <= 1e-12:
                optimal.append(pairs)
    else:
        for rows in itertools.permutations(range(m), k):
            pairs = sorted(zip(rows, range(n)))
            total = sum(costs[r, c] for r, c in pairs)
            if best is None or total < best - 1e-12:
                best, optimal = total, [pairs]
            elif abs(total - best) <= 1e-12:
                optimal.append(pairs)
    return best, optimal


class TestSolveAssignment:
    def test_two_by_two(self):
        pairs = solve_assignment(CostMatrix(np.array([[1.0, 2.0], [2.0, 1.0]])))
        assert pairs == [(0, 0), (1, 1)]

    def test_single_entry(self):
        assert solve_assignment(CostMatrix(np.array([[7.0]]))) == [(0, 0)]

    def test_tie_breaks_lexicographically(self):
        assert solve_assignment(CostMatrix(np.full((2, 2), 5.0))) == [(0, 0), (1, 1)]

    def test_empty_matrix(self):
        assert solve_assignment(CostMatrix(np.zeros((0, 3)))) == []
        assert solve_assignment(CostMatrix(np.zeros((3, 0)))) == []

    def test_wide_matrix_assigns_all_rows(self):
        costs = np.array([[9.0, 1.0, 5.0], [4.0, 9.0, 9.0]])
        assert solve_assignment(CostMatrix(costs)) == [(0, 1), (1, 0)]

    def test_tall_matrix_assigns_all_cols(self):
        costs = np.array([[9.0], [1.0], [5.0]])
        assert solve_assignment(CostMatrix(costs)) == [(1, 0)]

    def test_tall_tie_prefers_smallest_rows(self):
        costs = np.array([[3.0, 3.0], [3.0, 3.0], [3.0, 3.0]])
        assert solve_assignment(CostMatrix(costs)) == [(0, 0), (1, 1)]

    def test_negative_costs_rejected(self):
        with pytest.raises(ValueError):
            CostMatrix(np.array([[-1.0]]))

    def test_cost_above_sentinel_rejected(self):
        with pytest.raises(ValueError):
            CostMatrix(np.array([[2e12]]))

    def test_matches_brute_force_on_random_matrices(self):
        rng = np.random.default_rng(99)
        for _ in range(120):
            m = int(rng.integers(1, 6))
            n = int(rng.integers(1, 6))
            # sixteenths: exactly representable, so sums compare exactly
            costs = rng.integers(0, 64, size=(m, n)).astype(np.float64) / 16.0
            best, optimal = brute_force_assignments(costs)
            got = solve_assignment(CostMatrix(costs))
            assert sum(costs[r, c] for r, c in got) == best
            assert got == min(optimal)

    def test_prefers_avoiding_sentinel(self):
        costs = np.array([[SENTINEL_COST, 2.0], [1.0, SENTINEL_COST]])
        assert solve_assignment(CostMatrix(costs)) == [(0, 1), (1, 0)]


class TestMatchOpdc:
    def test_shifted_block_matches_in_overlap_phase(self):
        gt = block_mask((5, 6), (0, 5, 0, 5))
        pred = block_mask((5, 6), (0, 5, 1, 6))
        res = match_opdc(extract_targets(gt, 8), extract_targets(pred, 8))
        assert len(res.pairs) == 1
        pair = res.pairs[0]
        assert pair.phase == PHASE_OVERLAP
        assert pair.iou == pytest.approx(20 / 30)
        assert pair.distance == 1.0

    def test_low_overlap_close_centroid_matches_in_compensation(self):
        # GT 2x2 against a 2x4 prediction: IoU 2/10 = 0.2, centroid distance 2.0
        gt = block_mask((4, 6), (0, 2, 0, 2))
        pred = block_mask((4, 6), (0, 2, 1, 5))
        res = match_opdc(extract_targets(gt, 8), extract_targets(pred, 8))
        assert len(res.pairs) == 1
        pair = res.pairs[0]
        assert pair.phase == PHASE_COMPENSATION
        assert pair.iou == pytest.approx(0.2)
        assert pair.distance == pytest.approx(2.0)

    def test_low_overlap_far_centroid_stays_unmatched(self):
        # 1x10 strips shifted by 5: IoU 1/3, centroid distance 5.0
        gt = block_mask((3, 15), (0, 1, 0, 10))
        pred = block_mask((3, 15), (0, 1, 5, 15))
        res = match_opdc(extract_targets(gt, 8), extract_targets(pred, 8))
        assert res.pairs == ()
        assert res.unmatched_gt == (0,)
        assert res.unmatched_pred == (0,)
        assert res.candidates == frozenset()

    def test_empty_prediction(self):
        gt = block_mask((4, 4), (0, 2, 0, 2))
        res = match_opdc(extract_targets(gt, 8),
                         extract_targets(block_mask((4, 4)), 8))
        assert res.pairs == ()
        assert res.unmatched_gt == (0,)
        assert res.unmatched_pred == ()

    def test_merged_prediction_construction(self, merged_prediction):
        gt, pred = merged_prediction
        res = match_opdc(extract_targets(gt, 8), extract_targets(pred, 8))
        assert [(p.gt_id, p.pred_id, p.phase) for p in res.pairs] == [(0, 0, PHASE_COMPENSATION)]
        assert res.unmatched_gt == (1,)
        assert res.candidates == frozenset({(0, 0), (1, 0)})

    def test_shape_mismatch_rejected(self):
        a = extract_targets(block_mask((4, 4), (0, 2, 0, 2)), 8)
        b = extract_targets(block_mask((5, 5), (0, 2, 0, 2)), 8)
        with pytest.raises(ShapeMismatchError):
            match_opdc(a, b)


class TestMatchDistanceOnly:
    def test_coincident_pixels_match(self):
        gt = block_mask((8, 8), (5, 6, 5, 6))
        res = match_distance_only(extract_targets(gt, 8), extract_targets(gt, 8))
        assert len(res.pairs) == 1
        assert res.pairs[0].distance == 0.0

    def test_wide_prediction_over_two_targets_fails(self):
        # the legacy failure mode: one 3x9 prediction over two 3x3 GTs eight
        # columns apart; its centroid is 4 px from both GT centroids
        gt = block_mask((3, 11), (0, 3, 0, 3), (0, 3, 8, 11))
        pred = block_mask((3, 11), (0, 3, 1, 10))
        res = match_distance_only(extract_targets(gt, 8), extract_targets(pred, 8))
        assert res.pairs == ()
        assert set(res.unmatched_gt) == {0, 1}
        assert res.unmatched_pred == (0,)

    def test_distance_exactly_three_is_unmatched(self):
        gt = block_mask((8, 8), (0, 1, 0, 1))
        pred = block_mask((8, 8), (3, 4, 0, 1))
        res = match_distance_only(extract_targets(gt, 8), extract_targets(pred, 8))
        assert res.pairs == ()

    def test_candidates_are_distance_only(self, merged_prediction):
        gt, pred = merged_prediction
        res = match_distance_only(extract_targets(gt, 8), extract_targets(pred, 8))
        # both GTs sit 2 px from the merged prediction's centroid
        assert res.candidates == frozenset({(0, 0), (1, 0)})
        assert len(res.pairs) == 1


def random_layout(rng, shape=(24, 24), max_targets=5):
    bits = np.zeros(shape, dtype=bool)
    for _ in range(int(rng.integers(0, max_targets + 1))):
        h = int(rng.integers(1, 5))
        w = int(rng.integers(1, 5))
        r = int(rng.integers(0, shape[0] - h + 1))
        c = int(rng.integers(0, shape[1] - w + 1))
        bits[r:r + h, c:c + w] = True
    from irstdeval import BinaryMask
    return BinaryMask(bits)


class TestMatchingProperties:
    def test_one_to_one_and_validity(self):
        rng = np.random.default_rng(11)
        cfg = MatchConfig()
        for _ in range(100):
            gt = extract_targets(random_layout(rng), 8)
            pred = extract_targets(random_layout(rng), 8)
            res = match_opdc(gt, pred, cfg)
            gts = [p.gt_id for p in res.pairs]
            preds = [p.pred_id for p in res.pairs]
            assert len(gts) == len(set(gts))
            assert len(preds) == len(set(preds))
            for pair in res.pairs:
                assert pair.iou >= cfg.overlap_threshold or pair.distance < cfg.distance_threshold
            assert sorted(gts + list(res.unmatched_gt)) == list(range(len(gt)))
            assert sorted(preds + list(res.unmatched_pred)) == list(range(len(pred)))

    def test_opdc_dominates_distance_only(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            gt = extract_targets(random_layout(rng), 8)
            pred = extract_targets(random_layout(rng), 8)
            opdc = match_opdc(gt, pred)
            legacy = match_distance_only(gt, pred)
            assert len(opdc.pairs) >= len(legacy.pairs)

    def test_added_prediction_monotonicity_reported(self, capsys):
        # one-to-one assignment gives no theorem here; violations are
        # counted and reported rather than asserted
        rng = np.random.default_rng(13)
        violations = 0
        trials = 0
        for _ in range(120):
            base = random_layout(rng, shape=(20, 20), max_targets=4)
            bits = np.array(base.bits)
            h = int(rng.integers(1, 4))
            w = int(rng.integers(1, 4))
            r = int(rng.integers(0, 20 - h))
            c = int(rng.integers(0, 20 - w))
            bits[r:r + h, c:c + w] = True
            from irstdeval import BinaryMask
            gt = extract_targets(random_layout(rng, shape=(20, 20)), 8)
            before = match_opdc(gt, extract_targets(base, 8))
            after = match_opdc(gt, extract_targets(BinaryMask(bits), 8))
            trials += 1
            if len(after.matched_gt_ids()) < len(before.matched_gt_ids()):
                violations += 1
        assert trials == 120
        print(f"\nadded-prediction monotonicity: {violations}/{trials} violations")
