import numpy as np
import pytest
from scipy import ndimage

from irstdeval import (BinaryMask, MatchConfig, PerturbSpec, copy_paste,
                       extract_targets, match_success_rate, perturb)
from irstdeval.perturb import (read_trials, synth_target_layout, write_trials)
from conftest import block_mask


def single_target(shape=(16, 16), block=(2, 4, 2, 4)):
    return block_mask(shape, block)


class TestCopyPaste:
    def test_three_pastes_of_single_target(self):
        out = copy_paste(single_target(), PerturbSpec(kind="copy_paste", seed=7, count=3))
        targets = extract_targets(out, 8)
        assert len(targets) == 4
        assert all(r.area == 4 for r in targets.regions)

    def test_zero_count_is_identity(self):
        mask = single_target()
        out = copy_paste(mask, PerturbSpec(kind="copy_paste", seed=1, count=0))
        assert np.array_equal(out.bits, mask.bits)

    def test_nearly_full_mask_skips_pastes(self):
        bits = np.ones((6, 6), dtype=bool)
        bits[0, 0] = False
        mask = BinaryMask(bits)
        out = copy_paste(mask, PerturbSpec(kind="copy_paste", seed=2, count=5))
        assert len(extract_targets(out, 8)) == len(extract_targets(mask, 8))

    def test_preserves_original_pixels(self):
        rng = np.random.default_rng(3)
        mask = synth_target_layout((32, 32), 4, rng)
        out = copy_paste(mask, PerturbSpec(kind="copy_paste", seed=3, count=6))
        assert np.all(out.bits[mask.bits])

    def test_target_count_bounded(self):
        rng = np.random.default_rng(4)
        for seed in range(10):
            mask = synth_target_layout((24, 24), 3, rng)
            n0 = len(extract_targets(mask, 8))
            out = copy_paste(mask, PerturbSpec(kind="copy_paste", seed=seed, count=4))
            assert n0 <= len(extract_targets(out, 8)) <= n0 + 4

    def test_empty_mask_rejected(self):
        with pytest.raises(ValueError):
            copy_paste(block_mask((4, 4)), PerturbSpec(kind="copy_paste", seed=0, count=1))


class TestDeterminism:
    @pytest.mark.parametrize("kind,magnitude", [
        ("occlude", 0.3), ("deform", 2.4), ("connect", 0.0),
        ("erode", 0.0), ("dilate", 0.0), ("sparser", 3.0), ("denser", 3.0),
    ])
    def test_bit_identical_reruns(self, kind, magnitude):
        rng = np.random.default_rng(5)
        mask = synth_target_layout((32, 32), 4, rng, size_range=(3, 6))
        spec = PerturbSpec(kind=kind, seed=1234, magnitude=magnitude)
        a = perturb(mask, spec)
        b = perturb(mask, spec)
        assert np.array_equal(a.perturbed_pred.bits, b.perturbed_pred.bits)
        assert a.expected_pairs == b.expected_pairs


class TestPerturbKinds:
    def test_occlude_respects_area_bound(self):
        mask = block_mask((12, 12), (3, 8, 3, 8))  # 5x5 target
        trial = perturb(mask, PerturbSpec(kind="occlude", seed=3, magnitude=0.3))
        assert int(trial.perturbed_pred.bits.sum()) >= 25 - int(0.3 * 25)
        assert trial.expected_pairs == ((0, 0),)

    def test_occlude_keeps_remnants_connected(self):
        rng = np.random.default_rng(6)
        for seed in range(20):
            mask = synth_target_layout((32, 32), 4, rng, size_range=(3, 7))
            n = len(extract_targets(mask, 8))
            trial = perturb(mask, PerturbSpec(kind="occlude", seed=seed, magnitude=0.4))
            assert len(extract_targets(trial.perturbed_pred, 8)) == n

    def test_erode_annihilates_singleton(self):
        bits = np.zeros((8, 8), dtype=bool)
        bits[4, 4] = True
        trial = perturb(BinaryMask(bits), PerturbSpec(kind="erode", seed=1))
        assert trial.perturbed_pred.foreground_count() == 0
        assert trial.expected_pairs == ((0, None),)

    def test_deform_zero_magnitude_is_identity(self):
        mask = block_mask((12, 12), (3, 8, 3, 8))
        trial = perturb(mask, PerturbSpec(kind="deform", seed=5, magnitude=0.0))
        assert np.array_equal(trial.perturbed_pred.bits, mask.bits)

    def test_connect_requires_two_targets(self):
        with pytest.raises(ValueError):
            perturb(single_target(), PerturbSpec(kind="connect", seed=1))

    def test_connect_merges_expectations(self):
        mask = block_mask((16, 16), (2, 5, 2, 5), (10, 13, 10, 13))
        trial = perturb(mask, PerturbSpec(kind="connect", seed=1))
        assert len(extract_targets(trial.perturbed_pred, 8)) == 1
        assert trial.expected_pairs == ((0, 0), (1, 0))

    def test_dilate_grows_and_keeps_expectations(self):
        mask = block_mask((16, 16), (2, 5, 2, 5))
        trial = perturb(mask, PerturbSpec(kind="dilate", seed=1))
        assert trial.perturbed_pred.foreground_count() > mask.foreground_count()
        assert trial.expected_pairs == ((0, 0),)

    def test_erode_then_dilate_bounded_by_dilate(self):
        rng = np.random.default_rng(7)
        structure = np.ones((3, 3), dtype=bool)
        for seed in range(10):
            mask = synth_target_layout((24, 24), 3, rng, size_range=(2, 6))
            eroded = perturb(mask, PerturbSpec(kind="erode", seed=seed)).perturbed_pred
            opened = ndimage.binary_dilation(eroded.bits, structure=structure)
            dilated = perturb(mask, PerturbSpec(kind="dilate", seed=seed)).perturbed_pred
            assert not np.any(opened & ~dilated.bits)

    def test_sparser_denser_keep_targets_disjoint(self):
        rng = np.random.default_rng(8)
        for kind in ("sparser", "denser"):
            for seed in range(10):
                mask = synth_target_layout((32, 32), 4, rng, size_range=(2, 5))
                n = len(extract_targets(mask, 8))
                trial = perturb(mask, PerturbSpec(kind=kind, seed=seed, magnitude=3.0))
                survivors = [d for _, d in trial.expected_pairs if d is not None]
                assert len(extract_targets(trial.perturbed_pred, 8)) == len(survivors)
                assert len(set(survivors)) == len(survivors)

    def test_empty_mask_rejected(self):
        with pytest.raises(ValueError):
            perturb(block_mask((4, 4)), PerturbSpec(kind="occlude", seed=0, magnitude=0.2))

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            PerturbSpec(kind="melt", seed=0)


class TestMatchSuccessRate:
    def test_identity_predictions_score_one(self):
        rng = np.random.default_rng(9)
        trials = [perturb(synth_target_layout((24, 24), 3, rng),
                          PerturbSpec(kind="deform", seed=s, magnitude=0.0))
                  for s in range(5)]
        assert match_success_rate(trials, MatchConfig(strategy="opdc")) == 1.0

    def test_all_empty_predictions_score_zero(self):
        bits = np.zeros((8, 8), dtype=bool)
        bits[4, 4] = True
        trials = [perturb(BinaryMask(bits), PerturbSpec(kind="erode", seed=s))
                  for s in range(3)]
        assert match_success_rate(trials, MatchConfig(strategy="opdc")) == 0.0

    def test_overlap_preserving_occlusion_scores_one_under_opdc(self):
        rng = np.random.default_rng(10)
        trials = []
        for seed in range(30):
            mask = synth_target_layout((48, 48), 4, rng, size_range=(3, 7),
                                       min_separation=16.0)
            trials.append(perturb(mask, PerturbSpec(kind="occlude", seed=seed,
                                                    magnitude=0.4)))
        assert match_success_rate(trials, MatchConfig(strategy="opdc")) == 1.0

    def test_empty_trials_rejected(self):
        with pytest.raises(ValueError):
            match_success_rate([], MatchConfig())


class TestManifestRoundTrip:
    def test_write_and_read(self, tmp_path):
        rng = np.random.default_rng(11)
        specs = [PerturbSpec(kind="occlude", seed=s, magnitude=0.3) for s in range(3)]
        trials = [perturb(synth_target_layout((24, 24), 3, rng), s) for s in specs]
        manifest = write_trials(trials, tmp_path, specs)
        loaded = read_trials(manifest)
        assert len(loaded) == 3
        for a, b in zip(trials, loaded):
            assert np.array_equal(a.gt_mask.bits, b.gt_mask.bits)
            assert np.array_equal(a.perturbed_pred.bits, b.perturbed_pred.bits)
            assert a.expected_pairs == b.expected_pairs

    def test_manifest_records_generator_identity(self, tmp_path):
        import json
        spec = PerturbSpec(kind="deform", seed=1, magnitude=1.5)
        trial = perturb(single_target(), spec)
        manifest = write_trials([trial], tmp_path, [spec])
        data = json.loads(manifest.read_text())
        assert "philox4x64" in data["format"]
        assert data["trials"][0]["procedure"] == "shift_plus_boundary_toggle"
