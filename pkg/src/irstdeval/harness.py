"""Dataset ingestion and end-to-end evaluation orchestration.

Prediction and GT files pair by identical filename stem (case-sensitive,
extension stripped). Any file on either side without a counterpart is an
orphan and aborts the run. Samples are evaluated in sorted-stem order;
aggregation is an ordered fold over per-sample results, so worker
parallelism never changes output bytes.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .error_analysis import (LocErrors, SegErrors, aggregate_errors,
                             decompose_localization, decompose_segmentation)
from .exceptions import DatasetError, ShapeMismatchError
from .mask_io import MASK_SUFFIXES, load_binary_mask, load_score_mask, read_gray8
from .masks import BinaryMask, ScoreMask, binarize, extract_targets
from .matching import (STRATEGIES, STRATEGY_DISTANCE_ONLY, STRATEGY_OPDC,
                       MatchConfig, MatchResult, match_targets)
from .metrics import (MetricReport, PixelConfusion, TargetTallies,
                      metric_report, pixel_confusion, target_tallies)
from .stats import AttributeStats, dataset_stats

RESIZE_FORBID = "forbid"
RESIZE_NEAREST = "nearest_to_gt"
RESIZE_POLICIES = (RESIZE_FORBID, RESIZE_NEAREST)


@dataclass(frozen=True)
class DatasetSpec:
    pred_dir: str
    gt_dir: str
    name: str = "dataset"
    img_dir: str | None = None
    threshold: float = 0.5
    connectivity: int = 8
    matchers: tuple[str, ...] = (STRATEGY_OPDC, STRATEGY_DISTANCE_ONLY)
    resize_policy: str = RESIZE_FORBID
    overlap_threshold: float = 0.5
    distance_threshold: float = 3.0
    workers: int = 1

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must lie in [0, 1], got {self.threshold}")
        if self.connectivity not in (4, 8):
            raise ValueError(f"connectivity must be 4 or 8, got {self.connectivity}")
        if not self.matchers:
            raise ValueError("at least one matcher is required")
        for m in self.matchers:
            if m not in STRATEGIES:
                raise ValueError(f"unknown matcher {m!r}; expected one of {STRATEGIES}")
        if self.resize_policy not in RESIZE_POLICIES:
            raise ValueError(f"resize_policy must be one of {RESIZE_POLICIES}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def match_config(self, strategy: str) -> MatchConfig:
        return MatchConfig(overlap_threshold=self.overlap_threshold,
                           distance_threshold=self.distance_threshold,
                           strategy=strategy)

    def fingerprint(self) -> dict:
        """All configuration that affects output values, plus toolkit version."""
        return {
            "name": self.name,
            "toolkit_version": __version__,
            "threshold": self.threshold,
            "connectivity": self.connectivity,
            "matchers": list(self.matchers),
            "resize_policy": self.resize_policy,
            "overlap_threshold": self.overlap_threshold,
            "distance_threshold": self.distance_threshold,
            "pairing": "filename_stem",
            "seg_error_averaging": "per_pair",
            "binarization": "score>=threshold",
        }


@dataclass(frozen=True)
class MatcherEvaluation:
    """Everything one matching strategy produced for one sample."""

    tallies: TargetTallies
    match: MatchResult
    loc: LocErrors
    seg: SegErrors


@dataclass(frozen=True)
class SampleEvaluation:
    sample_id: str
    confusion: PixelConfusion
    matchers: dict[str, MatcherEvaluation]
    #: True when both the GT and the binarized prediction were empty; the
    #: empty-agreement scoring convention fired for this sample.
    empty_agreement: bool = False


@dataclass(frozen=True)
class DatasetReport:
    version: str
    config: dict
    metrics: dict[str, MetricReport]
    errors: dict[str, tuple[LocErrors, SegErrors]]
    samples: list[SampleEvaluation]
    stats: AttributeStats | None = None

    def flagged_empty_samples(self) -> list[str]:
        return [s.sample_id for s in self.samples if s.empty_agreement]


def _resize_nearest(scores: ScoreMask, shape: tuple[int, int]) -> ScoreMask:
    rows = (np.arange(shape[0]) * scores.height) // shape[0]
    cols = (np.arange(shape[1]) * scores.width) // shape[1]
    return ScoreMask(scores.values[np.ix_(rows, cols)])


def evaluate_pair(pred: ScoreMask, gt: BinaryMask, spec: DatasetSpec,
                  sample_id: str = "sample") -> SampleEvaluation:
    """Binarize, extract targets, match, tally, and decompose one sample."""
    if pred.shape != gt.shape:
        if spec.resize_policy == RESIZE_FORBID:
            raise ShapeMismatchError(
                f"{sample_id}: prediction shape {pred.shape} != GT shape {gt.shape} "
                f"(resize_policy={RESIZE_FORBID})"
            )
        pred = _resize_nearest(pred, gt.shape)

    pred_mask = binarize(pred, spec.threshold)
    confusion = pixel_confusion(pred_mask, gt)
    gt_targets = extract_targets(gt, spec.connectivity)
    pred_targets = extract_targets(pred_mask, spec.connectivity)

    matchers = {}
    for strategy in spec.matchers:
        result = match_targets(gt_targets, pred_targets, spec.match_config(strategy))
        matchers[strategy] = MatcherEvaluation(
            tallies=target_tallies(result, gt_targets, pred_targets),
            match=result,
            loc=decompose_localization(result, gt_targets, pred_targets),
            seg=decompose_segmentation(result, gt_targets, pred_targets),
        )
    return SampleEvaluation(
        sample_id=sample_id,
        confusion=confusion,
        matchers=matchers,
        empty_agreement=(len(gt_targets) == 0 and len(pred_targets) == 0),
    )


def discover_pairs(pred_dir, gt_dir) -> list[tuple[str, Path, Path]]:
    """Pair files by stem; raise with the orphan list if the pairing is not total."""
    pred_dir = Path(pred_dir)
    gt_dir = Path(gt_dir)
    for d, label in ((pred_dir, "prediction"), (gt_dir, "GT")):
        if not d.is_dir():
            raise DatasetError(f"{label} directory does not exist: {d}")

    def stems(d: Path) -> dict[str, Path]:
        table: dict[str, Path] = {}
        for p in sorted(d.iterdir()):
            if p.is_file() and p.suffix.lower() in MASK_SUFFIXES:
                if p.stem in table:
                    raise DatasetError(f"duplicate stem {p.stem!r} in {d}")
                table[p.stem] = p
        return table

    preds = stems(pred_dir)
    gts = stems(gt_dir)
    orphan_pred = sorted(set(preds) - set(gts))
    orphan_gt = sorted(set(gts) - set(preds))
    if orphan_pred or orphan_gt:
        raise DatasetError(
            "orphan files break stem pairing: "
            f"predictions without GT: {orphan_pred or 'none'}; "
            f"GT without predictions: {orphan_gt or 'none'}"
        )
    if not preds:
        raise DatasetError(f"no paired samples found under {pred_dir} and {gt_dir}")
    return [(stem, preds[stem], gts[stem]) for stem in sorted(preds)]


def aggregate_samples(samples: Sequence[SampleEvaluation], matchers: Sequence[str],
                      ) -> tuple[dict[str, MetricReport], dict[str, tuple[LocErrors, SegErrors]]]:
    """Fold per-sample evaluations into per-matcher dataset aggregates."""
    confusions = [s.confusion for s in samples]
    metrics = {}
    errors = {}
    for m in matchers:
        tallies = [s.matchers[m].tallies for s in samples]
        metrics[m] = metric_report(confusions, tallies)
        errors[m] = aggregate_errors([(s.matchers[m].loc, s.matchers[m].seg) for s in samples])
    return metrics, errors


def evaluate_dataset(spec: DatasetSpec) -> DatasetReport:
    """Evaluate every paired sample and aggregate into a dataset report."""
    pairs = discover_pairs(spec.pred_dir, spec.gt_dir)

    def run_one(item: tuple[str, Path, Path]) -> SampleEvaluation:
        stem, pred_path, gt_path = item
        return evaluate_pair(load_score_mask(pred_path), load_binary_mask(gt_path),
                             spec, sample_id=stem)

    if spec.workers > 1:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            samples = list(pool.map(run_one, pairs))
    else:
        samples = [run_one(item) for item in pairs]

    metrics, errors = aggregate_samples(samples, spec.matchers)

    stats = None
    if spec.img_dir is not None:
        img_dir = Path(spec.img_dir)
        if not img_dir.is_dir():
            raise DatasetError(f"intensity image directory does not exist: {img_dir}")
        images = []
        gt_masks = []
        for stem, _, gt_path in pairs:
            matches = [p for p in sorted(img_dir.iterdir())
                       if p.is_file() and p.stem == stem and p.suffix.lower() in MASK_SUFFIXES]
            if not matches:
                raise DatasetError(f"missing intensity image for sample {stem!r} in {img_dir}")
            images.append(read_gray8(matches[0]))
            gt_masks.append(load_binary_mask(gt_path))
        stats = dataset_stats(images, gt_masks, spec.connectivity)

    return DatasetReport(
        version=__version__,
        config=spec.fingerprint(),
        metrics=metrics,
        errors=errors,
        samples=samples,
        stats=stats,
    )


def dataset_stats_from_dirs(img_dir, gt_dir, connectivity: int = 8) -> AttributeStats:
    """Attribute statistics for images in ``img_dir`` paired with masks in ``gt_dir``."""
    pairs = discover_pairs(img_dir, gt_dir)
    images = [read_gray8(img_path) for _, img_path, _ in pairs]
    gt_masks = [load_binary_mask(gt_path) for _, _, gt_path in pairs]
    return dataset_stats(images, gt_masks, connectivity)
