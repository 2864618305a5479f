"""Hierarchical evaluation toolkit for small-target segmentation masks."""

__version__ = "0.1.0"

from .exceptions import DatasetError, MaskDecodeError, ShapeMismatchError
from .masks import (BinaryMask, ScoreMask, TargetRegion, TargetSet, binarize,
                    centroid_distance, extract_targets, region_iou)
from .matching import (CostMatrix, MatchConfig, MatchResult, MatchedPair,
                       match_distance_only, match_opdc, match_targets, solve_assignment)
from .metrics import (MetricReport, PixelConfusion, TargetTallies, fa, f1_tgt,
                      f1_pix_dataset, hierarchical_iou, iou_pix_dataset, metric_report,
                      niou_pix_dataset, pd, pixel_confusion, target_tallies)
from .error_analysis import (LocErrors, SegErrors, aggregate_errors,
                             decompose_localization, decompose_segmentation)
from .perturb import MatchTrial, PerturbSpec, copy_paste, match_success_rate, perturb
from .harness import (DatasetReport, DatasetSpec, SampleEvaluation, evaluate_dataset,
                      evaluate_pair)
from .report import emit_report
from .stats import AttributeStats, dataset_stats

__all__ = [
    "__version__",
    "AttributeStats", "BinaryMask", "CostMatrix", "DatasetError", "DatasetReport",
    "DatasetSpec", "LocErrors", "MaskDecodeError", "MatchConfig", "MatchResult",
    "MatchTrial", "MatchedPair", "MetricReport", "PerturbSpec", "PixelConfusion",
    "SampleEvaluation", "ScoreMask", "SegErrors", "ShapeMismatchError", "TargetRegion",
    "TargetSet", "TargetTallies",
    "aggregate_errors", "binarize", "centroid_distance", "copy_paste", "dataset_stats",
    "decompose_localization", "decompose_segmentation", "emit_report", "evaluate_dataset",
    "evaluate_pair", "extract_targets", "fa", "f1_pix_dataset", "f1_tgt",
    "hierarchical_iou", "iou_pix_dataset", "match_distance_only", "match_opdc",
    "match_success_rate", "match_targets", "metric_report", "niou_pix_dataset", "pd",
    "perturb", "pixel_confusion", "region_iou", "solve_assignment", "target_tallies",
]
