"""Report serialization: canonical JSON, per-sample CSV, and a summary table.

JSON is the raw interchange format: keys sorted, samples in evaluation
order, floats at full precision (shortest round-trip repr), so two runs
over identical inputs produce byte-identical output and every aggregate
can be recomputed exactly from the embedded per-sample rows. The CSV and
markdown forms are presentation tables and round floats to six significant
digits.
"""

from __future__ import annotations

import io
import json

from .error_analysis import LocErrors, SegErrors
from .harness import DatasetReport, SampleEvaluation
from .matching import STRATEGY_DISTANCE_ONLY, STRATEGY_OPDC
from .metrics import MetricReport

FORMATS = ("json", "csv", "markdown")

_MATCHER_LABELS = {STRATEGY_DISTANCE_ONLY: "distance", STRATEGY_OPDC: "+OPDC"}


def _g6(x: float) -> str:
    return f"{x:.6g}"


def _sample_row(sample: SampleEvaluation) -> dict:
    row: dict = {
        "id": sample.sample_id,
        "confusion": {
            "tp": sample.confusion.tp,
            "fp": sample.confusion.fp,
            "tn": sample.confusion.tn,
            "fn": sample.confusion.fn,
        },
        "matchers": {},
    }
    if sample.empty_agreement:
        row["empty_agreement"] = True
    for name, ev in sample.matchers.items():
        row["matchers"][name] = {
            "tallies": {
                "tp_tgt": ev.tallies.tp_tgt,
                "fp_tgt": ev.tallies.fp_tgt,
                "fn_tgt": ev.tallies.fn_tgt,
                "fp_area": ev.tallies.fp_area,
                "image_area": ev.tallies.image_area,
                "pair_ious": list(ev.tallies.pair_ious),
            },
            "match": {
                "pairs": [
                    {"gt": p.gt_id, "pred": p.pred_id, "iou": p.iou,
                     "distance": p.distance, "phase": p.phase}
                    for p in ev.match.pairs
                ],
                "unmatched_gt": list(ev.match.unmatched_gt),
                "unmatched_pred": list(ev.match.unmatched_pred),
            },
            "loc": {
                "s2m": ev.loc.e_s2m, "m2s": ev.loc.e_m2s,
                "itf": ev.loc.e_itf, "pcp": ev.loc.e_pcp,
                "counts": list(ev.loc.counts),
                "denominator": ev.loc.denominator,
            },
            "seg": {
                "mrg": ev.seg.e_mrg, "itf": ev.seg.e_itf, "pcp": ev.seg.e_pcp,
                "per_pair": [list(t) for t in ev.seg.per_pair],
            },
        }
    return row


def report_to_dict(report: DatasetReport) -> dict:
    """The canonical JSON document as a plain dict."""
    doc: dict = {
        "version": report.version,
        "config": report.config,
        "metrics": {m: r.as_dict() for m, r in report.metrics.items()},
        "errors": {
            m: {"loc": loc.as_dict(), "seg": seg.as_dict()}
            for m, (loc, seg) in report.errors.items()
        },
        "samples": [_sample_row(s) for s in report.samples],
    }
    if report.stats is not None:
        doc["stats"] = report.stats.as_dict()
    flagged = report.flagged_empty_samples()
    if flagged:
        doc["flags"] = {"empty_agreement_samples": flagged}
    return doc


def _metric_columns(metrics: MetricReport) -> list[tuple[str, float]]:
    d = metrics.as_dict()
    return [(k, d[k]) for k in ("iou_pix", "niou_pix", "pre_pix", "rec_pix", "f1_pix",
                                "pd", "fa_e6", "f1_tgt", "iou_loc", "iou_seg", "hiou", "aiou")]


def _error_columns(loc: LocErrors, seg: SegErrors) -> list[tuple[str, float]]:
    cols = [(f"loc_{k}", v) for k, v in loc.as_dict().items()]
    cols += [(f"seg_{k}", v) for k, v in seg.as_dict().items()]
    return cols


def _csv_text(report: DatasetReport) -> str:
    from .harness import aggregate_samples

    matchers = list(report.metrics)
    header = ["sample"]
    for m in matchers:
        header += [f"{m}_{k}" for k, _ in _metric_columns(report.metrics[m])]
        loc, seg = report.errors[m]
        header += [f"{m}_{k}" for k, _ in _error_columns(loc, seg)]
    lines = [",".join(header)]

    for sample in report.samples:
        per_metrics, per_errors = aggregate_samples([sample], matchers)
        cells = [sample.sample_id]
        for m in matchers:
            cells += [_g6(v) for _, v in _metric_columns(per_metrics[m])]
            cells += [_g6(v) for _, v in _error_columns(*per_errors[m])]
        lines.append(",".join(cells))

    cells = ["AGGREGATE"]
    for m in matchers:
        cells += [_g6(v) for _, v in _metric_columns(report.metrics[m])]
        cells += [_g6(v) for _, v in _error_columns(*report.errors[m])]
    lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _markdown_text(report: DatasetReport) -> str:
    headers = ["matcher", "IoU_pix", "nIoU_pix", "F1_pix", "Pd", "Fa_e6", "F1_tgt",
               "IoU_loc", "IoU_seg", "hIoU", "aIoU"]
    out = io.StringIO()
    out.write(f"# {report.config.get('name', 'dataset')}\n\n")
    out.write("| " + " | ".join(headers) + " |\n")
    out.write("|" + "|".join(["---"] * len(headers)) + "|\n")
    order = [m for m in (STRATEGY_DISTANCE_ONLY, STRATEGY_OPDC) if m in report.metrics]
    order += [m for m in report.metrics if m not in order]
    for m in order:
        r = report.metrics[m]
        row = [_MATCHER_LABELS.get(m, m)] + [
            _g6(v) for v in (r.iou_pix, r.niou_pix, r.f1_pix, r.pd, r.fa_e6,
                             r.f1_tgt, r.iou_loc, r.iou_seg, r.hiou, r.aiou)
        ]
        out.write("| " + " | ".join(row) + " |\n")

    out.write("\n## Error decomposition\n\n")
    err_headers = ["matcher", "loc_s2m", "loc_m2s", "loc_itf", "loc_pcp",
                   "seg_mrg", "seg_itf", "seg_pcp"]
    out.write("| " + " | ".join(err_headers) + " |\n")
    out.write("|" + "|".join(["---"] * len(err_headers)) + "|\n")
    for m in order:
        loc, seg = report.errors[m]
        row = [_MATCHER_LABELS.get(m, m)] + [_g6(v) for v in
                                             (loc.e_s2m, loc.e_m2s, loc.e_itf, loc.e_pcp,
                                              seg.e_mrg, seg.e_itf, seg.e_pcp)]
        out.write("| " + " | ".join(row) + " |\n")

    if report.stats is not None:
        out.write("\n## Dataset attributes\n\n")
        out.write("| attribute | value |\n|---|---|\n")
        for k, v in report.stats.as_dict().items():
            out.write(f"| {k} | {_g6(v)} |\n")
    return out.getvalue()


def emit_report(report: DatasetReport, format: str = "json") -> bytes:
    """Serialize a report. JSON is canonical and byte-deterministic."""
    if format == "json":
        text = json.dumps(report_to_dict(report), sort_keys=True, indent=2,
                          separators=(",", ": ")) + "\n"
    elif format == "csv":
        text = _csv_text(report)
    elif format == "markdown":
        text = _markdown_text(report)
    else:
        raise ValueError(f"format must be one of {FORMATS}, got {format!r}")
    return text.encode("utf-8")
