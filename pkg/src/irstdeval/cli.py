"""Command-line surface.

Subcommands:

* ``run``        evaluate a prediction directory against a GT directory;
* ``perturb``    generate perturbed trial pairs plus a manifest from GT masks;
* ``matchrate``  score a trial manifest under one matching strategy;
* ``stats``      dataset attribute statistics from intensity images + GT.

Exit codes: 0 success, 1 usage/configuration error, 2 data error (orphan
files, shape mismatches, undecodable inputs).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .exceptions import DatasetError, MaskDecodeError, ShapeMismatchError
from .harness import (RESIZE_FORBID, RESIZE_NEAREST, DatasetSpec,
                      dataset_stats_from_dirs, evaluate_dataset)
from .mask_io import MASK_SUFFIXES, load_binary_mask
from .masks import extract_targets
from .matching import STRATEGY_DISTANCE_ONLY, STRATEGY_OPDC, MatchConfig
from .perturb import (KINDS, MatchTrial, PerturbSpec, copy_paste,
                      match_success_rate, perturb, read_trials, write_trials)
from .report import FORMATS, emit_report

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

_MATCHER_TOKENS = {
    "opdc": STRATEGY_OPDC,
    "distance": STRATEGY_DISTANCE_ONLY,
    "distance_only": STRATEGY_DISTANCE_ONLY,
}


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the contract reserves 2 for data errors.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _parse_matchers(text: str) -> tuple[str, ...]:
    out = []
    for token in text.split(","):
        token = token.strip()
        if token not in _MATCHER_TOKENS:
            raise ValueError(f"unknown matcher {token!r}; expected opdc and/or distance")
        strategy = _MATCHER_TOKENS[token]
        if strategy not in out:
            out.append(strategy)
    return tuple(out)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="irstdeval",
                     description="Hierarchical evaluation of small-target segmentation masks")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="evaluate predictions against GT masks")
    run.add_argument("--pred-dir", required=True)
    run.add_argument("--gt-dir", required=True)
    run.add_argument("--img-dir", default=None,
                     help="intensity images; enables the dataset attribute block")
    run.add_argument("--threshold", type=float, default=0.5)
    run.add_argument("--connectivity", type=int, choices=(4, 8), default=8)
    run.add_argument("--matcher", default="opdc,distance",
                     help="comma-separated subset of {opdc, distance}")
    run.add_argument("--resize", choices=("forbid", "nearest"), default="forbid")
    run.add_argument("--out", default=None, help="output path (default: stdout)")
    run.add_argument("--format", choices=FORMATS, default="json")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--name", default="dataset", help="dataset label in the report")

    pert = sub.add_parser("perturb", help="generate perturbed trials from GT masks")
    pert.add_argument("--gt-dir", required=True)
    pert.add_argument("--kind", required=True, choices=KINDS)
    pert.add_argument("--seed", type=int, required=True)
    pert.add_argument("--magnitude", type=float, required=True)
    pert.add_argument("--count", type=int, default=3,
                      help="number of pastes (copy_paste only)")
    pert.add_argument("--out", required=True, help="output directory for trials + manifest")

    rate = sub.add_parser("matchrate", help="score a trial manifest")
    rate.add_argument("--manifest", required=True)
    rate.add_argument("--matcher", required=True,
                      help="one of {opdc, distance}")

    st = sub.add_parser("stats", help="dataset attribute statistics")
    st.add_argument("--img-dir", required=True)
    st.add_argument("--gt-dir", required=True)
    st.add_argument("--connectivity", type=int, choices=(4, 8), default=8)
    return parser


def _cmd_run(args) -> int:
    try:
        matchers = _parse_matchers(args.matcher)
        spec = DatasetSpec(
            pred_dir=args.pred_dir,
            gt_dir=args.gt_dir,
            name=args.name,
            img_dir=args.img_dir,
            threshold=args.threshold,
            connectivity=args.connectivity,
            matchers=matchers,
            resize_policy=RESIZE_NEAREST if args.resize == "nearest" else RESIZE_FORBID,
            workers=args.workers,
        )
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    report = evaluate_dataset(spec)
    payload = emit_report(report, args.format)
    if args.out:
        Path(args.out).write_bytes(payload)
    else:
        sys.stdout.buffer.write(payload)
    return EXIT_OK


def _cmd_perturb(args) -> int:
    gt_dir = Path(args.gt_dir)
    if not gt_dir.is_dir():
        print(f"configuration error: GT directory does not exist: {gt_dir}", file=sys.stderr)
        return EXIT_USAGE
    paths = [p for p in sorted(gt_dir.iterdir())
             if p.is_file() and p.suffix.lower() in MASK_SUFFIXES]
    if not paths:
        raise DatasetError(f"no mask files found in {gt_dir}")
    trials = []
    specs = []
    for i, path in enumerate(paths):
        mask = load_binary_mask(path)
        spec = PerturbSpec(kind=args.kind, seed=args.seed + i,
                           magnitude=args.magnitude, count=args.count)
        try:
            if args.kind == "copy_paste":
                # Densification: the augmented mask is the deliverable; the
                # trial carries it with an identity prediction.
                augmented = copy_paste(mask, spec)
                targets = extract_targets(augmented, 8)
                trial = MatchTrial(gt_mask=augmented, perturbed_pred=augmented,
                                   expected_pairs=tuple((t.id, t.id) for t in targets.regions))
            else:
                trial = perturb(mask, spec)
        except ValueError as exc:
            # mask does not support this kind (empty, or connect with a
            # single target): skip it rather than aborting the run
            print(f"skipping {path.name}: {exc}", file=sys.stderr)
            continue
        trials.append(trial)
        specs.append(spec)
    if not trials:
        raise DatasetError(f"no mask in {gt_dir} supports kind {args.kind!r}")
    manifest = write_trials(trials, args.out, specs)
    print(f"wrote {len(trials)} trials; manifest: {manifest}")
    return EXIT_OK


def _cmd_matchrate(args) -> int:
    try:
        matchers = _parse_matchers(args.matcher)
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    trials = read_trials(args.manifest)
    rate = match_success_rate(trials, MatchConfig(strategy=matchers[0]))
    print(f"{rate:.6f}")
    return EXIT_OK


def _cmd_stats(args) -> int:
    stats = dataset_stats_from_dirs(args.img_dir, args.gt_dir, args.connectivity)
    for key, value in stats.as_dict().items():
        print(f"{key}: {value:.6g}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "perturb": _cmd_perturb,
        "matchrate": _cmd_matchrate,
        "stats": _cmd_stats,
    }
    try:
        return handlers[args.command](args)
    except (DatasetError, ShapeMismatchError, MaskDecodeError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
