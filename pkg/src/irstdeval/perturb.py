"""Seeded synthesis of stress-test mask pairs.

Every generator is a pure function of (mask, spec): randomness comes from a
counter-based Philox engine keyed on the spec seed, so outputs are
bit-identical across runs and platforms. The generator identity is recorded
in trial manifests as part of the file-format version.

Kinds:

* ``copy_paste``  duplicate random targets into free space (densification);
* ``occlude``     carve a rectangular bite out of each target, keeping the
                  remnant connected and at least (1 - magnitude) of the area;
* ``deform``      shift each target by up to floor(magnitude) pixels per axis
                  and toggle up to frac(magnitude) of its boundary pixels;
* ``connect``     draw a 1-pixel bridge between the two nearest targets;
* ``erode`` / ``dilate``  one 3x3 square morphological pass;
* ``sparser`` / ``denser``  translate targets away from / toward the mask
                  centroid by magnitude pixels, kept in-frame and disjoint.

Each perturbation records which prediction region each original target
should match (``expected_pairs``); a vanished target records ``None`` and
counts as a failure in the success rate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import ndimage

from .masks import BinaryMask, TargetRegion, TargetSet, extract_targets
from .mask_io import load_binary_mask, write_binary_mask
from .matching import MatchConfig, match_targets

GENERATOR_ID = "philox4x64"
MANIFEST_FORMAT = f"irstdeval-trials/1 ({GENERATOR_ID})"

KINDS = ("copy_paste", "occlude", "deform", "connect", "erode", "dilate", "sparser", "denser")

_MAX_PLACEMENT_TRIES = 100
_SQUARE_3X3 = np.ones((3, 3), dtype=bool)
#: Connectivity used when relating perturbed components back to their sources.
_TRIAL_CONNECTIVITY = 8


@dataclass(frozen=True)
class PerturbSpec:
    kind: str
    seed: int
    magnitude: float = 0.0
    count: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.count < 0:
            raise ValueError("count must be >= 0")
        if self.magnitude < 0:
            raise ValueError("magnitude must be >= 0")


@dataclass(frozen=True)
class MatchTrial:
    """One GT mask, its perturbed prediction, and the intended pairing."""

    gt_mask: BinaryMask
    perturbed_pred: BinaryMask
    #: (gt_id, descendant pred_id or None if the target vanished)
    expected_pairs: tuple[tuple[int, int | None], ...]


def _rng(spec: PerturbSpec) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.uint64(spec.seed)))


def _clearance_free(bits: np.ndarray, top: int, left: int, h: int, w: int) -> bool:
    """True if the h x w box at (top, left), padded by one pixel, holds no foreground."""
    r0 = max(top - 1, 0)
    c0 = max(left - 1, 0)
    r1 = min(top + h + 1, bits.shape[0])
    c1 = min(left + w + 1, bits.shape[1])
    return not bits[r0:r1, c0:c1].any()


def copy_paste(mask: BinaryMask, spec: PerturbSpec) -> BinaryMask:
    """Duplicate ``spec.count`` randomly chosen targets at random free positions.

    A paste goes where its padded bounding box holds no existing foreground,
    so pasted targets never merge with anything; placement uses rejection
    sampling capped at 100 tries, and exhausted pastes are skipped. Original
    pixels are never modified.
    """
    targets = extract_targets(mask, _TRIAL_CONNECTIVITY)
    if len(targets) == 0:
        raise ValueError("copy_paste requires a mask with at least one target")
    rng = _rng(spec)
    bits = np.array(mask.bits)
    height, width = bits.shape
    for _ in range(spec.count):
        region = targets.regions[int(rng.integers(len(targets)))]
        rows = np.array([r for r, _ in region.pixels])
        cols = np.array([c for _, c in region.pixels])
        rel_r = rows - region.bbox[0]
        rel_c = cols - region.bbox[1]
        h = region.bbox[2] - region.bbox[0] + 1
        w = region.bbox[3] - region.bbox[1] + 1
        if h > height or w > width:
            continue
        for _ in range(_MAX_PLACEMENT_TRIES):
            top = int(rng.integers(height - h + 1))
            left = int(rng.integers(width - w + 1))
            if _clearance_free(bits, top, left, h, w):
                bits[rel_r + top, rel_c + left] = True
                break
    return BinaryMask(bits)


def _region_arrays(region: TargetRegion) -> tuple[np.ndarray, np.ndarray]:
    pix = sorted(region.pixels)
    rows = np.array([r for r, _ in pix], dtype=np.int64)
    cols = np.array([c for _, c in pix], dtype=np.int64)
    return rows, cols


def _is_connected(rows: np.ndarray, cols: np.ndarray) -> bool:
    if rows.size == 0:
        return False
    r0, c0 = rows.min(), cols.min()
    patch = np.zeros((rows.max() - r0 + 1, cols.max() - c0 + 1), dtype=bool)
    patch[rows - r0, cols - c0] = True
    _, count = ndimage.label(patch, structure=_SQUARE_3X3)
    return count == 1


def _occlude_target(region: TargetRegion, magnitude: float,
                    rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Remnant coordinates after biting a rectangle out of the target.

    The bite removes at most floor(magnitude * area) pixels and must leave a
    non-empty connected remnant; after 100 failed tries the target is left
    untouched, so the per-target IoU bound (1 - magnitude) always holds.
    """
    rows, cols = _region_arrays(region)
    budget = int(magnitude * region.area)
    if budget == 0:
        return rows, cols
    min_r, min_c, max_r, max_c = region.bbox
    for _ in range(_MAX_PLACEMENT_TRIES):
        r0 = int(rng.integers(min_r, max_r + 1))
        c0 = int(rng.integers(min_c, max_c + 1))
        bh = int(rng.integers(1, max_r - r0 + 2))
        bw = int(rng.integers(1, max_c - c0 + 2))
        inside = (rows >= r0) & (rows < r0 + bh) & (cols >= c0) & (cols < c0 + bw)
        removed = int(inside.sum())
        if removed == 0 or removed > budget:
            continue
        keep_r, keep_c = rows[~inside], cols[~inside]
        if keep_r.size and _is_connected(keep_r, keep_c):
            return keep_r, keep_c
    return rows, cols


def _shift_into_frame(rows: np.ndarray, cols: np.ndarray, dr: int, dc: int,
                      shape: tuple[int, int]) -> tuple[int, int]:
    """Clamp an offset so the shifted pixels stay inside the frame."""
    dr = int(np.clip(dr, -rows.min(), shape[0] - 1 - rows.max()))
    dc = int(np.clip(dc, -cols.min(), shape[1] - 1 - cols.max()))
    return dr, dc


def _try_place(canvas: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> bool:
    """Place pixels if their padded bounding box is free; return success."""
    top, left = int(rows.min()), int(cols.min())
    h = int(rows.max()) - top + 1
    w = int(cols.max()) - left + 1
    if not _clearance_free(canvas, top, left, h, w):
        return False
    canvas[rows, cols] = True
    return True


def _boundary_indices(rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Indices of pixels with at least one 4-neighbor outside the pixel set."""
    pix = set(zip(rows.tolist(), cols.tolist()))
    out = []
    for i, (r, c) in enumerate(zip(rows.tolist(), cols.tolist())):
        if any((r + dr, c + dc) not in pix for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1))):
            out.append(i)
    return np.array(out, dtype=np.int64)


def _deform_target(region: TargetRegion, magnitude: float, rng: np.random.Generator,
                   canvas: np.ndarray) -> tuple[np.ndarray, np.ndarray] | None:
    """Shift then roughen one target onto the canvas; None if no room at all."""
    rows, cols = _region_arrays(region)
    shape = canvas.shape
    max_off = int(magnitude)
    placed = None
    for _ in range(_MAX_PLACEMENT_TRIES):
        dr = int(rng.integers(-max_off, max_off + 1)) if max_off else 0
        dc = int(rng.integers(-max_off, max_off + 1)) if max_off else 0
        dr, dc = _shift_into_frame(rows, cols, dr, dc, shape)
        cand_r, cand_c = rows + dr, cols + dc
        if _try_place(canvas, cand_r, cand_c):
            placed = (cand_r, cand_c)
            break
    if placed is None:
        return None

    toggle_frac = magnitude - int(magnitude)
    n_toggle = int(toggle_frac * region.area)
    cand_r, cand_c = placed
    for _ in range(n_toggle):
        boundary = _boundary_indices(cand_r, cand_c)
        if boundary.size == 0:
            break
        idx = int(boundary[int(rng.integers(boundary.size))])
        if rng.random() < 0.5 and cand_r.size > 1:
            keep = np.ones(cand_r.size, dtype=bool)
            keep[idx] = False
            if _is_connected(cand_r[keep], cand_c[keep]):
                canvas[cand_r[idx], cand_c[idx]] = False
                cand_r, cand_c = cand_r[keep], cand_c[keep]
            continue
        r, c = int(cand_r[idx]), int(cand_c[idx])
        options = [(r + dr, c + dc) for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1))
                   if 0 <= r + dr < shape[0] and 0 <= c + dc < shape[1]
                   and not canvas[r + dr, c + dc]]
        options = [(nr, nc) for nr, nc in options
                   if _clearance_ok_for_growth(canvas, nr, nc, cand_r, cand_c)]
        if options:
            nr, nc = options[int(rng.integers(len(options)))]
            canvas[nr, nc] = True
            cand_r = np.append(cand_r, nr)
            cand_c = np.append(cand_c, nc)
    return cand_r, cand_c


def _clearance_ok_for_growth(canvas: np.ndarray, r: int, c: int,
                             own_r: np.ndarray, own_c: np.ndarray) -> bool:
    """A grown pixel must not become 8-adjacent to foreign foreground."""
    own = set(zip(own_r.tolist(), own_c.tolist()))
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            rr, cc = r + dr, c + dc
            if 0 <= rr < canvas.shape[0] and 0 <= cc < canvas.shape[1]:
                if canvas[rr, cc] and (rr, cc) not in own:
                    return False
    return True


def _bresenham(p0: tuple[int, int], p1: tuple[int, int]) -> list[tuple[int, int]]:
    r0, c0 = p0
    r1, c1 = p1
    points = []
    dr = abs(r1 - r0)
    dc = abs(c1 - c0)
    sr = 1 if r0 < r1 else -1
    sc = 1 if c0 < c1 else -1
    err = dr - dc
    r, c = r0, c0
    while True:
        points.append((r, c))
        if (r, c) == (r1, c1):
            break
        e2 = 2 * err
        if e2 > -dc:
            err -= dc
            r += sr
        if e2 < dr:
            err += dr
            c += sc
    return points


def _move_radially(targets: TargetSet, magnitude: float, outward: bool,
                   shape: tuple[int, int]) -> list[tuple[np.ndarray, np.ndarray] | None]:
    """Shift every target along the ray from the mask centroid; keep them disjoint."""
    all_r = np.concatenate([_region_arrays(t)[0] for t in targets.regions])
    all_c = np.concatenate([_region_arrays(t)[1] for t in targets.regions])
    center = (float(all_r.mean()), float(all_c.mean()))
    canvas = np.zeros(shape, dtype=bool)
    placed: list[tuple[np.ndarray, np.ndarray] | None] = []
    for region in targets.regions:
        rows, cols = _region_arrays(region)
        vr = region.centroid[0] - center[0]
        vc = region.centroid[1] - center[1]
        norm = float(np.hypot(vr, vc))
        if norm == 0.0:
            unit = (0.0, 0.0)
        else:
            unit = (vr / norm, vc / norm)
        sign = 1.0 if outward else -1.0
        result = None
        scale = magnitude
        while True:
            dr = int(round(sign * unit[0] * scale))
            dc = int(round(sign * unit[1] * scale))
            dr, dc = _shift_into_frame(rows, cols, dr, dc, shape)
            cand_r, cand_c = rows + dr, cols + dc
            if _try_place(canvas, cand_r, cand_c):
                result = (cand_r, cand_c)
                break
            if scale < 1.0:
                break
            scale /= 2.0
        placed.append(result)
    return placed


def _descendants(carriers: Sequence[tuple[np.ndarray, np.ndarray] | None],
                 pred: BinaryMask) -> tuple[TargetSet, list[int | None]]:
    """Map each carrier pixel set to the prediction region containing it."""
    pred_targets = extract_targets(pred, _TRIAL_CONNECTIVITY)
    owner: dict[tuple[int, int], int] = {}
    for region in pred_targets.regions:
        for px in region.pixels:
            owner[px] = region.id
    ids: list[int | None] = []
    for carrier in carriers:
        if carrier is None or carrier[0].size == 0:
            ids.append(None)
            continue
        hit = None
        for r, c in zip(carrier[0].tolist(), carrier[1].tolist()):
            hit = owner.get((r, c))
            if hit is not None:
                break
        ids.append(hit)
    return pred_targets, ids


def perturb(mask: BinaryMask, spec: PerturbSpec) -> MatchTrial:
    """Produce a perturbed prediction mask plus its intended pairing."""
    targets = extract_targets(mask, _TRIAL_CONNECTIVITY)
    if len(targets) == 0:
        raise ValueError(f"{spec.kind} requires a mask with at least one target")
    if spec.kind == "connect" and len(targets) < 2:
        raise ValueError("connect requires at least two targets")
    rng = _rng(spec)
    shape = mask.shape

    carriers: list[tuple[np.ndarray, np.ndarray] | None]
    if spec.kind == "occlude":
        canvas = np.zeros(shape, dtype=bool)
        carriers = []
        for region in targets.regions:
            keep_r, keep_c = _occlude_target(region, spec.magnitude, rng)
            canvas[keep_r, keep_c] = True
            carriers.append((keep_r, keep_c))
        pred = BinaryMask(canvas)

    elif spec.kind == "deform":
        canvas = np.zeros(shape, dtype=bool)
        carriers = [_deform_target(region, spec.magnitude, rng, canvas)
                    for region in targets.regions]
        pred = BinaryMask(canvas)

    elif spec.kind == "connect":
        best = None
        for i in range(len(targets)):
            for j in range(i + 1, len(targets)):
                d = float(np.hypot(
                    targets.regions[i].centroid[0] - targets.regions[j].centroid[0],
                    targets.regions[i].centroid[1] - targets.regions[j].centroid[1]))
                if best is None or d < best[0]:
                    best = (d, i, j)
        _, i, j = best
        canvas = np.array(mask.bits)
        a = tuple(int(round(x)) for x in targets.regions[i].centroid)
        b = tuple(int(round(x)) for x in targets.regions[j].centroid)
        for r, c in _bresenham(a, b):
            canvas[r, c] = True
        pred = BinaryMask(canvas)
        carriers = [_region_arrays(t) for t in targets.regions]

    elif spec.kind in ("erode", "dilate"):
        op = ndimage.binary_erosion if spec.kind == "erode" else ndimage.binary_dilation
        canvas = op(mask.bits, structure=_SQUARE_3X3)
        pred = BinaryMask(canvas)
        carriers = []
        for region in targets.regions:
            rows, cols = _region_arrays(region)
            if spec.kind == "erode":
                keep = canvas[rows, cols]
                rows, cols = rows[keep], cols[keep]
            carriers.append((rows, cols) if rows.size else None)

    elif spec.kind in ("sparser", "denser"):
        carriers = _move_radially(targets, spec.magnitude, spec.kind == "sparser", shape)
        canvas = np.zeros(shape, dtype=bool)
        for carrier in carriers:
            if carrier is not None:
                canvas[carrier[0], carrier[1]] = True
        pred = BinaryMask(canvas)

    else:
        raise ValueError(f"kind {spec.kind!r} does not produce trials; use copy_paste() directly")

    _, descendant_ids = _descendants(carriers, pred)
    expected = tuple((t.id, descendant_ids[t.id]) for t in targets.regions)
    return MatchTrial(gt_mask=mask, perturbed_pred=pred, expected_pairs=expected)


def match_success_rate(trials: Sequence[MatchTrial], cfg: MatchConfig) -> float:
    """Fraction of expected pairs the configured matcher reproduces.

    A pair succeeds when the matcher pairs its GT target with the prediction
    region holding the expected descendant (prediction regions are disjoint,
    so sharing one pixel means being that region). Vanished descendants
    count as failures.
    """
    if not trials:
        raise ValueError("cannot score an empty list of trials")
    total = 0
    hits = 0
    for trial in trials:
        gt_ts = extract_targets(trial.gt_mask, _TRIAL_CONNECTIVITY)
        pred_ts = extract_targets(trial.perturbed_pred, _TRIAL_CONNECTIVITY)
        result = match_targets(gt_ts, pred_ts, cfg)
        matched = {p.gt_id: p.pred_id for p in result.pairs}
        for g, d in trial.expected_pairs:
            total += 1
            if d is not None and matched.get(g) == d:
                hits += 1
    return hits / total


def write_trials(trials: Sequence[MatchTrial], out_dir, specs: Sequence[PerturbSpec]) -> Path:
    """Write paired mask files plus a JSON manifest; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, (trial, spec) in enumerate(zip(trials, specs)):
        gt_name = f"trial_{i:04d}_gt.png"
        pred_name = f"trial_{i:04d}_pred.png"
        write_binary_mask(out_dir / gt_name, trial.gt_mask)
        write_binary_mask(out_dir / pred_name, trial.perturbed_pred)
        entry = {
            "gt": gt_name,
            "pred": pred_name,
            "spec": {"kind": spec.kind, "seed": spec.seed,
                     "magnitude": spec.magnitude, "count": spec.count},
            "expected_pairs": [[g, d] for g, d in trial.expected_pairs],
        }
        if spec.kind == "deform":
            entry["procedure"] = "shift_plus_boundary_toggle"
        entries.append(entry)
    manifest = {"format": MANIFEST_FORMAT, "trials": entries}
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def read_trials(manifest_path) -> list[MatchTrial]:
    """Load trials written by :func:`write_trials`."""
    manifest_path = Path(manifest_path)
    data = json.loads(manifest_path.read_text(encoding="utf-8"))
    if not str(data.get("format", "")).startswith("irstdeval-trials/1"):
        raise ValueError(f"{manifest_path}: unsupported manifest format {data.get('format')!r}")
    trials = []
    base = manifest_path.parent
    for entry in data["trials"]:
        trials.append(MatchTrial(
            gt_mask=load_binary_mask(base / entry["gt"]),
            perturbed_pred=load_binary_mask(base / entry["pred"]),
            expected_pairs=tuple((int(g), None if d is None else int(d))
                                 for g, d in entry["expected_pairs"]),
        ))
    return trials


def synth_target_layout(shape: tuple[int, int], n_targets: int, rng: np.random.Generator,
                        size_range: tuple[int, int] = (2, 6),
                        min_separation: float = 0.0) -> BinaryMask:
    """Random layout of disjoint rectangular targets, for stress suites.

    Placement keeps a one-pixel margin between targets; ``min_separation``
    additionally enforces a minimum centroid distance, which suites use to
    rule out assignment ambiguity.
    """
    height, width = shape
    bits = np.zeros(shape, dtype=bool)
    centroids: list[tuple[float, float]] = []
    placed = 0
    tries = 0
    while placed < n_targets and tries < 200 * n_targets:
        tries += 1
        h = int(rng.integers(size_range[0], size_range[1] + 1))
        w = int(rng.integers(size_range[0], size_range[1] + 1))
        if h > height or w > width:
            continue
        top = int(rng.integers(height - h + 1))
        left = int(rng.integers(width - w + 1))
        if not _clearance_free(bits, top, left, h, w):
            continue
        cen = (top + (h - 1) / 2.0, left + (w - 1) / 2.0)
        if min_separation and any(np.hypot(cen[0] - r, cen[1] - c) < min_separation
                                  for r, c in centroids):
            continue
        bits[top:top + h, left:left + w] = True
        centroids.append(cen)
        placed += 1
    if placed == 0:
        bits[0, 0] = True
    return BinaryMask(bits)
