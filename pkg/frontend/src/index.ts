/**
 * Bindings for the irstdeval core.
 *
 * Every entry point is a stateless wrapper: inputs are serialized to the
 * core's wire formats, the core CLI does the work, and the canonical JSON
 * report comes back as plain objects. Numeric values are exactly the CLI's
 * values; nothing is recomputed on this side.
 */

import { mkdtempSync, mkdirSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { MaskView, ScoreView, encodeMask, encodeScores, requireSameShape } from "./arrays.js";
import { CoreOptions, runCore } from "./runner.js";

export { MaskView, ScoreView, encodeMask, encodeScores } from "./arrays.js";

export type MatcherName = "opdc" | "distance_only";

export interface EvalConfig extends CoreOptions {
  threshold?: number;
  connectivity?: 4 | 8;
  matchers?: MatcherName[];
  resize?: "forbid" | "nearest";
  workers?: number;
}

export interface MetricBlock {
  iou_pix: number;
  niou_pix: number;
  pre_pix: number;
  rec_pix: number;
  f1_pix: number;
  pd: number;
  fa: number;
  fa_e6: number;
  f1_tgt: number;
  iou_loc: number;
  iou_seg: number;
  hiou: number;
  aiou: number;
}

export interface LocErrorBlock {
  s2m: number;
  m2s: number;
  itf: number;
  pcp: number;
}

export interface SegErrorBlock {
  mrg: number;
  itf: number;
  pcp: number;
}

export interface MatchBlock {
  pairs: { gt: number; pred: number; iou: number; distance: number; phase: string }[];
  unmatched_gt: number[];
  unmatched_pred: number[];
}

export interface SampleRow {
  id: string;
  confusion: { tp: number; fp: number; tn: number; fn: number };
  matchers: Record<string, {
    tallies: {
      tp_tgt: number;
      fp_tgt: number;
      fn_tgt: number;
      fp_area: number;
      image_area: number;
      pair_ious: number[];
    };
    match: MatchBlock;
    loc: LocErrorBlock & { counts: number[]; denominator: number };
    seg: SegErrorBlock & { per_pair: number[][] };
  }>;
}

export interface Report {
  version: string;
  config: Record<string, unknown>;
  metrics: Record<string, MetricBlock>;
  errors: Record<string, { loc: LocErrorBlock; seg: SegErrorBlock }>;
  samples: SampleRow[];
  stats?: Record<string, number>;
}

export interface PairEvaluation {
  metrics: Record<string, MetricBlock>;
  errors: Record<string, { loc: LocErrorBlock; seg: SegErrorBlock }>;
  sample: SampleRow;
}

/** Version of the core the bindings talk to; must equal the package version. */
export function coreVersion(options?: CoreOptions): string {
  return runCore(["--version"], options).trim();
}

function matcherFlag(matchers?: MatcherName[]): string {
  const names = matchers && matchers.length ? matchers : ["opdc", "distance_only"];
  return names.map((m) => (m === "distance_only" ? "distance" : m)).join(",");
}

function runFlags(config?: EvalConfig): string[] {
  const flags = ["--matcher", matcherFlag(config?.matchers)];
  if (config?.threshold !== undefined) flags.push("--threshold", String(config.threshold));
  if (config?.connectivity !== undefined) flags.push("--connectivity", String(config.connectivity));
  if (config?.resize !== undefined) flags.push("--resize", config.resize);
  if (config?.workers !== undefined) flags.push("--workers", String(config.workers));
  return flags;
}

/** Evaluate a whole prediction directory against a GT directory. */
export function evaluateDataset(predDir: string, gtDir: string, config?: EvalConfig): Report {
  const stdout = runCore(
    ["run", "--pred-dir", predDir, "--gt-dir", gtDir, "--format", "json", ...runFlags(config)],
    config,
  );
  return JSON.parse(stdout) as Report;
}

/** Evaluate one prediction/GT array pair. */
export function evaluatePair(pred: ScoreView, gt: MaskView, config?: EvalConfig): PairEvaluation {
  requireSameShape(pred, gt);
  const root = mkdtempSync(join(tmpdir(), "irstdeval-"));
  try {
    const predDir = join(root, "pred");
    const gtDir = join(root, "gt");
    mkdirSync(predDir);
    mkdirSync(gtDir);
    writeFileSync(join(predDir, "sample.raw"), encodeScores(pred));
    writeFileSync(join(gtDir, "sample.raw"), encodeMask(gt));
    const report = evaluateDataset(predDir, gtDir, config);
    return { metrics: report.metrics, errors: report.errors, sample: report.samples[0] };
  } finally {
    rmSync(root, { recursive: true, force: true });
  }
}

/** One-to-one target matching for an array pair under one strategy. */
export function match(
  pred: ScoreView,
  gt: MaskView,
  strategy: MatcherName = "opdc",
  config?: EvalConfig,
): MatchBlock {
  const result = evaluatePair(pred, gt, { ...config, matchers: [strategy] });
  return result.sample.matchers[strategy].match;
}

/** Localization and segmentation error decomposition for an array pair. */
export function decomposeErrors(
  pred: ScoreView,
  gt: MaskView,
  strategy: MatcherName = "opdc",
  config?: EvalConfig,
): { loc: LocErrorBlock & { counts: number[]; denominator: number };
     seg: SegErrorBlock & { per_pair: number[][] } } {
  const result = evaluatePair(pred, gt, { ...config, matchers: [strategy] });
  const block = result.sample.matchers[strategy];
  return { loc: block.loc, seg: block.seg };
}
