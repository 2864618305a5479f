/**
 * Array views and the raw mask wire format.
 *
 * A view wraps the caller's contiguous row-major buffer without copying;
 * data is only serialized when handed to the core. The wire format is the
 * core's raw mask file: little-endian u32 height, u32 width, then
 * height*width intensity bytes.
 */

export interface ScoreView {
  /** Prediction scores in [0, 1], row-major, length height*width. */
  data: Float64Array | number[];
  height: number;
  width: number;
}

export interface MaskView {
  /** Foreground flags, row-major, length height*width. */
  data: Uint8Array | boolean[];
  height: number;
  width: number;
}

function checkShape(height: number, width: number, length: number, what: string): void {
  if (!Number.isInteger(height) || !Number.isInteger(width) || height < 1 || width < 1) {
    throw new Error(`${what}: shape must be two positive integers, got ${height}x${width}`);
  }
  if (length !== height * width) {
    throw new Error(
      `${what}: buffer holds ${length} values, shape ${height}x${width} needs ${height * width}`,
    );
  }
}

/**
 * Serialize prediction scores. Scores are quantized to the 8-bit wire
 * format (round(score * 255)); feed byte-valued data for exact round trips.
 */
export function encodeScores(view: ScoreView): Buffer {
  checkShape(view.height, view.width, view.data.length, "scores");
  const out = Buffer.alloc(8 + view.height * view.width);
  out.writeUInt32LE(view.height, 0);
  out.writeUInt32LE(view.width, 4);
  for (let i = 0; i < view.data.length; i++) {
    const v = Number(view.data[i]);
    if (!Number.isFinite(v) || v < 0 || v > 1) {
      throw new Error(`scores: value ${v} at index ${i} is outside [0, 1]`);
    }
    out[8 + i] = Math.round(v * 255);
  }
  return out;
}

/** Serialize a binary mask (foreground bytes are 255, background 0). */
export function encodeMask(view: MaskView): Buffer {
  checkShape(view.height, view.width, view.data.length, "mask");
  const out = Buffer.alloc(8 + view.height * view.width);
  out.writeUInt32LE(view.height, 0);
  out.writeUInt32LE(view.width, 4);
  for (let i = 0; i < view.data.length; i++) {
    out[8 + i] = view.data[i] ? 255 : 0;
  }
  return out;
}

/** Shape check shared by the pair-level entry points. */
export function requireSameShape(pred: ScoreView, gt: MaskView): void {
  checkShape(pred.height, pred.width, pred.data.length, "scores");
  checkShape(gt.height, gt.width, gt.data.length, "mask");
  if (pred.height !== gt.height || pred.width !== gt.width) {
    throw new Error(
      `shape mismatch: prediction ${pred.height}x${pred.width} vs GT ${gt.height}x${gt.width}`,
    );
  }
}
