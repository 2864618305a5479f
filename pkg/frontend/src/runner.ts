/** Subprocess plumbing: every call shells out to the core CLI, statelessly. */

import { execFileSync } from "node:child_process";

export interface CoreOptions {
  /** Python interpreter with the core installed; defaults to $IRSTDEVAL_PYTHON or python3. */
  pythonPath?: string;
}

export function pythonExecutable(options?: CoreOptions): string {
  return options?.pythonPath ?? process.env.IRSTDEVAL_PYTHON ?? "python3";
}

export function runCore(args: string[], options?: CoreOptions): string {
  try {
    return execFileSync(pythonExecutable(options), ["-m", "irstdeval", ...args], {
      encoding: "utf-8",
      maxBuffer: 256 * 1024 * 1024,
    });
  } catch (err) {
    const e = err as { status?: number; stderr?: string };
    const detail = (e.stderr ?? "").trim() || String(err);
    throw new Error(`irstdeval core exited with status ${e.status ?? "?"}: ${detail}`);
  }
}
