/**
 * Bindings that call into the native pipeline through its CLI.
 *
 * buildSample runs the `sample` subcommand (one record, byte-identical to
 * the same sample inside a full `gen` run) and parses the result;
 * trajectoryMask runs the `mask` subcommand and returns its JSON report.
 * Nothing here re-implements generation logic.
 */

import { spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { parseRecordFile, type SampleRecord } from "./shards.js";

export interface SampleCoordinates {
  configPath: string;
  videoIndex?: number;
  videoId?: string;
  epoch?: number;
  sampleIndex?: number;
  variant?: "augmented" | "original";
  seed?: number;
  overrides?: Record<string, string>;
  /** python interpreter, default "python3" */
  python?: string;
}

export interface MaskReport {
  sample_id: string;
  token_count: number;
  masked: number[];
  provenance: string;
  counts: { trajectory: number; tube: number };
  ratio: number;
}

function runCli(python: string, args: string[]): void {
  const proc = spawnSync(python, ["-m", "motionforge", ...args], { encoding: "utf-8" });
  if (proc.error) throw proc.error;
  if (proc.status !== 0) {
    throw new Error(`motionforge ${args[0]} exited ${proc.status}: ${proc.stderr}`);
  }
}

function commonArgs(opts: SampleCoordinates, outPath: string, allowVideoId: boolean): string[] {
  const args = ["--config", opts.configPath, "--out", outPath];
  if (allowVideoId && opts.videoId !== undefined) args.push("--video-id", opts.videoId);
  else args.push("--video-index", String(opts.videoIndex ?? 0));
  args.push("--epoch", String(opts.epoch ?? 0));
  args.push("--sample-index", String(opts.sampleIndex ?? 0));
  args.push("--variant", opts.variant ?? "augmented");
  if (opts.seed !== undefined) args.push("--seed", String(opts.seed));
  for (const [key, value] of Object.entries(opts.overrides ?? {})) {
    args.push("--set", `${key}=${value}`);
  }
  return args;
}

export function buildSample(opts: SampleCoordinates): SampleRecord {
  const dir = mkdtempSync(join(tmpdir(), "motionforge-bind-"));
  try {
    const out = join(dir, "record.bin");
    runCli(opts.python ?? "python3", ["sample", ...commonArgs(opts, out, true)]);
    return parseRecordFile(out);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

export function trajectoryMask(opts: SampleCoordinates): MaskReport {
  const dir = mkdtempSync(join(tmpdir(), "motionforge-bind-"));
  try {
    const out = join(dir, "mask.json");
    runCli(opts.python ?? "python3", ["mask", ...commonArgs(opts, out, false)]);
    return JSON.parse(readFileSync(out, "utf-8")) as MaskReport;
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}
