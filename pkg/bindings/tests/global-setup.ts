/** Regenerate the native golden set before the parity suite runs. */

import { spawnSync } from "node:child_process";
import { rmSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

export const BINDINGS_ROOT = dirname(dirname(fileURLToPath(import.meta.url)));
export const REPO_ROOT = dirname(BINDINGS_ROOT);
export const GOLDEN_DIR = join(BINDINGS_ROOT, ".golden");

export default function setup(): void {
  rmSync(GOLDEN_DIR, { recursive: true, force: true });
  const proc = spawnSync(
    "python3",
    [join(REPO_ROOT, "scripts", "make_golden.py"), "--out", GOLDEN_DIR],
    { encoding: "utf-8", cwd: REPO_ROOT },
  );
  if (proc.status !== 0) {
    throw new Error(`make_golden.py failed (${proc.status}):\n${proc.stdout}\n${proc.stderr}`);
  }
}
