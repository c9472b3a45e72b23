import { spawnSync } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

/** Path of the CLI binary; override with OMNIBOX_BIN. */
export function cliBinary(): string {
  return process.env.OMNIBOX_BIN ?? "omnibox";
}

/**
 * Run one CLI subcommand and parse its stdout JSON report.
 *
 * Non-zero exits surface as plain Errors carrying the CLI's stderr, so the
 * native error message is what the caller sees.
 */
export function runCli(args: string[]): any {
  const proc = spawnSync(cliBinary(), args, {
    encoding: "utf-8",
    maxBuffer: 64 * 1024 * 1024,
  });
  if (proc.error) {
    throw new Error(`failed to spawn ${cliBinary()}: ${proc.error.message}`);
  }
  if (proc.status !== 0) {
    const detail = (proc.stderr || proc.stdout || "").trim();
    throw new Error(
      `${cliBinary()} ${args[0]} exited with ${proc.status}: ${detail}`,
    );
  }
  return JSON.parse(proc.stdout);
}

/** Run fn with a fresh temp directory, removing it afterwards. */
export function withTempDir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "omnibox-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}
