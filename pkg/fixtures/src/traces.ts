/**
 * Per-test function coverage via valgrind's callgrind tool.
 *
 * One profile is written per suite test, named <id>.callgrind, which is
 * the layout `binmend spectra --traces` expects. Callgrind only resolves
 * symbol names for objects it sees mapped both readable-executable and
 * writable, so every corpus program keeps at least one writable global.
 */

import { spawnSync } from "node:child_process";
import { mkdirSync, readFileSync } from "node:fs";
import * as path from "node:path";

import type { SuiteEntry } from "./manifest";

export class TraceFailure extends Error {}

export function traceTest(
  binary: string,
  test: SuiteEntry,
  fixtureDir: string,
  outFile: string,
): void {
  const argv = test.cmd.map((tok) => tok.replaceAll("{binary}", binary));
  const stdin = test.stdin
    ? readFileSync(path.resolve(fixtureDir, test.stdin))
    : undefined;
  const proc = spawnSync(
    "valgrind",
    ["--tool=callgrind", `--callgrind-out-file=${outFile}`, ...argv],
    { input: stdin, timeout: (test.timeout_s ?? 10) * 1000 },
  );
  if (proc.error)
    throw new TraceFailure(`callgrind ${test.id}: ${proc.error.message}`);
  // a crashing guest still flushes its profile at termination
}

export function traceSuite(
  binary: string,
  suite: SuiteEntry[],
  fixtureDir: string,
  tracesDir: string,
): void {
  mkdirSync(tracesDir, { recursive: true });
  for (const test of suite) {
    traceTest(binary, test, fixtureDir, path.join(tracesDir, `${test.id}.callgrind`));
  }
}
