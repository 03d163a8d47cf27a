/**
 * Thin wrapper over the binmend command line.
 *
 * The corpus talks to the toolchain exclusively through its CLI and the
 * JSON documents it reads and writes; nothing here imports Python code.
 */

import { spawnSync } from "node:child_process";
import { readFileSync } from "node:fs";

export interface BinmendResult {
  status: number;
  stderr: string;
}

export class BinmendFailure extends Error {
  constructor(
    message: string,
    readonly status: number,
  ) {
    super(message);
  }
}

export function binmend(args: string[]): BinmendResult {
  const proc = spawnSync("binmend", args, { encoding: "utf8" });
  if (proc.error) throw new BinmendFailure(String(proc.error), -1);
  return { status: proc.status ?? -1, stderr: proc.stderr };
}

/** Run a subcommand that must succeed, returning captured stderr. */
export function binmendOk(args: string[]): string {
  const res = binmend(args);
  if (res.status !== 0)
    throw new BinmendFailure(
      `binmend ${args[0]} exited ${res.status}:\n${res.stderr}`,
      res.status,
    );
  return res.stderr;
}

// -- typed views of the documents the pipeline consumes --------------------

export interface SpectraDoc {
  binary: string;
  functions: { name: string; size: number; library: boolean; local: boolean }[];
  tests: { id: string; kind: string; verdict: string; covered: string[] }[];
}

export interface RankedDoc {
  k: number;
  fraction: number;
  ranked: { name: string; weight: number }[];
}

export interface CheckReport {
  classification:
    | "test_equivalent"
    | "regressed"
    | "mitigated"
    | "behavior_changed";
  tests: {
    id: string;
    kind: string;
    original: { status: string; reason: string | null };
    patched: { status: string; reason: string | null };
  }[];
}

export function readJson<T>(file: string): T {
  return JSON.parse(readFileSync(file, "utf8")) as T;
}

/** 1-based rank of a function in the consolidated list, or null. */
export function rankOf(doc: RankedDoc, fn: string): number | null {
  const at = doc.ranked.findIndex((e) => e.name === fn);
  return at < 0 ? null : at + 1;
}
