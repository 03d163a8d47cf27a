/**
 * Fixture manifest schema and loader.
 *
 * Each corpus directory carries one manifest.json describing how to build
 * the program, which function carries the seeded defect, where its fixed
 * source lives, and the test suite that drives it. The suite entries use
 * the same JSON shape the binmend CLI consumes, with stdin paths relative
 * to the fixture directory.
 */

import { readFile } from "node:fs/promises";
import * as path from "node:path";

export interface SuiteEntry {
  id: string;
  kind: "positive" | "negative";
  cmd: string[];
  stdin?: string;
  expect: { exit_code?: number; stdout_sha256?: string };
  timeout_s?: number;
}

export interface SharedLib {
  /** library name as passed to -l<name>; built as lib<name>.so */
  name: string;
  sources: string[];
}

export interface FixtureManifest {
  name: string;
  sources: string[];
  shared_libs?: SharedLib[];
  buggy_function: string;
  fixed_function_source: string;
  /** prototype of the buggy function, for the generated interface */
  return_type: string;
  params: string[];
  /** reference names forwarded to `binmend plan --refs` */
  refs: string[];
  suite: SuiteEntry[];
  /** ground truth must rank at or above this position */
  expected_cgfl_rank: number;
}

export class ManifestError extends Error {}

function fail(name: string, msg: string): never {
  throw new ManifestError(`${name}: ${msg}`);
}

export function validateManifest(m: FixtureManifest): void {
  const name = m.name || "<unnamed>";
  if (!m.name) fail(name, "missing name");
  if (!m.sources?.length) fail(name, "no sources");
  if (!m.buggy_function) fail(name, "missing buggy_function");
  if (!m.fixed_function_source) fail(name, "missing fixed_function_source");
  if (!m.return_type) fail(name, "missing return_type");
  if (!Array.isArray(m.params)) fail(name, "params must be a list");
  if (!Array.isArray(m.refs)) fail(name, "refs must be a list");
  if (!Number.isInteger(m.expected_cgfl_rank) || m.expected_cgfl_rank < 1)
    fail(name, "expected_cgfl_rank must be a positive integer");

  const ids = new Set<string>();
  let positives = 0;
  let negatives = 0;
  for (const t of m.suite ?? []) {
    if (!t.id) fail(name, "suite entry without id");
    if (ids.has(t.id)) fail(name, `duplicate test id ${t.id}`);
    ids.add(t.id);
    if (t.kind === "positive") positives++;
    else if (t.kind === "negative") negatives++;
    else fail(name, `test ${t.id}: bad kind ${JSON.stringify(t.kind)}`);
    if (!t.cmd?.length) fail(name, `test ${t.id}: empty cmd`);
  }
  if (positives < 9 || negatives < 1)
    fail(
      name,
      `suite needs at least 9 positive and 1 negative test, ` +
        `got ${positives}/${negatives}`,
    );
}

export async function loadManifest(dir: string): Promise<FixtureManifest> {
  const raw = await readFile(path.join(dir, "manifest.json"), "utf8");
  const manifest = JSON.parse(raw) as FixtureManifest;
  validateManifest(manifest);
  return manifest;
}
