/**
 * Full mitigation pipeline for one corpus fixture.
 *
 * Stages mirror a by-hand session: compile the program, profile every
 * suite test under callgrind, derive the coverage matrix and ranking,
 * plan a detour for the ground-truth function, recompile its fixed source
 * into a payload, install it, and diff the patched binary against the
 * original. Each stage's artifacts land in the given work directory so a
 * failing run can be replayed manually.
 */

import { mkdirSync, writeFileSync } from "node:fs";
import * as path from "node:path";

import {
  binmend,
  binmendOk,
  readJson,
  rankOf,
  type CheckReport,
  type RankedDoc,
  type SpectraDoc,
} from "./binmend";
import type { FixtureManifest } from "./manifest";
import { buildFixture } from "./toolchain";
import { traceSuite } from "./traces";

export interface PipelineResult {
  binary: string;
  patched: string;
  spectra: SpectraDoc;
  ranked: RankedDoc;
  /** 1-based position of the ground-truth function, null if unranked */
  rank: number | null;
  report: CheckReport;
}

/** Write the manifest's suite as a binmend suite file with resolved stdin. */
export function materializeSuite(
  manifest: FixtureManifest,
  fixtureDir: string,
  file: string,
): void {
  const tests = manifest.suite.map((t) => ({
    ...t,
    ...(t.stdin ? { stdin: path.resolve(fixtureDir, t.stdin) } : {}),
  }));
  writeFileSync(file, JSON.stringify({ tests }, null, 2) + "\n");
}

export function runPipeline(
  manifest: FixtureManifest,
  fixtureDir: string,
  workDir: string,
): PipelineResult {
  mkdirSync(workDir, { recursive: true });
  const binary = buildFixture(manifest, fixtureDir, workDir);
  console.log(`[${manifest.name}] built ${binary}`);

  const suite = path.join(workDir, "suite.json");
  materializeSuite(manifest, fixtureDir, suite);

  const traces = path.join(workDir, "traces");
  traceSuite(binary, manifest.suite, fixtureDir, traces);
  console.log(`[${manifest.name}] traced ${manifest.suite.length} tests`);

  const spectraFile = path.join(workDir, "spectra.json");
  binmendOk([
    "spectra",
    "--binary", binary,
    "--traces", traces,
    "--suite", suite,
    "--out", spectraFile,
  ]);
  const spectra = readJson<SpectraDoc>(spectraFile);

  const rankedFile = path.join(workDir, "cgfl.json");
  binmendOk(["localize", "--spectra", spectraFile, "--out", rankedFile]);
  const ranked = readJson<RankedDoc>(rankedFile);
  const rank = rankOf(ranked, manifest.buggy_function);
  console.log(`[${manifest.name}] ${manifest.buggy_function} ranked ${rank} of top-${ranked.k}`);

  const planDir = path.join(workDir, "plan");
  binmendOk([
    "plan",
    "--binary", binary,
    "--function", manifest.buggy_function,
    "--refs", manifest.refs.length ? manifest.refs.join(",") : "none",
    "--payload-src", path.resolve(fixtureDir, manifest.fixed_function_source),
    "--return-type", manifest.return_type,
    ...manifest.params.flatMap((p) => ["--param", p]),
    "--out", planDir,
  ]);

  const patched = path.join(workDir, `${manifest.name}.patched`);
  binmendOk([
    "rewrite",
    "--binary", binary,
    "--plan", path.join(planDir, "plan.json"),
    "--build", path.join(planDir, "build.json"),
    "--out", patched,
  ]);

  const reportFile = path.join(workDir, "report.json");
  // check exits 1 for regressed/behavior_changed: let the caller decide
  binmendOkOrDiff(["check",
    "--original", binary,
    "--patched", patched,
    "--suite", suite,
    "--out", reportFile,
  ]);
  const report = readJson<CheckReport>(reportFile);
  console.log(`[${manifest.name}] check: ${report.classification}`);

  return { binary, patched, spectra, ranked, rank, report };
}

function binmendOkOrDiff(args: string[]): void {
  const res = binmend(args);
  if (res.status !== 0 && res.status !== 1)
    throw new Error(`binmend ${args[0]} exited ${res.status}:\n${res.stderr}`);
}
