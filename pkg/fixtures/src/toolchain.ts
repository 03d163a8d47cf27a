/**
 * 32-bit build orchestration for fixture programs.
 *
 * Everything is compiled freestanding (-nostdlib) so the corpus works on
 * hosts without 32-bit libc headers; programs talk to the kernel through
 * int $0x80 directly. A missing toolchain is reported as ToolchainMissing
 * so callers can skip instead of fail.
 */

import { spawnSync } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import * as path from "node:path";

import type { FixtureManifest } from "./manifest";

export class ToolchainMissing extends Error {}

export class BuildFailure extends Error {}

const CFLAGS = [
  "-m32",
  "-nostdlib",
  "-O0",
  "-fno-pie",
  "-fno-stack-protector",
  "-fno-asynchronous-unwind-tables",
  "-fcf-protection=none",
];

const LDFLAGS = ["-Wl,--build-id=none"];

function run(argv: string[], cwd?: string): void {
  const proc = spawnSync(argv[0], argv.slice(1), { cwd, encoding: "utf8" });
  if (proc.error) throw new BuildFailure(`${argv[0]}: ${proc.error.message}`);
  if (proc.status !== 0)
    throw new BuildFailure(
      `${argv.join(" ")} exited ${proc.status}:\n${proc.stderr}`,
    );
}

let probed: boolean | undefined;

/** True when gcc can emit and link a 32-bit freestanding executable. */
export function has32BitToolchain(): boolean {
  if (probed !== undefined) return probed;
  const dir = mkdtempSync(path.join(tmpdir(), "fxprobe-"));
  try {
    writeFileSync(
      path.join(dir, "probe.c"),
      'void _start(void) { __asm__ volatile ("int $0x80" : : "a"(1), "b"(0)); }\n',
    );
    const proc = spawnSync(
      "gcc",
      [...CFLAGS, "-static", "-no-pie", "-o", "probe", "probe.c"],
      { cwd: dir, encoding: "utf8" },
    );
    probed = !proc.error && proc.status === 0;
  } catch {
    probed = false;
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
  return probed;
}

export function hasValgrind(): boolean {
  const proc = spawnSync("valgrind", ["--version"], { encoding: "utf8" });
  return !proc.error && proc.status === 0;
}

export function requireToolchain(): void {
  if (!has32BitToolchain())
    throw new ToolchainMissing("no 32-bit gcc toolchain");
  if (!hasValgrind()) throw new ToolchainMissing("no valgrind");
}

/**
 * Compile a fixture into outDir and return the executable path.
 *
 * Shared libraries named in the manifest are built first and linked with
 * an $ORIGIN rpath, so the binary runs from outDir without environment
 * help. Symbols stay in place: the toolchain never strips here.
 */
export function buildFixture(
  manifest: FixtureManifest,
  fixtureDir: string,
  outDir: string,
): string {
  const resolve = (p: string) => path.resolve(fixtureDir, p);
  const out = path.join(outDir, manifest.name);
  const link: string[] = [];

  for (const lib of manifest.shared_libs ?? []) {
    run([
      "gcc",
      ...CFLAGS,
      "-fPIC",
      "-shared",
      ...LDFLAGS,
      "-o",
      path.join(outDir, `lib${lib.name}.so`),
      ...lib.sources.map(resolve),
    ]);
    link.push(`-l${lib.name}`);
  }

  const argv = ["gcc", ...CFLAGS, "-no-pie", ...LDFLAGS];
  if (link.length) {
    argv.push("-Wl,-z,now", `-Wl,-rpath,$ORIGIN`, `-L${outDir}`);
  } else {
    argv.push("-static");
  }
  argv.push("-o", out, ...manifest.sources.map(resolve), ...link);
  run(argv);
  return out;
}
