"""Command-line pipeline driver.

Each stage is a subcommand exchanging JSON files, so stages are scriptable
and testable in isolation:

  spectra   traces + suite + binary  -> coverage-matrix JSON
  localize  spectra JSON             -> ranked candidate JSON
  plan      binary + function        -> plan JSON + interface sources
  rewrite   binary + plan + payload  -> patched binary
  check     original + patched       -> equivalence report JSON
  pipeline  all of the above into one output directory

Exit codes: 0 success (check: test_equivalent or mitigated), 1 check found
regressed/behavior_changed, 2 input error, 3 localization error, 4 planning
error, 5 rewrite error. Logs go to stderr; machine output only to declared
files or stdout.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import codegen, detour, elf, harness, rankagg, recompile, sbfl, spectra
from .errors import (
    BinmendError,
    InputError,
    LocalizationError,
    PlanningError,
    RewriteError,
)

log = logging.getLogger("binmend")

# runtime-support names culled by screening when they appear in a symbol
# table; app code calling into these still qualifies, the support code
# itself does not
LIBRARY_FUNCTION_NAMES = frozenset({
    "atexit", "abort", "exit", "brk", "sbrk",
    "read", "write", "open", "close", "lseek",
    "mmap", "munmap", "mprotect",
    "malloc", "calloc", "realloc", "free",
    "memcpy", "memmove", "memset", "memcmp", "memchr",
    "strlen", "strcmp", "strncmp", "strcpy", "strncpy", "strcat",
    "strchr", "strrchr", "strstr", "strtol", "strtoul", "atoi",
    "printf", "fprintf", "sprintf", "snprintf", "vsnprintf",
    "puts", "putchar", "getchar", "gets", "fgets", "fputs",
    "isspace", "isdigit", "isalpha", "isalnum", "tolower", "toupper",
    "signal", "raise", "setjmp", "longjmp",
    "register_tm_clones", "deregister_tm_clones", "frame_dummy",
})


def exit_code_for(exc: BinmendError) -> int:
    if isinstance(exc, LocalizationError):
        return 3
    if isinstance(exc, PlanningError):
        return 4
    if isinstance(exc, RewriteError):
        return 5
    return 2  # InputError and any other pipeline error


def _read_text(path: Path) -> str:
    try:
        return path.read_text()
    except OSError as exc:
        raise InputError(str(exc)) from exc


def _read_bytes(path: Path) -> bytes:
    try:
        return path.read_bytes()
    except OSError as exc:
        raise InputError(str(exc)) from exc


def _load_image(path: Path) -> elf.ElfImage:
    return elf.parse_elf(_read_bytes(path))


def function_records(image: elf.ElfImage) -> list[spectra.FunctionRecord]:
    """Symbol table -> screening records, flagging runtime-support names."""
    records = []
    for sym in elf.defined_functions(image):
        is_library = (sym.name.startswith("_")
                      or sym.name in LIBRARY_FUNCTION_NAMES)
        records.append(spectra.FunctionRecord(
            name=sym.name,
            size_bytes=sym.size_bytes,
            is_library=is_library,
            is_local=True,
        ))
    return records


# --- spectra -------------------------------------------------------------------

def do_spectra(binary: Path, traces: Path, suite_path: Path,
               out, comparator: str) -> spectra.CoverageMatrix:
    image = _load_image(binary)
    records = function_records(image)
    tests = harness.load_suite(_read_text(suite_path), suite_path.parent)
    if not traces.is_dir():
        raise InputError(f"trace directory {traces} does not exist")

    runs = []
    for t in tests:
        trace = traces / f"{t.id}.callgrind"
        if not trace.is_file():
            raise InputError(f"no trace for test {t.id!r}: {trace}")
        covered = spectra.parse_callgrind(_read_text(trace))
        # callgrind presentation entries like "(below main)" are not symbols
        covered = {n: v for n, v in covered.items() if not n.startswith("(")}
        # resolve: a bare relative name would hit PATH lookup, not the file
        verdict = harness.run_test(str(binary.resolve()), t, comparator)
        log.info("spectra: test %s -> %s", t.id, verdict.status)
        runs.append(((t.id, t.kind, verdict.status), covered))

    matrix = spectra.build_matrix(runs, records)
    _emit(out, spectra.matrix_to_json(matrix, str(binary)))
    log.info("spectra: %d functions, %d tests (%d failing)",
             len(matrix.functions), len(matrix.tests), matrix.failing)
    return matrix


def cmd_spectra(args) -> int:
    do_spectra(Path(args.binary), Path(args.traces), Path(args.suite),
               args.out, args.comparator)
    return 0


# --- localize ------------------------------------------------------------------

def do_localize(spectra_path: Path, out, fraction: float,
                min_size: int, cull_library: bool = True,
                require_local: bool = True) -> rankagg.RankedList:
    _, matrix = spectra.matrix_from_json(_read_text(spectra_path))
    config = sbfl.ScreeningConfig(min_size_bytes=min_size,
                                  cull_library=cull_library,
                                  require_local=require_local)
    ranked = rankagg.cgfl(matrix, config, fraction)
    _emit(out, rankagg.ranked_to_json(ranked))
    head = ", ".join(name for name, _ in ranked.entries[:4])
    log.info("localize: top-%d of candidates: %s", ranked.k, head)
    return ranked


def cmd_localize(args) -> int:
    do_localize(Path(args.spectra), args.out, args.fraction, args.min_size,
                cull_library=not args.keep_library,
                require_local=not args.keep_nonlocal)
    return 0


# --- plan ----------------------------------------------------------------------

def do_plan(binary: Path, function: str, outdir: Path,
            refs="auto", payload_srcs: list[str] | None = None,
            return_type: str = "int",
            parameters: tuple[str, ...] = ()) -> Path:
    """Write plan.json, interface sources, linker script, build manifest."""
    image = _load_image(binary)
    plan = detour.plan_detour(image, function, refs=refs)
    outdir.mkdir(parents=True, exist_ok=True)

    (outdir / "plan.json").write_text(detour.plan_to_json(plan))

    spec = codegen.InterfaceSpec.from_plan(plan, return_type, parameters)
    interface_name = f"det_{function}.c"
    (outdir / interface_name).write_text(codegen.emit_detour_interface(spec))
    sources = [interface_name]

    unbound = []
    plt_refs = [r for r in plan.references if r.kind == "plt_stub"]
    for i, ref in enumerate(plt_refs):
        token = detour.plt_placeholder(i)
        thunk_name = f"unbound_{ref.name}.c"
        (outdir / thunk_name).write_text(
            codegen.emit_unbound_symbol_interface(ref.name, token))
        sources.append(thunk_name)
        unbound.append({"symbol": ref.name, "token": f"{token:#x}"})

    (outdir / "payload.ld").write_text(recompile.default_linker_script())
    # manifest paths are relative to the manifest's own directory unless
    # absolute; replacement sources stay wherever the caller keeps them
    sources += [str(Path(p).resolve()) for p in payload_srcs or []]
    manifest = {
        "sources": sources,
        "unbound": unbound,
        "linker_script": "payload.ld",
        "output": "payload.so",
    }
    manifest_path = outdir / "build.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    log.info("plan: %s r=%d ebx=%s cost=%dB budget=%dB -> %s",
             function, plan.r, plan.ebx_required, plan.encoded_cost,
             plan.budget_bytes, outdir)
    return manifest_path


def _parse_refs(text: str | None):
    if text is None or text == "auto":
        return "auto"
    if text == "none":
        return []
    return [name for name in (s.strip() for s in text.split(",")) if name]


def cmd_plan(args) -> int:
    do_plan(Path(args.binary), args.function, Path(args.out),
            refs=_parse_refs(args.refs), payload_srcs=args.payload_src,
            return_type=args.return_type,
            parameters=tuple(args.param or ()))
    return 0


# --- rewrite -------------------------------------------------------------------

def do_build(manifest_path: Path) -> Path:
    """Compile the payload described by a plan's build manifest."""
    try:
        doc = json.loads(_read_text(manifest_path))
        sources = [str(manifest_path.parent / s) for s in doc["sources"]]
        script = str(manifest_path.parent / doc["linker_script"])
        output = str(manifest_path.parent / doc["output"])
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InputError(f"build manifest: {exc}") from exc
    config = recompile.BuildConfig(sources=tuple(sources), output=output,
                                   linker_script=script)
    built = recompile.run_build(config)
    log.info("build: %s", built)
    return built


def do_rewrite(binary: Path, plan_path: Path, payload_path: Path,
               out: Path, force: bool = False) -> Path:
    if out.exists() and not force:
        raise InputError(f"{out} exists; pass --force to overwrite")
    image = _load_image(binary)
    plan = detour.plan_from_json(_read_text(plan_path), image)

    pay = recompile.extract_payload(_read_bytes(payload_path))
    try:
        entry_off = pay.entry_offsets[plan.payload_symbol]
    except KeyError:
        raise RewriteError(
            f"payload defines no symbol {plan.payload_symbol!r} "
            f"(found: {sorted(pay.entry_offsets) or 'none'})"
        ) from None
    blob = detour.resolve_plt_placeholders(pay.blob, plan.references)

    load_addr = elf.append_segment(image, blob, flags=pay.flags,
                                   extra_memsz=pay.extra_memsz)
    target = load_addr + entry_off
    trampoline = detour.encode_trampoline(plan, target,
                                          patch_address=plan.function.address)
    elf.patch_text(image, plan.function.address, trampoline)

    out.write_bytes(elf.serialize_elf(image))
    out.chmod(0o755)
    log.info("rewrite: %s + %dB payload at %#x, %s detoured to %#x -> %s",
             binary.name, len(blob), load_addr, plan.function.name,
             target, out)
    return out


def cmd_rewrite(args) -> int:
    payload = Path(args.payload) if args.payload else do_build(Path(args.build))
    do_rewrite(Path(args.binary), Path(args.plan), payload,
               Path(args.out), force=args.force)
    return 0


# --- check ---------------------------------------------------------------------

def do_check(original: Path, patched: Path, suite_path: Path,
             out, comparator: str) -> harness.EquivalenceReport:
    tests = harness.load_suite(_read_text(suite_path), suite_path.parent)
    before = harness.run_suite(str(original.resolve()), tests, comparator)
    after = harness.run_suite(str(patched.resolve()), tests, comparator)
    report = harness.compare(tests, before, after)
    _emit(out, harness.report_to_json(report))
    log.info("check: %s", report.classification)
    return report


def cmd_check(args) -> int:
    report = do_check(Path(args.original), Path(args.patched),
                      Path(args.suite), args.out, args.comparator)
    return report.exit_code


# --- pipeline ------------------------------------------------------------------

def cmd_pipeline(args) -> int:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    binary = Path(args.binary)

    do_spectra(binary, Path(args.traces), Path(args.suite),
               outdir / "spectra.json", args.comparator)
    ranked = do_localize(outdir / "spectra.json", outdir / "cgfl.json",
                         args.fraction, args.min_size)
    function = args.function or ranked.entries[0][0]
    log.info("pipeline: detour target is %s", function)

    plandir = outdir / "plan"
    manifest = do_plan(binary, function, plandir,
                       refs=_parse_refs(args.refs),
                       payload_srcs=args.payload_src,
                       return_type=args.return_type,
                       parameters=tuple(args.param or ()))
    payload = do_build(manifest)
    patched = outdir / (binary.name + ".patched")
    do_rewrite(binary, plandir / "plan.json", payload, patched,
               force=args.force)
    report = do_check(binary, patched, Path(args.suite),
                      outdir / "report.json", args.comparator)
    return report.exit_code


# --- wiring --------------------------------------------------------------------

def _emit(out, text: str) -> None:
    """Write machine output to a file path, or stdout when out is None."""
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="binmend",
        description="Locate suspicious functions in a 32-bit x86 binary and "
                    "detour them to recompiled replacement code.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="increase stderr logging (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("spectra", help="traces + suite -> coverage matrix")
    sp.add_argument("--binary", required=True)
    sp.add_argument("--traces", required=True,
                    help="directory of <test-id>.callgrind profiles")
    sp.add_argument("--suite", required=True)
    sp.add_argument("--comparator", default="exit+stdout",
                    choices=harness.COMPARATORS)
    sp.add_argument("--out", help="output path (default: stdout)")
    sp.set_defaults(func=cmd_spectra)

    lo = sub.add_parser("localize", help="coverage matrix -> ranked list")
    lo.add_argument("--spectra", required=True)
    lo.add_argument("--fraction", type=float, default=rankagg.DEFAULT_FRACTION)
    lo.add_argument("--min-size", type=int, default=45)
    lo.add_argument("--keep-library", action="store_true",
                    help="do not cull runtime-support functions")
    lo.add_argument("--keep-nonlocal", action="store_true",
                    help="do not require locally defined functions")
    lo.add_argument("--out", help="output path (default: stdout)")
    lo.set_defaults(func=cmd_localize)

    pl = sub.add_parser("plan", help="plan a detour and emit interfaces")
    pl.add_argument("--binary", required=True)
    pl.add_argument("--function", required=True)
    pl.add_argument("--refs", default="auto",
                    help='"auto", "none", or comma-separated names')
    pl.add_argument("--payload-src", action="append",
                    help="replacement source to include in the build "
                         "manifest (repeatable)")
    pl.add_argument("--return-type", default="int")
    pl.add_argument("--param", action="append",
                    help="original parameter declaration, in order "
                         "(repeatable)")
    pl.add_argument("--out", required=True, help="output directory")
    pl.set_defaults(func=cmd_plan)

    rw = sub.add_parser("rewrite", help="append payload and patch trampoline")
    rw.add_argument("--binary", required=True)
    rw.add_argument("--plan", required=True)
    src = rw.add_mutually_exclusive_group(required=True)
    src.add_argument("--payload", help="prebuilt payload ELF")
    src.add_argument("--build", help="build manifest to compile first")
    rw.add_argument("--out", required=True)
    rw.add_argument("--force", action="store_true")
    rw.set_defaults(func=cmd_rewrite)

    ck = sub.add_parser("check", help="differential suite run")
    ck.add_argument("--original", required=True)
    ck.add_argument("--patched", required=True)
    ck.add_argument("--suite", required=True)
    ck.add_argument("--comparator", default="exit+stdout",
                    choices=harness.COMPARATORS)
    ck.add_argument("--out", help="report path (default: stdout)")
    ck.set_defaults(func=cmd_check)

    pp = sub.add_parser("pipeline", help="run every stage into one directory")
    pp.add_argument("--binary", required=True)
    pp.add_argument("--traces", required=True)
    pp.add_argument("--suite", required=True)
    pp.add_argument("--payload-src", action="append", required=True)
    pp.add_argument("--function",
                    help="detour target (default: top-ranked candidate)")
    pp.add_argument("--refs", default="auto")
    pp.add_argument("--return-type", default="int")
    pp.add_argument("--param", action="append")
    pp.add_argument("--fraction", type=float, default=rankagg.DEFAULT_FRACTION)
    pp.add_argument("--min-size", type=int, default=45)
    pp.add_argument("--comparator", default="exit+stdout",
                    choices=harness.COMPARATORS)
    pp.add_argument("--force", action="store_true")
    pp.add_argument("--out", required=True, help="output directory")
    pp.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except BinmendError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return exit_code_for(exc)


if __name__ == "__main__":
    raise SystemExit(main())
