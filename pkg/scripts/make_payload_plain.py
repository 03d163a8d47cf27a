#!/usr/bin/env python3
"""Build tests/data/payload/payload_plain.so: a minimal thunk-free payload.

det_victim takes no references and no %ebx word, so the generated wrapper
tail-jumps straight into the C replacement, which returns 42. Used by CLI
rewrite tests that must run without a toolchain at test time.
"""

import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from binmend import codegen, recompile  # noqa: E402
from binmend.detour import StackCorrection  # noqa: E402

REPLACEMENT = "int victim(void) { return 42; }\n"


def main() -> None:
    dest = Path(__file__).resolve().parents[1] / "tests/data/payload"
    spec = codegen.InterfaceSpec(
        function_name="victim",
        return_type="int",
        parameters=(),
        references=(),
        ebx_required=False,
        stack_correction=StackCorrection(0),
    )
    with tempfile.TemporaryDirectory() as tmp:
        work = Path(tmp)
        (work / "det_victim.c").write_text(codegen.emit_detour_interface(spec))
        (work / "victim.c").write_text(REPLACEMENT)
        (work / "payload.ld").write_text(recompile.default_linker_script())
        out = recompile.run_build(recompile.BuildConfig(
            sources=(str(work / "det_victim.c"), str(work / "victim.c")),
            output=str(work / "payload_plain.so"),
            linker_script=str(work / "payload.ld"),
        ))
        report = recompile.validate_payload(out.read_bytes())
        assert report.valid, report.problems()
        print("entry offsets:", report.entry_symbol_offsets)
        dest.mkdir(parents=True, exist_ok=True)
        (dest / "payload_plain.so").write_bytes(out.read_bytes())
        print("wrote", dest / "payload_plain.so", out.stat().st_size, "bytes")


if __name__ == "__main__":
    main()
