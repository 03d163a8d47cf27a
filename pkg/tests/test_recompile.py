"""Payload build-command construction and payload validation tests.

The checked-in payload fixture was produced by the default build recipe
and inspected with readelf: one RWE PT_LOAD, no PT_INTERP, no relocations,
no dynamic symbols, det_victim at offset 0x44. Live builds are gated on a
32-bit-capable gcc.
"""

import pathlib
import struct
import subprocess
import sys

import pytest

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent))

import elfbuild
import toolchain
from binmend import elf
from binmend.codegen import (
    InterfaceSpec,
    emit_detour_interface,
    emit_unbound_symbol_interface,
)
from binmend.detour import StackCorrection, plt_placeholder
from binmend.errors import (
    InvalidPayload,
    MissingLinkerScript,
    NotElf,
    ToolchainError,
    ToolchainMissing,
)
from binmend.recompile import (
    BuildConfig,
    PayloadReport,
    build_command,
    default_linker_script,
    extract_payload,
    run_build,
    validate_payload,
)

PAYLOAD = pathlib.Path(__file__).parent / "data" / "payload"

needs_gcc = pytest.mark.skipif(
    not toolchain.has_gcc_m32(), reason="no 32-bit-capable gcc"
)


class TestBuildCommand:
    def test_tokens(self):
        cfg = BuildConfig(sources=("a.c", "b.c"), output="payload.so",
                          linker_script="payload.ld")
        cmd = build_command(cfg)
        assert cmd[0] == "gcc"
        assert "-shared" in cmd and "-static-pie" in cmd
        assert cmd[cmd.index("-T") + 1] == "payload.ld"
        assert cmd[cmd.index("-o") + 1] == "payload.so"
        assert cmd[-2:] == ["a.c", "b.c"]  # given order

    def test_deterministic(self):
        cfg = BuildConfig(sources=("a.c",), output="p.so",
                          linker_script="p.ld")
        assert build_command(cfg) == build_command(cfg)

    def test_extra_flags_included(self):
        cfg = BuildConfig(sources=("a.c",), output="p.so",
                          linker_script="p.ld", extra_flags=("-Os",))
        assert "-Os" in build_command(cfg)

    def test_missing_linker_script(self):
        cfg = BuildConfig(sources=("a.c",), output="p.so")
        with pytest.raises(MissingLinkerScript):
            build_command(cfg)

    def test_no_sources(self):
        with pytest.raises(ValueError):
            BuildConfig(sources=(), output="p.so", linker_script="p.ld")

    def test_missing_compiler(self, tmp_path):
        script = tmp_path / "p.ld"
        script.write_text(default_linker_script())
        cfg = BuildConfig(sources=("a.c",), output="p.so",
                          linker_script=str(script),
                          compiler="definitely-not-a-compiler")
        with pytest.raises(ToolchainMissing):
            run_build(cfg)


class TestLinkerScript:
    def test_single_phdr(self):
        text = default_linker_script()
        assert text.count("PT_LOAD") == 1
        assert "PHDRS" in text
        for sec in (".text", ".rodata", ".data", ".bss"):
            assert sec in text

    def test_stable(self):
        assert default_linker_script() == default_linker_script()


class TestValidatePayload:
    def test_not_elf(self):
        with pytest.raises(NotElf):
            validate_payload(b"not an elf")

    def test_conforming_fixture(self):
        report = validate_payload(
            (PAYLOAD / "payload_fixture.so").read_bytes())
        assert report.valid
        assert report.loadable_segment_count == 1
        assert not report.has_interpreter_segment
        assert report.undefined_dynamic_symbols == ()
        assert report.entry_symbol_offsets["det_victim"] == 0x44
        assert "det_victim_impl" in report.entry_symbol_offsets

    def test_interpreter_flagged(self):
        raw = bytearray(elfbuild.build(body=b"\xc3" * 16, with_note=True))
        struct.pack_into("<I", raw, 52 + 32, elf.PT_INTERP)
        report = validate_payload(bytes(raw))
        assert report.has_interpreter_segment
        assert not report.valid
        assert any("interpreter" in p for p in report.problems())

    def test_two_loads_flagged(self):
        raw = bytearray(elfbuild.build(body=b"\xc3" * 16, with_note=True))
        # shrink the main load to end where the note begins, then make the
        # note a second disjoint PT_LOAD
        note_off = struct.unpack_from("<I", raw, 52 + 32 + 4)[0]
        struct.pack_into("<I", raw, 52 + 16, note_off)  # filesz
        struct.pack_into("<I", raw, 52 + 20, note_off)  # memsz
        struct.pack_into("<I", raw, 52 + 32, elf.PT_LOAD)
        report = validate_payload(bytes(raw))
        assert report.loadable_segment_count == 2
        assert not report.valid

    def test_each_violation_reported_independently(self):
        report = PayloadReport(True, 2, ("read", "write"))
        assert len(report.problems()) == 3


class TestExtractPayload:
    def test_fixture_blob(self):
        raw = (PAYLOAD / "payload_fixture.so").read_bytes()
        extracted = extract_payload(raw)
        image = elf.parse_elf(raw)
        seg = image.load_segments()[0]
        assert len(extracted.blob) == seg.filesz
        assert extracted.flags == elf.PF_R | elf.PF_W | elf.PF_X
        assert extracted.extra_memsz == 0
        assert extracted.entry_offsets["det_victim"] == 0x44
        # placeholder token sits in the blob exactly once
        token = struct.pack("<I", plt_placeholder(0))
        assert extracted.blob.count(token) == 1

    def test_invalid_payload_rejected(self):
        raw = bytearray(elfbuild.build(body=b"\xc3" * 16, with_note=True))
        struct.pack_into("<I", raw, 52 + 32, elf.PT_INTERP)
        with pytest.raises(InvalidPayload):
            extract_payload(bytes(raw))


@needs_gcc
class TestLiveBuild:
    def write_sources(self, tmp_path) -> BuildConfig:
        spec = InterfaceSpec(
            "victim", "int", ("int x",),
            (("helper", "local_function"),),
            True, StackCorrection(2),
        )
        (tmp_path / "det_victim.c").write_text(emit_detour_interface(spec))
        (tmp_path / "thunk.c").write_text(
            emit_unbound_symbol_interface("transmit", plt_placeholder(0)))
        (tmp_path / "victim.c").write_text(
            "extern int (*helper)();\n"
            "int transmit(int x);\n"
            "int victim(int x) { return transmit(helper(x) + 1); }\n"
        )
        script = tmp_path / "payload.ld"
        script.write_text(default_linker_script())
        return BuildConfig(
            sources=tuple(str(tmp_path / s) for s in
                          ("det_victim.c", "thunk.c", "victim.c")),
            output=str(tmp_path / "payload.so"),
            linker_script=str(script),
        )

    def test_build_and_validate(self, tmp_path):
        out = run_build(self.write_sources(tmp_path))
        report = validate_payload(out.read_bytes())
        assert report.valid, report.problems()
        assert "det_victim" in report.entry_symbol_offsets
        if pathlib.Path("/usr/bin/readelf").exists():
            text = subprocess.run(
                ["readelf", "-r", str(out)],
                capture_output=True, text=True).stdout
            assert "There are no relocations" in text

    def test_broken_source_raises(self, tmp_path):
        cfg = self.write_sources(tmp_path)
        pathlib.Path(cfg.sources[2]).write_text("int victim(int x) {")
        with pytest.raises(ToolchainError):
            run_build(cfg)
