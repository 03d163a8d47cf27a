"""Payload builds: drive the toolchain and validate the result.

The payload (replacement function + generated interfaces) is compiled as a
position-independent, statically linked blob with every section in one
loadable segment, so installing it is a single append: no interpreter, no
relocations, no dynamic symbols to resolve.
"""

from __future__ import annotations

import shutil
import subprocess
from dataclasses import dataclass, field
from pathlib import Path

from . import elf
from .errors import (
    InvalidPayload,
    MissingLinkerScript,
    ToolchainError,
    ToolchainMissing,
)

DEFAULT_COMPILER = "gcc"

# -shared -static-pie is the pair that makes the output both relocatable
# and loader-free; hidden visibility turns global accesses into
# GOT-register-relative arithmetic so the blob carries zero relocations.
DEFAULT_FLAGS = (
    "-m32",
    "-nostdlib",
    "-fPIC",
    "-fvisibility=hidden",
    "-fno-stack-protector",
    "-fno-asynchronous-unwind-tables",
    "-fcf-protection=none",
    "-shared",
    "-static-pie",
    "-Wl,--build-id=none",
)

_LINKER_SCRIPT = """\
PHDRS { payload PT_LOAD FLAGS(7); }
SECTIONS {
  . = 0;
  .payload : {
    *(.text*)
    *(.rodata*)
    *(.data.rel.ro*)
    *(.data*)
    *(.got*)
    *(.bss*)
    *(COMMON)
  } :payload
  /DISCARD/ : {
    *(.note*) *(.comment) *(.eh_frame*) *(.rel.*) *(.gnu*) *(.dynamic)
    *(.interp) *(.hash) *(.dynsym) *(.dynstr)
  }
}
"""


@dataclass(frozen=True)
class BuildConfig:
    sources: tuple[str, ...]
    output: str
    linker_script: str = ""
    compiler: str = DEFAULT_COMPILER
    extra_flags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.sources:
            raise ValueError("no source files configured")


def default_linker_script() -> str:
    """Linker script placing code, rodata, data, and bss in one segment."""
    return _LINKER_SCRIPT


def build_command(config: BuildConfig) -> list[str]:
    """The exact toolchain invocation for a config; pure and deterministic."""
    if not config.linker_script:
        raise MissingLinkerScript("build config names no linker script")
    return [
        config.compiler,
        *DEFAULT_FLAGS,
        *config.extra_flags,
        "-T", config.linker_script,
        "-o", config.output,
        *config.sources,
    ]


def run_build(config: BuildConfig) -> Path:
    """Execute the build; returns the output path."""
    cmd = build_command(config)
    if shutil.which(config.compiler) is None:
        raise ToolchainMissing(f"compiler {config.compiler!r} not on PATH")
    if not Path(config.linker_script).exists():
        raise MissingLinkerScript(config.linker_script)
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        raise ToolchainError(
            f"build failed ({proc.returncode}):\n{proc.stderr}"
        )
    return Path(config.output)


@dataclass(frozen=True)
class PayloadReport:
    has_interpreter_segment: bool
    loadable_segment_count: int
    undefined_dynamic_symbols: tuple[str, ...]
    entry_symbol_offsets: dict[str, int] = field(default_factory=dict)

    @property
    def valid(self) -> bool:
        return not self.problems()

    def problems(self) -> list[str]:
        out = []
        if self.has_interpreter_segment:
            out.append("payload requests an interpreter (PT_INTERP)")
        if self.loadable_segment_count != 1:
            out.append(
                f"payload has {self.loadable_segment_count} loadable "
                "segments, exactly 1 required"
            )
        if self.undefined_dynamic_symbols:
            names = ", ".join(self.undefined_dynamic_symbols)
            out.append(f"unresolved dynamic symbols: {names}")
        return out


def validate_payload(raw: bytes) -> PayloadReport:
    """Inspect payload bytes against the self-containment requirements."""
    image = elf.parse_elf(raw)
    loads = image.load_segments()
    undefined = tuple(
        s.name for s in image.dynsyms if s.name and not s.defined
    )
    offsets: dict[str, int] = {}
    if loads:
        base = min(p.vaddr for p in loads)
        for sym in (*image.symbols, *image.dynsyms):
            # is_function excludes e.g. the STT_FILE entry for det_*.c
            if (sym.is_function and sym.defined
                    and sym.name.startswith("det_")):
                offsets.setdefault(sym.name, sym.address - base)
    return PayloadReport(
        has_interpreter_segment=any(
            p.type == elf.PT_INTERP for p in image.phdrs),
        loadable_segment_count=len(loads),
        undefined_dynamic_symbols=undefined,
        entry_symbol_offsets=offsets,
    )


@dataclass(frozen=True)
class PayloadBlob:
    blob: bytes
    flags: int
    extra_memsz: int
    entry_offsets: dict[str, int]
    report: PayloadReport


def extract_payload(raw: bytes) -> PayloadBlob:
    """Loadable content of a validated payload, ready to append."""
    report = validate_payload(raw)
    if not report.valid:
        raise InvalidPayload("; ".join(report.problems()))
    image = elf.parse_elf(raw)
    seg = image.load_segments()[0]
    blob = bytes(image.data[seg.offset:seg.offset + seg.filesz])
    if not blob:
        raise InvalidPayload("payload load segment has no file content")
    return PayloadBlob(
        blob=blob,
        flags=seg.flags,
        extra_memsz=seg.memsz - seg.filesz,
        entry_offsets=dict(report.entry_symbol_offsets),
        report=report,
    )
