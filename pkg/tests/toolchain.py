"""Probe for a 32-bit-capable gcc and build tiny binaries for tests.

Tests that need a live toolchain import these helpers and skip when
has_gcc_m32() is false, so the suite stays green on hosts without
multilib support.
"""

from __future__ import annotations

import functools
import pathlib
import shutil
import subprocess
import tempfile

PROG_C = """\
int ext_twice(int x);
static void exit_with(int code) {
    __asm__ volatile("int $0x80" :: "a"(1), "b"(code));
    __builtin_unreachable();
}
void _start(void) { exit_with(ext_twice(21) == 42 ? 0 : 1); }
"""

LIBMINI_C = "int ext_twice(int x) { return 2 * x; }\n"


@functools.lru_cache(maxsize=1)
def has_gcc_m32() -> bool:
    if shutil.which("gcc") is None:
        return False
    with tempfile.TemporaryDirectory() as td:
        src = pathlib.Path(td, "t.c")
        src.write_text(
            "void _start(void) {"
            ' __asm__ volatile("int $0x80" :: "a"(1), "b"(0)); }\n'
        )
        proc = subprocess.run(
            ["gcc", "-m32", "-nostdlib", "-no-pie", "-o",
             str(pathlib.Path(td, "t")), str(src)],
            capture_output=True,
        )
        return proc.returncode == 0


def _run(cmd: list[str], cwd: pathlib.Path) -> None:
    proc = subprocess.run(cmd, cwd=cwd, capture_output=True, text=True)
    if proc.returncode != 0:
        raise RuntimeError(f"{cmd[0]} failed:\n{proc.stderr}")


def build_plt_probe(dest: pathlib.Path) -> pathlib.Path:
    """Link prog -> libmini.so: a non-PIE exec with one PLT import."""
    dest.mkdir(parents=True, exist_ok=True)
    (dest / "libmini.c").write_text(LIBMINI_C)
    (dest / "prog.c").write_text(PROG_C)
    _run(["gcc", "-m32", "-fPIC", "-shared", "-nostdlib",
          "-o", "libmini.so", "libmini.c"], dest)
    _run(["gcc", "-m32", "-nostdlib", "-no-pie", "-fno-pie",
          "-o", "prog", "prog.c", "-L.", "-lmini",
          f"-Wl,-rpath,{dest}"], dest)
    return dest / "prog"


def build_static(dest: pathlib.Path, name: str, source: str,
                 extra: list[str] | None = None) -> pathlib.Path:
    """Compile a freestanding static non-PIE 32-bit executable."""
    dest.mkdir(parents=True, exist_ok=True)
    src = dest / f"{name}.c"
    src.write_text(source)
    out = dest / name
    _run(["gcc", "-m32", "-nostdlib", "-static", "-no-pie", "-fno-pie",
          "-fno-stack-protector", "-fno-asynchronous-unwind-tables",
          *(extra or []), "-o", str(out), str(src)], dest)
    return out
