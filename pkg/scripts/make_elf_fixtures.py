#!/usr/bin/env python3
"""Regenerate the checked-in ELF fixtures under tests/data/elf/.

Run from the repository root:  python3 scripts/make_elf_fixtures.py
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "tests"))

from elfbuild import Symbol, build  # noqa: E402

OUT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "data" / "elf"

# entry body: xor %eax,%eax; inc %eax; xor %ebx,%ebx; int 0x80  (exit(0))
EXIT0 = bytes.fromhex("31c04031db cd80".replace(" ", ""))


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    fixtures = {
        # no section headers at all: symbol lookups must report a stripped image
        "minimal.bin": build(body=EXIT0, sections=False),
        # two defined functions sharing the single text segment
        "symtab.bin": build(
            body=EXIT0 + b"\xc3" * 25,
            symbols=[Symbol("entry", 0x08048054 + 0, size=7),
                     Symbol("helper", 0x08048054 + 7, size=25)],
        ),
        # symtab present but holding only the null entry
        "emptysyms.bin": build(body=EXIT0, symbols=[]),
        # PT_NOTE segment plus a 9-byte gap before the tables
        "note.bin": build(
            body=EXIT0 + b"\x90" * 11,
            symbols=[Symbol("entry", 0x08048074, size=7)],
            with_note=True,
            gap=9,
        ),
        # larger image: 64 symbols, mixed kinds, some undefined
        "manysyms.bin": build(
            body=b"\xcc" * 512,
            base=0x08048000,
            symbols=(
                [Symbol(f"fn_{i:02d}", 0x08048054 + 8 * i, size=8)
                 for i in range(48)]
                + [Symbol(f"obj_{i}", 0x08048054 + 400 + 4 * i, size=4,
                          func=False) for i in range(8)]
                + [Symbol(f"ext_{i}", 0, size=0, defined=False)
                   for i in range(8)]
            ),
        ),
    }
    for name, blob in fixtures.items():
        path = OUT / name
        path.write_bytes(blob)
        print(f"wrote {path} ({len(blob)} bytes)")


if __name__ == "__main__":
    main()
