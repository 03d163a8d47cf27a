"""Tiny ELF32 image builder used only by tests.

Constructs executables byte-by-byte with struct.pack so the images are
independent of the package's own reader/writer. Layout:

    [ehdr][phdr table][segment body][.symtab][.strtab][.shstrtab][shdr table]

Only what the tests need: one PT_LOAD (optionally plus a PT_NOTE), an
optional symbol table, 32-bit little-endian x86 throughout.
"""

from __future__ import annotations

import struct

EHDR = "<16sHHIIIIIHHHHHH"
PHDR = "<8I"
SHDR = "<10I"
SYM = "<IIIBBH"

PT_LOAD, PT_NOTE = 1, 4
PF_X, PF_W, PF_R = 1, 2, 4
SHT_PROGBITS, SHT_SYMTAB, SHT_STRTAB, SHT_NOTE = 1, 2, 3, 7


def _ident() -> bytes:
    return b"\x7fELF" + bytes([1, 1, 1, 0]) + b"\x00" * 8


class Symbol:
    def __init__(self, name: str, value: int, size: int = 0,
                 func: bool = True, binding: int = 1, defined: bool = True):
        self.name = name
        self.value = value
        self.size = size
        self.func = func
        self.binding = binding
        self.defined = defined

    def pack(self, name_off: int, text_shndx: int) -> bytes:
        info = (self.binding << 4) | (2 if self.func else 1)
        shndx = text_shndx if self.defined else 0
        return struct.pack(SYM, name_off, self.value, self.size, info, 0, shndx)


def build(body: bytes = b"\xc3",
          base: int = 0x08048000,
          etype: int = 2,
          symbols: list[Symbol] | None = None,
          sections: bool = True,
          with_note: bool = False,
          gap: int = 0) -> bytes:
    """One-PT_LOAD executable; symbols/sections/note/gap vary the layout."""
    phnum = 2 if with_note else 1
    body_off = 52 + 32 * phnum
    note = struct.pack("<3I", 4, 4, 1) + b"test\x00\x00\x00\x00" + b"\xaa" * 4
    note_off = body_off + len(body)
    load_end = note_off + (len(note) if with_note else 0)

    buf = bytearray()
    blobs = []  # (offset, bytes) appended after the headers

    blobs.append((body_off, body))
    if with_note:
        blobs.append((note_off, note))

    shoff = 0
    shnum = 0
    shstrndx = 0
    sec_headers = b""
    if sections:
        symbols = symbols or []
        strtab = bytearray(b"\x00")
        name_offs = []
        for sym in symbols:
            name_offs.append(len(strtab))
            strtab += sym.name.encode() + b"\x00"
        symtab = bytearray(struct.pack(SYM, 0, 0, 0, 0, 0, 0))
        for sym, off in zip(symbols, name_offs):
            symtab += sym.pack(off, text_shndx=1)

        shstrtab = bytearray(b"\x00")
        sec_name_off = {}
        for name in (".text", ".symtab", ".strtab", ".shstrtab"):
            sec_name_off[name] = len(shstrtab)
            shstrtab += name.encode() + b"\x00"

        symtab_off = load_end + gap
        strtab_off = symtab_off + len(symtab)
        shstr_off = strtab_off + len(strtab)
        shoff = shstr_off + len(shstrtab)
        blobs.append((symtab_off, bytes(symtab)))
        blobs.append((strtab_off, bytes(strtab)))
        blobs.append((shstr_off, bytes(shstrtab)))

        sh = [struct.pack(SHDR, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0)]
        sh.append(struct.pack(SHDR, sec_name_off[".text"], SHT_PROGBITS,
                              6, base + body_off, body_off, len(body),
                              0, 0, 16, 0))
        sh.append(struct.pack(SHDR, sec_name_off[".symtab"], SHT_SYMTAB,
                              0, 0, symtab_off, len(symtab), 3,
                              len(symtab) // 16, 4, 16))
        sh.append(struct.pack(SHDR, sec_name_off[".strtab"], SHT_STRTAB,
                              0, 0, strtab_off, len(strtab), 0, 0, 1, 0))
        sh.append(struct.pack(SHDR, sec_name_off[".shstrtab"], SHT_STRTAB,
                              0, 0, shstr_off, len(shstrtab), 0, 0, 1, 0))
        sec_headers = b"".join(sh)
        shnum = len(sh)
        shstrndx = 4

    entry = base + body_off
    buf += struct.pack(EHDR, _ident(), etype, 3, 1, entry, 52, shoff, 0,
                       52, 32, phnum, 40, shnum, shstrndx)
    buf += struct.pack(PHDR, PT_LOAD, 0, base, base, load_end, load_end,
                       PF_R | PF_X, 0x1000)
    if with_note:
        buf += struct.pack(PHDR, PT_NOTE, note_off, base + note_off,
                           base + note_off, len(note), len(note), PF_R, 4)
    for off, blob in blobs:
        if len(buf) < off:
            buf += b"\x00" * (off - len(buf))
        assert len(buf) == off, "layout overlap in test builder"
        buf += blob
    if sections:
        assert len(buf) == shoff
        buf += sec_headers
    return bytes(buf)
