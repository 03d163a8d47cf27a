"""ELF32 x86 images: parse, inspect, mutate, serialize.

The raw file bytes are the source of truth; parsed headers are views that
are written back on serialize. Mutations (patching text, appending a
loadable segment) edit the byte buffer directly and keep the views in sync,
so an untouched image round-trips byte-identically.

Only 32-bit little-endian x86 images are accepted. Detour targets must be
non-PIE executables; position-independent payloads are parsed with the same
code but validated separately (see recompile).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterator

from .errors import (
    HeaderSpaceExhausted,
    LayoutConflict,
    NoPlt,
    NotElf,
    NotExecutableRange,
    OutOfRange,
    StrippedBinary,
    SymbolNotFound,
    SymbolNotImported,
    TruncatedFile,
    UnsupportedClass,
    UnsupportedMachine,
)

EHDR_FMT = "<16sHHIIIIIHHHHHH"
EHDR_SIZE = struct.calcsize(EHDR_FMT)  # 52
PHDR_FMT = "<8I"
PHDR_SIZE = struct.calcsize(PHDR_FMT)  # 32
SHDR_FMT = "<10I"
SHDR_SIZE = struct.calcsize(SHDR_FMT)  # 40
SYM_FMT = "<IIIBBH"
SYM_SIZE = struct.calcsize(SYM_FMT)  # 16
REL_FMT = "<II"
REL_SIZE = struct.calcsize(REL_FMT)  # 8

ELFCLASS32 = 1
ELFDATA2LSB = 1
EM_386 = 3
ET_EXEC = 2
ET_DYN = 3

PT_LOAD = 1
PT_DYNAMIC = 2
PT_INTERP = 3
PT_PHDR = 6

PF_X = 1
PF_W = 2
PF_R = 4

SHT_PROGBITS = 1
SHT_SYMTAB = 2
SHT_STRTAB = 3
SHT_REL = 9
SHT_DYNSYM = 11
SHT_NOBITS = 8

DT_NULL = 0
DT_PLTRELSZ = 2
DT_PLTGOT = 3
DT_JMPREL = 23

R_386_JUMP_SLOT = 7

STT_FUNC = 2
_BINDINGS = {0: "local", 1: "global", 2: "weak"}

PAGE = 0x1000


@dataclass
class ElfHeader:
    ident: bytes
    type: int
    machine: int
    version: int
    entry: int
    phoff: int
    shoff: int
    flags: int
    ehsize: int
    phentsize: int
    phnum: int
    shentsize: int
    shnum: int
    shstrndx: int

    def pack(self) -> bytes:
        return struct.pack(
            EHDR_FMT, self.ident, self.type, self.machine, self.version,
            self.entry, self.phoff, self.shoff, self.flags, self.ehsize,
            self.phentsize, self.phnum, self.shentsize, self.shnum,
            self.shstrndx,
        )


@dataclass
class ProgramHeader:
    type: int
    offset: int
    vaddr: int
    paddr: int
    filesz: int
    memsz: int
    flags: int
    align: int

    def pack(self) -> bytes:
        return struct.pack(PHDR_FMT, self.type, self.offset, self.vaddr,
                           self.paddr, self.filesz, self.memsz, self.flags,
                           self.align)

    @property
    def vaddr_end(self) -> int:
        return self.vaddr + self.memsz

    def contains_vaddr(self, addr: int) -> bool:
        return self.vaddr <= addr < self.vaddr + self.memsz


@dataclass
class SectionHeader:
    name_off: int
    type: int
    flags: int
    addr: int
    offset: int
    size: int
    link: int
    info: int
    addralign: int
    entsize: int
    name: str = ""

    def pack(self) -> bytes:
        return struct.pack(SHDR_FMT, self.name_off, self.type, self.flags,
                           self.addr, self.offset, self.size, self.link,
                           self.info, self.addralign, self.entsize)


@dataclass(frozen=True)
class SymbolEntry:
    name: str
    address: int
    size_bytes: int
    binding: str
    defined: bool
    is_function: bool = False


class ElfImage:
    """One parsed image; mutate via module functions, not directly."""

    def __init__(self, data: bytearray, header: ElfHeader,
                 phdrs: list[ProgramHeader], shdrs: list[SectionHeader],
                 symbols: list[SymbolEntry], dynsyms: list[SymbolEntry]):
        self.data = data
        self.header = header
        self.phdrs = phdrs
        self.shdrs = shdrs
        self.symbols = symbols
        self.dynsyms = dynsyms
        self.has_symtab = any(s.type == SHT_SYMTAB for s in shdrs)

    @property
    def is_pie(self) -> bool:
        return self.header.type == ET_DYN

    @property
    def is_dynamic(self) -> bool:
        return any(p.type == PT_DYNAMIC for p in self.phdrs)

    def load_segments(self) -> list[ProgramHeader]:
        return [p for p in self.phdrs if p.type == PT_LOAD]

    def section(self, name: str) -> SectionHeader | None:
        for s in self.shdrs:
            if s.name == name:
                return s
        return None

    def addr_to_offset(self, addr: int) -> int:
        for p in self.load_segments():
            if p.vaddr <= addr < p.vaddr + p.filesz:
                return p.offset + (addr - p.vaddr)
        raise OutOfRange(f"address {addr:#x} not file-backed by any segment")

    def bytes_at(self, addr: int, size: int) -> bytes:
        off = self.addr_to_offset(addr)
        end_seg = next(p for p in self.load_segments()
                       if p.vaddr <= addr < p.vaddr + p.filesz)
        if addr + size > end_seg.vaddr + end_seg.filesz:
            raise OutOfRange(
                f"range {addr:#x}+{size:#x} runs past segment file bytes"
            )
        return bytes(self.data[off:off + size])

    def dynamic_entries(self) -> Iterator[tuple[int, int]]:
        for p in self.phdrs:
            if p.type != PT_DYNAMIC:
                continue
            blob = self.data[p.offset:p.offset + p.filesz]
            for i in range(0, len(blob) - 7, 8):
                tag, val = struct.unpack_from("<iI", blob, i)
                if tag == DT_NULL:
                    return
                yield tag, val

    def dynamic_value(self, tag: int) -> int | None:
        for t, v in self.dynamic_entries():
            if t == tag:
                return v
        return None


def _cstr(blob: bytes | bytearray, off: int) -> str:
    if off >= len(blob):
        return ""
    end = blob.find(b"\x00", off)
    if end < 0:
        end = len(blob)
    return bytes(blob[off:end]).decode("utf-8", "replace")


def _parse_symbols(data: bytearray, sec: SectionHeader,
                   strtab: SectionHeader | None) -> list[SymbolEntry]:
    out: list[SymbolEntry] = []
    names = data[strtab.offset:strtab.offset + strtab.size] if strtab else b""
    count = sec.size // SYM_SIZE
    for i in range(count):
        st_name, st_value, st_size, st_info, _st_other, st_shndx = (
            struct.unpack_from(SYM_FMT, data, sec.offset + i * SYM_SIZE)
        )
        out.append(SymbolEntry(
            name=_cstr(names, st_name),
            address=st_value,
            size_bytes=st_size,
            binding=_BINDINGS.get(st_info >> 4, str(st_info >> 4)),
            defined=st_shndx != 0,
            is_function=(st_info & 0xF) == STT_FUNC,
        ))
    return out


def parse_elf(raw: bytes) -> ElfImage:
    """Parse 32-bit little-endian x86 ELF bytes into a mutable image."""
    if len(raw) < 4 or raw[:4] != b"\x7fELF":
        raise NotElf("missing ELF magic")
    if len(raw) < EHDR_SIZE:
        raise TruncatedFile(f"{len(raw)} bytes is shorter than an ELF header")
    if raw[4] != ELFCLASS32 or raw[5] != ELFDATA2LSB:
        raise UnsupportedClass("only 32-bit little-endian images are handled")

    data = bytearray(raw)
    header = ElfHeader(*struct.unpack_from(EHDR_FMT, data, 0))
    if header.machine != EM_386:
        raise UnsupportedMachine(f"e_machine {header.machine}, expected EM_386")

    phdrs: list[ProgramHeader] = []
    if header.phnum:
        if header.phentsize != PHDR_SIZE:
            raise TruncatedFile(f"e_phentsize {header.phentsize} != {PHDR_SIZE}")
        end = header.phoff + header.phnum * PHDR_SIZE
        if end > len(data):
            raise TruncatedFile("program-header table past end of file")
        for i in range(header.phnum):
            p = ProgramHeader(*struct.unpack_from(
                PHDR_FMT, data, header.phoff + i * PHDR_SIZE))
            if p.offset + p.filesz > len(data):
                raise TruncatedFile(
                    f"segment {i} file range {p.offset:#x}+{p.filesz:#x} "
                    "past end of file"
                )
            phdrs.append(p)

    shdrs: list[SectionHeader] = []
    if header.shnum:
        if header.shentsize != SHDR_SIZE:
            raise TruncatedFile(f"e_shentsize {header.shentsize} != {SHDR_SIZE}")
        end = header.shoff + header.shnum * SHDR_SIZE
        if end > len(data):
            raise TruncatedFile("section-header table past end of file")
        for i in range(header.shnum):
            s = SectionHeader(*struct.unpack_from(
                SHDR_FMT, data, header.shoff + i * SHDR_SIZE))
            if s.type != SHT_NOBITS and s.offset + s.size > len(data):
                raise TruncatedFile(f"section {i} data past end of file")
            shdrs.append(s)
        if header.shstrndx < len(shdrs):
            shstr = shdrs[header.shstrndx]
            for s in shdrs:
                s.name = _cstr(data[shstr.offset:shstr.offset + shstr.size],
                               s.name_off)

    _check_load_overlaps(phdrs)

    symbols: list[SymbolEntry] = []
    dynsyms: list[SymbolEntry] = []
    for s in shdrs:
        if s.type in (SHT_SYMTAB, SHT_DYNSYM):
            strtab = shdrs[s.link] if s.link < len(shdrs) else None
            parsed = _parse_symbols(data, s, strtab)
            if s.type == SHT_SYMTAB:
                symbols.extend(parsed)
            else:
                dynsyms.extend(parsed)

    return ElfImage(data, header, phdrs, shdrs, symbols, dynsyms)


def _check_load_overlaps(phdrs: list[ProgramHeader]) -> None:
    loads = sorted((p for p in phdrs if p.type == PT_LOAD and p.memsz),
                   key=lambda p: p.vaddr)
    for a, b in zip(loads, loads[1:]):
        if a.vaddr + a.memsz > b.vaddr:
            raise LayoutConflict(
                f"loadable ranges overlap: {a.vaddr:#x}+{a.memsz:#x} vs "
                f"{b.vaddr:#x}"
            )
    by_off = sorted((p for p in phdrs if p.type == PT_LOAD and p.filesz),
                    key=lambda p: p.offset)
    for a, b in zip(by_off, by_off[1:]):
        if a.offset + a.filesz > b.offset:
            raise LayoutConflict(
                f"loadable file ranges overlap: {a.offset:#x}+{a.filesz:#x} "
                f"vs {b.offset:#x}"
            )


def serialize_elf(image: ElfImage) -> bytes:
    """Write the structural views back into the buffer and return bytes."""
    _check_load_overlaps(image.phdrs)
    h = image.header
    for i, p in enumerate(image.phdrs):
        if p.offset + p.filesz > len(image.data):
            raise LayoutConflict(
                f"segment {i} file range past end of image after mutation"
            )
    if h.phnum != len(image.phdrs):
        h.phnum = len(image.phdrs)
    image.data[0:EHDR_SIZE] = h.pack()
    for i, p in enumerate(image.phdrs):
        off = h.phoff + i * PHDR_SIZE
        image.data[off:off + PHDR_SIZE] = p.pack()
    for i, s in enumerate(image.shdrs):
        off = h.shoff + i * SHDR_SIZE
        image.data[off:off + SHDR_SIZE] = s.pack()
    return bytes(image.data)


# --- symbols -----------------------------------------------------------------

def find_symbol(image: ElfImage, name: str) -> SymbolEntry:
    """Exact-name lookup in the symbol table, preferring defined entries."""
    if not image.has_symtab:
        raise StrippedBinary("no symbol table in image")
    hits = [s for s in image.symbols if s.name == name]
    if not hits:
        raise SymbolNotFound(f"symbol {name!r} not found")
    hits.sort(key=lambda s: (not s.defined, -s.size_bytes))
    return hits[0]


def defined_functions(image: ElfImage) -> list[SymbolEntry]:
    """Defined function symbols, deduplicated by name (largest body wins)."""
    if not image.has_symtab:
        raise StrippedBinary("no symbol table in image")
    best: dict[str, SymbolEntry] = {}
    for s in image.symbols:
        if not (s.is_function and s.defined and s.name):
            continue
        cur = best.get(s.name)
        if cur is None or s.size_bytes > cur.size_bytes:
            best[s.name] = s
    return sorted(best.values(), key=lambda s: (s.address, s.name))


def symbol_containing(image: ElfImage, addr: int) -> SymbolEntry | None:
    """The defined function whose body covers addr, if any."""
    for s in image.symbols:
        if not (s.is_function and s.defined):
            continue
        if s.address <= addr < s.address + max(s.size_bytes, 1):
            return s
    return None


# --- PLT ---------------------------------------------------------------------

def jump_slot_relocations(image: ElfImage) -> dict[int, str]:
    """GOT slot vaddr -> imported symbol name, from the PLT relocations."""
    if not image.is_dynamic:
        raise NoPlt("image is not dynamically linked")
    rel = image.section(".rel.plt")
    if rel is not None and rel.type == SHT_REL:
        blob = image.data[rel.offset:rel.offset + rel.size]
        syms = image.dynsyms
        if rel.link < len(image.shdrs) and image.shdrs[rel.link].type == SHT_SYMTAB:
            syms = image.symbols
    else:
        jmprel = image.dynamic_value(DT_JMPREL)
        relsz = image.dynamic_value(DT_PLTRELSZ)
        if jmprel is None or relsz is None:
            raise NoPlt("no PLT relocation table")
        off = image.addr_to_offset(jmprel)
        blob = image.data[off:off + relsz]
        syms = image.dynsyms
    slots: dict[int, str] = {}
    for i in range(0, len(blob) - REL_SIZE + 1, REL_SIZE):
        r_offset, r_info = struct.unpack_from(REL_FMT, blob, i)
        if r_info & 0xFF != R_386_JUMP_SLOT:
            continue
        sym_idx = r_info >> 8
        if sym_idx < len(syms) and syms[sym_idx].name:
            slots[r_offset] = syms[sym_idx].name
    if not slots:
        raise NoPlt("no jump-slot relocations")
    return slots


def plt_map(image: ElfImage) -> dict[str, int]:
    """Imported symbol name -> PLT stub (jump instruction) vaddr."""
    slots = jump_slot_relocations(image)
    got_base = image.dynamic_value(DT_PLTGOT) or 0

    plt = image.section(".plt")
    if plt is not None:
        regions = [(plt.addr, image.data[plt.offset:plt.offset + plt.size])]
    else:
        regions = [
            (p.vaddr, image.data[p.offset:p.offset + p.filesz])
            for p in image.load_segments() if p.flags & PF_X
        ]

    out: dict[str, int] = {}
    for base, blob in regions:
        for i in range(len(blob) - 5):
            op, modrm = blob[i], blob[i + 1]
            if op != 0xFF or modrm not in (0x25, 0xA3):
                continue
            disp = struct.unpack_from("<I", blob, i + 2)[0]
            slot = disp if modrm == 0x25 else (got_base + disp) & 0xFFFFFFFF
            name = slots.get(slot)
            if name is not None and name not in out:
                out[name] = base + i
    return out


def plt_entry_for(image: ElfImage, external_symbol: str) -> int:
    """Vaddr of the PLT stub that resolves external_symbol at runtime."""
    slots = jump_slot_relocations(image)
    if external_symbol not in slots.values():
        raise SymbolNotImported(f"{external_symbol!r} is not PLT-imported")
    stubs = plt_map(image)
    try:
        return stubs[external_symbol]
    except KeyError:
        raise NoPlt(
            f"no PLT stub found for imported symbol {external_symbol!r}"
        ) from None


# --- mutation ----------------------------------------------------------------

def _round_up(value: int, align: int) -> int:
    return (value + align - 1) & ~(align - 1)


def append_segment(
    image: ElfImage,
    payload: bytes,
    align: int = PAGE,
    flags: int = PF_R | PF_X,
    extra_memsz: int = 0,
) -> int:
    """Append payload as a fresh PT_LOAD; returns the payload load address.

    The program-header table grows by one entry. When the bytes right after
    the existing table are free, it grows in place and the payload sits at
    the segment base. Otherwise (the usual case) the whole table relocates
    to the base of the appended segment and the payload starts at the next
    page boundary, so its load address stays page-aligned and any zero-fill
    area it expects (memsz > filesz) extends past the file end, never into
    the table. Pre-existing segment content is never moved.
    """
    if not payload:
        raise ValueError("empty payload")
    if align <= 0 or align & (align - 1):
        raise ValueError(f"alignment {align} is not a power of two")
    if image.header.phnum >= 0xFFFF:
        raise HeaderSpaceExhausted("program-header count at format limit")
    align = max(align, PAGE)

    loads = image.load_segments()
    top = max((p.vaddr + p.memsz for p in loads), default=0x10000000)
    vaddr = _round_up(top, align)

    h = image.header
    table_end = h.phoff + h.phnum * PHDR_SIZE
    grow_in_place = _phdr_slack_free(image, table_end)

    file_base = len(image.data)
    pad = (vaddr - file_base) % PAGE
    file_base += pad

    if grow_in_place:
        payload_off = 0
        new_phoff = h.phoff
    else:
        payload_off = _round_up((h.phnum + 1) * PHDR_SIZE, PAGE)
        new_phoff = file_base
    content_len = payload_off + len(payload)

    new_load = ProgramHeader(
        type=PT_LOAD, offset=file_base, vaddr=vaddr, paddr=vaddr,
        filesz=content_len, memsz=content_len + extra_memsz,
        flags=flags, align=align,
    )
    image.phdrs.append(new_load)
    h.phnum += 1
    h.phoff = new_phoff

    for p in image.phdrs:
        if p.type == PT_PHDR:
            if not grow_in_place:
                p.offset = new_phoff
                p.vaddr = p.paddr = vaddr
            p.filesz = p.memsz = h.phnum * PHDR_SIZE

    image.data += b"\x00" * pad
    if grow_in_place:
        image.data += payload
    else:
        for p in image.phdrs:
            image.data += p.pack()
        image.data += b"\x00" * (payload_off - h.phnum * PHDR_SIZE)
        image.data += payload
    return vaddr + payload_off


def _phdr_slack_free(image: ElfImage, table_end: int) -> bool:
    """Can one more program header be written at table_end in place?"""
    region = (table_end, table_end + PHDR_SIZE)
    if region[1] > len(image.data):
        return False
    holder = None
    for p in image.load_segments():
        if p.offset <= image.header.phoff and region[1] <= p.offset + p.filesz:
            holder = p
            break
    if holder is None:
        return False
    if not image.shdrs:
        return False  # cannot prove the bytes are unused
    h = image.header
    shdr_table = (h.shoff, h.shoff + h.shnum * SHDR_SIZE)
    if shdr_table[0] < region[1] and region[0] < shdr_table[1]:
        return False
    for s in image.shdrs:
        if s.type == SHT_NOBITS or s.size == 0:
            continue
        if s.offset < region[1] and region[0] < s.offset + s.size:
            return False
    for p in image.phdrs:
        if p.type == PT_LOAD or p.filesz == 0:
            continue
        if p.offset < region[1] and region[0] < p.offset + p.filesz:
            return False
    return True


def patch_text(image: ElfImage, address: int, blob: bytes) -> None:
    """Overwrite len(blob) bytes at a vaddr inside one executable segment."""
    if not blob:
        return
    holder = None
    for p in image.load_segments():
        if p.contains_vaddr(address):
            holder = p
            break
    if holder is None:
        raise OutOfRange(f"address {address:#x} is not in any loadable segment")
    if not holder.flags & PF_X:
        raise NotExecutableRange(
            f"segment at {holder.vaddr:#x} is not executable"
        )
    if address + len(blob) > holder.vaddr + holder.filesz:
        raise OutOfRange(
            f"patch {address:#x}+{len(blob)} runs past segment file bytes"
        )
    off = holder.offset + (address - holder.vaddr)
    image.data[off:off + len(blob)] = blob
