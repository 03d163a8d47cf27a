"""Minimal i386 instruction-length decoder for linear-sweep call scans.

This is not a disassembler: it only sizes instructions accurately enough to
walk compiler-emitted 32-bit code and pick out call sites. Coverage targets
what gcc/clang emit for C; exotic opcodes raise UndecodableBody rather than
guessing a length.
"""

from __future__ import annotations

from dataclasses import dataclass
from struct import unpack_from

from .errors import UndecodableBody

PREFIXES = frozenset((0x26, 0x2E, 0x36, 0x3E, 0x64, 0x65,
                      0x66, 0x67, 0xF0, 0xF2, 0xF3))

# one-byte opcodes taking a ModRM byte
_MODRM: set[int] = set()
for _base in range(0, 0x40, 8):
    _MODRM.update(range(_base, _base + 4))  # arithmetic /r blocks
_MODRM.update((0x62, 0x63, 0x69, 0x6B))
_MODRM.update(range(0x80, 0x90))  # grp1, test/xchg/mov/lea/pop
_MODRM.update((0xC0, 0xC1, 0xC4, 0xC5, 0xC6, 0xC7))
_MODRM.update(range(0xD0, 0xD4))
_MODRM.update(range(0xD8, 0xE0))  # x87
_MODRM.update((0xF6, 0xF7, 0xFE, 0xFF))

# immediate kinds: b=1 byte, w=2, z=2/4 by operand size, wb=enter,
# p=far pointer, o=moffs (address-size dependent)
_IMM: dict[int, str] = {}
for _op in (0x04, 0x0C, 0x14, 0x1C, 0x24, 0x2C, 0x34, 0x3C,
            0x6A, 0x6B, 0x80, 0x82, 0x83, 0xA8, 0xC0, 0xC1, 0xC6,
            0xCD, 0xD4, 0xD5, 0xEB):
    _IMM[_op] = "b"
_IMM.update({op: "b" for op in range(0x70, 0x80)})
_IMM.update({op: "b" for op in range(0xB0, 0xB8)})
_IMM.update({op: "b" for op in range(0xE0, 0xE8)})  # loop/jcxz/in/out
for _op in (0x05, 0x0D, 0x15, 0x1D, 0x25, 0x2D, 0x35, 0x3D,
            0x68, 0x69, 0x81, 0xA9, 0xC7, 0xE8, 0xE9):
    _IMM[_op] = "z"
_IMM.update({op: "z" for op in range(0xB8, 0xC0)})
_IMM.update({0xC2: "w", 0xCA: "w", 0xC8: "wb", 0x9A: "p", 0xEA: "p"})
_IMM.update({op: "o" for op in range(0xA0, 0xA4)})

_NO_OPERAND = set((
    0x06, 0x07, 0x0E, 0x16, 0x17, 0x1E, 0x1F, 0x27, 0x2F, 0x37, 0x3F,
    0x60, 0x61, 0x6C, 0x6D, 0x6E, 0x6F,
    0x98, 0x99, 0x9B, 0x9C, 0x9D, 0x9E, 0x9F,
    0xA4, 0xA5, 0xA6, 0xA7, 0xAA, 0xAB, 0xAC, 0xAD, 0xAE, 0xAF,
    0xC3, 0xC9, 0xCB, 0xCC, 0xCE, 0xCF, 0xD6, 0xD7,
    0xEC, 0xED, 0xEE, 0xEF, 0xF1, 0xF4, 0xF5, 0xF8, 0xF9, 0xFA, 0xFB,
    0xFC, 0xFD,
))
_NO_OPERAND.update(range(0x40, 0x60))  # inc/dec/push/pop reg
_NO_OPERAND.update(range(0x90, 0x98))  # nop/xchg reg

# two-byte (0F xx) opcodes without a ModRM byte
_TWO_NO_MODRM = set((
    0x05, 0x06, 0x07, 0x08, 0x09, 0x0B, 0x0E,
    0x30, 0x31, 0x32, 0x33, 0x34, 0x35, 0x37, 0x77,
    0xA0, 0xA1, 0xA2, 0xA8, 0xA9, 0xAA,
)) | set(range(0xC8, 0xD0))  # bswap
_TWO_RELZ = set(range(0x80, 0x90))  # jcc near
_TWO_IMM8 = set((0x70, 0x71, 0x72, 0x73, 0xA4, 0xAC, 0xBA, 0xC2,
                 0xC4, 0xC5, 0xC6))


@dataclass(frozen=True)
class Instr:
    offset: int
    length: int
    kind: str  # call_rel32 | call_indirect | jmp_rel32 | ret | other
    target: int | None = None  # absolute, for rel32 kinds

    @property
    def end(self) -> int:
        return self.offset + self.length


def _need(data: bytes, off: int, n: int, what: str) -> None:
    if off + n > len(data):
        raise UndecodableBody(f"truncated {what} at offset {off:#x}")


def _modrm_size(data: bytes, off: int, addr16: bool) -> int:
    """Bytes consumed by ModRM + SIB + displacement, starting at off."""
    _need(data, off, 1, "ModRM")
    modrm = data[off]
    mod, rm = modrm >> 6, modrm & 7
    if mod == 3:
        return 1
    if addr16:
        if mod == 0:
            return 1 + (2 if rm == 6 else 0)
        return 1 + (1 if mod == 1 else 2)
    size = 1
    if rm == 4:
        _need(data, off + 1, 1, "SIB")
        sib = data[off + 1]
        size += 1
        if mod == 0 and (sib & 7) == 5:
            return size + 4
    if mod == 0:
        return size + (4 if rm == 5 else 0)
    return size + (1 if mod == 1 else 4)


def decode(data: bytes, offset: int, vaddr: int = 0) -> Instr:
    """Decode one instruction at data[offset]; vaddr maps offset 0."""
    start = offset
    opsize16 = addr16 = False
    while True:
        _need(data, offset, 1, "opcode")
        b = data[offset]
        if b in PREFIXES:
            opsize16 |= b == 0x66
            addr16 |= b == 0x67
            offset += 1
            if offset - start > 14:
                raise UndecodableBody(f"prefix run at offset {start:#x}")
            continue
        break

    op = data[offset]
    offset += 1
    kind = "other"
    rel = None

    if op == 0x0F:
        _need(data, offset, 1, "two-byte opcode")
        op2 = data[offset]
        offset += 1
        if op2 in _TWO_RELZ:
            size = 2 if opsize16 else 4
            _need(data, offset, size, "branch displacement")
            offset += size
        elif op2 in _TWO_NO_MODRM:
            pass
        else:
            offset += _modrm_size(data, offset, addr16)
            if op2 in _TWO_IMM8:
                _need(data, offset, 1, "immediate")
                offset += 1
        return Instr(start, offset - start, "other", None)

    has_modrm = op in _MODRM
    imm = _IMM.get(op)
    if not has_modrm and imm is None and op not in _NO_OPERAND:
        raise UndecodableBody(f"opcode {op:#04x} at offset {start:#x}")

    reg = None
    if has_modrm:
        _need(data, offset, 1, "ModRM")
        reg = (data[offset] >> 3) & 7
        offset += _modrm_size(data, offset, addr16)

    if op == 0xF6 and reg in (0, 1):
        imm = "b"
    elif op == 0xF7 and reg in (0, 1):
        imm = "z"
    elif op in (0xF6, 0xF7):
        imm = None

    if imm:
        size = {"b": 1, "w": 2, "wb": 3,
                "z": 2 if opsize16 else 4,
                "p": (2 if opsize16 else 4) + 2,
                "o": 2 if addr16 else 4}[imm]
        _need(data, offset, size, "immediate")
        if op == 0xE8 and not opsize16:
            rel = unpack_from("<i", data, offset)[0]
            kind = "call_rel32"
        elif op == 0xE9 and not opsize16:
            rel = unpack_from("<i", data, offset)[0]
            kind = "jmp_rel32"
        offset += size

    if op == 0xFF and reg in (2, 3):
        kind = "call_indirect"
    elif op in (0xC3, 0xC2, 0xCB, 0xCA):
        kind = "ret"

    length = offset - start
    target = None
    if rel is not None:
        target = (vaddr + start + length + rel) & 0xFFFFFFFF
    return Instr(start, length, kind, target)


def iter_instructions(data: bytes, vaddr: int = 0):
    """Linear sweep across data; yields Instr until the bytes run out."""
    off = 0
    while off < len(data):
        ins = decode(data, off, vaddr)
        yield ins
        off = ins.end
