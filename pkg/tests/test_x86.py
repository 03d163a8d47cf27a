"""Instruction-length decoder tests, cross-checked against objdump.

The oracle runs `objdump -b binary -m i386 -D` over raw byte streams and
compares instruction boundaries with the package's linear sweep.
"""

import pathlib
import re
import shutil
import subprocess
import sys
import tempfile

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent))

from binmend.errors import UndecodableBody
from binmend.x86 import Instr, decode, iter_instructions

needs_objdump = pytest.mark.skipif(
    shutil.which("objdump") is None, reason="objdump not installed"
)

# curated single instructions: typical compiler output for 32-bit C
POOL = [bytes.fromhex(h.replace(" ", "")) for h in (
    "55", "5d", "c3", "c9", "90", "66 90",
    "89 e5", "83 ec 10", "8b 45 08", "8d 65 f4",
    "c7 04 24 00 00 00 00", "c6 45 ff 2a",
    "e8 00 00 00 00", "e8 fb fe ff ff",
    "e9 00 10 00 00", "eb 05",
    "ff d0", "ff 15 44 33 22 11", "ff 14 85 44 33 22 11",
    "ff 25 10 a0 04 08", "ff a3 0c 00 00 00", "ff 75 08",
    "68 44 33 22 11", "6a 01",
    "f7 45 f4 01 00 00 00", "f7 d8", "f6 c1 01",
    "8d 8c 88 00 01 00 00",
    "0f 84 10 00 00 00", "0f b6 45 ff", "0f af c2", "0f 95 c0",
    "31 c0", "01 d8", "39 c8", "85 c0", "29 d0", "21 c8", "09 c8",
    "a1 44 33 22 11", "a3 44 33 22 11",
    "64 a1 14 00 00 00",
    "b8 05 00 00 00", "b0 01", "66 b8 12 00",
    "c2 08 00", "cd 80", "f3 a4",
    "d9 ee", "dd 45 08",
    "75 f0", "74 0c", "7e 03",
    "50 ", "51", "52", "53",
)]


def objdump_boundaries(blob: bytes, tmp_path: pathlib.Path) -> list[int]:
    """Instruction start offsets according to objdump."""
    raw = tmp_path / "blob.bin"
    raw.write_bytes(blob)
    out = subprocess.run(
        ["objdump", "-b", "binary", "-m", "i386", "-D", str(raw)],
        capture_output=True, text=True, check=True,
    ).stdout
    assert "(bad)" not in out, f"oracle rejected bytes: {blob.hex()}"
    starts = []
    for line in out.splitlines():
        m = re.match(r"^\s*([0-9a-f]+):\s+(?:[0-9a-f]{2}\s)+\s*(\S.*)?$", line)
        if m and m.group(2):
            starts.append(int(m.group(1), 16))
    return starts


def sweep_boundaries(blob: bytes) -> list[int]:
    return [ins.offset for ins in iter_instructions(blob)]


class TestKnownEncodings:
    @pytest.mark.parametrize("raw,length,kind", [
        (b"\xc3", 1, "ret"),
        (b"\xc2\x08\x00", 3, "ret"),
        (b"\xcb", 1, "ret"),
        (b"\xe8\x00\x00\x00\x00", 5, "call_rel32"),
        (b"\xe9\xfb\xff\xff\xff", 5, "jmp_rel32"),
        (b"\xff\xd0", 2, "call_indirect"),
        (b"\xff\x15\x44\x33\x22\x11", 6, "call_indirect"),
        (b"\xff\x14\x85\x44\x33\x22\x11", 7, "call_indirect"),
        (b"\xff\x25\x10\xa0\x04\x08", 6, "other"),  # jmp, not call
        (b"\x55", 1, "other"),
        (b"\x89\xe5", 2, "other"),
        (b"\x8b\x45\x08", 3, "other"),
        (b"\xc7\x04\x24\x00\x00\x00\x00", 7, "other"),
        (b"\x0f\x84\x10\x00\x00\x00", 6, "other"),
        (b"\x66\x90", 2, "other"),
        (b"\x66\xb8\x12\x00", 4, "other"),  # 16-bit immediate under 0x66
        (b"\xf7\x45\xf4\x01\x00\x00\x00", 7, "other"),
        (b"\xf7\xd8", 2, "other"),
        (b"\x68\x44\x33\x22\x11", 5, "other"),
        (b"\x64\xa1\x14\x00\x00\x00", 6, "other"),
    ])
    def test_length_and_kind(self, raw, length, kind):
        ins = decode(raw, 0)
        assert (ins.length, ins.kind) == (length, kind)

    def test_call_target_arithmetic(self):
        # call at vaddr 0x08048010 with rel32 -0x15 lands at 0x08048000
        ins = decode(b"\xe8\xeb\xff\xff\xff", 0, vaddr=0x08048010)
        assert ins.kind == "call_rel32"
        assert ins.target == 0x08048000

    def test_forward_jump_target(self):
        ins = decode(b"\xe9\x00\x10\x00\x00", 0, vaddr=0x08048000)
        assert ins.target == 0x08048000 + 5 + 0x1000

    def test_sweep_is_contiguous(self):
        blob = b"".join(POOL)
        last_end = 0
        for ins in iter_instructions(blob):
            assert ins.offset == last_end
            last_end = ins.end
        assert last_end == len(blob)


class TestRejections:
    def test_truncated_immediate(self):
        with pytest.raises(UndecodableBody):
            decode(b"\xe8\x00\x00", 0)

    def test_truncated_modrm(self):
        with pytest.raises(UndecodableBody):
            decode(b"\xff", 0)

    def test_prefix_run(self):
        with pytest.raises(UndecodableBody):
            decode(b"\x66" * 15 + b"\x90", 0)

    def test_truncated_far_call(self):
        with pytest.raises(UndecodableBody):
            decode(b"\x9a\x00\x00", 0)

    def test_sweep_raises_on_trailing_garbage(self):
        blob = b"\x55\xe8\x00"
        with pytest.raises(UndecodableBody):
            list(iter_instructions(blob))


@needs_objdump
class TestObjdumpOracle:
    def test_full_pool_forward(self, tmp_path):
        blob = b"".join(POOL)
        assert sweep_boundaries(blob) == objdump_boundaries(blob, tmp_path)

    def test_full_pool_reversed(self, tmp_path):
        blob = b"".join(reversed(POOL))
        assert sweep_boundaries(blob) == objdump_boundaries(blob, tmp_path)

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.sampled_from(POOL), min_size=1, max_size=40))
    def test_random_sequences(self, parts):
        blob = b"".join(parts)
        with tempfile.TemporaryDirectory() as td:
            assert sweep_boundaries(blob) == objdump_boundaries(
                blob, pathlib.Path(td))

    def test_call_targets_match_objdump(self, tmp_path):
        blob = (b"\x55"                          # push %ebp
                b"\xe8\x06\x00\x00\x00"          # call +6
                b"\x89\xe5"                      # mov %esp,%ebp
                b"\xe8\xf4\xff\xff\xff"          # call backwards
                b"\xc3")
        raw = tmp_path / "calls.bin"
        raw.write_bytes(blob)
        out = subprocess.run(
            ["objdump", "-b", "binary", "-m", "i386", "-D", str(raw),
             "--adjust-vma=0x8048000"],
            capture_output=True, text=True, check=True).stdout
        oracle = [int(m.group(1), 16)
                  for m in re.finditer(r"\bcall\s+(?:0x)?([0-9a-f]+)\b", out)]
        mine = [i.target for i in iter_instructions(blob, vaddr=0x8048000)
                if i.kind == "call_rel32"]
        assert mine == oracle
        assert mine == [0x804800C, 0x8048001]
