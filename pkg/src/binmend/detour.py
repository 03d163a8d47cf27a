"""Detour planning: reference discovery, byte budgets, trampoline encoding.

A detour overwrites a function's entry with a short trampoline that stages
extra arguments (addresses of everything the replacement code must reach
inside the original binary, plus the caller's %ebx) and jumps to the
replacement's entry in the appended segment. Planning resolves those
references and proves the trampoline fits the function body.
"""

from __future__ import annotations

import json
import struct
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from . import elf
from .errors import (
    BudgetExceeded,
    InputError,
    MissingReference,
    NoPlt,
    PlaceholderUnresolved,
    PlanDoesNotFit,
    SymbolNotImported,
    TargetOutOfRel32Range,
    UndecodableBody,
    UnsupportedType,
)
from .x86 import iter_instructions

REF_KINDS = ("local_function", "local_data", "plt_stub")

# import thunks in the payload carry these literal tokens where a PLT stub
# address belongs; the rewriter substitutes the real address per plt_stub
# reference, in plan order
PLACEHOLDER_BASE = 0xDE700001


def plt_placeholder(index: int) -> int:
    return PLACEHOLDER_BASE + index


@dataclass(frozen=True)
class ReferenceSpec:
    name: str
    kind: str
    address: int

    def __post_init__(self) -> None:
        if self.kind not in REF_KINDS:
            raise InputError(f"reference {self.name!r}: bad kind {self.kind!r}")
        if not self.address:
            raise MissingReference(f"reference {self.name!r} resolved to 0")


@dataclass(frozen=True)
class StackCorrection:
    added_words: int

    @property
    def byte_shift(self) -> int:
        return 4 * self.added_words


@dataclass(frozen=True)
class DetourPlan:
    function: elf.SymbolEntry
    references: tuple[ReferenceSpec, ...]
    ebx_required: bool
    budget_bytes: int
    paper_cost: int
    encoded_cost: int
    payload_symbol: str
    payload_offset: int = 0

    @property
    def r(self) -> int:
        return len(self.references)

    def stack_correction(self) -> StackCorrection:
        return StackCorrection(self.r + (1 if self.ebx_required else 0))


@dataclass(frozen=True)
class ScanResult:
    local_calls: tuple[str, ...]
    plt_calls: tuple[str, ...]
    indirect_count: int
    unresolved_targets: tuple[int, ...] = ()

    @property
    def names(self) -> tuple[str, ...]:
        return self.local_calls + self.plt_calls


def scan_direct_calls(image: elf.ElfImage,
                      function: elf.SymbolEntry) -> ScanResult:
    """Callees of one function body, by linear sweep over its bytes."""
    body = image.bytes_at(function.address, function.size_bytes)
    try:
        stub_names = {addr: name for name, addr in plt_map_of(image).items()}
    except NoPlt:
        stub_names = {}

    local: list[str] = []
    plt: list[str] = []
    unresolved: list[int] = []
    indirect = 0
    try:
        for ins in iter_instructions(body, vaddr=function.address):
            if ins.kind == "call_indirect":
                indirect += 1
                continue
            if ins.kind != "call_rel32":
                continue
            target = ins.target
            if target in stub_names:
                name = stub_names[target]
                if name not in plt:
                    plt.append(name)
                continue
            sym = elf.symbol_containing(image, target)
            if sym is not None:
                if sym.name not in local:
                    local.append(sym.name)
            else:
                unresolved.append(target)
    except UndecodableBody as exc:
        raise UndecodableBody(f"{function.name}: {exc}") from exc
    return ScanResult(tuple(local), tuple(plt), indirect, tuple(unresolved))


_PLT_CACHE: dict[int, dict[str, int]] = {}


def plt_map_of(image: elf.ElfImage) -> dict[str, int]:
    key = id(image)
    if key not in _PLT_CACHE:
        _PLT_CACHE[key] = elf.plt_map(image)
    return _PLT_CACHE[key]


def required_references(callgraph: Mapping[str, Iterable[str]],
                        entries: Iterable[str]) -> list[str]:
    """Every function reachable from the entries, minus the entries.

    Breadth-first from the entry set; per node the callees are visited in
    name order, so the result is deterministic. Names missing from the
    callgraph are leaves.
    """
    roots = sorted(set(entries))
    seen = set(roots)
    queue = deque(roots)
    out: list[str] = []
    root_set = frozenset(roots)
    while queue:
        node = queue.popleft()
        for callee in sorted(set(callgraph.get(node, ()))):
            if callee in seen:
                continue
            seen.add(callee)
            if callee not in root_set:
                out.append(callee)
            queue.append(callee)
    return out


def paper_byte_cost(r: int) -> int:
    """The published per-plan byte cost model: 7r + 4."""
    if r < 0:
        raise ValueError("negative reference count")
    return 7 * r + 4


def trampoline_length(r: int, ebx_required: bool = True) -> int:
    """Actual encoded trampoline length: 5r + 10 with ebx, 5r + 9 without."""
    if r < 0:
        raise ValueError("negative reference count")
    return 5 * r + 9 + (1 if ebx_required else 0)


def encode_trampoline(plan: DetourPlan, detour_target: int,
                      patch_address: int | None = None) -> bytes:
    """Trampoline bytes to patch over the planned function's entry.

    Frozen sequence: pop %eax (the return address), push each reference
    address (reverse plan order), push %ebx when required, push %eax back,
    a 2-byte nop, then jmp rel32 to the detour entry. On arrival the stack
    reads [return][ebx][ref_1..ref_r][original args].
    """
    address = plan.function.address if patch_address is None else patch_address
    out = bytearray([0x58])  # pop %eax
    for ref in reversed(plan.references):
        out += struct.pack("<BI", 0x68, ref.address & 0xFFFFFFFF)
    if plan.ebx_required:
        out.append(0x53)  # push %ebx
    out.append(0x50)  # push %eax
    out += b"\x66\x90"  # 2-byte nop: pads the frozen cost
    rel = detour_target - (address + len(out) + 5)
    if not -(1 << 31) <= rel < (1 << 31):
        raise TargetOutOfRel32Range(
            f"jump from {address:#x} to {detour_target:#x} exceeds rel32"
        )
    out += struct.pack("<Bi", 0xE9, rel)
    assert len(out) == trampoline_length(plan.r, plan.ebx_required)
    if len(out) > plan.budget_bytes:
        raise BudgetExceeded(
            f"trampoline {len(out)}B exceeds {plan.function.name} "
            f"body of {plan.budget_bytes}B"
        )
    return bytes(out)


def _resolve_reference(image: elf.ElfImage, name: str,
                       plt: dict[str, int]) -> ReferenceSpec:
    if name in plt:
        return ReferenceSpec(name, "plt_stub", plt[name])
    try:
        sym = elf.find_symbol(image, name)
    except InputError as exc:
        raise MissingReference(f"cannot resolve reference {name!r}") from exc
    if not sym.defined:
        raise MissingReference(f"reference {name!r} is undefined in the image")
    kind = "local_function" if sym.is_function else "local_data"
    return ReferenceSpec(name, kind, sym.address)


def plan_detour(
    image: elf.ElfImage,
    function_name: str,
    payload_symbol: str | None = None,
    refs: str | Sequence[str] = "auto",
    ebx_required: bool | None = None,
) -> DetourPlan:
    """Resolve references and budgets for detouring one function.

    refs="auto" discovers the transitive call tree of the function and
    takes every function outside it as a reference; an explicit name list
    is honored verbatim. ebx defaults to whether the image is dynamically
    linked (the saved %ebx only matters for code reaching the GOT).
    """
    if image.is_pie:
        raise UnsupportedType(
            "position-independent originals are not detourable; "
            "addresses are only known for fixed-load executables"
        )
    function = elf.find_symbol(image, function_name)
    if not function.is_function or not function.defined:
        raise MissingReference(f"{function_name!r} is not a defined function")

    try:
        plt = plt_map_of(image) if image.is_dynamic else {}
    except NoPlt:
        plt = {}

    if refs == "auto":
        graph: dict[str, tuple[str, ...]] = {}
        pending = deque([function_name])
        scanned = set()
        while pending:
            name = pending.popleft()
            if name in scanned:
                continue
            scanned.add(name)
            if name in plt:
                continue  # import stubs are leaves
            sym = elf.find_symbol(image, name)
            if not sym.is_function or not sym.size_bytes:
                continue
            result = scan_direct_calls(image, sym)
            graph[name] = result.names
            pending.extend(result.names)
        ref_names = required_references(graph, [function_name])
    else:
        ref_names = list(refs)

    references = tuple(_resolve_reference(image, n, plt) for n in ref_names)
    ebx = image.is_dynamic if ebx_required is None else ebx_required
    r = len(references)
    encoded = trampoline_length(r, ebx)
    budget = function.size_bytes
    if encoded > budget:
        raise PlanDoesNotFit(
            f"{function_name}: trampoline needs {encoded}B, body is {budget}B"
        )
    return DetourPlan(
        function=function,
        references=references,
        ebx_required=ebx,
        budget_bytes=budget,
        paper_cost=paper_byte_cost(r),
        encoded_cost=encoded,
        payload_symbol=payload_symbol or f"det_{function_name}",
    )


# --- plan JSON ----------------------------------------------------------------

def plan_to_json(plan: DetourPlan) -> str:
    doc = {
        "function": plan.function.name,
        "refs": [
            {"name": ref.name, "kind": ref.kind, "addr": f"{ref.address:#x}"}
            for ref in plan.references
        ],
        "ebx": plan.ebx_required,
        "budget": plan.budget_bytes,
        "paper_cost": plan.paper_cost,
        "encoded_cost": plan.encoded_cost,
        "payload_symbol": plan.payload_symbol,
    }
    return json.dumps(doc, indent=2) + "\n"


def plan_from_json(text: str, image: elf.ElfImage) -> DetourPlan:
    """Rebind a serialized plan against an image, revalidating the budget."""
    try:
        doc = json.loads(text)
        refs = tuple(
            ReferenceSpec(e["name"], e["kind"], int(e["addr"], 16))
            for e in doc["refs"]
        )
        ebx = bool(doc["ebx"])
        fn_name = doc["function"]
        payload_symbol = doc["payload_symbol"]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"plan JSON: {exc}") from exc
    function = elf.find_symbol(image, fn_name)
    plan = DetourPlan(
        function=function,
        references=refs,
        ebx_required=ebx,
        budget_bytes=function.size_bytes,
        paper_cost=paper_byte_cost(len(refs)),
        encoded_cost=trampoline_length(len(refs), ebx),
        payload_symbol=payload_symbol,
    )
    if plan.encoded_cost > plan.budget_bytes:
        raise PlanDoesNotFit(
            f"{fn_name}: trampoline needs {plan.encoded_cost}B, "
            f"body is {plan.budget_bytes}B"
        )
    return plan


# --- payload placeholder resolution -------------------------------------------

_PLACEHOLDER_SCAN = 64  # residual-token scan width past the assigned range


def resolve_plt_placeholders(blob: bytes,
                             references: Sequence[ReferenceSpec]) -> bytes:
    """Substitute PLT stub addresses for the payload's placeholder tokens.

    The i-th plt_stub reference (plan order) owns token plt_placeholder(i);
    each token must occur exactly once in the payload. After substitution no
    token from the scan window may remain, which catches thunks compiled in
    without a matching plan reference.
    """
    out = bytearray(blob)
    plt_refs = [r for r in references if r.kind == "plt_stub"]
    for i, ref in enumerate(plt_refs):
        token = struct.pack("<I", plt_placeholder(i))
        n = out.count(token)
        if n != 1:
            raise PlaceholderUnresolved(
                f"placeholder for {ref.name!r} ({plt_placeholder(i):#x}) "
                f"occurs {n} times in payload, need exactly 1"
            )
        idx = out.find(token)
        out[idx:idx + 4] = struct.pack("<I", ref.address)
    for j in range(_PLACEHOLDER_SCAN):
        if struct.pack("<I", plt_placeholder(j)) in out:
            raise PlaceholderUnresolved(
                f"payload still contains unassigned placeholder "
                f"{plt_placeholder(j):#x}"
            )
    return bytes(out)
