"""C-source generation for binary-source interfaces.

Three kinds of text come out of here, all deterministic templates:

* detour interfaces — det_<fn> entry that receives the trampoline's extra
  words (saved %ebx, one opaque pointer per reference) ahead of the
  original arguments, publishes them to file-scope pointers named after
  the original symbols, and calls the replacement;
* unbound-symbol thunks — per imported symbol, a stub that restores the
  saved %ebx and tail-jumps to the original PLT entry through a literal
  placeholder patched at install time;
* stack-correction epilogues — the exit sequence that drops the extra
  words so callers observe the original calling convention.

Plus source normalization (decompiler keyword substitution) and type
definition ordering for recompilability.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .detour import DetourPlan, StackCorrection
from .errors import EmptyPrototype, MisalignedShift, UnresolvedDependency

DEFAULT_SUBSTITUTIONS = {
    "_DWORD": "unsigned int",
    "_BYTE": "unsigned char",
    "_WORD": "unsigned short",
    "__fastcall": "",
}

_BANNER = "/* Generated binary-source interface; edit the generator. */"


@dataclass(frozen=True)
class InterfaceSpec:
    function_name: str
    return_type: str
    parameters: tuple[str, ...]  # per-parameter declaration texts
    references: tuple[tuple[str, str], ...]  # (name, kind), plan order
    ebx_required: bool
    stack_correction: StackCorrection
    entry_symbol: str = ""

    def __post_init__(self) -> None:
        if not self.entry_symbol:
            object.__setattr__(
                self, "entry_symbol", f"det_{self.function_name}")

    @classmethod
    def from_plan(cls, plan: DetourPlan, return_type: str = "int",
                  parameters: tuple[str, ...] = ()) -> "InterfaceSpec":
        return cls(
            function_name=plan.function.name,
            return_type=return_type,
            parameters=tuple(parameters),
            references=tuple((r.name, r.kind) for r in plan.references),
            ebx_required=plan.ebx_required,
            stack_correction=plan.stack_correction(),
            entry_symbol=plan.payload_symbol,
        )


_PARAM_NAME_RE = re.compile(r"([A-Za-z_]\w*)\s*(?:\[[^\]]*\])?\s*$")


def _param_name(decl: str) -> str:
    m = _PARAM_NAME_RE.search(decl.strip())
    if not m:
        raise EmptyPrototype(f"cannot find a parameter name in {decl!r}")
    return m.group(1)


def _pointer_decl(name: str, kind: str) -> str:
    if kind == "plt_stub":
        # _plt suffix: the bare import name belongs to its thunk
        return f"int (*{name}_plt)() = 0;"
    if kind == "local_function":
        return f"int (*{name})() = 0;"
    return f"void *{name} = 0;"


def _pointer_assign(name: str, kind: str, source: str) -> str:
    if kind == "plt_stub":
        return f"    {name}_plt = (int (*)()){source};"
    if kind == "local_function":
        return f"    {name} = (int (*)()){source};"
    return f"    {name} = {source};"


def emit_stack_epilogue(correction: StackCorrection) -> str:
    """Exit sequence removing the trampoline's extra stack words.

    Pops the original return address, shifts the stack pointer past the
    pushed words, and jumps back — the caller sees a plain return with its
    arguments where it left them. Zero shift needs no correction at all.
    """
    shift = correction.byte_shift
    if shift < 0 or shift % 4:
        raise MisalignedShift(f"byte shift {shift} is not a multiple of 4")
    if shift == 0:
        return ""
    return f"popl %ecx\naddl ${shift}, %esp\njmp *%ecx\n"


def emit_detour_interface(spec: InterfaceSpec) -> str:
    """C text for the det_<fn> entry and its reference-publishing body."""
    if not spec.function_name or not spec.return_type.strip():
        raise EmptyPrototype("interface needs a function name and return type")
    expect = len(spec.references) + (1 if spec.ebx_required else 0)
    if spec.stack_correction.added_words != expect:
        raise MisalignedShift(
            f"stack correction covers {spec.stack_correction.added_words} "
            f"words, plan adds {expect}"
        )

    params = [p.strip() for p in spec.parameters if p.strip()
              and p.strip() != "void"]
    param_names = [_param_name(p) for p in params]
    ret = spec.return_type.strip()
    fn = spec.function_name
    impl = f"{spec.entry_symbol}_impl"

    extra: list[str] = []
    if spec.stack_correction.added_words:
        # the entry stub reaches _impl by `call`, so the trampoline's
        # re-pushed return address sits in the first argument slot
        extra.append("void *det_resume")
    if spec.ebx_required:
        extra.append("void *ebx_word")
    extra += [f"void *ref_{name}" for name, _ in spec.references]
    impl_params = ", ".join(extra + params) or "void"

    lines = [_BANNER, ""]
    for name, kind in spec.references:
        lines.append(_pointer_decl(name, kind))
    if spec.references:
        lines.append("")
    if spec.ebx_required:
        lines.append("void *saved_ebx = 0;")
        lines.append("")
    lines.append(f"extern {ret} {fn}({', '.join(params) or 'void'});")
    lines.append("")
    lines.append(f"{ret} {impl}({impl_params})")
    lines.append("{")
    for name, kind in spec.references:
        lines.append(_pointer_assign(name, kind, f"ref_{name}"))
    if spec.ebx_required:
        lines.append("    saved_ebx = ebx_word;")
    call = f"{fn}({', '.join(param_names)})"
    if ret == "void":
        lines.append(f"    {call};")
    else:
        lines.append(f"    return {call};")
    lines.append("}")
    lines.append("")

    epilogue = emit_stack_epilogue(spec.stack_correction)
    asm = [
        f'    ".globl {spec.entry_symbol}\\n"',
        f'    ".type {spec.entry_symbol}, @function\\n"',
        f'    "{spec.entry_symbol}:\\n"',
    ]
    if epilogue:
        asm.append(f'    "    call {impl}\\n"')
        asm += [f'    "    {line}\\n"' for line in epilogue.splitlines()]
    else:
        # nothing to correct: the entry is the implementation's convention
        asm.append(f'    "    jmp {impl}\\n"')
    lines.append("__asm__(")
    lines += asm
    lines.append(");")
    return "\n".join(lines) + "\n"


def emit_unbound_symbol_interface(symbol: str, plt_placeholder: int) -> str:
    """Thunk letting payload code call an import as the original would.

    Restores the %ebx the trampoline saved (the GOT base the original
    binary's linkage expects) and tail-jumps to the import's PLT stub.
    The stub address appears as the literal placeholder, substituted with
    the real address when the payload is installed.
    """
    if not symbol:
        raise EmptyPrototype("unbound symbol name is empty")
    return (
        f"{_BANNER}\n"
        "\n"
        "extern void *saved_ebx;\n"
        "\n"
        "__asm__(\n"
        f'    ".globl {symbol}\\n"\n'
        f'    ".type {symbol}, @function\\n"\n'
        f'    "{symbol}:\\n"\n'
        '    "    call 1f\\n"\n'
        '    "1:  popl %eax\\n"\n'
        '    "    movl saved_ebx-1b(%eax), %ebx\\n"\n'
        f'    "    movl ${plt_placeholder:#010x}, %eax\\n"\n'
        '    "    jmp *%eax\\n"\n'
        ");\n"
    )


def normalize_decompiled_source(text: str,
                                table: dict[str, str] | None = None) -> str:
    """Whole-token keyword substitution over decompiler output."""
    table = DEFAULT_SUBSTITUTIONS if table is None else table
    if not table:
        return text
    keys = sorted(table, key=len, reverse=True)
    pattern = re.compile(
        r"(?<![A-Za-z0-9_])(" + "|".join(re.escape(k) for k in keys)
        + r")(?![A-Za-z0-9_])"
    )
    return pattern.sub(lambda m: table[m.group(1)], text)


@dataclass(frozen=True)
class TypeDefinition:
    name: str
    body: str
    dependencies: frozenset[str] = field(default_factory=frozenset)
    is_forward: bool = False


def _forward_decl(name: str) -> TypeDefinition:
    return TypeDefinition(name, f"struct {name};", frozenset(), True)


def order_type_definitions(
    defs: set[TypeDefinition] | list[TypeDefinition],
    external: set[str] = frozenset(),
) -> list[TypeDefinition]:
    """Emission order: every dependency precedes its users.

    Mutually recursive groups are broken by forward declarations for all
    group members ahead of the bodies; output is deterministic (name order
    breaks all ties). Unknown dependency names must be listed as external.
    """
    by_name = {d.name: d for d in defs}
    if len(by_name) != len(list(defs)):
        raise UnresolvedDependency("duplicate type definition names")
    for d in defs:
        for dep in d.dependencies:
            if dep not in by_name and dep not in external and dep != d.name:
                raise UnresolvedDependency(
                    f"type {d.name!r} depends on unknown {dep!r}"
                )

    # strongly connected components, iterative Tarjan over sorted names
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    sccs: list[list[str]] = []
    counter = [0]

    def neighbors(name: str) -> list[str]:
        return sorted(n for n in by_name[name].dependencies if n in by_name)

    for root in sorted(by_name):
        if root in index:
            continue
        work = [(root, iter(neighbors(root)))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for nxt in it:
                if nxt not in index:
                    index[nxt] = low[nxt] = counter[0]
                    counter[0] += 1
                    stack.append(nxt)
                    on_stack.add(nxt)
                    work.append((nxt, iter(neighbors(nxt))))
                    advanced = True
                    break
                if nxt in on_stack:
                    low[node] = min(low[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    top = stack.pop()
                    on_stack.discard(top)
                    comp.append(top)
                    if top == node:
                        break
                sccs.append(sorted(comp))

    scc_of = {name: i for i, comp in enumerate(sccs) for name in comp}
    out: list[TypeDefinition] = []
    emitted: set[int] = set()

    def emit(scc_idx: int) -> None:
        if scc_idx in emitted:
            return
        emitted.add(scc_idx)
        comp = sccs[scc_idx]
        for name in comp:
            for dep in neighbors(name):
                if scc_of[dep] != scc_idx:
                    emit(scc_of[dep])
        cyclic = len(comp) > 1 or any(
            name in by_name[name].dependencies for name in comp)
        if cyclic:
            out.extend(_forward_decl(name) for name in comp)
        out.extend(by_name[name] for name in comp)

    for i in range(len(sccs)):
        emit(i)
    return out
