"""Interface/source generation tests, anchored by golden files."""

import pathlib
import re
import subprocess
import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent))

import toolchain
from binmend.codegen import (
    DEFAULT_SUBSTITUTIONS,
    InterfaceSpec,
    TypeDefinition,
    emit_detour_interface,
    emit_stack_epilogue,
    emit_unbound_symbol_interface,
    normalize_decompiled_source,
    order_type_definitions,
)
from binmend.detour import StackCorrection, plt_placeholder
from binmend.errors import (
    EmptyPrototype,
    MisalignedShift,
    UnresolvedDependency,
)

GOLDEN = pathlib.Path(__file__).parent / "golden"

needs_gcc = pytest.mark.skipif(
    not toolchain.has_gcc_m32(), reason="no 32-bit-capable gcc"
)

SINGLE_REF = InterfaceSpec(
    function_name="is_anchored",
    return_type="int",
    parameters=("char *str", "int options"),
    references=(("is_anchored_helper", "local_function"),),
    ebx_required=True,
    stack_correction=StackCorrection(2),
)


def names_of(spec_text: str) -> list[str]:
    """Opaque parameter names of the generated _impl, in order."""
    m = re.search(r"_impl\(([^)]*)\)", spec_text)
    assert m
    return [p.strip() for p in m.group(1).split(",")]


class TestDetourInterfaceGolden:
    def test_single_reference_exact(self):
        assert emit_detour_interface(SINGLE_REF) == (
            GOLDEN / "det_is_anchored.c").read_text()

    def test_single_reference_structure(self):
        text = emit_detour_interface(SINGLE_REF)
        assert "det_is_anchored:" in text  # det_-prefixed entry
        assert text.count("(int (*)())") == 1  # exactly one cast
        assert "void *saved_ebx = 0;" in text  # ebx word
        assert "addl $8, %esp" in text  # epilogue shifting ebx+1 ref
        assert text.endswith("\n")

    def test_ebx_only_exact(self):
        spec = InterfaceSpec("reset_state", "void", (), (), True,
                             StackCorrection(1))
        text = emit_detour_interface(spec)
        assert text == (GOLDEN / "det_reset_state.c").read_text()
        assert "addl $4, %esp" in text

    def test_zero_shift_tail_jumps(self):
        spec = InterfaceSpec("f", "int", ("int a",), (), False,
                             StackCorrection(0))
        text = emit_detour_interface(spec)
        assert "jmp det_f_impl" in text
        assert "popl" not in text


class TestDetourInterfaceShape:
    def test_reference_kinds_get_matching_pointers(self):
        spec = InterfaceSpec(
            "victim", "int", ("int x",),
            (("helper", "local_function"), ("table", "local_data"),
             ("transmit", "plt_stub")),
            True, StackCorrection(4),
        )
        text = emit_detour_interface(spec)
        assert "int (*helper)() = 0;" in text
        assert "void *table = 0;" in text
        assert "int (*transmit_plt)() = 0;" in text  # thunk owns bare name
        assert "helper = (int (*)())ref_helper;" in text
        assert "table = ref_table;" in text

    def test_void_return_has_no_return_value(self):
        spec = InterfaceSpec("quiet", "void", ("int a",), (), True,
                             StackCorrection(1))
        text = emit_detour_interface(spec)
        assert "    quiet(a);" in text
        assert "return quiet" not in text

    def test_empty_prototype_rejected(self):
        with pytest.raises(EmptyPrototype):
            emit_detour_interface(
                InterfaceSpec("", "int", (), (), True, StackCorrection(1)))
        with pytest.raises(EmptyPrototype):
            emit_detour_interface(
                InterfaceSpec("f", "  ", (), (), True, StackCorrection(1)))
        with pytest.raises(EmptyPrototype):
            emit_detour_interface(  # parameter without a name
                InterfaceSpec("f", "int", ("int *",), (), True,
                              StackCorrection(1)))

    def test_mismatched_correction_rejected(self):
        with pytest.raises(MisalignedShift):
            emit_detour_interface(
                InterfaceSpec("f", "int", (), (("g", "local_function"),),
                              True, StackCorrection(5)))

    @settings(max_examples=60, deadline=None)
    @given(
        r=st.integers(min_value=0, max_value=8),
        ebx=st.booleans(),
        nparams=st.integers(min_value=0, max_value=4),
    )
    def test_congruence_with_trampoline_layout(self, r, ebx, nparams):
        refs = tuple((f"ref{i}", "local_function") for i in range(r))
        params = tuple(f"int a{i}" for i in range(nparams))
        spec = InterfaceSpec("fn", "int", params, refs, ebx,
                             StackCorrection(r + (1 if ebx else 0)))
        text = emit_detour_interface(spec)
        got = names_of(text)
        # call-based entries absorb the re-pushed return address first
        expected = [] if r == 0 and not ebx else ["void *det_resume"]
        expected += [] if not ebx else ["void *ebx_word"]
        expected += [f"void *ref_ref{i}" for i in range(r)]
        expected += [f"int a{i}" for i in range(nparams)]
        assert got == (expected or ["void"])


class TestUnboundSymbolInterface:
    def test_golden(self):
        text = emit_unbound_symbol_interface("cgc_receive", 0xDE700001)
        assert text == (GOLDEN / "thunk_cgc_receive.c").read_text()

    def test_placeholder_occurs_once(self):
        text = emit_unbound_symbol_interface("cgc_receive", 0xDE700001)
        assert text.count("0xde700001") == 1
        assert "cgc_receive:" in text
        assert "saved_ebx" in text
        assert "jmp *%eax" in text

    def test_distinct_symbols_distinct_tokens(self):
        a = emit_unbound_symbol_interface("transmit", plt_placeholder(0))
        b = emit_unbound_symbol_interface("receive", plt_placeholder(1))
        assert "0xde700001" in a and "0xde700002" in b

    def test_empty_symbol_rejected(self):
        with pytest.raises(EmptyPrototype):
            emit_unbound_symbol_interface("", 0xDE700001)


class TestStackEpilogue:
    def test_golden(self):
        assert emit_stack_epilogue(StackCorrection(2)) == (
            GOLDEN / "epilogue_8.inc").read_text()

    def test_zero_is_empty(self):
        assert emit_stack_epilogue(StackCorrection(0)) == ""

    def test_mentions_displacement(self):
        assert "$8" in emit_stack_epilogue(StackCorrection(2))
        assert "$4" in emit_stack_epilogue(StackCorrection(1))

    def test_misaligned(self):
        bad = StackCorrection(0)
        object.__setattr__(bad, "added_words", 1.5)
        with pytest.raises(MisalignedShift):
            emit_stack_epilogue(bad)


@needs_gcc
class TestGeneratedCodeCompiles:
    def test_interface_thunk_and_replacement(self, tmp_path):
        spec = InterfaceSpec(
            "victim", "int", ("char *buf", "int len"),
            (("helper", "local_function"), ("transmit", "plt_stub")),
            True, StackCorrection(3),
        )
        (tmp_path / "det_victim.c").write_text(emit_detour_interface(spec))
        (tmp_path / "thunk.c").write_text(
            emit_unbound_symbol_interface("receive", plt_placeholder(0)))
        (tmp_path / "victim.c").write_text(
            "extern int (*helper)();\n"
            "int receive(char *buf, int len);\n"
            "int victim(char *buf, int len) {\n"
            "    return receive(buf, len) + helper(len);\n"
            "}\n"
        )
        proc = subprocess.run(
            ["gcc", "-m32", "-fPIC", "-O2", "-Wall", "-c",
             "det_victim.c", "thunk.c", "victim.c"],
            cwd=tmp_path, capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr


class TestNormalizeSource:
    def test_default_table(self):
        assert normalize_decompiled_source("_DWORD x;") == "unsigned int x;"
        assert normalize_decompiled_source("_BYTE b;") == "unsigned char b;"
        assert normalize_decompiled_source("_WORD w;") == "unsigned short w;"
        assert normalize_decompiled_source(
            "int __fastcall f(int a)") == "int  f(int a)"

    def test_whole_token_only(self):
        assert normalize_decompiled_source("my_DWORD x;") == "my_DWORD x;"
        assert normalize_decompiled_source("_DWORDS") == "_DWORDS"
        assert normalize_decompiled_source("(_DWORD)p") == "(unsigned int)p"
        assert normalize_decompiled_source(
            "_DWORD *_DWORD_ptr;") == "unsigned int *_DWORD_ptr;"

    def test_untouched_text(self):
        src = "int main(void) { return 0; }\n"
        assert normalize_decompiled_source(src) == src

    def test_custom_table(self):
        out = normalize_decompiled_source("QWORD q;", {"QWORD": "long long"})
        assert out == "long long q;"

    def test_empty_table_is_identity(self):
        assert normalize_decompiled_source("_DWORD x;", {}) == "_DWORD x;"

    @settings(max_examples=200, deadline=None)
    @given(st.lists(
        st.sampled_from(list(DEFAULT_SUBSTITUTIONS) + ["x", "(", " ", "foo"]),
        max_size=30).map(" ".join))
    def test_idempotent(self, text):
        once = normalize_decompiled_source(text)
        assert normalize_decompiled_source(once) == once


class TestOrderTypeDefinitions:
    def test_simple_dependency(self):
        a = TypeDefinition("A", "struct A { struct B b; };", frozenset({"B"}))
        b = TypeDefinition("B", "struct B { int x; };")
        out = order_type_definitions([a, b])
        assert [d.name for d in out] == ["B", "A"]
        assert not any(d.is_forward for d in out)

    def test_mutual_recursion_gets_forward_decls(self):
        a = TypeDefinition("A", "struct A { struct B *b; };", frozenset({"B"}))
        b = TypeDefinition("B", "struct B { struct A *a; };", frozenset({"A"}))
        out = order_type_definitions({a, b})
        assert [(d.name, d.is_forward) for d in out] == [
            ("A", True), ("B", True), ("A", False), ("B", False)]

    def test_self_reference(self):
        n = TypeDefinition("Node", "struct Node { struct Node *next; };",
                           frozenset({"Node"}))
        out = order_type_definitions([n])
        assert [(d.name, d.is_forward) for d in out] == [
            ("Node", True), ("Node", False)]

    def test_unknown_dependency(self):
        a = TypeDefinition("A", "struct A { struct C c; };", frozenset({"C"}))
        with pytest.raises(UnresolvedDependency):
            order_type_definitions([a])

    def test_external_dependency_allowed(self):
        a = TypeDefinition("A", "struct A { FILE *f; };", frozenset({"FILE"}))
        out = order_type_definitions([a], external={"FILE"})
        assert [d.name for d in out] == ["A"]

    def test_deterministic_regardless_of_input_order(self):
        defs = [
            TypeDefinition("C", "c", frozenset({"A", "B"})),
            TypeDefinition("B", "b", frozenset({"A"})),
            TypeDefinition("A", "a"),
        ]
        first = order_type_definitions(defs)
        second = order_type_definitions(list(reversed(defs)))
        assert first == second
        assert [d.name for d in first] == ["A", "B", "C"]

    @settings(max_examples=200, deadline=None)
    @given(st.lists(
        st.tuples(st.integers(0, 9), st.integers(0, 9)), max_size=30))
    def test_every_use_preceded_by_declaration(self, edges):
        names = {f"T{a}" for a, _ in edges} | {f"T{b}" for _, b in edges}
        deps: dict[str, set[str]] = {n: set() for n in names}
        for a, b in edges:
            deps[f"T{a}"].add(f"T{b}")
        defs = [TypeDefinition(n, n.lower(), frozenset(d))
                for n, d in deps.items()]
        out = order_type_definitions(defs)
        declared: set[str] = set()
        for d in out:
            if not d.is_forward:
                for dep in d.dependencies:
                    assert dep in declared or dep == d.name
            declared.add(d.name)
        # every body appears exactly once
        bodies = [d.name for d in out if not d.is_forward]
        assert sorted(bodies) == sorted(names)
