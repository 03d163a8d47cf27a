"""Coverage spectra: callgrind-format ingestion and the coverage matrix.

A spectra set records, per test, which functions of the subject binary were
executed. Traces arrive either as callgrind-format profile text (one file per
test) or as the normalized JSON produced by this module; everything downstream
(scoring, aggregation) consumes the matrix built here.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import (
    DuplicateTestId,
    EmptyProfile,
    InconsistentNaming,
    InputError,
    MalformedProfile,
    NoTests,
    UnknownFunction,
)

log = logging.getLogger(__name__)

KINDS = ("positive", "negative")
VERDICTS = ("pass", "fail")


@dataclass(frozen=True)
class FunctionRecord:
    """One function of the subject binary, as seen by screening."""

    name: str
    size_bytes: int
    is_library: bool = False
    is_local: bool = True

    def __post_init__(self) -> None:
        if not self.name:
            raise InconsistentNaming("function record with empty name")
        if self.size_bytes < 0:
            raise InputError(f"negative size for {self.name!r}")


@dataclass(frozen=True)
class TestRecord:
    """One test run: identity, polarity, verdict, and covered functions."""

    id: str
    kind: str
    verdict: str
    covered: frozenset[str]

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise InputError(f"test {self.id!r}: bad kind {self.kind!r}")
        if self.verdict not in VERDICTS:
            raise InputError(f"test {self.id!r}: bad verdict {self.verdict!r}")


@dataclass(frozen=True)
class CoverageMatrix:
    functions: tuple[FunctionRecord, ...]
    tests: tuple[TestRecord, ...]

    def function_names(self) -> frozenset[str]:
        return frozenset(f.name for f in self.functions)

    @property
    def failing(self) -> int:
        return sum(1 for t in self.tests if t.verdict == "fail")

    @property
    def passing(self) -> int:
        return sum(1 for t in self.tests if t.verdict == "pass")


@dataclass(frozen=True)
class SpectrumCounts:
    """The four tallies every suspiciousness metric consumes."""

    ef: int
    ep: int
    nf: int
    np: int


# --- callgrind parsing -------------------------------------------------------

# position-spec records; the c-prefixed forms describe the callee side
_SPEC_RE = re.compile(r"^(c?(?:ob|fl|fi|fe|fn))=\s*(?:\((\d+)\))?\s*(.*)$")
_HEADER_RE = re.compile(r"^(\w+):(?:\s|$)")
_CALLS_RE = re.compile(r"^calls=\s*\d+")
# cost lines start with a subposition: decimal, hex, relative (+N/-N) or *
_COST_RE = re.compile(r"^(?:0x[0-9a-fA-F]+|\d+|[+-]\d+|\*)(?:\s|$)")

# name-compression tables are shared between the caller and callee forms
_TABLE_OF = {"ob": "ob", "cob": "ob",
             "fl": "fl", "fi": "fl", "fe": "fl",
             "cfl": "fl", "cfi": "fl", "cfe": "fl",
             "fn": "fn", "cfn": "fn"}


def parse_callgrind(text: str) -> dict[str, bool]:
    """Map function name -> covered flag from one callgrind-format profile.

    A function is covered once any cost line is attributed to it, either
    directly (cost line under its fn= record) or as the callee of a
    completed cfn=/calls= group. Functions that only ever appear as a
    position definition stay present but uncovered.
    """
    tables: dict[str, dict[str, str]] = {"ob": {}, "fl": {}, "fn": {}}
    covered: dict[str, bool] = {}
    saw_events = False
    saw_fn = False
    current: str | None = None
    callee: str | None = None
    pending_call = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue

        spec = _SPEC_RE.match(line)
        if spec:
            key, num, name = spec.group(1), spec.group(2), spec.group(3).strip()
            table = tables[_TABLE_OF[key]]
            if num is not None:
                if name:
                    table[num] = name
                else:
                    try:
                        name = table[num]
                    except KeyError:
                        raise MalformedProfile(
                            f"line {lineno}: {key}=({num}) used before definition"
                        ) from None
            if key in ("fn", "cfn"):
                if not saw_events:
                    raise MalformedProfile(
                        f"line {lineno}: function record before events: header"
                    )
                if not name:
                    raise MalformedProfile(f"line {lineno}: unnamed {key}= record")
                covered.setdefault(name, False)
                if key == "fn":
                    saw_fn = True
                    current = name
                    callee = None
                    pending_call = False
                else:
                    callee = name
            continue

        if _CALLS_RE.match(line):
            pending_call = callee is not None
            continue

        if _COST_RE.match(line):
            if current is not None:
                covered[current] = True
            if pending_call and callee is not None:
                covered[callee] = True
            pending_call = False
            continue

        if _HEADER_RE.match(line):
            if line.split(":", 1)[0] == "events":
                saw_events = True
            continue

        if line.startswith(("jump=", "jcnd=")):
            continue

        raise MalformedProfile(f"line {lineno}: unrecognized record {line!r}")

    if not saw_events:
        raise MalformedProfile("no events: header")
    if not saw_fn:
        raise EmptyProfile("profile defines no functions")
    return covered


# --- matrix assembly ---------------------------------------------------------

def build_matrix(
    runs: Iterable[tuple[TestRecord | tuple, Mapping[str, bool] | Iterable[str]]],
    functions: Iterable[FunctionRecord],
    unknown_names: str = "drop",
) -> CoverageMatrix:
    """Join per-test coverage with the declared function list.

    Each run pairs test metadata (a TestRecord or an (id, kind, verdict)
    tuple; its covered field is ignored) with that run's coverage, given
    either as a name->covered map or as an iterable of covered names.
    Coverage of undeclared functions is dropped with a warning by default;
    pass unknown_names="error" to reject it instead.
    """
    if unknown_names not in ("drop", "error"):
        raise ValueError(f"bad unknown_names policy {unknown_names!r}")
    fns = tuple(functions)
    declared = {f.name for f in fns}
    if len(declared) != len(fns):
        raise InconsistentNaming("duplicate function names in declaration list")

    tests: list[TestRecord] = []
    seen_ids: set[str] = set()
    for meta, cov in runs:
        if isinstance(meta, TestRecord):
            tid, kind, verdict = meta.id, meta.kind, meta.verdict
        else:
            tid, kind, verdict = meta
        if tid in seen_ids:
            raise DuplicateTestId(f"test id {tid!r} appears twice")
        seen_ids.add(tid)

        if isinstance(cov, Mapping):
            names = {n for n, flag in cov.items() if flag}
        else:
            names = set(cov)
        unknown = names - declared
        if unknown:
            if unknown_names == "error":
                raise InconsistentNaming(
                    f"test {tid!r} covers undeclared functions: {sorted(unknown)}"
                )
            log.warning(
                "test %s: dropping coverage of %d undeclared function(s): %s",
                tid, len(unknown), ", ".join(sorted(unknown)),
            )
            names -= unknown
        tests.append(TestRecord(tid, kind, verdict, frozenset(names)))

    if not tests:
        raise NoTests("matrix build with zero runs")
    return CoverageMatrix(functions=fns, tests=tuple(tests))


def counts_for(matrix: CoverageMatrix, function: str) -> SpectrumCounts:
    """Spectrum tallies for one declared function."""
    if function not in matrix.function_names():
        raise UnknownFunction(f"function {function!r} not in matrix")
    ef = ep = nf = np = 0
    for t in matrix.tests:
        hit = function in t.covered
        if t.verdict == "fail":
            ef, nf = ef + hit, nf + (not hit)
        else:
            ep, np = ep + hit, np + (not hit)
    return SpectrumCounts(ef=ef, ep=ep, nf=nf, np=np)


# --- normalized JSON interchange ----------------------------------------------

def matrix_to_json(matrix: CoverageMatrix, binary: str) -> str:
    doc = {
        "binary": binary,
        "functions": [
            {"name": f.name, "size": f.size_bytes,
             "library": f.is_library, "local": f.is_local}
            for f in matrix.functions
        ],
        "tests": [
            {"id": t.id, "kind": t.kind, "verdict": t.verdict,
             "covered": sorted(t.covered)}
            for t in matrix.tests
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def matrix_from_json(text: str) -> tuple[str, CoverageMatrix]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"spectra JSON: {exc}") from exc
    try:
        fns = [
            FunctionRecord(
                name=f["name"],
                size_bytes=int(f["size"]),
                is_library=bool(f["library"]),
                is_local=bool(f["local"]),
            )
            for f in doc["functions"]
        ]
        runs = [
            ((t["id"], t["kind"], t["verdict"]), t["covered"])
            for t in doc["tests"]
        ]
        binary = doc.get("binary", "")
    except (KeyError, TypeError) as exc:
        raise InputError(f"spectra JSON: missing or bad field: {exc}") from exc
    return binary, build_matrix(runs, fns)
