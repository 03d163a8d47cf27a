"""Differential test execution over original and patched binaries.

Verdicts are pass/fail-with-reason; a signal death is always fail(crash),
which is what makes proof-of-vulnerability tests meaningful on the
unpatched binary. Comparing the original's verdict vector with the
patched one yields one of four classifications:

  test_equivalent  every verdict pair identical
  mitigated        positives identical, every negative went fail -> pass
  regressed        some positive went pass -> fail
  behavior_changed anything else
"""

from __future__ import annotations

import hashlib
import json
import subprocess
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .errors import (
    DuplicateTestId,
    InputError,
    NoTests,
    SpawnFailure,
    SuiteMismatch,
)

COMPARATORS = ("exit", "exit+stdout", "crash")
DEFAULT_TIMEOUT_S = 10.0

KINDS = ("positive", "negative")


@dataclass(frozen=True)
class TestSpec:
    __test__ = False  # keep pytest from collecting this as a test class

    id: str
    kind: str
    cmd: tuple[str, ...]
    stdin_path: str | None = None
    expect_exit: int = 0
    expect_stdout_sha256: str | None = None
    timeout_s: float = DEFAULT_TIMEOUT_S

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise InputError(f"test {self.id!r}: bad kind {self.kind!r}")
        if self.timeout_s <= 0:
            raise InputError(f"test {self.id!r}: timeout must be positive")
        if not self.cmd:
            raise InputError(f"test {self.id!r}: empty command")


@dataclass(frozen=True)
class Verdict:
    status: str  # "pass" | "fail"
    reason: str | None = None  # crash | timeout | exit_code | stdout

    @property
    def passing(self) -> bool:
        return self.status == "pass"


PASS = Verdict("pass")


def _argv(binary: str, spec: TestSpec) -> list[str]:
    """Substitute the binary under test into the command template."""
    if any("{binary}" in tok for tok in spec.cmd):
        return [tok.replace("{binary}", binary) for tok in spec.cmd]
    return [binary, *spec.cmd]


def run_test(binary: str, spec: TestSpec,
             comparator: str = "exit+stdout") -> Verdict:
    """Execute one test against one binary and judge the outcome."""
    if comparator not in COMPARATORS:
        raise InputError(f"unknown comparator {comparator!r}")
    argv = _argv(binary, spec)
    stdin_bytes = b""
    if spec.stdin_path:
        try:
            stdin_bytes = Path(spec.stdin_path).read_bytes()
        except OSError as exc:
            raise SpawnFailure(f"test {spec.id!r}: {exc}") from exc
    try:
        proc = subprocess.run(
            argv, input=stdin_bytes, capture_output=True,
            timeout=spec.timeout_s,
        )
    except subprocess.TimeoutExpired:
        return Verdict("fail", "timeout")
    except OSError as exc:
        raise SpawnFailure(f"test {spec.id!r}: cannot run {argv[0]}: {exc}"
                           ) from exc

    if proc.returncode < 0:
        return Verdict("fail", "crash")
    if comparator == "crash":
        return PASS  # survived: no signal death
    if proc.returncode != spec.expect_exit:
        return Verdict("fail", "exit_code")
    if comparator == "exit+stdout" and spec.expect_stdout_sha256 is not None:
        digest = hashlib.sha256(proc.stdout).hexdigest()
        if digest != spec.expect_stdout_sha256:
            return Verdict("fail", "stdout")
    return PASS


def run_suite(binary: str, tests: Iterable[TestSpec],
              comparator: str = "exit+stdout") -> dict[str, Verdict]:
    return {t.id: run_test(binary, t, comparator) for t in tests}


@dataclass(frozen=True)
class EquivalenceReport:
    pairs: tuple[tuple[str, str, Verdict, Verdict], ...]  # id, kind, o, p
    classification: str

    @property
    def exit_code(self) -> int:
        return 0 if self.classification in ("test_equivalent",
                                            "mitigated") else 1


def compare(tests: Iterable[TestSpec],
            original: Mapping[str, Verdict],
            patched: Mapping[str, Verdict]) -> EquivalenceReport:
    """Classify the patched binary's behavior against the original's."""
    specs = list(tests)
    ids = [t.id for t in specs]
    if set(original) != set(ids) or set(patched) != set(ids):
        raise SuiteMismatch(
            "verdict maps do not cover exactly the suite's test ids"
        )

    pairs = tuple(
        (t.id, t.kind, original[t.id], patched[t.id]) for t in specs
    )
    positives = [(o, p) for _, kind, o, p in pairs if kind == "positive"]
    negatives = [(o, p) for _, kind, o, p in pairs if kind == "negative"]

    if all(o == p for _, _, o, p in pairs):
        label = "test_equivalent"
    elif any(o.passing and not p.passing for o, p in positives):
        label = "regressed"
    elif (all(o == p for o, p in positives) and negatives
          and all(not o.passing and p.passing for o, p in negatives)):
        label = "mitigated"
    else:
        label = "behavior_changed"
    return EquivalenceReport(pairs, label)


# --- suite / report JSON -------------------------------------------------------

def load_suite(text: str, base_dir: str | Path = ".") -> list[TestSpec]:
    """Parse the suite schema; stdin paths resolve against base_dir."""
    base = Path(base_dir)
    try:
        doc = json.loads(text)
        entries = doc["tests"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InputError(f"suite JSON: {exc}") from exc
    if not isinstance(entries, list) or not entries:
        raise NoTests("suite lists no tests")
    out: list[TestSpec] = []
    seen: set[str] = set()
    for e in entries:
        try:
            tid = e["id"]
            expect = e.get("expect", {})
            stdin = e.get("stdin")
            spec = TestSpec(
                id=tid,
                kind=e["kind"],
                cmd=tuple(e["cmd"]),
                stdin_path=str(base / stdin) if stdin else None,
                expect_exit=int(expect.get("exit_code", 0)),
                expect_stdout_sha256=expect.get("stdout_sha256"),
                timeout_s=float(e.get("timeout_s", DEFAULT_TIMEOUT_S)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"suite JSON entry: {exc}") from exc
        if tid in seen:
            raise DuplicateTestId(tid)
        seen.add(tid)
        out.append(spec)
    return out


def report_to_json(report: EquivalenceReport) -> str:
    doc = {
        "classification": report.classification,
        "tests": [
            {
                "id": tid,
                "kind": kind,
                "original": {"status": o.status, "reason": o.reason},
                "patched": {"status": p.status, "reason": p.reason},
            }
            for tid, kind, o, p in report.pairs
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def report_from_json(text: str) -> EquivalenceReport:
    try:
        doc = json.loads(text)
        pairs = tuple(
            (e["id"], e["kind"],
             Verdict(e["original"]["status"], e["original"]["reason"]),
             Verdict(e["patched"]["status"], e["patched"]["reason"]))
            for e in doc["tests"]
        )
        return EquivalenceReport(pairs, doc["classification"])
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InputError(f"report JSON: {exc}") from exc
