"""Exception taxonomy shared by the pipeline stages.

Every stage raises subclasses of BinmendError so the CLI can map failures
onto its exit-code contract without string matching.
"""


class BinmendError(Exception):
    """Base class for all pipeline errors."""


class InputError(BinmendError):
    """Unusable input: missing files, malformed profiles, bad ELF images."""


class LocalizationError(BinmendError):
    """Fault localization cannot produce a candidate list."""


class PlanningError(BinmendError):
    """A detour plan cannot be constructed for the requested function."""


class RewriteError(BinmendError):
    """Payload validation or binary rewriting failed."""


# --- spectra ---------------------------------------------------------------

class MalformedProfile(InputError):
    """Callgrind-format text that violates the profile grammar."""


class EmptyProfile(InputError):
    """A profile that defines no functions at all."""


class UnknownTest(InputError):
    """A test id referenced but absent from the coverage matrix."""


class InconsistentNaming(InputError):
    """Covered-function names that are not declared in the matrix."""


class DuplicateTestId(InputError):
    """Two runs share a test id."""


class NoTests(InputError):
    """A matrix build was attempted with zero runs."""


class UnknownFunction(InputError):
    """Count extraction for a function the matrix does not declare."""


# --- sbfl / rankagg --------------------------------------------------------

class NoFailingTests(LocalizationError):
    """Localization requested with zero failing tests in the matrix."""


class NoQualifiedFunctions(LocalizationError):
    """Screening removed every candidate function."""


class EmptyQualifiedSet(NoQualifiedFunctions):
    """Scoring requested over an empty qualified set."""


class UnknownMetric(LocalizationError):
    """A metric name outside the supported set."""


class InvalidFraction(LocalizationError):
    """Top-fraction outside (0, 1]."""


class ShapeMismatch(LocalizationError):
    """Ranked lists or weight rows with inconsistent shapes."""


class UnsortedRow(LocalizationError):
    """A weight row that is not in descending order."""


# --- elf -------------------------------------------------------------------

class NotElf(InputError):
    """Bytes that do not start with an ELF identification."""


class UnsupportedClass(InputError):
    """Not a 32-bit little-endian ELF image."""


class UnsupportedMachine(InputError):
    """Not an x86 (EM_386) image."""


class UnsupportedType(InputError):
    """Executable type outside what the rewriter handles (e.g. PIE)."""


class TruncatedFile(InputError):
    """Structures that reference bytes beyond the end of the file."""

class StrippedBinary(InputError):
    """No symbol table to resolve function names against."""


class SymbolNotFound(InputError):
    """Requested symbol absent from the symbol table."""


class SymbolNotImported(InputError):
    """Symbol not among the binary's PLT-imported functions."""


class NoPlt(InputError):
    """Binary has no PLT (statically linked or no dynamic section)."""


class HeaderSpaceExhausted(RewriteError):
    """Program-header table cannot grow without moving protected content."""


class LayoutConflict(RewriteError):
    """Segment layout with overlapping ranges; refusing to serialize."""


class OutOfRange(RewriteError):
    """Patch range not contained in any mapped segment."""


class NotExecutableRange(RewriteError):
    """Patch range inside a segment without execute permission."""


# --- x86 / detour ----------------------------------------------------------

class UndecodableBody(PlanningError):
    """Instruction bytes the linear-sweep decoder cannot size."""


class PlanDoesNotFit(PlanningError):
    """Trampoline longer than the function body it must overwrite."""


class BudgetExceeded(PlanDoesNotFit):
    """Reference count pushes the trampoline past the available bytes."""


class MissingReference(PlanningError):
    """A requested reference cannot be resolved to an address."""


class TargetOutOfRel32Range(PlanningError):
    """Jump displacement does not fit a signed 32-bit field."""


# --- codegen ---------------------------------------------------------------

class UnresolvedDependency(PlanningError):
    """A type definition depends on a name that was never supplied."""


class EmptyPrototype(PlanningError):
    """Interface generation without a function name."""


class MisalignedShift(PlanningError):
    """Stack correction that is not a whole number of 4-byte words."""


# --- recompile -------------------------------------------------------------

class MissingLinkerScript(RewriteError):
    """Payload build requested without a linker script."""


class ToolchainError(RewriteError):
    """The compiler driver failed or is not installed."""


class ToolchainMissing(ToolchainError):
    """No usable 32-bit toolchain on this host; gated work should skip."""


class InvalidPayload(RewriteError):
    """Payload violates the loader-free contract."""


class PlaceholderUnresolved(RewriteError):
    """An import placeholder token absent or ambiguous in the payload."""


# --- harness ---------------------------------------------------------------

class SpawnFailure(InputError):
    """Test subject could not be executed at all."""


class SuiteMismatch(InputError):
    """Differential comparison without matching test ids on both sides."""
