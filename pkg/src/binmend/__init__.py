"""Fault localization and detour-based patching for 32-bit x86 ELF binaries.

The package is organized as a pipeline:

- ``spectra``    coverage spectra from callgrind-format profiles
- ``sbfl``       suspiciousness metrics and candidate screening
- ``rankagg``    rank aggregation into a single candidate list
- ``elf``        ELF32 parsing, segment append, text patching
- ``x86``        minimal i386 decoder for call-site discovery
- ``detour``     trampoline encoding and detour planning
- ``codegen``    binary-source interface generation
- ``recompile``  payload build commands and validation
- ``harness``    differential test execution and classification
- ``cli``        command-line front end tying the stages together
"""

__version__ = "0.1.0"
