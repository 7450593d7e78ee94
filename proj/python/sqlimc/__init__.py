# SPDX-License-Identifier: Apache-2.0
"""Attack-trace search over behavioral web application models.

The heavy lifting lives in the `_core` extension; this package adds a couple
of conveniences around the bundled example models.
"""

from ._core import (
    AnalysisResult,
    SearchBudgetExceeded,
    SpecParseError,
    SpecTranslationError,
    SpecValidationError,
    analyze,
    emit_transition_system,
    fixture_names,
    fixture_text,
    lint,
    reprint,
    verify_db,
)

__all__ = [
    "AnalysisResult",
    "SearchBudgetExceeded",
    "SpecParseError",
    "SpecTranslationError",
    "SpecValidationError",
    "analyze",
    "analyze_fixture",
    "emit_transition_system",
    "fixture_names",
    "fixture_text",
    "lint",
    "reprint",
    "verify_db",
]


def analyze_fixture(name: str, **kwargs) -> AnalysisResult:
    """Run the full pipeline on one of the bundled models."""
    return analyze(fixture_text(name), **kwargs)
