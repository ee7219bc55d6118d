"""Exception hierarchy shared across the package."""
from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .lattice import MiningRun


class RubenError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(RubenError):
    """A manifest, corpus file, or constructor argument is malformed."""


class RetrievalError(RubenError):
    """Retrieval could not produce a usable source set."""


class OracleError(RubenError):
    """A model oracle failed to produce an answer."""


class PredicateError(RubenError):
    """An output predicate could not be evaluated."""


class UnparsableVerdictError(PredicateError):
    """A judge oracle returned text that is neither YES nor NO."""

    def __init__(self, verdict: str):
        self.verdict = verdict
        super().__init__(f"judge verdict is not YES/NO: {verdict!r}")


class RunFailedError(RubenError):
    """Mining aborted mid-run; carries the partial run for inspection."""

    def __init__(self, message: str, partial_run: "MiningRun"):
        self.partial_run = partial_run
        super().__init__(message)
