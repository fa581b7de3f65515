"""Exception hierarchy shared across the package.

The CLI maps these onto its documented exit codes; library callers can
catch ``SerpChurnError`` for anything this package raises on purpose.
"""

from __future__ import annotations


class SerpChurnError(Exception):
    """Base class for all errors raised by serpchurn."""


class UriParseError(SerpChurnError):
    """A URI could not be parsed (no host). Carries the offending input."""

    def __init__(self, uri: str, reason: str = "no host"):
        super().__init__(f"cannot canonicalize {uri!r}: {reason}")
        self.uri = uri


class SerpParseError(SerpChurnError):
    """A SERP page or snapshot/manifest document is malformed."""


class RateLimited(SerpChurnError):
    """The engine served a CAPTCHA/interstitial or returned HTTP 429.

    ``retry_after`` is the suggested backoff in seconds.
    """

    def __init__(self, message: str, retry_after: float = 300.0):
        super().__init__(message)
        self.retry_after = retry_after


class TransportError(SerpChurnError):
    """Network-level failure while fetching a live SERP."""


class FixtureNotFound(SerpChurnError):
    """No fixture file exists for the requested (query, vertical, date, page)."""


class StoreMissingError(SerpChurnError):
    """The requested collection store does not exist on disk."""


class StoreMismatchError(SerpChurnError):
    """A snapshot was offered to a store with a different topic or vertical."""


class InsufficientDataError(SerpChurnError):
    """An operation has no data to work with (empty store, no anchor pairs, ...)."""


class UndefinedRateError(InsufficientDataError):
    """A rate's denominator set is empty, so the rate is undefined."""


class UnderdeterminedFitError(InsufficientDataError):
    """Too few points to fit the three-parameter decay model."""


class FitConvergenceError(SerpChurnError):
    """The fitter exhausted its iteration budget; carries the best model so far."""

    def __init__(self, message: str, best=None, sse: float | None = None):
        super().__init__(message)
        self.best = best
        self.sse = sse


class ValidationError(SerpChurnError):
    """Invalid synthetic-stream parameters (e.g. a non-stochastic kernel)."""


class OracleScaleError(SerpChurnError):
    """The brute-force oracle refuses inputs beyond desk scale."""
