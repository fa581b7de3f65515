"""Core domain types and URI canonicalization.

A story is identified across days by its canonical URI: scheme, query
string, fragment and default port stripped, host lowercased, trailing
slashes removed, path kept case-sensitively. Everything downstream
(timelines, churn metrics, model fitting) keys on that canonical form.

All types here are immutable; every function is pure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from datetime import date
from enum import Enum
from typing import Iterable
from urllib.parse import urlsplit

from .errors import SerpParseError, UriParseError

PAGES_MAX = 5
PAGE_CAPACITY = 10  # typical results per page; the parser takes what the page gives

# Ports that never change resource identity once the scheme is gone.
_DEFAULT_PORTS = (80, 443)


class Vertical(Enum):
    """Which flavor of result page a snapshot came from."""

    GENERAL = "general"
    NEWS = "news"

    @classmethod
    def from_wire(cls, value: str) -> "Vertical":
        for v in cls:
            if v.value == value:
                return v
        raise SerpParseError(f"unknown vertical {value!r} (expected 'general' or 'news')")


def canonicalize(uri: str) -> str:
    """Reduce a URI to the canonical form used for story identity.

    Drops the scheme, query string, fragment, userinfo and default port;
    lowercases the host; strips trailing slashes from the path while
    keeping its case. Idempotent: re-applying to the output is a no-op.

    Raises UriParseError if the input has no parseable host.
    """
    s = uri.strip()
    if not s:
        raise UriParseError(uri, "empty input")
    # Canonical outputs carry no scheme, so schemeless input must be read
    # as host-first, not as a path.
    if s.startswith("//") or "://" in s:
        target = s
    else:
        target = "//" + s
    parts = urlsplit(target)
    try:
        port = parts.port
    except ValueError:
        raise UriParseError(uri, "invalid port") from None
    host = parts.hostname
    if not host:
        raise UriParseError(uri)
    if ":" in host:  # bare IPv6 address needs its brackets back
        host = f"[{host}]"
    netloc = host if port is None or port in _DEFAULT_PORTS else f"{host}:{port}"
    return netloc + parts.path.rstrip("/")


@dataclass(frozen=True)
class SerpResult:
    """One extracted result link: where it pointed and where it sat."""

    uri: str
    canonical_uri: str
    title: str
    page: int  # 1-5
    rank: int  # 1-based position across all pages of the snapshot

    def __post_init__(self):
        if not 1 <= self.page <= PAGES_MAX:
            raise ValueError(f"page must be in [1, {PAGES_MAX}], got {self.page}")
        if self.rank < 1:
            raise ValueError(f"rank must be >= 1, got {self.rank}")


@dataclass(frozen=True)
class SerpSnapshot:
    """All results extracted for one query x vertical x calendar date."""

    query: str
    vertical: Vertical
    date: date
    results: tuple[SerpResult, ...]

    def __post_init__(self):
        if not isinstance(self.results, tuple):
            object.__setattr__(self, "results", tuple(self.results))
        last_rank = 0
        for r in self.results:
            if r.rank <= last_rank:
                raise ValueError(
                    f"ranks must be strictly increasing, got {r.rank} after {last_rank}"
                )
            last_rank = r.rank

    def canonical_uris(self, page: int | None = None) -> frozenset[str]:
        """The set of canonical URIs in this snapshot, optionally one page's."""
        return frozenset(
            r.canonical_uri for r in self.results if page is None or r.page == page
        )


def dedup_snapshot(snapshot: SerpSnapshot) -> SerpSnapshot:
    """Collapse repeated canonical URIs within one snapshot.

    Keeps the occurrence with the lowest page (ties: lowest rank);
    survivors retain their original ranks and relative order.
    """
    best: dict[str, SerpResult] = {}
    for r in snapshot.results:
        cur = best.get(r.canonical_uri)
        if cur is None or (r.page, r.rank) < (cur.page, cur.rank):
            best[r.canonical_uri] = r
    survivors = sorted(best.values(), key=lambda r: r.rank)
    return replace(snapshot, results=tuple(survivors))


@dataclass(frozen=True)
class StoryTimeline:
    """Day-indexed page observations for one story.

    Index 0 is the day the story was first seen. Values are the page it
    appeared on (1-5), 0 when a snapshot exists but the story is outside
    pages 1-5, and None when no snapshot was taken that day.
    """

    canonical_uri: str
    first_seen: date
    observations: tuple[int | None, ...]

    def __post_init__(self):
        if not isinstance(self.observations, tuple):
            object.__setattr__(self, "observations", tuple(self.observations))
        if not self.observations:
            raise ValueError("a timeline needs at least the first-seen observation")
        first = self.observations[0]
        if not isinstance(first, int) or not 1 <= first <= PAGES_MAX:
            raise ValueError(f"day-0 observation must be a page in [1,5], got {first!r}")
        for v in self.observations:
            if v is not None and not 0 <= v <= PAGES_MAX:
                raise ValueError(f"observations must be None or in [0,5], got {v!r}")

    def __len__(self) -> int:
        return len(self.observations)

    def notation(self) -> str:
        """Compact observation-vector form, e.g. ``{4, 2, 0, 0}`` ('-' = no scrape)."""
        return "{%s}" % ", ".join("-" if v is None else str(v) for v in self.observations)


@dataclass(frozen=True)
class CollectionManifest:
    """A collection's identity plus which dates it holds snapshots for."""

    topic: str
    vertical: Vertical
    start_date: date | None = None
    dates: tuple[date, ...] = ()
    gaps: frozenset[date] = field(default_factory=frozenset)

    @property
    def end_date(self) -> date | None:
        return self.dates[-1] if self.dates else None


@dataclass(frozen=True)
class RefindabilityModel:
    """Coefficients of the decay curve P(k) = a + b*e^(-c*k).

    ``a`` is the long-run asymptote, ``b`` the decay amplitude, ``c`` the
    per-day decay constant; ``sse`` is the fit's residual sum of squares.
    """

    a: float
    b: float
    c: float
    sse: float
    degenerate: bool = False  # c unidentifiable (b == 0)
    clamped: bool = False  # parameters were pulled back into their valid ranges

    _AB_SLACK = 1e-9

    def __post_init__(self):
        if not 0.0 <= self.a <= 1.0:
            raise ValueError(f"a must be in [0,1], got {self.a}")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"b must be in [0,1], got {self.b}")
        if self.a + self.b > 1.0 + self._AB_SLACK:
            raise ValueError(f"a + b must not exceed 1, got {self.a + self.b}")
        if self.c < 0.0:
            raise ValueError(f"c must be >= 0, got {self.c}")
        if self.sse < 0.0:
            raise ValueError(f"sse must be >= 0, got {self.sse}")


# --- snapshot interchange format ------------------------------------------
#
# One JSON document per query x vertical x date:
#   {"query": ..., "vertical": "general"|"news", "date": "YYYY-MM-DD",
#    "links": [{"uri", "canonical_uri", "title", "page", "rank"}, ...]}
#
# Serialization is deterministic (fixed key order, 2-space indent, UTF-8,
# trailing newline) so stored documents are byte-stable across round trips.


def snapshot_to_json(snapshot: SerpSnapshot, *, compact: bool = False) -> str:
    doc = {
        "query": snapshot.query,
        "vertical": snapshot.vertical.value,
        "date": snapshot.date.isoformat(),
        "links": [
            {
                "uri": r.uri,
                "canonical_uri": r.canonical_uri,
                "title": r.title,
                "page": r.page,
                "rank": r.rank,
            }
            for r in snapshot.results
        ],
    }
    if compact:
        return json.dumps(doc, ensure_ascii=False, separators=(",", ":"))
    return json.dumps(doc, ensure_ascii=False, indent=2) + "\n"


def snapshot_from_json(text: str | bytes) -> SerpSnapshot:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SerpParseError(f"snapshot document is not valid JSON: {e}") from None
    try:
        results = tuple(
            SerpResult(
                uri=link["uri"],
                canonical_uri=link["canonical_uri"],
                title=link["title"],
                page=link["page"],
                rank=link["rank"],
            )
            for link in doc["links"]
        )
        return SerpSnapshot(
            query=doc["query"],
            vertical=Vertical.from_wire(doc["vertical"]),
            date=date.fromisoformat(doc["date"]),
            results=results,
        )
    except SerpParseError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise SerpParseError(f"snapshot document is malformed: {e}") from None


def results_from_links(links: Iterable[tuple[str, str, int]]) -> tuple[SerpResult, ...]:
    """Build ranked results from (uri, title, page) triples in extraction order."""
    out = []
    for rank, (uri, title, page) in enumerate(links, start=1):
        out.append(
            SerpResult(
                uri=uri,
                canonical_uri=canonicalize(uri),
                title=title,
                page=page,
                rank=rank,
            )
        )
    return tuple(out)
