"""TimeMap post-processing.

Revisit rehydration with a bounded LRU digest cache, page merging,
first-capture extraction, index-alias first-capture comparison, and
revisit-distance measurement. One TimeMap is processed by one worker;
the LRU pass is inherently sequential.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, replace

from .cdx import (
    REVISIT_MIME,
    CdxRecord,
    EmptyTimeMapError,
    MixedKeyError,
    TimeMap,
    Timestamp14,
)

DEFAULT_CACHE_CAPACITY = 1000


@dataclass(frozen=True)
class RevisitGap:
    revisit_index: int
    source_index: int

    @property
    def distance(self) -> int:
        return self.revisit_index - self.source_index


class LruDigestCache:
    """digest -> most recent full CdxRecord, bounded by capacity with
    least-recently-accessed eviction."""

    def __init__(self, capacity: int = DEFAULT_CACHE_CAPACITY):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._entries: OrderedDict[str, CdxRecord] = OrderedDict()

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, digest: str) -> CdxRecord | None:
        record = self._entries.get(digest)
        if record is not None:
            self._entries.move_to_end(digest)
        return record

    def put(self, digest: str, record: CdxRecord) -> None:
        if digest in self._entries:
            self._entries.move_to_end(digest)
        self._entries[digest] = record
        if len(self._entries) > self.capacity:
            self._entries.popitem(last=False)


def _is_full_record(record: CdxRecord) -> bool:
    # only true full captures feed the cache; already-rehydrated revisit
    # rows keep their marker MIME and are skipped, which makes the pass
    # idempotent
    return record.status != "-" and not record.mime_is_revisit


def rehydrate(
    tm: TimeMap, capacity: int = DEFAULT_CACHE_CAPACITY
) -> tuple[TimeMap, list[int]]:
    """Restore revisit-record statuses from earlier records sharing their
    content digest, in a single forward pass over the TimeMap.

    A resolved revisit gains the source's status and carries the source
    MIME as ``warc/revisit;orig=<mime>`` so provenance survives. Cache
    misses are left untouched and reported as positions, not failures.
    """
    cache = LruDigestCache(capacity)
    out: list[CdxRecord] = []
    unresolved: list[int] = []
    for i, record in enumerate(tm.records):
        if _is_full_record(record):
            cache.put(record.digest, record)
            out.append(record)
        elif record.is_revisit:
            source = cache.get(record.digest)
            if source is None:
                unresolved.append(i)
                out.append(record)
            else:
                out.append(replace(
                    record,
                    status=source.status,
                    mime=f"{REVISIT_MIME};orig={source.mime}",
                ))
        else:
            out.append(record)
    return TimeMap(tm.uri_r, out), unresolved


def revisit_gaps(tm: TimeMap) -> list[RevisitGap]:
    """Gap between each resolvable revisit record and the nearest prior
    full record with the same digest (unbounded lookback)."""
    last_seen: dict[str, int] = {}
    gaps: list[RevisitGap] = []
    for i, record in enumerate(tm.records):
        if _is_full_record(record):
            last_seen[record.digest] = i
        elif record.is_revisit and record.digest in last_seen:
            gaps.append(RevisitGap(i, last_seen[record.digest]))
    return gaps


def max_revisit_distance(tm: TimeMap) -> int:
    """Maximum resolvable revisit gap in lines; 0 when none exist."""
    gaps = revisit_gaps(tm)
    return max((g.distance for g in gaps), default=0)


def merge_pages(pages: list[list[CdxRecord]]) -> TimeMap:
    """Concatenate paginated record lists into one timestamp-sorted TimeMap
    with exact-duplicate lines removed."""
    keys = {r.urlkey for page in pages for r in page}
    if len(keys) > 1:
        raise MixedKeyError(f"pages mix urlkeys: {sorted(keys)}")
    seen: set[str] = set()
    records: list[CdxRecord] = []
    for page in pages:
        for record in page:
            line = record.to_line()
            if line not in seen:
                seen.add(line)
                records.append(record)
    uri_r = records[0].original if records else ""
    return TimeMap(uri_r, records)


def first_capture(tm: TimeMap) -> tuple[Timestamp14, str]:
    """Timestamp and MIME of the earliest record."""
    if not tm.records:
        raise EmptyTimeMapError(f"no capture history for {tm.uri_r!r}")
    earliest = tm.records[0]
    return earliest.timestamp, earliest.mime


@dataclass(frozen=True)
class AliasComparison:
    alias_uri: str
    alias_year: int | None
    root_year: int
    alias_earlier: bool
    skipped: bool


def compare_alias_first_capture(
    root: TimeMap, aliases: list[TimeMap]
) -> list[AliasComparison]:
    """Per index alias, report whether its first capture year precedes the
    root URL's first capture year. Empty alias histories are skipped."""
    root_ts, _ = first_capture(root)
    report = []
    for alias in aliases:
        if not alias.records:
            report.append(AliasComparison(alias.uri_r, None, root_ts.year,
                                          alias_earlier=False, skipped=True))
            continue
        alias_ts, _ = first_capture(alias)
        report.append(AliasComparison(
            alias.uri_r, alias_ts.year, root_ts.year,
            alias_earlier=alias_ts.year < root_ts.year, skipped=False,
        ))
    return report
