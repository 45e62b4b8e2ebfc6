"""CDX API client: first-record queries, page counts, paginated TimeMap
fetches, retries with exponential backoff, a politeness ceiling on
concurrent requests, and content-addressed raw-response persistence.

Safe for concurrent use; per-URL fetches are independent tasks coordinated
only by the politeness semaphore.
"""

from __future__ import annotations

import hashlib
import os
import random
import threading
import time
from dataclasses import dataclass, field

import requests

from .cdx import CdxRecord, TimeMap, parse_cdx_line
from .timemaps import merge_pages

TRANSIENT_STATUS_MIN = 500


@dataclass(frozen=True)
class CdxQuery:
    url: str
    limit: int | None = None
    page: int | None = None
    show_num_pages: bool = False

    def __post_init__(self):
        if self.show_num_pages and (self.page is not None or self.limit is not None):
            raise ValueError("showNumPages excludes page/limit in the same request")

    def params(self) -> dict[str, str]:
        params = {"url": self.url}
        if self.limit is not None:
            params["limit"] = str(self.limit)
        if self.page is not None:
            params["page"] = str(self.page)
        if self.show_num_pages:
            params["showNumPages"] = "true"
        return params


@dataclass(frozen=True)
class FetchLog:
    query: CdxQuery
    http_status: int
    attempt: int
    duration: float
    stored_at: str | None = None

    def to_tsv_line(self) -> str:
        q = self.query
        page = "-" if q.page is None else str(q.page)
        kind = "numpages" if q.show_num_pages else ("limit" if q.limit else "page")
        return (f"{q.url}\t{kind}\t{page}\t{self.http_status}"
                f"\t{self.attempt}\t{self.duration:.6f}\t{self.stored_at or '-'}")


class TransportError(RuntimeError):
    def __init__(self, message: str, last_status: int | None = None):
        super().__init__(message)
        self.last_status = last_status


class PartialFetchError(RuntimeError):
    def __init__(self, url: str, missing_pages: list[int]):
        super().__init__(f"pages {missing_pages} permanently failed for {url}")
        self.url = url
        self.missing_pages = missing_pages


class CdxResponseError(RuntimeError):
    def __init__(self, message: str, stored_at: str | None = None):
        super().__init__(message)
        self.stored_at = stored_at


@dataclass
class RetryPolicy:
    """Retry on 5xx and connection failures only; 4xx is permanent.
    Backoff doubles from the base with jitter, capped at max_attempts."""

    max_attempts: int = 5
    backoff_base: float = 1.0
    jitter: float = 0.25

    def delay(self, attempt: int, rng: random.Random) -> float:
        base = self.backoff_base * (2 ** (attempt - 1))
        return base * (1.0 + self.jitter * rng.random())


@dataclass
class ArchiveClient:
    base_url: str
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    politeness_limit: int = 4
    request_delay: float = 0.0
    storage_dir: str | None = None
    timeout: float = 30.0

    def __post_init__(self):
        self._semaphore = threading.BoundedSemaphore(self.politeness_limit)
        self._log_lock = threading.Lock()
        self._logs: list[FetchLog] = []
        self._session = requests.Session()
        self._rng = random.Random()

    @property
    def logs(self) -> list[FetchLog]:
        with self._log_lock:
            return list(self._logs)

    def _store_body(self, body: bytes) -> str | None:
        if self.storage_dir is None:
            return None
        digest = hashlib.sha256(body).hexdigest()
        shard = os.path.join(self.storage_dir, digest[:2])
        os.makedirs(shard, exist_ok=True)
        path = os.path.join(shard, digest)
        if not os.path.exists(path):
            tmp = f"{path}.tmp.{os.getpid()}"
            with open(tmp, "wb") as fh:
                fh.write(body)
            os.replace(tmp, path)
        return path

    def _log(self, entry: FetchLog) -> None:
        with self._log_lock:
            self._logs.append(entry)

    def _get(self, query: CdxQuery) -> str:
        """One logical request: retries transient failures, logs every
        attempt, persists each received body."""
        last_status: int | None = None
        for attempt in range(1, self.retry.max_attempts + 1):
            with self._semaphore:
                start = time.monotonic()
                status = 0
                body = b""
                try:
                    resp = self._session.get(
                        self.base_url, params=query.params(), timeout=self.timeout
                    )
                    status = resp.status_code
                    body = resp.content
                except requests.RequestException:
                    status = 0
                duration = time.monotonic() - start
                stored_at = self._store_body(body) if body else None
                self._log(FetchLog(query, status, attempt, duration, stored_at))
                if self.request_delay:
                    time.sleep(self.request_delay)
            if 200 <= status < 300:
                return body.decode("utf-8")
            last_status = status
            if 400 <= status < TRANSIENT_STATUS_MIN:
                raise TransportError(
                    f"permanent HTTP {status} for {query.params()}", status)
            if attempt < self.retry.max_attempts:
                time.sleep(self.retry.delay(attempt, self._rng))
        raise TransportError(
            f"gave up after {self.retry.max_attempts} attempts "
            f"for {query.params()} (last status {last_status})",
            last_status,
        )

    def fetch_first_record(self, url: str) -> CdxRecord | None:
        """First capture of a URL via a limit-1 query; None when the
        response body is empty (unarchived URL)."""
        body = self._get(CdxQuery(url, limit=1))
        line = body.strip().splitlines()[0] if body.strip() else None
        if line is None:
            return None
        try:
            return parse_cdx_line(line)
        except ValueError as exc:
            stored_at = self._store_body(body.encode("utf-8"))
            raise CdxResponseError(
                f"unparseable CDX body for {url!r} (raw body at {stored_at})",
                stored_at,
            ) from exc

    def fetch_page_count(self, url: str) -> int:
        body = self._get(CdxQuery(url, show_num_pages=True)).strip()
        try:
            count = int(body)
        except ValueError as exc:
            raise CdxResponseError(f"non-integer page count {body!r} for {url!r}") from exc
        if count < 0:
            raise CdxResponseError(f"negative page count for {url!r}")
        return count

    def fetch_timemap(self, url: str) -> TimeMap:
        """Full TimeMap via the pagination protocol: page count first, then
        every page, merged. Any permanently failing page raises instead of
        silently truncating."""
        n_pages = self.fetch_page_count(url)
        pages: list[list[CdxRecord]] = []
        missing: list[int] = []
        for page_no in range(n_pages):
            try:
                body = self._get(CdxQuery(url, page=page_no))
            except TransportError:
                missing.append(page_no)
                continue
            records = [
                parse_cdx_line(line, line_no=i + 1)
                for i, line in enumerate(body.splitlines())
                if line.strip()
            ]
            pages.append(records)
        if missing:
            raise PartialFetchError(url, missing)
        tm = merge_pages(pages) if pages else TimeMap(url, [])
        return TimeMap(url, tm.records)
