"""Sampling mathematics for the URL pipeline.

Skip-list index sampling, the inclusion-probability model, first-capture
year bucketing (with the 1996-2000 merge and pre-1996 rejection), missing
root-URL upsampling, popular-domain reintegration, long-tail reduction,
logarithmic downsampling with K calibration, and deterministic per-domain
URL selection.

All randomized operations derive their random stream from (seed, domain)
so parallel scheduling cannot change results.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator

from .cdx import Timestamp14
from .surt import CanonicalUrl, strip_www_prefix
from .urlfilter import trim_to_root

FIRST_ARCHIVE_YEAR = 1996
EARLY_YEARS_END = 2000
EARLY_BUCKET_LABEL = "1996-2000"


@dataclass(frozen=True)
class DownsampleParams:
    """Knobs of the per-bucket downsampling equation and tail reduction."""

    k: float = 1.0
    c: int = 1
    target: int = 1_000_000
    tail_threshold: int = 900_000
    tail_keep_fraction: float = 0.10
    seed: int = 0

    def __post_init__(self):
        if self.c < 1:
            raise ValueError("C must be >= 1")
        if self.k <= 0:
            raise ValueError("K must be positive")
        if not (0 < self.tail_keep_fraction <= 1):
            raise ValueError("tail_keep_fraction must be in (0, 1]")


@dataclass
class DomainCount:
    domain: str
    urls: list[CanonicalUrl] = field(default_factory=list)

    @property
    def n_urls(self) -> int:
        return len(self.urls)

    @property
    def root(self) -> CanonicalUrl | None:
        for url in self.urls:
            if url.is_root:
                return url
        return None


@dataclass
class YearBucket:
    label: str
    domains: list[DomainCount] = field(default_factory=list)

    @property
    def n_domains(self) -> int:
        return len(self.domains)

    @property
    def n_urls(self) -> int:
        return sum(d.n_urls for d in self.domains)


def domain_key(host: str) -> str:
    """The Eq.-style domain key: hostname with www-class prefix stripped."""
    while True:
        stripped = strip_www_prefix(host)
        if stripped == host:
            return host
        host = stripped


def skip_sample(records: Iterable, interval: int, phase: int = 0) -> Iterator:
    """Emit stream items at positions congruent to phase modulo interval."""
    if interval < 1:
        raise ValueError("interval must be >= 1")
    if not (0 <= phase < interval):
        raise ValueError("phase must satisfy 0 <= phase < interval")
    for pos, record in enumerate(records):
        if pos % interval == phase:
            yield record


def inclusion_probability(memento_count: int, interval: int) -> float:
    """Probability a URL with the given contiguous memento count lands in a
    skip-sampled index: linear in the count, capped at 1."""
    if interval < 1:
        raise ValueError("interval must be >= 1")
    if memento_count < 0:
        raise ValueError("memento_count must be >= 0")
    return min(1.0, memento_count / interval)


def year_bucket_label(year: int) -> str | None:
    """Bucket label for a first-capture year; None for pre-1996 years."""
    if year < FIRST_ARCHIVE_YEAR:
        return None
    if year <= EARLY_YEARS_END:
        return EARLY_BUCKET_LABEL
    return str(year)


@dataclass
class BucketingResult:
    buckets: list[YearBucket]
    dropped_pre_1996: int


def bucket_by_first_year(
    entries: Iterable[tuple[CanonicalUrl, Timestamp14]],
) -> BucketingResult:
    """Group URLs by first-capture year: pre-1996 dropped and counted,
    1996-2000 merged into one bucket, each later year on its own."""
    by_label: dict[str, dict[str, DomainCount]] = {}
    dropped = 0
    for url, first_capture in entries:
        label = year_bucket_label(first_capture.year)
        if label is None:
            dropped += 1
            continue
        domains = by_label.setdefault(label, {})
        key = domain_key(url.host)
        dc = domains.get(key)
        if dc is None:
            dc = domains[key] = DomainCount(key)
        if url not in dc.urls:
            dc.urls.append(url)
    buckets = [
        YearBucket(label, [domains[k] for k in sorted(domains)])
        for label, domains in sorted(by_label.items())
    ]
    return BucketingResult(buckets, dropped)


def extract_missing_roots(urls: Iterable[CanonicalUrl]) -> list[CanonicalUrl]:
    """One root URL per host that appears only via deep links."""
    hosts_with_root: set[str] = set()
    roots_by_host: dict[str, CanonicalUrl] = {}
    for url in urls:
        if url.is_root:
            hosts_with_root.add(url.host)
            roots_by_host.pop(url.host, None)
        elif url.host not in hosts_with_root and url.host not in roots_by_host:
            roots_by_host[url.host] = trim_to_root(url)
    return list(roots_by_host.values())


@dataclass
class ReintegrationResult:
    per_year: dict[int, list[CanonicalUrl]]
    unmet_years: list[int]

    @property
    def exhausted(self) -> bool:
        return bool(self.unmet_years)


def reintegrate_popular(
    domain: str,
    candidate_urls: Iterable[CanonicalUrl],
    first_capture_lookup: Callable[[CanonicalUrl], Timestamp14 | None],
    years: list[int],
    per_year_min: int,
    seed: int,
) -> ReintegrationResult:
    """Randomly draw candidates without replacement until every requested
    year has at least per_year_min URLs, resolving each draw's first-capture
    year through the lookup.

    If the pool runs out first, the partial result names the unmet years.
    """
    if per_year_min < 1:
        raise ValueError("per_year_min must be >= 1")
    rng = random.Random(f"{seed}|reintegrate|{domain}")
    pool = list(candidate_urls)
    rng.shuffle(pool)
    wanted = set(years)
    per_year: dict[int, list[CanonicalUrl]] = {y: [] for y in years}
    for url in pool:
        if all(len(per_year[y]) >= per_year_min for y in years):
            break
        first = first_capture_lookup(url)
        if first is None:
            continue
        if first.year in wanted:
            per_year[first.year].append(url)
    unmet = sorted(y for y in years if len(per_year[y]) < per_year_min)
    return ReintegrationResult(per_year, unmet)


def reduce_long_tail(bucket: YearBucket, params: DownsampleParams,
                     rng: random.Random | None = None) -> YearBucket:
    """When a bucket holds more distinct domains than the tail threshold,
    uniformly retain tail_keep_fraction of its single-URL domains."""
    if bucket.n_domains <= params.tail_threshold:
        return bucket
    if rng is None:
        rng = random.Random(f"{params.seed}|tail|{bucket.label}")
    singles = [d for d in bucket.domains if d.n_urls == 1]
    if not singles:
        return bucket
    keep_n = round(len(singles) * params.tail_keep_fraction)
    kept = set(
        d.domain for d in rng.sample(sorted(singles, key=lambda d: d.domain), keep_n)
    )
    domains = [d for d in bucket.domains if d.n_urls > 1 or d.domain in kept]
    return YearBucket(bucket.label, domains)


def _round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5)) if x >= 0 else int(math.ceil(x - 0.5))


def downsample_count(n: int, params: DownsampleParams) -> int:
    """Reduced URL count for a domain with n URLs:
    min(n, round(K * ln(n) + C)), rounding half away from zero."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return min(n, _round_half_away(params.k * math.log(n) + params.c))


@dataclass
class CalibrationResult:
    k: int
    total: int
    overshoot: bool


def _bucket_total(counts: list[int], k: int, c: int) -> int:
    params = DownsampleParams(k=k, c=c)
    return sum(downsample_count(n, params) for n in counts)


def calibrate_k(bucket: YearBucket, c: int, target: int) -> CalibrationResult:
    """Smallest integer K >= 1 whose reduced-URL total equals the largest
    achievable total not exceeding the target.

    The total is nondecreasing in K, so binary search applies. If even
    K = 1 overshoots the target, K = 1 is returned with the overshoot
    flag set.
    """
    if not bucket.domains:
        raise ValueError("bucket has no domains")
    counts = [d.n_urls for d in bucket.domains]
    max_total = sum(counts)
    t1 = _bucket_total(counts, 1, c)
    if t1 > target:
        return CalibrationResult(1, t1, overshoot=True)
    if max_total <= target:
        best_total = max_total
    else:
        # find the largest K whose total still fits under the target
        lo, hi = 1, 2
        while _bucket_total(counts, hi, c) <= target:
            lo, hi = hi, hi * 2
        while lo + 1 < hi:
            mid = (lo + hi) // 2
            if _bucket_total(counts, mid, c) <= target:
                lo = mid
            else:
                hi = mid
        best_total = _bucket_total(counts, lo, c)
    # smallest K reaching that total (ties collapse toward the smallest K)
    lo, hi = 1, 2
    while _bucket_total(counts, hi, c) < best_total:
        lo, hi = hi, hi * 2
    if _bucket_total(counts, 1, c) >= best_total:
        return CalibrationResult(1, _bucket_total(counts, 1, c), overshoot=False)
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if _bucket_total(counts, mid, c) >= best_total:
            hi = mid
        else:
            lo = mid
    return CalibrationResult(hi, _bucket_total(counts, hi, c), overshoot=False)


def select_urls(domain: DomainCount, k: int, seed: int) -> list[CanonicalUrl]:
    """Pick k URLs from a domain: the root URL always included when present,
    the rest chosen by single-pass reservoir selection.

    Deterministic under a fixed seed regardless of scheduling.
    """
    if k == 0:
        raise ValueError("k must be >= 1 (C >= 1 forbids zero selections)")
    if k > domain.n_urls:
        raise ValueError(f"k={k} exceeds domain URL count {domain.n_urls}")
    rng = random.Random(f"{seed}|select|{domain.domain}")
    root = domain.root
    selected: list[CanonicalUrl] = []
    remaining = k
    if root is not None:
        selected.append(root)
        remaining -= 1
    reservoir: list[CanonicalUrl] = []
    seen = 0
    for url in domain.urls:
        if root is not None and url is root:
            continue
        if seen < remaining:
            reservoir.append(url)
        else:
            j = rng.randrange(seen + 1)
            if j < remaining:
                reservoir[j] = url
        seen += 1
    return selected + reservoir
