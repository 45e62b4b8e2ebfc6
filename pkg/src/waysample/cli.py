"""Command-line pipeline: composable subcommands over files.

    filter      classify URL validity / aliases / wildcard flags
    classify    likely-HTML heuristic per URL
    fetch-first first-capture timestamp + MIME via the CDX API
    sample      bucket, tail-reduce, calibrate, downsample, select
    reintegrate randomized per-year quotas for a popular domain
    fetch       full TimeMaps via the pagination API (resumable)
    rehydrate   restore revisit statuses across a TimeMap directory
    stats       CSV reports (histograms, CCDFs, top domains, correlation)

Each subcommand writes a JSON run manifest recording parameters, seeds,
and per-stage counts so composed stages can be audited end to end.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from urllib.parse import quote

from . import client as client_mod
from . import sampler, stats, timemaps, urlfilter
from .cdx import (
    CdxParseError,
    Timestamp14,
    parse_timestamp,
    read_timemap,
    write_timemap,
)
from .config import PipelineConfig
from .surt import CanonicalUrl, SurtError, parse_url, surt_text_for_url


def _open_in(path: str):
    return sys.stdin if path == "-" else open(path, "r", encoding="utf-8")


def _open_out(path: str):
    return sys.stdout if path == "-" else open(path, "w", encoding="utf-8")


def _read_urls(path: str) -> list[str]:
    with _open_in(path) as fh:
        return [line.strip() for line in fh if line.strip()]


def _write_manifest(path: str | None, stage: str, params: dict, counts: dict,
                    started: float) -> None:
    if not path:
        return
    manifest = {
        "stage": stage,
        "params": params,
        "counts": counts,
        "elapsed_seconds": round(time.monotonic() - started, 3),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _make_client(cfg: PipelineConfig) -> client_mod.ArchiveClient:
    if not cfg.endpoint:
        raise SystemExit("configuration error: no CDX endpoint configured")
    return client_mod.ArchiveClient(
        base_url=cfg.endpoint,
        retry=client_mod.RetryPolicy(max_attempts=cfg.retry_cap,
                                     backoff_base=cfg.backoff_base),
        politeness_limit=cfg.politeness_limit,
        request_delay=cfg.request_delay,
        storage_dir=cfg.storage_dir,
    )


def _write_fetch_logs(path: str | None, logs) -> None:
    if not path:
        return
    with open(path, "w", encoding="utf-8") as fh:
        for entry in logs:
            fh.write(entry.to_tsv_line() + "\n")


def timemap_filename(url: str) -> str:
    """Filesystem-safe TimeMap filename derived from the URL's SURT key."""
    return quote(surt_text_for_url(url), safe="") + ".cdx"


# ---------------------------------------------------------------------------


def cmd_filter(args) -> int:
    started = time.monotonic()
    counts = {"input": 0, "valid": 0, "invalid": 0}
    with _open_in(args.input) as fin, _open_out(args.output) as fout:
        for line in fin:
            url = line.strip()
            if not url:
                continue
            counts["input"] += 1
            v = urlfilter.verdict(url)
            counts["valid" if v.valid else "invalid"] += 1
            fout.write(v.to_tsv_line() + "\n")
    _write_manifest(args.manifest, "filter", {}, counts, started)
    return 0


def cmd_classify(args) -> int:
    started = time.monotonic()
    counts = {"input": 0, "likely_html": 0, "other": 0}
    with _open_in(args.input) as fin, _open_out(args.output) as fout:
        for line in fin:
            url = line.strip()
            if not url:
                continue
            counts["input"] += 1
            try:
                heuristic = urlfilter.classify_likely_html(parse_url(url))
            except SurtError:
                heuristic = None
            counts["likely_html" if heuristic else "other"] += 1
            fout.write(f"{url}\t{heuristic.value if heuristic else '-'}\n")
    _write_manifest(args.manifest, "classify", {}, counts, started)
    return 0


def cmd_fetch_first(args) -> int:
    started = time.monotonic()
    cfg = PipelineConfig.load(args.config, {
        "endpoint": args.endpoint,
        "politeness_limit": args.politeness,
        "backoff_base": args.backoff_base,
    })
    cdx_client = _make_client(cfg)
    counts = {"input": 0, "archived": 0, "empty": 0, "skipped": 0, "error": 0}
    with _open_out(args.output) as fout:
        for url in _read_urls(args.input):
            counts["input"] += 1
            if not urlfilter.is_valid_url(url) or urlfilter.detect_wildcard(url):
                counts["skipped"] += 1
                fout.write(f"{url}\t-\t-\tskipped\n")
                continue
            try:
                record = cdx_client.fetch_first_record(url)
            except (client_mod.TransportError, client_mod.CdxResponseError):
                counts["error"] += 1
                fout.write(f"{url}\t-\t-\terror\n")
                continue
            if record is None:
                counts["empty"] += 1
                fout.write(f"{url}\t-\t-\tempty\n")
            else:
                counts["archived"] += 1
                fout.write(f"{url}\t{record.timestamp.raw}\t{record.mime}\tok\n")
    _write_fetch_logs(args.log, cdx_client.logs)
    _write_manifest(args.manifest, "fetch-first", cfg.to_dict(), counts, started)
    return 0


def _read_first_captures(path: str) -> list[tuple[CanonicalUrl, Timestamp14]]:
    entries = []
    with _open_in(path) as fh:
        for i, line in enumerate(fh):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) < 2:
                raise CdxParseError("expected at least url<TAB>timestamp", i + 1)
            url_text, ts = fields[0], fields[1]
            if ts == "-":
                continue
            try:
                entries.append((parse_url(url_text), parse_timestamp(ts)))
            except SurtError:
                continue
    return entries


def cmd_sample(args) -> int:
    started = time.monotonic()
    cfg = PipelineConfig.load(args.config, {
        "target": args.target,
        "c": args.c,
        "tail_threshold": args.tail_threshold,
        "tail_keep_fraction": args.tail_keep,
        "seed": args.seed,
        "endpoint": args.endpoint,
    })
    if not args.first_captures:
        raise SystemExit("configuration error: --first-captures file is required")
    entries = _read_first_captures(args.first_captures)
    counts: dict = {"input": len(entries)}

    # upsample: add roots for hosts seen only through deep links
    roots = sampler.extract_missing_roots(url for url, _ in entries)
    counts["missing_roots"] = len(roots)
    resolved_roots = 0
    if roots and cfg.endpoint:
        cdx_client = _make_client(cfg)
        for root in roots:
            try:
                record = cdx_client.fetch_first_record(root.text)
            except (client_mod.TransportError, client_mod.CdxResponseError):
                continue
            if record is not None:
                entries.append((root, record.timestamp))
                resolved_roots += 1
    counts["roots_added"] = resolved_roots

    result = sampler.bucket_by_first_year(entries)
    counts["dropped_pre_1996"] = result.dropped_pre_1996

    os.makedirs(args.out_dir, exist_ok=True)
    bucket_reports = []
    total_selected = 0
    for bucket in result.buckets:
        params = sampler.DownsampleParams(
            c=cfg.c, target=cfg.target,
            tail_threshold=cfg.tail_threshold,
            tail_keep_fraction=cfg.tail_keep_fraction,
            seed=cfg.seed,
        )
        reduced = sampler.reduce_long_tail(bucket, params)
        calibration = sampler.calibrate_k(reduced, cfg.c, cfg.target)
        run_params = sampler.DownsampleParams(
            k=calibration.k, c=cfg.c, target=cfg.target,
            tail_threshold=cfg.tail_threshold,
            tail_keep_fraction=cfg.tail_keep_fraction,
            seed=cfg.seed,
        )
        selected = 0
        out_path = os.path.join(args.out_dir, f"bucket_{bucket.label}.txt")
        with open(out_path, "w", encoding="utf-8") as fh:
            for domain in sorted(reduced.domains, key=lambda d: d.domain):
                k = sampler.downsample_count(domain.n_urls, run_params)
                for url in sampler.select_urls(domain, k, cfg.seed):
                    fh.write(url.text + "\n")
                selected += k
        total_selected += selected
        bucket_reports.append({
            "label": bucket.label,
            "domains": bucket.n_domains,
            "domains_after_tail": reduced.n_domains,
            "urls": bucket.n_urls,
            "k": calibration.k,
            "calibrated_total": calibration.total,
            "overshoot": calibration.overshoot,
            "selected": selected,
        })
    counts["buckets"] = bucket_reports
    counts["selected_total"] = total_selected
    _write_manifest(args.manifest or os.path.join(args.out_dir, "manifest.json"),
                    "sample", cfg.to_dict(), counts, started)
    return 0


def cmd_reintegrate(args) -> int:
    started = time.monotonic()
    cfg = PipelineConfig.load(args.config, {
        "endpoint": args.endpoint,
        "per_year_min": args.per_year_min,
        "seed": args.seed,
    })
    cdx_client = _make_client(cfg)
    first, last = (int(part) for part in args.years.split("-"))
    years = list(range(first, last + 1))
    candidates = []
    for url in _read_urls(args.input):
        try:
            candidates.append(parse_url(url))
        except SurtError:
            continue

    def lookup(url: CanonicalUrl) -> Timestamp14 | None:
        try:
            record = cdx_client.fetch_first_record(url.text)
        except (client_mod.TransportError, client_mod.CdxResponseError):
            return None
        return record.timestamp if record else None

    result = sampler.reintegrate_popular(
        args.domain, candidates, lookup, years, cfg.per_year_min, cfg.seed)
    with _open_out(args.output) as fout:
        for year in years:
            for url in result.per_year[year]:
                fout.write(f"{year}\t{url.text}\n")
    if result.exhausted:
        print(f"candidate pool exhausted before quotas met for years: "
              f"{result.unmet_years}", file=sys.stderr)
    counts = {
        "candidates": len(candidates),
        "per_year": {y: len(result.per_year[y]) for y in years},
        "unmet_years": result.unmet_years,
    }
    _write_fetch_logs(args.log, cdx_client.logs)
    _write_manifest(args.manifest, "reintegrate", cfg.to_dict(), counts, started)
    return 0


def cmd_fetch(args) -> int:
    started = time.monotonic()
    cfg = PipelineConfig.load(args.config, {
        "endpoint": args.endpoint,
        "politeness_limit": args.politeness,
        "backoff_base": args.backoff_base,
    })
    cdx_client = _make_client(cfg)
    os.makedirs(args.out_dir, exist_ok=True)
    counts = {"input": 0, "fetched": 0, "empty": 0, "resumed": 0,
              "skipped": 0, "error": 0}
    report_path = args.report or os.path.join(args.out_dir, "fetch_report.tsv")
    with open(report_path, "w", encoding="utf-8") as report:
        for url in _read_urls(args.input):
            counts["input"] += 1
            if not urlfilter.is_valid_url(url) or urlfilter.detect_wildcard(url):
                counts["skipped"] += 1
                report.write(f"{url}\tskipped\n")
                continue
            path = os.path.join(args.out_dir, timemap_filename(url))
            if os.path.exists(path):
                counts["resumed"] += 1
                report.write(f"{url}\tresumed\n")
                continue
            try:
                tm = cdx_client.fetch_timemap(url)
            except (client_mod.TransportError, client_mod.PartialFetchError):
                counts["error"] += 1
                report.write(f"{url}\terror\n")
                continue
            write_timemap(tm, path)
            if tm.records:
                counts["fetched"] += 1
                report.write(f"{url}\tok\n")
            else:
                counts["empty"] += 1
                report.write(f"{url}\tempty\n")
    _write_fetch_logs(args.log, cdx_client.logs)
    _write_manifest(args.manifest, "fetch", cfg.to_dict(), counts, started)
    return 0


def cmd_rehydrate(args) -> int:
    started = time.monotonic()
    capacity = args.capacity
    os.makedirs(args.out_dir, exist_ok=True)
    counts = {"timemaps": 0, "revisits_resolved": 0, "revisits_unresolved": 0}
    unresolved_path = args.unresolved or os.path.join(args.out_dir, "unresolved.tsv")
    with open(unresolved_path, "w", encoding="utf-8") as unresolved_out:
        for name in sorted(os.listdir(args.in_dir)):
            if not name.endswith(".cdx"):
                continue
            counts["timemaps"] += 1
            tm = read_timemap(os.path.join(args.in_dir, name))
            before = sum(1 for r in tm.records if r.is_revisit)
            hydrated, unresolved = timemaps.rehydrate(tm, capacity)
            counts["revisits_resolved"] += before - len(unresolved)
            counts["revisits_unresolved"] += len(unresolved)
            write_timemap(hydrated, os.path.join(args.out_dir, name))
            for pos in unresolved:
                record = tm.records[pos]
                unresolved_out.write(f"{record.urlkey}\t{pos}\t{record.digest}\n")
    _write_manifest(args.manifest, "rehydrate", {"capacity": capacity}, counts, started)
    return 0


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")


def cmd_stats(args) -> int:
    started = time.monotonic()
    os.makedirs(args.out_dir, exist_ok=True)
    counts: dict = {}

    if args.first_captures:
        histogram = stats.year_histogram(_read_first_captures(args.first_captures))
        _write_csv(os.path.join(args.out_dir, "first_capture_years.csv"),
                   ["year", "count"], histogram.items())
        counts["first_capture_years"] = sum(histogram.values())

    pre_counts = post_counts = None
    if args.urls:
        pre_counts = stats.domain_counts(
            parse_url(u) for u in _read_urls(args.urls) if urlfilter.is_valid_url(u))
        _write_csv(os.path.join(args.out_dir, "urls_per_domain_ccdf.csv"),
                   ["urls_per_domain", "percent_of_domains"],
                   stats.ccdf_points(pre_counts.values()))
        counts["domains_pre"] = len(pre_counts)
    if args.sampled:
        post_counts = stats.domain_counts(
            parse_url(u) for u in _read_urls(args.sampled) if urlfilter.is_valid_url(u))
        _write_csv(os.path.join(args.out_dir, "urls_per_domain_ccdf_sampled.csv"),
                   ["urls_per_domain", "percent_of_domains"],
                   stats.ccdf_points(post_counts.values()))
        counts["domains_post"] = len(post_counts)

    if pre_counts is not None and post_counts is not None:
        rows = []
        top_pre = stats.top_domains(pre_counts, args.top_n)
        for rank, (domain, n) in enumerate(top_pre, 1):
            rows.append((rank, domain, n, post_counts.get(domain, 0)))
        _write_csv(os.path.join(args.out_dir, "top_domains.csv"),
                   ["rank", "domain", "urls_pre", "urls_post"], rows)
        r = stats.rank_correlation(pre_counts, post_counts)
        _write_csv(os.path.join(args.out_dir, "rank_correlation.csv"),
                   ["pearson_r_of_ranks"], [(f"{r:.6f}",)])
        counts["rank_correlation"] = round(r, 6)

    if args.timemap_dir:
        memento_counts = []
        for name in sorted(os.listdir(args.timemap_dir)):
            if name.endswith(".cdx"):
                tm = read_timemap(os.path.join(args.timemap_dir, name))
                if tm.records:
                    memento_counts.append(len(tm.records))
        _write_csv(os.path.join(args.out_dir, "mementos_per_url_ccdf.csv"),
                   ["mementos_per_url", "percent_of_urls"],
                   stats.ccdf_points(memento_counts))
        counts["timemaps"] = len(memento_counts)

    _write_manifest(args.manifest, "stats", {"top_n": args.top_n}, counts, started)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="waysample",
        description="Longitudinal URL sampling pipeline over a CDX archive index.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--manifest", help="write a JSON run manifest here")
        p.add_argument("--config", help="JSON config file (flags override it)")

    p = sub.add_parser("filter", help="URL validity / alias / wildcard verdicts")
    p.add_argument("input", help="newline-delimited URLs ('-' for stdin)")
    p.add_argument("-o", "--output", default="-")
    add_common(p)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("classify", help="likely-HTML heuristic per URL")
    p.add_argument("input")
    p.add_argument("-o", "--output", default="-")
    add_common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("fetch-first", help="first capture timestamp+MIME per URL")
    p.add_argument("input")
    p.add_argument("-o", "--output", default="-")
    p.add_argument("--endpoint")
    p.add_argument("--politeness", type=int)
    p.add_argument("--backoff-base", type=float)
    p.add_argument("--log", help="write the fetch log TSV here")
    add_common(p)
    p.set_defaults(func=cmd_fetch_first)

    p = sub.add_parser("sample", help="bucket, downsample, and select URLs")
    p.add_argument("--first-captures", required=True,
                   help="TSV of url<TAB>timestamp (from fetch-first)")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--target", type=int)
    p.add_argument("--c", type=int)
    p.add_argument("--tail-threshold", type=int)
    p.add_argument("--tail-keep", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--endpoint", help="resolve first captures of upsampled roots")
    add_common(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("reintegrate", help="per-year quotas for a popular domain")
    p.add_argument("input", help="candidate URL list")
    p.add_argument("--domain", required=True)
    p.add_argument("-o", "--output", default="-")
    p.add_argument("--endpoint")
    p.add_argument("--years", default="2016-2021")
    p.add_argument("--per-year-min", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--log")
    add_common(p)
    p.set_defaults(func=cmd_reintegrate)

    p = sub.add_parser("fetch", help="full TimeMaps via the pagination API")
    p.add_argument("input")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--endpoint")
    p.add_argument("--politeness", type=int)
    p.add_argument("--backoff-base", type=float)
    p.add_argument("--report")
    p.add_argument("--log")
    add_common(p)
    p.set_defaults(func=cmd_fetch)

    p = sub.add_parser("rehydrate", help="restore revisit statuses in TimeMaps")
    p.add_argument("--in-dir", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--capacity", type=int, default=1000)
    p.add_argument("--unresolved", help="unresolved-revisit report TSV")
    add_common(p)
    p.set_defaults(func=cmd_rehydrate)

    p = sub.add_parser("stats", help="emit CSV statistics")
    p.add_argument("--first-captures")
    p.add_argument("--urls", help="pre-downsampling URL list")
    p.add_argument("--sampled", help="post-downsampling URL list")
    p.add_argument("--timemap-dir")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--top-n", type=int, default=20)
    add_common(p)
    p.set_defaults(func=cmd_stats)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
