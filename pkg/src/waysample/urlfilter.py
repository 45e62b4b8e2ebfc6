"""URL classification and filtering predicates.

Validity, likely-HTML extension heuristics, session-ID aliases, index-file
aliases, trailing-asterisk wildcards, and root trimming. All predicates
are stateless and safe to run over URL streams in parallel.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass

from .surt import CanonicalUrl, SurtError, parse_url


class Heuristic(enum.Enum):
    """The extension heuristics used to flag likely HTML pages."""

    TrailingSlashNoExt = "trailing-slash-no-ext"
    Do = ".do"
    PhpN = ".php[0-9]"
    Aspx = ".aspx"
    Cgi = ".cgi"
    Pl = ".pl"
    Asp = ".asp"
    Jsp = ".jsp"
    Cfm = ".cfm"
    XHtmlFamily = ".[a-z]html"
    Htm = ".htm"


# explicit extensions first; trailing-slash/no-extension is the fallback row
_EXTENSION_PATTERNS: list[tuple[Heuristic, re.Pattern]] = [
    (Heuristic.Do, re.compile(r"\.do$", re.I)),
    (Heuristic.PhpN, re.compile(r"\.php[0-9]?$", re.I)),
    (Heuristic.Aspx, re.compile(r"\.aspx$", re.I)),
    (Heuristic.Cgi, re.compile(r"\.cgi$", re.I)),
    (Heuristic.Pl, re.compile(r"\.pl$", re.I)),
    (Heuristic.Asp, re.compile(r"\.asp$", re.I)),
    (Heuristic.Jsp, re.compile(r"\.jsp$", re.I)),
    (Heuristic.Cfm, re.compile(r"\.cfm$", re.I)),
    (Heuristic.XHtmlFamily, re.compile(r"\.[a-z]?html$", re.I)),
    (Heuristic.Htm, re.compile(r"\.htm$", re.I)),
]

# session-ID shapes, matched case-insensitively against the full URL text
# so both query-string and path-parameter placements are caught
_SESSION_PATTERNS = [
    re.compile(r"^(.*)(?:jsessionid=[0-9a-zA-Z]{32})(?:&(.*))?$", re.I),
    re.compile(r"^(.*)(?:phpsessid=[0-9a-zA-Z]{32})(?:&(.*))?$", re.I),
    re.compile(r"^(.*)(?:sid=[0-9a-zA-Z]{32})(?:&(.*))?$", re.I),
    re.compile(r"^(.*)(?:ASPSESSIONID[a-zA-Z]{8}=[a-zA-Z]{24})(?:&(.*))?$", re.I),
    re.compile(r"^(.*)(?:cfid=[^&]+&cftoken=[^&]+)(?:&(.*))?$", re.I),
]

_INDEX_ALIAS_RE = re.compile(r"^index\.[a-zA-Z]+$")


@dataclass(frozen=True)
class FilterVerdict:
    url: str
    valid: bool
    likely_html: Heuristic | None
    session_alias: bool
    index_alias: bool
    wildcard: bool

    def to_tsv_line(self) -> str:
        heuristic = self.likely_html.value if self.likely_html else "-"
        flags = "".join(
            flag if cond else "-"
            for flag, cond in (("s", self.session_alias),
                               ("i", self.index_alias),
                               ("w", self.wildcard))
        )
        return f"{self.url}\t{int(self.valid)}\t{heuristic}\t{flags}"


def is_valid_url(url: str) -> bool:
    """False for URLs with an empty or wildcard host, or that fail to parse."""
    try:
        parse_url(url)
    except SurtError:
        return False
    return True


def _last_path_segment(url: CanonicalUrl) -> str:
    return url.path.rsplit("/", 1)[-1]


def classify_likely_html(url: CanonicalUrl) -> Heuristic | None:
    """Match the last path segment (query ignored) against the extension
    heuristics; None for any other extension (.jpg, .js, .gif, ...)."""
    segment = _last_path_segment(url)
    if segment == "" or "." not in segment:
        return Heuristic.TrailingSlashNoExt
    for heuristic, pattern in _EXTENSION_PATTERNS:
        if pattern.search(segment):
            return heuristic
    return None


def detect_session_alias(url: str) -> tuple[bool, str]:
    """Detect a session-ID token anywhere in the URL.

    Returns (matched, stripped) where stripped removes the token and any
    dangling ``?``/``&``/``;`` separators; idempotent by construction.
    """
    for pattern in _SESSION_PATTERNS:
        m = pattern.match(url)
        if m:
            before, after = m.group(1), m.group(2)
            if after:
                stripped = before + after
            else:
                stripped = before.rstrip("&;?")
            return True, stripped
    return False, url


def detect_index_alias(url: CanonicalUrl) -> bool:
    """True iff the final path segment is ``index.`` plus one or more letters."""
    return bool(_INDEX_ALIAS_RE.match(_last_path_segment(url)))


def detect_wildcard(url: str) -> bool:
    """True iff the URL's last character is a literal (unencoded) asterisk."""
    return url.endswith("*")


def trim_to_root(url: CanonicalUrl) -> CanonicalUrl:
    """Scheme + host + ``/`` with path and query removed."""
    return CanonicalUrl(url.scheme, url.host, "/", None)


def verdict(url: str) -> FilterVerdict:
    """Full classification of one raw URL string."""
    session_alias, _ = detect_session_alias(url)
    wildcard = detect_wildcard(url)
    try:
        canonical = parse_url(url)
    except SurtError:
        return FilterVerdict(url, False, None, session_alias, False, wildcard)
    return FilterVerdict(
        url=url,
        valid=True,
        likely_html=classify_likely_html(canonical),
        session_alias=session_alias,
        index_alias=detect_index_alias(canonical),
        wildcard=wildcard,
    )
