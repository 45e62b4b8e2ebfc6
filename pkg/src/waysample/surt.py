"""URL <-> SURT key conversion.

SURT (Sort-friendly URI Reordering Transform) keys reverse the hostname
labels and comma-join them so that all keys of a registered domain sort
contiguously, e.g. ``https://example.com/page`` -> ``com,example)/page``.

Canonicalization drops the scheme, port, fragment, and any leading
``www``-class label -- but the ``www`` label is only stripped when the
hostname carries at least two dots, so single-dot hosts like
``www3288.com`` keep their identity instead of collapsing into ``com)/``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from urllib.parse import urlsplit

SCHEMES = ("http", "https")

_WWW_PREFIX_RE = re.compile(r"^www\d*\.")
# host labels may not be empty or contain SURT structural characters
_BAD_LABEL_RE = re.compile(r"[,)\s]")


class SurtError(ValueError):
    """Base class for URL/SURT conversion failures."""


class MalformedSurtError(SurtError):
    """A SURT key that does not follow the ``labels)/path`` shape."""


class UrlConversionError(SurtError):
    """A URL that cannot be canonicalized into a SURT key."""


@dataclass(frozen=True)
class CanonicalUrl:
    """A canonicalized http(s) URL: lowercase host, no port, no fragment."""

    scheme: str
    host: str
    path: str = "/"
    query: str | None = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise UrlConversionError(f"unsupported scheme: {self.scheme!r}")
        if not self.host or "*" in self.host:
            raise UrlConversionError(f"invalid host: {self.host!r}")
        if not self.path.startswith("/"):
            raise UrlConversionError(f"path must start with '/': {self.path!r}")

    @property
    def text(self) -> str:
        url = f"{self.scheme}://{self.host}{self.path}"
        if self.query is not None:
            url += f"?{self.query}"
        return url

    @property
    def is_root(self) -> bool:
        return self.path == "/" and self.query is None


@dataclass(frozen=True)
class SurtKey:
    """A SURT key: reversed host labels, path, and optional query."""

    host_segments: tuple[str, ...]
    path: str = "/"
    query: str | None = None

    def __post_init__(self):
        if not self.host_segments:
            raise MalformedSurtError("SURT key has no host labels")
        for label in self.host_segments:
            if not label or _BAD_LABEL_RE.search(label) or label != label.lower():
                raise MalformedSurtError(f"bad host label: {label!r}")
        if not self.path.startswith("/"):
            raise MalformedSurtError(f"SURT path must start with '/': {self.path!r}")

    @property
    def text(self) -> str:
        key = ",".join(self.host_segments) + ")" + self.path
        if self.query is not None:
            key += f"?{self.query}"
        return key

    def __str__(self) -> str:
        return self.text


def parse_url(url: str) -> CanonicalUrl:
    """Parse and canonicalize an http(s) URL.

    Lowercases the host, drops the port and fragment, defaults an empty
    path to ``/``, and preserves the path/query percent-encoding verbatim.
    Raises UrlConversionError for anything that is not a plain web URL.
    """
    try:
        parts = urlsplit(url)
        host = parts.hostname
    except ValueError as exc:
        raise UrlConversionError(f"unparseable URL: {url!r}") from exc
    scheme = parts.scheme.lower()
    if scheme not in SCHEMES:
        raise UrlConversionError(f"unsupported scheme in {url!r}")
    if not host:
        raise UrlConversionError(f"missing host in {url!r}")
    query = parts.query if parts.query else None
    return CanonicalUrl(scheme, host.lower(), parts.path or "/", query)


def strip_www_prefix(host: str) -> str:
    """Drop a leading ``www`` / ``www<digits>`` label, but only when the
    host contains at least two dots.

    Single-dot hosts such as ``www3288.com`` are returned unchanged so
    distinct domains are never conflated.
    """
    if host.count(".") < 2:
        return host
    m = _WWW_PREFIX_RE.match(host)
    if m and m.end() < len(host):
        return host[m.end():]
    return host


def url_to_surt(url: CanonicalUrl) -> SurtKey:
    """Convert a canonical URL into its SURT key.

    Scheme and ``www``-class prefixes never affect the result; stripping
    runs to a fixpoint so stacked prefixes (www.www.example.com) also
    canonicalize.
    """
    host = url.host
    while True:
        stripped = strip_www_prefix(host)
        if stripped == host:
            break
        host = stripped
    labels = host.split(".")
    for label in labels:
        if not label or _BAD_LABEL_RE.search(label):
            raise UrlConversionError(f"malformed host label {label!r} in {url.host!r}")
    return SurtKey(tuple(reversed(labels)), url.path, url.query)


def parse_surt(key: str) -> SurtKey:
    """Parse the textual SURT form ``label1,label2,...)/path[?query]``."""
    idx = key.find(")")
    if idx < 0:
        raise MalformedSurtError(f"no ')' separator in SURT: {key!r}")
    host_part, rest = key[:idx], key[idx + 1:]
    if rest == "":
        rest = "/"
    if not rest.startswith("/"):
        raise MalformedSurtError(f"SURT path does not start with '/': {key!r}")
    if "?" in rest:
        path, query = rest.split("?", 1)
    else:
        path, query = rest, None
    return SurtKey(tuple(host_part.split(",")), path, query)


def surt_to_url(surt: SurtKey | str, scheme: str = "https") -> CanonicalUrl:
    """Convert a SURT key back into a URL under the given scheme.

    Inverse of url_to_surt up to scheme and www prefix.
    """
    if isinstance(surt, str):
        surt = parse_surt(surt)
    host = ".".join(reversed(surt.host_segments))
    return CanonicalUrl(scheme, host, surt.path, surt.query)


def surt_text_for_url(url: str) -> str:
    """Textual SURT key for a raw URL string."""
    return url_to_surt(parse_url(url)).text
