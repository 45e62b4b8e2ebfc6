"""Streaming toolkit for sampling URLs from a Wayback-style CDX archive index."""

__version__ = "0.1.0"
