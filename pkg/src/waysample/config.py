"""Pipeline configuration: a JSON config file plus per-flag overrides
(flags win). Defaults follow the published pipeline constants: 6000-line
skip interval, C=1, 900,000-domain tail threshold, 90% tail cut, a
1000-record rehydration cache, and a 20-URL per-year reintegration floor.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields


@dataclass
class PipelineConfig:
    interval: int = 6000
    scheme: str = "https"
    target: int = 1_000_000
    c: int = 1
    tail_threshold: int = 900_000
    tail_keep_fraction: float = 0.10
    cache_capacity: int = 1000
    per_year_min: int = 20
    seed: int = 0
    endpoint: str | None = None
    politeness_limit: int = 4
    retry_cap: int = 5
    backoff_base: float = 1.0
    request_delay: float = 0.0
    storage_dir: str | None = None

    @classmethod
    def load(cls, path: str | None = None, overrides: dict | None = None) -> "PipelineConfig":
        values: dict = {}
        if path:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
            known = {f.name for f in fields(cls)}
            unknown = set(data) - known
            if unknown:
                raise ValueError(f"unknown config keys: {sorted(unknown)}")
            values.update(data)
        for key, value in (overrides or {}).items():
            if value is not None:
                values[key] = value
        return cls(**values)

    def to_dict(self) -> dict:
        return asdict(self)
