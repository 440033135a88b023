"""Run-wide limits and knobs, scoped with a context variable."""

from __future__ import annotations

import contextlib
import contextvars
import dataclasses
import json
from pathlib import Path

from .errors import CapacityError


@dataclasses.dataclass(frozen=True)
class RunConfig:
    max_carrier: int = 10**6
    max_points: int = 10**7
    max_closure: int = 10**5
    # operation-table entries materialized for a single algebra
    max_table: int = 5 * 10**7
    witness_depth: int = 4
    threads: int = 1
    seed: int = 0
    format: str = "json"

    def __post_init__(self):
        for field in ("max_carrier", "max_points", "max_closure", "max_table",
                      "witness_depth", "threads"):
            if getattr(self, field) <= 0:
                raise ValueError(f"{field} must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.format not in ("json", "text"):
            raise ValueError(f"unknown output format {self.format!r}")

    @classmethod
    def from_file(cls, path: str | Path, **overrides) -> "RunConfig":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)


_current: contextvars.ContextVar[RunConfig] = contextvars.ContextVar(
    "uag_config", default=RunConfig())


def current() -> RunConfig:
    return _current.get()


@contextlib.contextmanager
def using(cfg: RunConfig | None = None, **changes):
    """Temporarily replace the active configuration."""
    base = cfg if cfg is not None else current()
    token = _current.set(dataclasses.replace(base, **changes) if changes else base)
    try:
        yield _current.get()
    finally:
        _current.reset(token)


def check(what: str, size: int, bound_name: str) -> None:
    bound = getattr(current(), bound_name)
    if size > bound:
        raise CapacityError(f"{what}: {size} exceeds {bound_name}={bound}")
