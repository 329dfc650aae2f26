"""Structured diagnostics: one JSON object per event.

Corpus runs produce thousands of skip/warning events; they go to a log
stream, never into reports. Library code takes an optional Diagnostics and
stays silent when none is given (events are still collected on the default
sink so tests can assert on them).
"""

from __future__ import annotations

import json
import sys
from typing import IO, Any


class Diagnostics:
    """Collects diagnostic events, optionally mirroring them as JSON lines."""

    def __init__(self, stream: IO[str] | None = None):
        self.stream = stream
        self.events: list[dict[str, Any]] = []

    def emit(self, event: str, **fields: Any) -> None:
        record = {"event": event, **fields}
        self.events.append(record)
        if self.stream is not None:
            self.stream.write(json.dumps(record, sort_keys=True) + "\n")

    def count(self, event: str) -> int:
        return sum(1 for e in self.events if e["event"] == event)


def stderr_diagnostics() -> Diagnostics:
    return Diagnostics(stream=sys.stderr)
