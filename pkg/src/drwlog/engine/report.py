"""Verification reports shared by every suite."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Any


@dataclass
class VerificationReport:
    scenario: str
    suite: str
    params: dict[str, Any]
    passed: bool
    lhs_dim: int | None = None
    rhs_dim: int | None = None
    equal: bool | None = None
    witnesses: list[str] = field(default_factory=list)
    sub_results: dict[str, Any] = field(default_factory=dict)
    precision_trail: dict[str, Any] = field(default_factory=dict)
    seed: int | None = None
    elapsed_ms: int | None = None

    def as_json(self, timings: bool = False) -> dict[str, Any]:
        data = asdict(self)
        data["schema"] = 1
        if not timings:
            data["elapsed_ms"] = None
        return data


class Stopwatch:
    def __init__(self):
        self.start = time.perf_counter()

    def ms(self) -> int:
        return int(1000 * (time.perf_counter() - self.start))
