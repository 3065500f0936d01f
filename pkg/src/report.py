"""Check results and suite reports."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional

from src.errors import format_point


class Status(Enum):
    PASS = "pass"
    FAIL = "fail"
    SKIP = "skip"


@dataclass
class CheckResult:
    """Outcome of a single named check."""
    check_id: str
    status: Status
    max_residual: float = 0.0
    witness: Optional[str] = None
    detail: str = ""
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return self.status is not Status.FAIL

    def to_record(self, timings: bool = False) -> Dict[str, Any]:
        record: Dict[str, Any] = {
            "check_id": self.check_id,
            "status": self.status.value,
            "max_residual": float(f"{self.max_residual:.6e}"),
            "witness": self.witness,
            "detail": self.detail,
        }
        if timings:
            record["wall_time"] = round(self.wall_time, 4)
        return record


def from_comparison(check_id: str, comparison, detail: str = "") -> CheckResult:
    """Turn a sampled comparison into a PASS/FAIL result."""
    witness = None
    if not comparison.passed and comparison.witness is not None:
        witness = format_point(comparison.witness)
    return CheckResult(
        check_id=check_id,
        status=Status.PASS if comparison.passed else Status.FAIL,
        max_residual=comparison.max_residual,
        witness=witness,
        detail=detail,
    )


def failure(check_id: str, detail: str, residual: float = 0.0,
            witness: Optional[str] = None) -> CheckResult:
    return CheckResult(check_id, Status.FAIL, residual, witness, detail)


def skipped(check_id: str, detail: str) -> CheckResult:
    return CheckResult(check_id, Status.SKIP, detail=detail)


def passed(check_id: str, detail: str = "", residual: float = 0.0) -> CheckResult:
    return CheckResult(check_id, Status.PASS, residual, None, detail)


@dataclass
class Report:
    """Ordered collection of check results for one suite."""
    suite: str
    results: List[CheckResult] = field(default_factory=list)

    def add(self, result: CheckResult) -> None:
        self.results.append(result)

    def extend(self, results: Iterable[CheckResult]) -> "Report":
        self.results.extend(results)
        return self

    def prefixed(self, prefix: str) -> "Report":
        for r in self.results:
            r.check_id = f"{prefix}.{r.check_id}"
        return self

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def max_residual(self) -> float:
        return max((r.max_residual for r in self.results), default=0.0)

    def failures(self) -> List[CheckResult]:
        return [r for r in self.results if r.status is Status.FAIL]

    def find(self, check_id: str) -> CheckResult:
        for r in self.results:
            if r.check_id == check_id:
                return r
        raise KeyError(check_id)

    def sorted(self) -> "Report":
        return Report(self.suite, sorted(self.results, key=lambda r: r.check_id))

    def counts(self) -> Dict[str, int]:
        counts = {s.value: 0 for s in Status}
        for r in self.results:
            counts[r.status.value] += 1
        return counts

    def to_text(self, timings: bool = False) -> str:
        lines = []
        for r in self.sorted().results:
            line = f"{r.status.value.upper():<5} {r.check_id}  residual={r.max_residual:.3e}"
            if r.witness:
                line += f"  witness={r.witness}"
            if r.detail:
                line += f"  ({r.detail})"
            if timings:
                line += f"  [{r.wall_time:.3f}s]"
            lines.append(line)
        c = self.counts()
        lines.append(f"suite {self.suite}: {c['pass']} passed, {c['fail']} failed, {c['skip']} skipped")
        return "\n".join(lines)

    def to_records(self, timings: bool = False) -> str:
        return "\n".join(json.dumps(r.to_record(timings), sort_keys=True)
                         for r in self.sorted().results)
