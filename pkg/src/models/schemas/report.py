"""
Report data models
"""
import hashlib
from enum import Enum
from typing import List, Optional, Sequence

from pydantic import BaseModel

from src.models.schemas.witness import WitnessRecord


class Verdict(str, Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    UNVERIFIED = "UNVERIFIED"


class CheckResult(BaseModel):
    check_id: str
    verdict: Verdict
    details: str = ""

    @classmethod
    def from_findings(
        cls,
        check_id: str,
        failures: Sequence[str],
        unverified: Sequence[str] = (),
        checked: int = 0,
        scope: str = "",
    ) -> "CheckResult":
        """Fold per-item findings into one verdict.

        Any failure fails the check. Otherwise the check passes within budget when at
        least one item was verified, and is UNVERIFIED when nothing could be verified.
        """
        parts = [f"checked={checked}"]
        if scope:
            parts.append(scope)
        if failures:
            return cls(check_id=check_id, verdict=Verdict.FAIL, details=" ".join(parts + [f"first-failure: {failures[0]}"]))
        if unverified:
            parts.append(f"unverified={len(unverified)}")
            if checked == 0:
                return cls(check_id=check_id, verdict=Verdict.UNVERIFIED, details=" ".join(parts + [f"reason: {unverified[0]}"]))
        return cls(check_id=check_id, verdict=Verdict.PASS, details=" ".join(parts))

    @property
    def passed(self) -> bool:
        return self.verdict == Verdict.PASS

    def line(self) -> str:
        details = " ".join(self.details.split())
        return f"CHECK {self.check_id} {self.verdict.value} {details}".rstrip()


class Report(BaseModel):
    suite: str
    site_name: str
    fixture_path: str = ""
    fixture_sha256: str = ""
    seed: int
    budget: int
    checks: List[CheckResult] = []
    witnesses: List[WitnessRecord] = []
    wall_time: Optional[float] = None
    witness_file: str = ""
    witness_sha256: str = ""

    def body(self) -> str:
        lines = [c.line() for c in sorted(self.checks, key=lambda c: c.check_id)]
        return "\n".join(lines) + "\n"

    @property
    def body_sha256(self) -> str:
        return hashlib.sha256(self.body().encode("utf-8")).hexdigest()

    def render(self) -> str:
        footer = [
            f"# suite={self.suite}",
            f"# site={self.site_name}",
            f"# seed={self.seed}",
            f"# budget={self.budget}",
            f"# fixture={self.fixture_path}",
            f"# fixture-sha256={self.fixture_sha256}",
            f"# body-sha256={self.body_sha256}",
        ]
        if self.witness_file:
            footer += [f"# witnesses={self.witness_file}", f"# witnesses-sha256={self.witness_sha256}"]
        return self.body() + "\n".join(footer) + "\n"

    @property
    def failures(self) -> List[CheckResult]:
        return [c for c in self.checks if c.verdict == Verdict.FAIL]

    @property
    def unverified(self) -> List[CheckResult]:
        return [c for c in self.checks if c.verdict == Verdict.UNVERIFIED]

    @property
    def exit_code(self) -> int:
        return 1 if self.failures else 0

    def verdicts(self) -> List[str]:
        return [c.line() for c in sorted(self.checks, key=lambda c: c.check_id)]


class ReplayResult(BaseModel):
    """A stored report next to its rerun; `mode` is "non-replay" when the budget was raised."""
    original: Report
    rerun: Report
    mode: str = "replay"
    differences: List[str] = []

    @property
    def identical(self) -> bool:
        return not self.differences
