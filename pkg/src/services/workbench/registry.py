"""
Suite registry - named suites of checks, registered by decorator, and the shared run context
"""
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from src.config.settings import get_settings
from src.core.errors import MissingLimitError
from src.models.schemas.report import CheckResult, Verdict
from src.models.schemas.witness import WitnessKind, WitnessRecord
from src.services.contract import contract_service
from src.services.protop.protop import ProSite
from src.services.site import site_service
from src.services.site.site import SiteSpec

SUITES = ("admissibility", "protopology", "towers", "contractibility", "cohomology")
ALL = "all"

CheckFn = Callable[["SuiteContext"], CheckResult]

REGISTRY: Dict[str, List[Tuple[str, CheckFn]]] = {name: [] for name in SUITES}


def suite_check(suite: str, check_id: str) -> Callable[[CheckFn], CheckFn]:
    """Register a check under a suite; the function gets the run context and returns one result."""
    if suite not in REGISTRY:
        raise KeyError(f"unknown suite {suite}")

    def register(fn: CheckFn) -> CheckFn:
        REGISTRY[suite].append((check_id, fn))
        return fn

    return register


def checks_for(suite: str) -> List[Tuple[str, CheckFn]]:
    names = SUITES if suite == ALL else (suite,)
    return [entry for name in names for entry in REGISTRY[name]]


@dataclass
class SuiteContext:
    """One run over one site: seed, budget, declared flags, collected witnesses and shared constructions."""
    site: SiteSpec
    seed: int
    budget: int
    flags: Dict[str, bool] = field(default_factory=dict)
    witnesses: List[WitnessRecord] = field(default_factory=list)
    _memo: Dict[str, Any] = field(default_factory=dict, repr=False)

    def memo(self, key: str, build: Callable[[], Any]) -> Any:
        if key not in self._memo:
            self._memo[key] = build()
        return self._memo[key]

    @property
    def pro_site(self) -> ProSite:
        return self.memo("pro-site", lambda: ProSite(self.site, budget=min(self.budget, get_settings().PRO_BUDGET)))

    def admissibility(self) -> CheckResult:
        return self.memo("site.admissible", lambda: site_service.check_admissible(self.site))

    def contractibles(self) -> List[str]:
        """Weakly contractible snapshot objects other than the initial one."""

        def build() -> List[str]:
            found = contract_service.contractibles(self.site)
            try:
                initial = self.site.cat.initial()
            except MissingLimitError:
                return found
            return [U for U in found if U != initial]

        return self.memo("contractibles", build)

    def witness(self, check_id: str, kind: WitnessKind, subject: str, data: Optional[Dict[str, Any]] = None) -> None:
        self.witnesses.append(WitnessRecord(check_id=check_id, kind=kind, subject=subject, data=data or {}))


def combine(check_id: str, results: Sequence[CheckResult], scope: str = "") -> CheckResult:
    """Fold several partial results into one; each partial counts as one checked item."""
    failures = [r.details for r in results if r.verdict == Verdict.FAIL]
    unverified = [r.details for r in results if r.verdict == Verdict.UNVERIFIED]
    return CheckResult.from_findings(check_id, failures, unverified, len(results) - len(unverified), scope=scope)
