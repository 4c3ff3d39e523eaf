"""
Campaigns - seeded randomized property runs, shrinking failures by bisecting their inputs
"""
import random
from typing import Callable, Dict, Generic, List, Optional, Sequence, Set, Tuple, TypeVar

from loguru import logger

from src.core.errors import ConstructionFailedError, MissingLimitError, OutOfBudgetError
from src.models.schemas.report import CheckResult

Case = TypeVar("Case")
Item = TypeVar("Item")

SKIPPED = (OutOfBudgetError, MissingLimitError)


def campaign_rng(seed: int, check_id: str) -> random.Random:
    """One generator per (seed, check), so adding a check never shifts another one's cases."""
    return random.Random(f"{seed}:{check_id}")


def halves(items: Sequence[Item]) -> List[Tuple[Item, ...]]:
    """The two halves of a sequence, longest first; nothing for fewer than two items."""
    if len(items) < 2:
        return []
    mid = len(items) // 2
    return [tuple(items[:mid]), tuple(items[mid:])]


def prefixes(items: Sequence[Item]) -> List[Tuple[Item, ...]]:
    """The first half and everything but the last item, for inputs that must keep their head."""
    if len(items) < 2:
        return []
    found = [tuple(items[: len(items) // 2])]
    if len(items) - 1 > len(items) // 2:
        found.append(tuple(items[:-1]))
    return found


class Campaign(Generic[Case]):
    """`generate(rng)` draws a case; `examine(case)` returns a failure message or None.

    A failing case is shrunk by re-examining the candidates `shrink(case)` proposes until
    none of them fails. Out-of-budget cases count as unverified.
    """

    def __init__(
        self,
        check_id: str,
        generate: Callable[[random.Random], Case],
        examine: Callable[[Case], Optional[str]],
        count: int,
        shrink: Optional[Callable[[Case], Sequence[Case]]] = None,
        describe: Callable[[Case], str] = str,
        max_shrinks: int = 32,
        max_draws: int = 10,
    ):
        self.check_id = check_id
        self.generate = generate
        self.examine = examine
        self.count = count
        self.shrink = shrink
        self.describe = describe
        self.max_shrinks = max_shrinks
        self.max_draws = max_draws
        self._seen: Dict[str, Tuple[str, Optional[str]]] = {}
        self.minimal: Optional[Case] = None

    def _outcome(self, case: Case) -> Tuple[str, Optional[str]]:
        """("ok" | "fail" | "skip", message), memoized per described case."""
        key = self.describe(case)
        if key not in self._seen:
            try:
                failure = self.examine(case)
                self._seen[key] = ("ok", None) if failure is None else ("fail", failure)
            except SKIPPED as exc:
                self._seen[key] = ("skip", str(exc))
            except ConstructionFailedError as exc:
                self._seen[key] = ("fail", str(exc))
        return self._seen[key]

    def _shrink(self, case: Case, message: str) -> Tuple[Case, str, int]:
        steps = 0
        while self.shrink is not None and steps < self.max_shrinks:
            for candidate in self.shrink(case):
                status, found = self._outcome(candidate)
                if status == "fail":
                    case, message = candidate, found
                    steps += 1
                    break
            else:
                break
        return case, message, steps

    def run(self, seed: int, scope: str = "") -> CheckResult:
        """Examine `count` distinct cases, drawing at most `count * max_draws` times."""
        rng = campaign_rng(seed, self.check_id)
        failures: List[str] = []
        unverified: List[str] = []
        distinct: Set[str] = set()
        checked = draws = 0
        while len(distinct) < self.count and draws < self.count * self.max_draws:
            case = self.generate(rng)
            draws += 1
            key = self.describe(case)
            if key in distinct:
                continue
            distinct.add(key)
            status, message = self._outcome(case)
            if status == "skip":
                unverified.append(f"{key}: {message}")
                continue
            checked += 1
            if status == "fail" and not failures:
                minimal, shrunk, steps = self._shrink(case, message)
                self.minimal = minimal
                note = f" (shrunk from {key} in {steps} steps)" if steps else ""
                failures.append(f"{self.describe(minimal)}: {shrunk}{note}")
            elif status == "fail":
                failures.append(f"{key}: {message}")
        if len(distinct) < self.count:
            logger.bind(check=self.check_id).warning(
                f"campaign {self.check_id}: only {len(distinct)} distinct cases in {draws} draws"
            )
        logger.bind(check=self.check_id).info(
            f"campaign {self.check_id}: {checked} checked, {len(failures)} failed, {len(unverified)} unverified"
        )
        repeats = f" draws={draws}" if draws != len(distinct) else ""
        scope = " ".join(part for part in (f"seed={seed} cases={len(distinct)}{repeats}", scope) if part)
        return CheckResult.from_findings(self.check_id, failures, unverified, checked, scope=scope)
