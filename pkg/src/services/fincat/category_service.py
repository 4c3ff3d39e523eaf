"""
Category Service - law checks, verified (co)limits, epimorphism tests and snapshots
"""
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import List, Optional, Sequence, Tuple

from loguru import logger

from src.core.errors import IndeterminateError, MalformedPresentationError, MissingLimitError, OutOfBudgetError, PreconditionError
from src.models.schemas.report import CheckResult
from src.services.fincat.category import Category, Cocone, Cone, Diagram, Morphism


@dataclass(frozen=True)
class LawReport:
    category: str
    budget: int
    triples_checked: int
    violations: Tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return not self.violations

    def as_check(self, check_id: str) -> CheckResult:
        return CheckResult.from_findings(
            check_id, self.violations, checked=self.triples_checked, scope=f"budget={self.budget}"
        )


@dataclass(frozen=True)
class CoproductResult:
    cocone: Cocone
    disjoint: bool
    pullback_stable: bool
    witnesses: Tuple[str, ...] = ()


@dataclass(frozen=True)
class ClosureEntry:
    construction: str
    inputs: Tuple[str, ...]
    apex: Optional[str]
    inside: bool


@dataclass(frozen=True)
class Snapshot:
    parent: Category
    object_list: Tuple[str, ...]
    morphisms: Tuple[Morphism, ...] = field(repr=False)
    closure_report: Tuple[ClosureEntry, ...] = ()

    @property
    def escaped(self) -> List[ClosureEntry]:
        return [e for e in self.closure_report if not e.inside]


# ===== Laws =====

def check_category_laws(c: Category, budget: int) -> LawReport:
    """Exhaustive identity and associativity check on the first `budget` objects."""
    if budget <= 0:
        raise PreconditionError(f"law check needs a positive budget, got {budget}")
    objs = c.objects(budget)
    arrows = c.all_morphisms(objs)
    violations: List[str] = []
    for f in arrows:
        if c.compose(c.identity(f.target), f) != f or c.compose(f, c.identity(f.source)) != f:
            violations.append(f"identity law fails at {c.describe(f)}")
    by_source = {}
    for f in arrows:
        by_source.setdefault(f.source, []).append(f)
    triples = 0
    for f in arrows:
        for g in by_source.get(f.target, ()):
            gf = c.compose(g, f)
            if gf.source != f.source or gf.target != g.target:
                raise MalformedPresentationError(f"{c.describe(g)} . {c.describe(f)} has endpoints {gf.source} -> {gf.target}")
            for h in by_source.get(g.target, ()):
                triples += 1
                if c.compose(h, gf) != c.compose(c.compose(h, g), f):
                    violations.append(f"associativity fails at {c.describe(h)}, {c.describe(g)}, {c.describe(f)}")
    logger.debug(f"{c.name}: {triples} composable triples, {len(violations)} violations")
    return LawReport(c.name, budget, triples, tuple(violations))


# ===== Verified constructions =====

def verify_limit(c: Category, diagram: Diagram, cone: Cone) -> List[str]:
    """Independent universal-property check against every snapshot cone."""
    problems = []
    for test in c.cones(diagram):
        found = c.factorizations(cone, test)
        if len(found) != 1:
            problems.append(f"cone from {test.apex} factors {len(found)} times through {cone.apex}")
    return problems


def verify_coproduct(c: Category, parts: Sequence[str], cocone: Cocone) -> List[str]:
    problems = []
    for test in c.cocones(parts):
        found = c.cofactorizations(cocone, test)
        if len(found) != 1:
            problems.append(f"cocone at {test.apex} factors {len(found)} times through {cocone.apex}")
    return problems


def limit(c: Category, d: Diagram) -> Optional[Cone]:
    """Chosen limit cone, verified universal on the snapshot; None when nothing in scope is universal."""
    cone = c.limit(d)
    if cone is None:
        return None
    problems = verify_limit(c, d, cone)
    if problems:
        raise MissingLimitError(f"chosen limit {cone.apex} is not universal: {problems[0]}")
    return cone


def _is_initial(c: Category, obj: str) -> bool:
    try:
        return c.find_iso(obj, c.initial()) is not None
    except MissingLimitError:
        return False


def coproduct(c: Category, parts: Sequence[str]) -> Optional[CoproductResult]:
    cocone = c.coproduct(parts)
    if cocone is None:
        return None
    problems = verify_coproduct(c, parts, cocone)
    if problems:
        raise MissingLimitError(f"chosen coproduct {cocone.apex} is not couniversal: {problems[0]}")
    witnesses: List[str] = []
    disjoint = True
    for i in range(len(parts)):
        for j in range(i + 1, len(parts)):
            meet = c.fiber_product(cocone.injections[i], cocone.injections[j]).apex
            if not _is_initial(c, meet):
                disjoint = False
                witnesses.append(f"disjointness: pullback of injections {parts[i]} -> {cocone.apex} <- {parts[j]} is {meet}, not initial")
    stable = True
    for v in c.objects():
        for h in c.hom(v, cocone.apex):
            try:
                pieces = [c.fiber_product(h, inj) for inj in cocone.injections]
            except OutOfBudgetError:
                continue
            decomposition = c.coproduct([p.apex for p in pieces])
            if decomposition is None:
                stable = False
                witnesses.append(f"stability: no coproduct of the pieces of {c.describe(h)}")
                continue
            induced = c.factor_through_coproduct(decomposition, v, [p.legs[0] for p in pieces])
            if not c.is_iso(induced):
                stable = False
                witnesses.append(f"stability: pulling back along {c.describe(h)} does not decompose {v}")
    return CoproductResult(cocone, disjoint, stable, tuple(witnesses))


def is_epi(c: Category, f: Morphism, cotests: Sequence[str]) -> bool:
    """Right-cancellability of f against every pair of maps out of f.target into a cotest object."""
    if not cotests:
        raise IndeterminateError(f"no cotest objects to decide whether {c.describe(f)} is epi")
    for t in cotests:
        maps = c.hom(f.target, t)
        for i, g in enumerate(maps):
            for h in maps[i + 1:]:
                if c.compose(g, f) == c.compose(h, f):
                    return False
    return True


# ===== Snapshots =====

def take_snapshot(c: Category, budget: Optional[int] = None) -> Snapshot:
    """Materialize the first `budget` objects and record where basic constructions land."""
    objs = c.objects(budget)
    entries: List[ClosureEntry] = []

    def record(kind: str, inputs: Tuple[str, ...], build) -> None:
        try:
            apex = build()
        except (MissingLimitError, OutOfBudgetError):
            apex = None
        entries.append(ClosureEntry(kind, inputs, apex, apex is not None and apex in objs))

    record("terminal", (), c.terminal)
    record("initial", (), c.initial)
    for a, b in combinations_with_replacement(objs, 2):
        record("product", (a, b), lambda: c.product(a, b).apex)
        record("coproduct", (a, b), lambda: _apex(c.coproduct((a, b))))
    snapshot = Snapshot(c, tuple(objs), tuple(c.all_morphisms(objs)), tuple(entries))
    logger.debug(f"snapshot of {c.name}: {len(objs)} objects, {len(snapshot.escaped)} constructions leave it")
    return snapshot


def _apex(cocone: Optional[Cocone]) -> str:
    if cocone is None:
        raise MissingLimitError("coproduct absent")
    return cocone.apex
