"""
Site Service - sieves, covering tests, coherence, subcanonicity, admissibility and K-selections
"""
from dataclasses import dataclass
from itertools import combinations_with_replacement, product
from typing import List, Optional, Sequence, Tuple

from loguru import logger

from src.config.settings import get_settings
from src.core.errors import MissingLimitError, OutOfBudgetError
from src.models.schemas.report import CheckResult, Verdict
from src.services.fincat import category_service
from src.services.fincat.category import Morphism
from src.services.site.site import CoveringFamily, Sieve, SiteSpec


@dataclass(frozen=True)
class KSelection:
    """Per-object finite sets K(C) of covering morphisms."""
    sets: Tuple[Tuple[str, Tuple[Morphism, ...]], ...]

    def of(self, obj: str) -> Tuple[Morphism, ...]:
        return dict(self.sets).get(obj, ())

    def objects(self) -> Tuple[str, ...]:
        return tuple(obj for obj, _ in self.sets)


# ===== Sieves and coverings =====

def sieve_generated(s: SiteSpec, fam: CoveringFamily) -> Sieve:
    """Smallest precomposition-closed arrow set containing the family, materialized on the snapshot."""
    arrows = frozenset(
        h for h in s.cat.morphisms_into(fam.target) if s.factors_through(h, fam.members)
    )
    return Sieve(fam.target, fam.members, arrows)


def is_covering_sieve(s: SiteSpec, sv: Sieve, depth: Optional[int] = None) -> bool:
    gens = sv.generators or tuple(sv.arrows)
    return s.covers(sv.target, s.generated_membership(gens), depth)


def is_covering_family(s: SiteSpec, fam: CoveringFamily, depth: Optional[int] = None) -> bool:
    return s.covers(fam.target, s.generated_membership(fam.members), depth)


def is_covering_morphism(s: SiteSpec, f: Morphism, depth: Optional[int] = None) -> bool:
    return is_covering_family(s, CoveringFamily(f.target, (f,)), depth)


def covering_morphisms_onto(s: SiteSpec, target: str) -> List[Morphism]:
    return [f for f in s.cat.morphisms_into(target) if is_covering_morphism(s, f)]


def pullback_family(s: SiteSpec, fam: CoveringFamily, h: Morphism) -> CoveringFamily:
    """Base change of a family along h: V -> fam.target."""
    members = tuple(s.cat.fiber_product(h, m).legs[0] for m in fam.members)
    return CoveringFamily(h.source, members)


# ===== Site checks =====

def check_coherent(s: SiteSpec) -> CheckResult:
    """Basis families are finite and bounded; the snapshot has a terminal object and pullbacks."""
    settings = get_settings()
    cat = s.cat
    failures: List[str] = []
    unverified: List[str] = []
    checked = 0
    for u in s.objects():
        for fam in s.families(u):
            checked += 1
            if len(fam) > settings.MAX_FAMILY_SIZE:
                failures.append(f"family over {u} has {len(fam)} members, bound {settings.MAX_FAMILY_SIZE}")
    try:
        cat.terminal()
        checked += 1
    except MissingLimitError as exc:
        failures.append(str(exc))
    for u in s.objects():
        arrows = cat.morphisms_into(u)
        for f, g in combinations_with_replacement(arrows, 2):
            try:
                cat.fiber_product(f, g)
                checked += 1
            except OutOfBudgetError as exc:
                unverified.append(str(exc))
            except MissingLimitError:
                failures.append(f"no pullback of {cat.describe(f)} and {cat.describe(g)}")
    result = CheckResult.from_findings("site.coherent", failures, unverified, checked)
    s.flags["coherent"] = result.passed
    return result


def check_subcanonical(s: SiteSpec) -> CheckResult:
    """Every representable satisfies the sheaf condition for every basis family on the snapshot."""
    from src.services.sheaf.sheaf_service import sheaf_condition, yoneda

    failures: List[str] = []
    unverified: List[str] = []
    checked = 0
    for w in s.objects():
        rep = yoneda(s, w)
        for u in s.objects():
            for fam in s.families(u):
                try:
                    problem = sheaf_condition(rep, fam)
                except OutOfBudgetError as exc:
                    unverified.append(str(exc))
                    continue
                checked += 1
                if problem:
                    failures.append(f"yoneda({w}): {problem}")
    result = CheckResult.from_findings("site.subcanonical", failures, unverified, checked)
    s.flags["subcanonical"] = result.passed
    return result


def check_pullback_stability(s: SiteSpec) -> CheckResult:
    failures, unverified, checked = [], [], 0
    for u in s.objects():
        for fam in s.families(u):
            for h in s.cat.morphisms_into(u):
                try:
                    pulled = pullback_family(s, fam, h)
                    ok = is_covering_family(s, pulled)
                except OutOfBudgetError as exc:
                    unverified.append(str(exc))
                    continue
                checked += 1
                if not ok:
                    failures.append(f"pullback of a family over {u} along {s.cat.describe(h)} does not cover")
    return CheckResult.from_findings("site.pullback-stability", failures, unverified, checked)


def check_composition_closure(s: SiteSpec, limit: int = 64) -> CheckResult:
    """Refining each member of a basis family by basis families yields a covering family."""
    failures, unverified, checked = [], [], 0
    cat = s.cat
    for u in s.objects():
        for fam in s.families(u):
            refinements = [s.families(m.source) for m in fam.members]
            for n, choice in enumerate(product(*refinements)):
                if n >= limit:
                    unverified.append(f"more than {limit} refinements of a family over {u}")
                    break
                members = tuple(cat.compose(m, r) for m, inner in zip(fam.members, choice) for r in inner.members)
                checked += 1
                if not is_covering_family(s, CoveringFamily(u, members)):
                    failures.append(f"composite refinement over {u} does not cover")
    return CheckResult.from_findings("site.composition-closure", failures, unverified, checked)


def check_admissible(s: SiteSpec) -> CheckResult:
    """Subcanonical, finite coproducts with covering injections, strict initial object, disjoint and stable coproducts."""
    cat = s.cat
    failures: List[str] = []
    unverified: List[str] = []
    checked = 0

    sub = check_subcanonical(s)
    checked += 1
    if sub.verdict == Verdict.FAIL:
        failures.append(f"subcanonical: {sub.details}")

    try:
        initial = cat.initial()
        terminal = cat.terminal()
        checked += 1
        if cat.find_iso(initial, terminal) is not None:
            failures.append(f"strict-initial: initial object {initial} coincides with the terminal object")
        for x in s.objects():
            for f in cat.hom(x, initial):
                if not cat.is_iso(f):
                    failures.append(f"strict-initial: {cat.describe(f)} is not an isomorphism")
    except MissingLimitError as exc:
        failures.append(f"strict-initial: {exc}")

    part_lists: List[Tuple[str, ...]] = [()]
    part_lists.extend(combinations_with_replacement(s.objects(), 2))
    for parts in part_lists:
        label = " ⊔ ".join(parts) or "empty coproduct"
        try:
            result = category_service.coproduct(cat, parts)
        except OutOfBudgetError as exc:
            unverified.append(f"{label}: {exc}")
            continue
        except MissingLimitError as exc:
            failures.append(f"coproducts: {label}: {exc}")
            continue
        checked += 1
        if result is None:
            failures.append(f"coproducts: {label} does not exist in scope")
            continue
        injections = CoveringFamily(result.cocone.apex, result.cocone.injections)
        try:
            if not is_covering_family(s, injections):
                failures.append(f"injections: {label} -> {result.cocone.apex} do not cover")
        except OutOfBudgetError as exc:
            unverified.append(f"{label}: {exc}")
        failures.extend(w for w in result.witnesses)
    report = CheckResult.from_findings("site.admissible", failures, unverified, checked, scope=f"objects={len(s.objects())}")
    s.flags["admissible"] = report.passed
    logger.info(f"{s.name}: admissibility {report.verdict.value}")
    return report


# ===== K-selections =====

def k_set(s: SiteSpec, target: str) -> Tuple[Morphism, ...]:
    """Greedy K(C): start from id and add each covering morphism not yet refined by a chosen one."""
    chosen: List[Morphism] = [s.cat.identity(target)]
    for e in covering_morphisms_onto(s, target):
        if not any(_refines(s, d, e) for d in chosen):
            chosen.append(e)
    return tuple(chosen)


def _refines(s: SiteSpec, d: Morphism, e: Morphism) -> bool:
    """d: D -> C factors as D -> E -> C through e: E -> C."""
    return any(s.cat.compose(e, k) == d for k in s.cat.hom(d.source, e.source))


def generate_K(s: SiteSpec) -> KSelection:
    selection = KSelection(tuple((c, k_set(s, c)) for c in s.objects()))
    logger.debug(f"{s.name}: K-selection sizes {[len(k) for _, k in selection.sets]}")
    return selection


def verify_K(s: SiteSpec, selection: KSelection) -> CheckResult:
    failures, checked = [], 0
    for c in selection.objects():
        ks = selection.of(c)
        for e in covering_morphisms_onto(s, c):
            checked += 1
            if not any(_refines(s, d, e) for d in ks):
                failures.append(f"covering morphism {s.cat.describe(e)} is refined by no member of K({c})")
    return CheckResult.from_findings("site.k-selection", failures, checked=checked)


def sieves_equal_on(s: SiteSpec, first: Sieve, second: Sieve, sources: Optional[Sequence[str]] = None) -> bool:
    """Membership agreement on every snapshot arrow into the common target."""
    if first.target != second.target:
        return False
    for h in s.cat.morphisms_into(first.target, sources):
        if s.factors_through(h, first.generators) != s.factors_through(h, second.generators):
            return False
    return True

