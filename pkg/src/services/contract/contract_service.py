"""
Contractibility Service - weak contractibility, the P construction and its iterates, splitting
transfinite towers, the dc-category properties, restriction to contractibles and exactness of sections
"""
from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import Callable, List, Optional, Sequence, Tuple, Union

from loguru import logger

from src.config.settings import get_settings
from src.core.errors import (
    ConstructionFailedError,
    MissingLimitError,
    OutOfBudgetError,
    PreconditionError,
    ViolationError,
)
from src.models.schemas.report import CheckResult, Verdict
from src.services.cohom import cohom_service
from src.services.cohom.abelian import ShortExactSequence
from src.services.contract.contract import Contractibility, ContractibilityWitness, PTowerRecord
from src.services.fincat.category import Morphism
from src.services.pro import pro_service
from src.services.pro.pro_object import ProMorphism, ProObject
from src.services.protop import protop_service
from src.services.protop.protop import ProCoveringAnswer, ProSite, TransfiniteCoveringMorphism
from src.services.sheaf import sheaf_service
from src.services.site import site_service
from src.services.site.site import CoveringFamily, SiteSpec
from src.services.site.site_service import KSelection
from src.services.tower import tower_service
from src.services.tower.tower_service import Splitter

Where = Union[SiteSpec, ProSite]


# ===== Weak contractibility =====

def _site_contractibility(s: SiteSpec, U: str) -> ContractibilityWitness:
    cat = s.cat
    try:
        onto = site_service.covering_morphisms_onto(s, U)
    except (OutOfBudgetError, MissingLimitError) as exc:
        return ContractibilityWitness(U, Contractibility.UNKNOWN, unverified=(str(exc),))
    scope = f"{len(onto)} covering morphisms onto {U} from {len(s.objects())} snapshot objects"
    splittings = []
    for e in onto:
        section = next(cat.lifts(cat.identity(U), e), None)
        if section is None:
            return ContractibilityWitness(U, Contractibility.NOT_CONTRACTIBLE, tuple(splittings), e, scope)
        splittings.append((e, section))
    return ContractibilityWitness(U, Contractibility.CONTRACTIBLE, tuple(splittings), scope=scope)


def _pro_contractibility(ps: ProSite, U: ProObject) -> ContractibilityWitness:
    splittings = []
    unverified: List[str] = []
    covering = 0
    for V in ps.samples:
        for f in pro_service.morphisms(V, U):
            verdict = protop_service.is_pro_covering(ps, f)
            if verdict.answer == ProCoveringAnswer.UNKNOWN:
                unverified.append(f"{V.label} -> {U.label}: {verdict.reason}")
                continue
            if verdict.answer == ProCoveringAnswer.NO:
                continue
            covering += 1
            section = next(pro_service.lifts(pro_service.identity(U), f), None)
            scope = f"{covering} pro-covering morphisms onto {U.label} from {len(ps.samples)} samples"
            if section is None:
                return ContractibilityWitness(
                    U, Contractibility.NOT_CONTRACTIBLE, tuple(splittings), f, scope, tuple(unverified)
                )
            splittings.append((f, section))
    scope = f"{covering} pro-covering morphisms onto {U.label} from {len(ps.samples)} samples"
    verdict = Contractibility.UNKNOWN if unverified else Contractibility.CONTRACTIBLE
    return ContractibilityWitness(U, verdict, tuple(splittings), None, scope, tuple(unverified))


def is_weakly_contractible(where: Where, U: Union[str, ProObject]) -> ContractibilityWitness:
    """Every covering morphism onto U has a section, searched within the snapshot or the sample set."""
    if isinstance(where, ProSite):
        target = where.constant(U) if isinstance(U, str) else U
        return _pro_contractibility(where, target)
    if not isinstance(U, str):
        raise PreconditionError(f"{where.name} has no pro-object {U.label}")
    return _site_contractibility(where, U)


def contractibles(where: Where) -> List:
    candidates = where.samples if isinstance(where, ProSite) else where.objects()
    return [U for U in candidates if is_weakly_contractible(where, U).verdict == Contractibility.CONTRACTIBLE]


def splitter_for(s: SiteSpec, W: str) -> Splitter:
    """The Yoneda splitter of y(W), for weakly contractible W only."""
    witness = is_weakly_contractible(s, W)
    if witness.verdict != Contractibility.CONTRACTIBLE:
        raise ViolationError(f"{W} is not weakly contractible ({witness.verdict.value})")
    return tower_service.representable_splitter(s, W)


def pro_splitter(phi: ProMorphism) -> Optional[ProMorphism]:
    return next(pro_service.lifts(pro_service.identity(phi.target), phi), None)


# ===== The P construction =====

@dataclass(frozen=True)
class _Round:
    ks: Tuple[Morphism, ...]
    part: TransfiniteCoveringMorphism
    product: ProObject
    comparison: ProMorphism


def _top_level(X: ProObject):
    if X.top is None:
        raise PreconditionError(f"{X.label} has no final level")
    return X.top


def _one_round(ps: ProSite, X: ProObject, selection: KSelection) -> _Round:
    """P(X) = prod over k in K(X(i0)) of D_k x_{X(i0)} X, directly and as a tower over X."""
    cat = ps.cat
    i0 = _top_level(X)
    apex = X(i0)
    if apex not in selection.objects():
        raise OutOfBudgetError(f"{apex} has no K-set in the snapshot")
    ks = tuple(k for k in selection.of(apex) if k != cat.identity(apex))
    kmaps = [
        protop_service.make_weak_covering(ps, X, CoveringFamily(apex, (k,)), level=i0).maps[0] for k in ks
    ]
    if kmaps:
        limit = pro_service.pro_finite_limits(
            cat,
            [m.source for m in kmaps] + [X],
            [(w, len(kmaps), m) for w, m in enumerate(kmaps)],
            name=f"P({X.label})",
        )
        product, structure = limit.pro, limit.legs[-1]
    else:
        product, structure = X, pro_service.identity(X)

    chain = protop_service.trivial_chain(ps, X)
    down = cat.identity(apex)
    for k in ks:
        d = cat.fiber_product(down, k).legs[0]
        chain = protop_service.extend_chain(ps, chain, d, level=i0)
        down = cat.compose(down, chain.witnesses[-1].covering.level_map(0, i0))

    comparison = protop_service.iso_over(structure, chain.morphism)
    if comparison is None:
        raise ConstructionFailedError(
            f"P({X.label}): the product over {X.label} and its tower realization differ", step=len(ks)
        )
    return _Round(ks, chain, product, comparison)


def iterate_P(ps: ProSite, U: ProObject, i: int, selection: Optional[KSelection] = None) -> PTowerRecord:
    """P^i(U) -> U as one distinguished transfinite covering morphism."""
    if i < 1:
        raise PreconditionError(f"iteration count {i} must be positive")
    selection = site_service.generate_K(ps.base) if selection is None else selection
    chain = protop_service.trivial_chain(ps, U)
    k_sets, products, comparisons, results = [], [], [], []
    stabilized_at: Optional[int] = None
    current = U
    for n in range(i):
        rnd = _one_round(ps, current, selection)
        tower = tower_service.splice(chain.tower, rnd.part.tower)
        chain = TransfiniteCoveringMorphism(tower, chain.witnesses + rnd.part.witnesses)
        if stabilized_at is None and pro_service.inverse(rnd.part.morphism) is not None:
            stabilized_at = n
        current = rnd.part.source
        k_sets.append(rnd.ks)
        products.append(rnd.product)
        comparisons.append(rnd.comparison)
        results.append(current)
        logger.debug(f"P^{n + 1}({U.label}) = {current.label} after {len(rnd.ks)} steps")
    return PTowerRecord(
        U, tuple(k_sets), chain, tuple(products), tuple(comparisons), tuple(results), stabilized_at
    )


def build_P(ps: ProSite, U: ProObject, selection: Optional[KSelection] = None) -> PTowerRecord:
    return iterate_P(ps, U, 1, selection)


def _split_through(q: ProMorphism, q_inv: ProMorphism, m: ProMorphism) -> Optional[ProMorphism]:
    """A section of m found by factoring q through it."""
    t = next(pro_service.lifts(q, m), None)
    return None if t is None else pro_service.compose(t, q_inv)


def check_P_contractible(ps: ProSite, rec: PTowerRecord, selection: Optional[KSelection] = None) -> CheckResult:
    """Once P stabilizes its value splits every distinguished covering morphism built from the base."""
    check_id = "contract.p-contractible"
    selection = site_service.generate_K(ps.base) if selection is None else selection
    R = rec.result
    try:
        level = _top_level(R)
        q = _one_round(ps, R, selection).part.morphism
    except (OutOfBudgetError, MissingLimitError) as exc:
        return CheckResult.from_findings(check_id, [], [str(exc)])
    q_inv = pro_service.inverse(q)
    if q_inv is None:
        return CheckResult.from_findings(
            check_id, [], [f"P({R.label}) -> {R.label} is not invertible after {rec.iterations} iterations"]
        )
    failures: List[str] = []
    unverified: List[str] = []
    checked = 0
    onto = site_service.covering_morphisms_onto(ps.base, R(level))
    for d in onto:
        try:
            m = protop_service.make_weak_covering(ps, R, CoveringFamily(R(level), (d,)), level).maps[0]
        except (OutOfBudgetError, MissingLimitError) as exc:
            unverified.append(str(exc))
            continue
        checked += 1
        if _split_through(q, q_inv, m) is None:
            failures.append(f"{m.source.label} -> {R.label} over {ps.cat.describe(d)} has no section")
    return CheckResult.from_findings(
        check_id, failures, unverified, checked, scope=f"coverings onto {R.label} at {level!r}: {len(onto)}"
    )


def transfinite_split_check(ps: ProSite, U: ProObject, depth: int = 2, limit: Optional[int] = None) -> CheckResult:
    """Distinguished chains over a weakly contractible U split stage by stage."""
    check_id = "contract.transfinite-split"
    witness = is_weakly_contractible(ps, U)
    if witness.verdict != Contractibility.CONTRACTIBLE:
        raise ViolationError(f"{U.label} is not weakly contractible ({witness.verdict.value})")
    limit = get_settings().SPLIT_CAMPAIGN if limit is None else limit

    tested: List[TransfiniteCoveringMorphism] = []
    frontier = [protop_service.trivial_chain(ps, U)]
    for _ in range(depth):
        grown = []
        for chain in frontier:
            last = chain.source
            level = _top_level(last)
            for d in site_service.covering_morphisms_onto(ps.base, last(level)):
                if len(tested) + len(grown) >= limit:
                    break
                grown.append(protop_service.extend_chain(ps, chain, d, level))
        tested.extend(grown)
        frontier = grown

    failures: List[str] = []
    unverified: List[str] = []
    for chain in tested:
        try:
            tower_service.split_tower_over_contractible(chain.tower, pro_splitter)
        except ConstructionFailedError as exc:
            failures.append(f"{chain.tower.name} of length {chain.tower.length}: {exc}")
        except (OutOfBudgetError, MissingLimitError) as exc:
            unverified.append(str(exc))
    return CheckResult.from_findings(
        check_id, failures, unverified, len(tested) - len(unverified), scope=f"chains={len(tested)} depth={depth}"
    )


# ===== dc-categories =====

def has_enough_contractibles(where: Where) -> CheckResult:
    """Every snapshot object receives a covering morphism from a weakly contractible one."""
    arena = _arena(where)
    found = contractibles(where)
    gaps = [U for U in arena.objects if _contractible_cover(arena, U, found) is None]
    return CheckResult.from_findings(
        "contract.enough-contractibles",
        [f"{arena.label(U)} receives no covering morphism from a weakly contractible object" for U in gaps],
        checked=len(arena.objects),
        scope=f"contractible: {', '.join(arena.label(U) for U in found) or 'none'}",
    )


def check_dc_category(s: SiteSpec, found: Optional[Sequence[str]] = None) -> CheckResult:
    """Contractibles are closed under finite coproducts which are disjoint, pullback-stable and covering."""
    cat = s.cat
    found = contractibles(s) if found is None else list(found)
    members = set(found)
    failures: List[str] = []
    unverified: List[str] = []
    checked = 0
    try:
        initial = cat.initial()
        checked += 1
        if cat.contains(initial) and initial not in members:
            failures.append(f"the empty coproduct {initial} is not weakly contractible")
    except MissingLimitError as exc:
        failures.append(str(exc))

    for a, b in combinations_with_replacement(found, 2):
        cocone = cat.coproduct([a, b])
        if cocone is None:
            failures.append(f"{a} ⊔ {b} does not exist")
            continue
        apex = cocone.apex
        if not cat.contains(apex):
            unverified.append(f"{a} ⊔ {b} = {apex} lies outside the snapshot")
            continue
        checked += 1
        if apex not in members:
            failures.append(f"{a} ⊔ {b} = {apex} is not weakly contractible")
        try:
            meet = cat.fiber_product(cocone.injections[0], cocone.injections[1])
            if meet.apex != cat.initial():
                failures.append(f"{a} ⊔ {b} is not disjoint: the summands meet in {meet.apex}")
            if not site_service.is_covering_family(s, CoveringFamily(apex, cocone.injections)):
                failures.append(f"the injections into {apex} do not cover")
            for X in found:
                for h in cat.hom(X, apex):
                    parts = [cat.fiber_product(h, inj) for inj in cocone.injections]
                    sub = cat.coproduct([p.apex for p in parts])
                    copair = None if sub is None else cat.factor_through_coproduct(sub, X, [p.legs[0] for p in parts])
                    if copair is None or not cat.is_iso(copair):
                        failures.append(f"{apex} is not stable under pullback along {cat.describe(h)}")
        except MissingLimitError as exc:
            failures.append(str(exc))
    return CheckResult.from_findings(
        "contract.dc-category", failures, unverified, checked, scope=f"contractible={len(found)}"
    )


def coproduct_of_contractibles(s: SiteSpec) -> CheckResult:
    """Binary coproducts of weakly contractible objects are weakly contractible."""
    cat = s.cat
    found = contractibles(s)
    failures: List[str] = []
    unverified: List[str] = []
    checked = 0
    for a, b in combinations_with_replacement(found, 2):
        cocone = cat.coproduct([a, b])
        if cocone is None:
            unverified.append(f"{a} ⊔ {b} is not available")
            continue
        witness = is_weakly_contractible(s, cocone.apex)
        if witness.verdict == Contractibility.UNKNOWN:
            unverified.extend(witness.unverified)
            continue
        checked += 1
        if witness.verdict == Contractibility.NOT_CONTRACTIBLE:
            failures.append(f"{a} ⊔ {b} = {cocone.apex}: {cat.describe(witness.failure)} has no section")
    return CheckResult.from_findings(
        "contract.coproduct-contractible", failures, unverified, checked, scope=f"contractible={len(found)}"
    )


# ===== Restriction to contractibles =====

@dataclass(frozen=True)
class _Arena:
    objects: Tuple
    hom: Callable
    compose: Callable
    covers: Callable
    label: Callable


def _arena(where: Where) -> _Arena:
    if isinstance(where, ProSite):
        return _Arena(
            where.samples,
            pro_service.hom_set,
            pro_service.compose,
            lambda f: protop_service.is_pro_covering(where, f).answer == ProCoveringAnswer.YES,
            lambda U: U.label,
        )
    return _Arena(
        where.objects(),
        where.cat.hom,
        where.cat.compose,
        lambda f: site_service.is_covering_morphism(where, f),
        str,
    )


def _contractible_cover(arena: _Arena, U, found: Sequence):
    for V in found:
        for f in arena.hom(V, U):
            if arena.covers(f):
                return f
    return None


def _arrows_from(arena: _Arena, U, found: Sequence):
    """Arrows V -> U with V contractible, and for each the arrows they factor into."""
    arrows = [(V, h) for V in found for h in arena.hom(V, U)]
    links: List[List[Tuple[int, object]]] = [[] for _ in arrows]
    for a, (V, h) in enumerate(arrows):
        for b, (W, g) in enumerate(arrows):
            for k in arena.hom(W, V):
                if arena.compose(h, k) == g:
                    links[a].append((b, k))
    return arrows, links


def _extensions(F, arrows, links, cap: int) -> List[Tuple]:
    """Compatible families over the arrows, stopping after `cap`."""
    values: List[Optional[object]] = [None] * len(arrows)
    families: List[Tuple] = []

    def propagate(a: int, x, assigned: List[int]) -> bool:
        stack = [(a, x)]
        while stack:
            i, y = stack.pop()
            if values[i] is not None:
                if values[i] != y:
                    return False
                continue
            values[i] = y
            assigned.append(i)
            for j, k in links[i]:
                stack.append((j, F.restrict(k, y)))
        return True

    def search(pos: int) -> None:
        if len(families) >= cap:
            return
        while pos < len(arrows) and values[pos] is not None:
            pos += 1
        if pos == len(arrows):
            families.append(tuple(values))
            return
        for x in F.sections(arrows[pos][0]):
            assigned: List[int] = []
            if propagate(pos, x, assigned):
                search(pos + 1)
            for i in assigned:
                values[i] = None

    search(0)
    return families


def _default_sheaves(where: Where) -> List:
    if isinstance(where, ProSite):
        base = where.base
        return [protop_service.pullback_sheaf(where, sheaf_service.constant_presheaf(base))] + [
            protop_service.pullback_sheaf(where, sheaf_service.yoneda(base, W)) for W in where.objects()
        ]
    return [sheaf_service.constant_presheaf(where)] + [sheaf_service.yoneda(where, W) for W in where.objects()]


def dc_restriction_check(where: Where, sheaves: Optional[Sequence] = None) -> CheckResult:
    """F(U) agrees with the limit of F over contractibles mapping to U."""
    check_id = "contract.dc-restriction"
    arena = _arena(where)
    found = contractibles(where)
    if not found:
        return CheckResult.from_findings(check_id, [], ["no weakly contractible object in scope"])
    gaps = [U for U in arena.objects if _contractible_cover(arena, U, found) is None]
    if gaps:
        return CheckResult.from_findings(
            check_id, [], [f"{arena.label(U)} is not covered by a weakly contractible object" for U in gaps]
        )

    failures: List[str] = []
    if isinstance(where, SiteSpec):
        dc = check_dc_category(where, found)
        if dc.verdict == Verdict.FAIL:
            failures.append(f"not a dc-category: {dc.details}")
    sheaves = _default_sheaves(where) if sheaves is None else list(sheaves)
    checked = 0
    for U in arena.objects:
        arrows, links = _arrows_from(arena, U, found)
        for F in sheaves:
            checked += 1
            own = F.sections(U)
            image = {tuple(F.restrict(h, x) for _, h in arrows) for x in own}
            families = _extensions(F, arrows, links, len(own) + 1)
            if len(image) != len(own):
                failures.append(f"{F.name}({arena.label(U)}) -> lim over contractibles is not injective")
            elif set(families) != image:
                failures.append(
                    f"{F.name}({arena.label(U)}) has {len(own)} sections, "
                    f"the limit over contractibles at least {len(families)}"
                )
    return CheckResult.from_findings(
        check_id, failures, checked=checked, scope=f"sheaves={len(sheaves)} contractible={len(found)}"
    )


# ===== Exactness of sections =====

def gamma_exactness_check(ps: ProSite, U: Union[str, ProObject], seq: ShortExactSequence) -> CheckResult:
    """Γ(U, -) applied to an exact sequence of sheaves, evaluated at the bottom level of U."""
    problems = cohom_service.sequence_violations(seq)
    if problems:
        raise ViolationError(f"{seq.name} is not exact as a sequence of sheaves: {problems[0]}")
    target = ps.constant(U) if isinstance(U, str) else U
    obj = target(target.bottom)
    witness = is_weakly_contractible(ps, target)
    A, B, C = seq.terms
    defects = cohom_service.exactness_defects(
        A.group(obj), B.group(obj), C.group(obj), seq.first.component(obj), seq.second.component(obj)
    )
    failures = [f"Γ({target.label}, {seq.name}) at the {key}: {text}" for key, text in defects.items()]
    return CheckResult.from_findings(
        "contract.gamma-exact", failures, checked=1, scope=f"U={target.label} {witness.verdict.value}"
    )
