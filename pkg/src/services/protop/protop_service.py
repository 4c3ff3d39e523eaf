"""
Pro-site Service - distinguished weak and transfinite coverings and their composition, pro-covering
morphisms, the pullback sheaf, the equalizer check, smallness and the coproduct facts
"""
from dataclasses import dataclass
from itertools import combinations_with_replacement, product
from typing import Dict, List, Optional, Sequence, Tuple

from loguru import logger

from src.config.settings import get_settings
from src.core.errors import (
    ConstructionFailedError,
    MalformedPresentationError,
    MissingLimitError,
    OutOfBudgetError,
    PreconditionError,
    WorkbenchError,
)
from src.models.schemas.report import CheckResult, Verdict
from src.services.fincat.category import Category, Morphism
from src.services.pro import pro_service
from src.services.pro.index import Element, IndexPoset
from src.services.pro.pro_object import ProMorphism, ProObject
from src.services.protop.protop import (
    DistinguishedTransfiniteCovering,
    DistinguishedWeakCovering,
    ProCoveringAnswer,
    ProCoveringVerdict,
    ProSite,
    StepWitness,
    TransfiniteCoveringMorphism,
)
from src.services.sheaf import sheaf_service
from src.services.sheaf.presheaf import Presheaf, Section, SheafMorphism
from src.services.sheaf.sheaf_service import Sheafification
from src.services.site import site_service
from src.services.site.site_service import KSelection
from src.services.site.site import CoveringFamily
from src.services.tower.tower import StepMarker, Tower
from src.services.tower.tower_service import splice
from src.utils.union_find import UnionFind

DISTINGUISHED = frozenset({StepMarker.DISTINGUISHED})


# ===== Helpers =====

def iso_over(given: ProMorphism, over: ProMorphism) -> Optional[ProMorphism]:
    """An isomorphism u with over . u == given, if one exists."""
    return next(pro_service.isos_over(given, over), None)


def _highest_below(index: IndexPoset, parts: Sequence[ProObject], levels: Sequence[Element]) -> Element:
    """The highest tuple t of a reindex with t[k] <= levels[k] for every k."""
    candidates = [
        t for t in index.elements if all(p.index.leq(t[k], levels[k]) for k, p in enumerate(parts))
    ]
    if not candidates:
        raise MalformedPresentationError(f"no common level below {list(levels)}")
    grading = index.grading()
    return min(candidates, key=lambda t: grading[t])


def _pull_to_level(cat: Category, F: ProObject, d: Morphism, level: Element, lower: Element) -> Morphism:
    """The base change of d: D -> F(level) along F(lower) -> F(level)."""
    if lower == level:
        return d
    return cat.fiber_product(F.transition(lower, level), d).legs[0]


def _in_sieve(t: ProMorphism, maps: Sequence[ProMorphism]) -> bool:
    return any(m.target == t.target and pro_service.factors_through(t, m) for m in maps)


def sieve_disagreements(
    ps: ProSite, target: ProObject, first: Sequence[ProMorphism], second: Sequence[ProMorphism]
) -> List[str]:
    """Sample arrows into `target` that lie in exactly one of the two generated sieves."""
    found = []
    for T in ps.samples:
        for t in pro_service.morphisms(T, target):
            left, right = _in_sieve(t, first), _in_sieve(t, second)
            if left != right:
                side = "first" if left else "second"
                found.append(f"an arrow {T.label} -> {target.label} lies only in the {side} sieve")
    return found


# ===== Distinguished weak coverings =====

def make_weak_covering(
    ps: ProSite, F: ProObject, fam: CoveringFamily, level: Optional[Element] = None
) -> DistinguishedWeakCovering:
    """Members F_w(i) = F(i) x_{F(level)} C_w for i below `level`, the final element by default."""
    cat = ps.cat
    i0 = F.top if level is None else level
    if i0 is None:
        raise PreconditionError(f"{F.label} has no final element; take its level representation first")
    if i0 not in F.index:
        raise PreconditionError(f"{i0!r} is not an index element of {F.label}")
    if fam.target != F(i0):
        raise PreconditionError(f"the family covers {fam.target}, not the level {F(i0)} of {F.label}")
    if not site_service.is_covering_family(ps.base, fam):
        raise PreconditionError(f"the family over {fam.target} is not a covering in {ps.base.name}")
    down = F.index.down_set(i0)
    bottom = F.bottom
    members, maps, projections, all_cones = [], [], [], []
    for c in fam.members:
        cones = {}
        for i in down.elements:
            try:
                cones[i] = cat.fiber_product(F.transition(i, i0), c)
            except MissingLimitError as exc:
                raise MissingLimitError(f"{F.label} at {i!r}: {exc}") from exc
        generators = {
            (a, b): cat.pullback_pairing(
                cones[b],
                F.transition(b, i0),
                cat.compose(F.transition(a, b), cones[a].legs[0]),
                cones[a].legs[1],
            )
            for a, b in down.covers()
        }
        member = ProObject.build(
            cat, down, {i: cone.apex for i, cone in cones.items()}, generators,
            name=f"{F.label}×{cat.describe(c)}",
        )
        leg = cones[bottom].legs[0]
        members.append(member)
        maps.append(ProMorphism(member, F, tuple((j, cat.compose(F.to_bottom(j), leg)) for j in F.index.elements)))
        projections.append(ProMorphism.from_level(member, ProObject.constant(cat, c.source), bottom, cones[bottom].legs[1]))
        all_cones.append(tuple((i, cones[i]) for i in down.elements))
    return DistinguishedWeakCovering(
        F, i0, fam, tuple(members), tuple(maps), tuple(projections), tuple(all_cones)
    )


def weak_covering_violations(ps: ProSite, cov: DistinguishedWeakCovering) -> List[str]:
    """Replays the level formula and the base covering condition of a claimed distinguished covering."""
    cat = ps.cat
    found = []
    if not site_service.is_covering_family(ps.base, cov.family):
        found.append(f"the family over {cov.family.target} is not a covering in {ps.base.name}")
    F, i0 = cov.target, cov.level
    if len(cov.members) != len(cov.family.members) or len(cov.maps) != len(cov.members):
        return found + ["members, maps and family members do not correspond"]
    for w, (member, c) in enumerate(zip(cov.members, cov.family.members)):
        if member.index != F.index.down_set(i0):
            found.append(f"member {w} is not indexed by the down-set of {i0!r}")
            continue
        for i in member.index.elements:
            apex = cat.fiber_product(F.transition(i, i0), c).apex
            if cat.find_iso(member(i), apex) is None:
                found.append(f"member {w} at {i!r} is {member(i)}, not {apex}")
        problems = cov.maps[w].violations()
        if cov.maps[w].source != member or cov.maps[w].target != F or problems:
            found.append(f"member {w}: the map to {F.label} is not a pro-morphism from the member")
    return found


def compose_weak(
    ps: ProSite, outer: DistinguishedWeakCovering, inners: Sequence[DistinguishedWeakCovering]
) -> DistinguishedWeakCovering:
    """One distinguished covering of the outer target generating the composite family's sieve.

    All levels are moved to a common level j0 below the outer and inner levels; the composite
    base family {D'_{w,v} -> F_w(j0) -> F(j0)} is then a covering of F(j0).
    """
    cat = ps.cat
    F = outer.target
    if len(inners) != len(outer.members):
        raise PreconditionError(f"{len(outer.members)} outer members but {len(inners)} inner coverings")
    for w, inner in enumerate(inners):
        if inner.target != outer.members[w]:
            raise PreconditionError(f"inner covering {w} does not cover outer member {w}")
    j0 = _common_level(F.index, [outer.level] + [inner.level for inner in inners])
    members = []
    for w, inner in enumerate(inners):
        for d in inner.family.members:
            lowered = _pull_to_level(cat, inner.target, d, inner.level, j0)
            members.append(cat.compose(outer.level_map(w, j0), lowered))
    result = make_weak_covering(ps, F, CoveringFamily(F(j0), tuple(members)), level=j0)
    composite = [
        pro_service.compose(outer.maps[w], m) for w, inner in enumerate(inners) for m in inner.maps
    ]
    problems = sieve_disagreements(ps, F, result.maps, composite)
    if problems:
        raise ConstructionFailedError(f"composite covering of {F.label}: {problems[0]}")
    logger.debug(f"composed {len(outer)} x {[len(i) for i in inners]} into {len(result)} members at {j0!r}")
    return result


def _common_level(index: IndexPoset, levels: Sequence[Element]) -> Element:
    candidates = [c for c in index.elements if all(index.leq(c, e) for e in levels)]
    if not candidates:
        raise MalformedPresentationError(f"no common level below {list(levels)}")
    grading = index.grading()
    return min(candidates, key=lambda c: grading[c])


def pullback_weak_covering(ps: ProSite, cov: DistinguishedWeakCovering, g: ProMorphism) -> DistinguishedWeakCovering:
    """Base change along g: V -> cov.target, presented at the bottom level of V."""
    if g.target != cov.target:
        raise PreconditionError(f"{g.target.label} is not the covered object {cov.target.label}")
    V = g.source
    fam = site_service.pullback_family(ps.base, cov.family, g.germ(cov.level))
    return make_weak_covering(ps, V, fam, level=V.bottom)


def base_change_violations(
    ps: ProSite, cov: DistinguishedWeakCovering, g: ProMorphism, pulled: DistinguishedWeakCovering
) -> List[str]:
    """Each pulled member must be V x_U U_w over V."""
    found = []
    for w, m in enumerate(cov.maps):
        square = pro_service.pro_fiber_product(g, m)
        if iso_over(pulled.maps[w], square.legs[0]) is None:
            found.append(f"member {w} of the base change is not {g.source.label} x {m.source.label}")
    return found


def check_base_change(ps: ProSite, budget: Optional[int] = None) -> CheckResult:
    """Base change of every distinguished covering of a sample along every sample map into it.

    Exhaustive over samples, basis families and morphisms; UNVERIFIED only once `budget` base
    changes have been made.
    """
    limit = get_settings().BASE_CHANGE_BUDGET if budget is None else budget
    failures, unverified, checked = [], [], 0
    targets = [U for U in ps.samples if U.top is not None]

    def result(exhausted: Optional[str] = None) -> CheckResult:
        found = CheckResult.from_findings(
            "protop.base-change", failures, unverified, checked, scope=f"samples={len(ps.samples)} budget={limit}"
        )
        if exhausted is None or failures:
            return found
        return found.model_copy(update={"verdict": Verdict.UNVERIFIED, "details": f"{found.details} reason: {exhausted}"})

    for U in targets:
        for fam in ps.base.families(U(U.top)):
            try:
                cov = make_weak_covering(ps, U, fam)
            except WorkbenchError as exc:
                unverified.append(f"{U.label}: {exc}")
                continue
            for V in ps.samples:
                for g in pro_service.morphisms(V, U):
                    if checked >= limit:
                        reason = f"budget of {limit} base changes exhausted at {V.label} -> {U.label}"
                        unverified.append(reason)
                        return result(reason)
                    checked += 1
                    try:
                        pulled = pullback_weak_covering(ps, cov, g)
                    except (OutOfBudgetError, MissingLimitError) as exc:
                        unverified.append(f"{V.label} -> {U.label}: {exc}")
                        continue
                    except PreconditionError as exc:
                        failures.append(f"{V.label} -> {U.label}: {exc}")
                        continue
                    failures.extend(f"{V.label} -> {U.label}: {p}" for p in base_change_violations(ps, cov, g, pulled))
    return result()


# ===== Distinguished transfinite coverings =====

def trivial_chain(ps: ProSite, U: ProObject) -> TransfiniteCoveringMorphism:
    return TransfiniteCoveringMorphism(Tower.of(ps.ambient, [U], [], name=f"chain({U.label})"), ())


def extend_chain(
    ps: ProSite, chain: TransfiniteCoveringMorphism, d: Morphism, level: Optional[Element] = None
) -> TransfiniteCoveringMorphism:
    """Appends the distinguished weak covering morphism given by a base covering morphism d onto a level of the last stage."""
    cov = make_weak_covering(ps, chain.source, CoveringFamily(d.target, (d,)), level)
    member = cov.members[0]
    t = chain.tower
    tower = Tower(ps.ambient, t.stages + (member,), t.steps + (cov.maps[0],), t.markers + (DISTINGUISHED,), t.name)
    return TransfiniteCoveringMorphism(tower, chain.witnesses + (StepWitness(cov, pro_service.identity(member)),))


def make_transfinite_covering(
    ps: ProSite, chain: TransfiniteCoveringMorphism, top: DistinguishedWeakCovering
) -> DistinguishedTransfiniteCovering:
    problems = chain.violations()
    if problems:
        raise ConstructionFailedError(f"chain {chain.tower.name}: {problems[0]}")
    if top.target != chain.source:
        raise PreconditionError(f"the top family covers {top.target.label}, not the chain end {chain.source.label}")
    down = chain.morphism
    return DistinguishedTransfiniteCovering(chain, top, tuple(pro_service.compose(down, m) for m in top.maps))


def as_transfinite(ps: ProSite, cov: DistinguishedWeakCovering) -> DistinguishedTransfiniteCovering:
    """A weak covering read as a transfinite one over the one-stage chain."""
    return make_transfinite_covering(ps, trivial_chain(ps, cov.target), cov)


def _identity_witness(ps: ProSite, X: ProObject) -> StepWitness:
    level = X.top if X.top is not None else X.bottom
    cov = make_weak_covering(ps, X, CoveringFamily(X(level), (ps.cat.identity(X(level)),)), level)
    iso = iso_over(cov.maps[0], pro_service.identity(X))
    if iso is None:
        raise ConstructionFailedError(f"the identity covering of {X.label} has no isomorphic member")
    return StepWitness(cov, iso)


def _copair_witness(ps: ProSite, cov: DistinguishedWeakCovering, down: ProMorphism) -> StepWitness:
    """Witness that the copairing of a distinguished covering's members is a distinguished morphism."""
    cat = ps.cat
    sources = [c.source for c in cov.family.members]
    cocone = cat.coproduct(sources)
    if cocone is None:
        raise OutOfBudgetError(f"no coproduct of {sources} in the snapshot")
    single = cat.factor_through_coproduct(cocone, cov.family.target, cov.family.members)
    one = make_weak_covering(ps, cov.target, CoveringFamily(cov.family.target, (single,)), cov.level)
    iso = iso_over(one.maps[0], down)
    if iso is None:
        raise ConstructionFailedError(f"the coproduct of the members of {cov.target.label} is not distinguished")
    return StepWitness(one, iso)


def _coproduct_witness(
    ps: ProSite, target: pro_service.ProCoproduct, parts: Sequence[StepWitness], step: ProMorphism
) -> StepWitness:
    """Witness that a finite coproduct of distinguished weak covering morphisms is one."""
    cat = ps.cat
    T = target.pro
    nodes = [inj.source for inj in target.injections]
    t0 = _highest_below(T.index, nodes, [w.covering.level for w in parts])
    lowered = [
        _pull_to_level(cat, node, w.covering.family.members[0], w.covering.level, t0[k])
        for k, (node, w) in enumerate(zip(nodes, parts))
    ]
    at_level = cat.coproduct([node(t0[k]) for k, node in enumerate(nodes)])
    covers = cat.coproduct([d.source for d in lowered])
    if at_level is None or covers is None:
        raise OutOfBudgetError(f"coproducts at level {t0!r} of {T.label} leave the snapshot")
    if at_level.apex != T(t0):
        raise MissingLimitError(f"level {t0!r} of {T.label} is not the chosen coproduct")
    single = cat.factor_through_coproduct(
        covers, T(t0), [cat.compose(at_level.injections[k], d) for k, d in enumerate(lowered)]
    )
    one = make_weak_covering(ps, T, CoveringFamily(T(t0), (single,)), t0)
    iso = iso_over(one.maps[0], step)
    if iso is None:
        raise ConstructionFailedError(f"the coproduct step into {T.label} is not distinguished")
    return StepWitness(one, iso)


def compose_transfinite(
    ps: ProSite, outer: DistinguishedTransfiniteCovering, inners: Sequence[DistinguishedTransfiniteCovering]
) -> DistinguishedTransfiniteCovering:
    """The chain U <- ... <- U~ <- ⊔U_w <- ... <- ⊔U~_w followed by the coproduct of the inner top families."""
    ps.require_admissible()
    cat, amb = ps.cat, ps.ambient
    top = outer.top
    if len(inners) != len(top.members):
        raise PreconditionError(f"{len(top.members)} outer members but {len(inners)} inner coverings")
    for w, inner in enumerate(inners):
        if inner.target != top.members[w]:
            raise PreconditionError(f"inner covering {w} does not cover outer member {w}")

    towers = [inner.chain.tower for inner in inners]
    length = max((t.length for t in towers), default=1)
    stages = [
        pro_service.pro_coproduct(cat, [t.stages[min(k, t.length - 1)] for t in towers], name=f"⊔V{k}")
        for k in range(length)
    ]
    down = pro_service.pro_copair(stages[0], outer.chain.source, top.maps)
    steps, witnesses = [down], [_copair_witness(ps, top, down)]
    for k in range(length - 1):
        lower, upper = stages[k], stages[k + 1]
        pieces, part_witnesses = [], []
        for w, (inner, t) in enumerate(zip(inners, towers)):
            if k + 1 < t.length:
                s, wit = t.steps[k], inner.chain.witnesses[k]
            else:
                s, wit = pro_service.identity(t.last), _identity_witness(ps, t.last)
            pieces.append(pro_service.compose(lower.injections[w], s))
            part_witnesses.append(wit)
        step = pro_service.pro_copair(upper, lower.pro, pieces)
        steps.append(step)
        witnesses.append(_coproduct_witness(ps, lower, part_witnesses, step))
    tail = Tower(
        amb,
        (outer.chain.source,) + tuple(q.pro for q in stages),
        tuple(steps),
        tuple(DISTINGUISHED for _ in steps),
        name="⊔",
    )
    chain = TransfiniteCoveringMorphism(splice(outer.chain.tower, tail), outer.chain.witnesses + tuple(witnesses))

    last = stages[-1]
    T = last.pro
    t0 = _highest_below(T.index, [t.last for t in towers], [inner.top.level for inner in inners])
    at_level = cat.coproduct([t.last(t0[w]) for w, t in enumerate(towers)])
    if at_level is None:
        raise OutOfBudgetError(f"no coproduct at level {t0!r} of {T.label} in the snapshot")
    members = []
    for w, (inner, t) in enumerate(zip(inners, towers)):
        for c in inner.top.family.members:
            lowered = _pull_to_level(cat, t.last, c, inner.top.level, t0[w])
            members.append(cat.compose(at_level.injections[w], lowered))
    top_cov = make_weak_covering(ps, T, CoveringFamily(T(t0), tuple(members)), t0)
    result = make_transfinite_covering(ps, chain, top_cov)

    composite = [pro_service.compose(outer.maps[w], m) for w, inner in enumerate(inners) for m in inner.maps]
    problems = sieve_disagreements(ps, outer.target, result.maps, composite)
    if problems:
        raise ConstructionFailedError(f"composite transfinite covering of {outer.target.label}: {problems[0]}")
    logger.debug(f"transfinite composite over {outer.target.label}: chain length {chain.tower.length}, {len(result)} members")
    return result


def covering_morphism_violations(ps: ProSite, cov: DistinguishedTransfiniteCovering) -> List[str]:
    """The chain steps, the chain composite and the copairing of the members must be pro-covering morphisms."""
    found = []
    members = pro_service.pro_coproduct(ps.cat, cov.members)
    named = [(f"step {i + 1}", s) for i, s in enumerate(cov.chain.tower.steps)]
    named.append(("chain", cov.chain.morphism))
    named.append(("copair", pro_service.pro_copair(members, cov.target, cov.maps)))
    for label, m in named:
        verdict = is_pro_covering(ps, m)
        if verdict.answer != ProCoveringAnswer.YES:
            found.append(f"{label} onto {cov.target.label}: {verdict.answer.value} ({verdict.reason})")
    return found


# ===== Pro-covering morphisms =====

def is_pro_covering(ps: ProSite, f: ProMorphism, depth: Optional[int] = None) -> ProCoveringVerdict:
    """Search level representations of f for one made of covering morphisms.

    Round 0 is the full common reindex; round r adds the down-sets of elements r steps
    below the top. The bottom level is itself a level representation and every other
    one is isomorphic to it, so a non-covering bottom germ is a finite obstruction.
    """
    depth = get_settings().REINDEX_DEPTH if depth is None else depth
    try:
        lm = pro_service.level_morphism(f)
        index = lm.index
        covering = {t: site_service.is_covering_morphism(ps.base, lm.at(t)) for t in index.elements}
    except (OutOfBudgetError, MissingLimitError) as exc:
        return ProCoveringVerdict(ProCoveringAnswer.UNKNOWN, reason=str(exc))

    grading = index.grading()
    rounds: List[Tuple[Element, ...]] = [index.elements]
    for r in range(depth):
        rounds.extend(
            tuple(s for s in index.elements if index.leq(s, t)) for t in index.elements if grading[t] == r
        )
    rounds.append((index.bottom,))
    for subset in rounds:
        if subset and all(covering[t] for t in subset):
            return ProCoveringVerdict(
                ProCoveringAnswer.YES, tuple((t, lm.at(t)) for t in subset), reason=f"{len(subset)} covering levels"
            )
    return ProCoveringVerdict(
        ProCoveringAnswer.NO,
        reason=f"bottom germ {ps.cat.describe(f.at_bottom)} is not a covering morphism",
    )


# ===== The pullback sheaf =====

class PullbackSheaf:
    """U = (U_i) |-> colim_i K(U_i), with classes represented at the bottom level."""

    def __init__(self, ps: ProSite, K: Presheaf):
        self.ps = ps
        self.K = K
        self.name = f"π*{K.name}"

    def classes(self, U: ProObject) -> Dict[Tuple[Element, Section], Tuple[Element, Section]]:
        """Union-find over (i, x), x in K(U(i)), identifying x with its restrictions."""
        parent: Dict[Tuple[Element, Section], Tuple[Element, Section]] = {}

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for i in U.index.elements:
            for x in self.K.sections(U(i)):
                parent[(i, x)] = (i, x)
        for a, b in U.index.covers():
            step = U.transition(a, b)
            for x in self.K.sections(U(b)):
                left, right = find((b, x)), find((a, self.K.restrict(step, x)))
                if left != right:
                    parent[left] = right
        bottom = U.bottom
        reps: Dict[Tuple[Element, Section], Tuple[Element, Section]] = {}
        for node in parent:
            root = find(node)
            i, x = node
            at_bottom = (bottom, self.K.restrict(U.to_bottom(i), x))
            known = reps.setdefault(root, at_bottom)
            if known != at_bottom:
                raise MalformedPresentationError(f"{self.K.name} is not functorial along {U.label}")
        return {node: reps[find(node)] for node in parent}

    def sections(self, U: ProObject) -> Tuple[Section, ...]:
        return tuple(dict.fromkeys(x for _, x in self.classes(U).values()))

    def restrict(self, g: ProMorphism, x: Section) -> Section:
        """Along g: V -> U, for a section of U represented at its bottom level."""
        return self.K.restrict(g.at_bottom, x)

    def __repr__(self) -> str:
        return f"PullbackSheaf({self.name})"


def pullback_sheaf(ps: ProSite, K: Presheaf) -> PullbackSheaf:
    return PullbackSheaf(ps, K)


def pullback_sheaf_violations(S: PullbackSheaf, cov: DistinguishedWeakCovering) -> List[str]:
    """The equalizer condition S(U) -> prod S(U_w) => prod S(U_w x_U U_v)."""
    U = cov.target
    pairs = {}
    for a in range(len(cov.maps)):
        for b in range(len(cov.maps)):
            square = pro_service.pro_fiber_product(cov.maps[a], cov.maps[b])
            pairs[(a, b)] = (square.legs[0], square.legs[1])
    images = {}
    for x in S.sections(U):
        key = tuple(S.restrict(m, x) for m in cov.maps)
        if key in images:
            return [f"{S.name}({U.label}): sections {images[key]!r} and {x!r} agree on every member"]
        images[key] = x
    found = []
    for family in product(*(S.sections(m) for m in cov.members)):
        matching = all(
            S.restrict(p, family[a]) == S.restrict(q, family[b]) for (a, b), (p, q) in pairs.items()
        )
        if matching and family not in images:
            found.append(f"{S.name}({U.label}): a matching family over {len(cov)} members has no gluing")
            break
    return found


def yoneda_agreement(ps: ProSite, S: PullbackSheaf, W: str, U: ProObject) -> bool:
    """For S = π*y(W): S(U) is in bijection with hom_set(U, c(W)) via germs at the bottom."""
    maps = pro_service.hom_set(U, ProObject.constant(ps.cat, W))
    sections = S.sections(U)
    if len(maps) != len(sections):
        return False
    return {f.at_bottom for f in maps} == set(sections)


def check_pullback_sheaf(ps: ProSite, K: Presheaf, coverings: Sequence[DistinguishedWeakCovering]) -> CheckResult:
    S = pullback_sheaf(ps, K)
    failures, unverified = [], []
    for cov in coverings:
        try:
            failures.extend(pullback_sheaf_violations(S, cov))
        except (OutOfBudgetError, MissingLimitError) as exc:
            unverified.append(f"{cov.target.label}: {exc}")
    return CheckResult.from_findings(
        "protop.pullback-sheaf", failures, unverified, checked=len(coverings) - len(unverified), scope=f"sheaf={K.name}"
    )


# ===== The pullback formula against the comma-category colimit =====

def comma_colimit(ps: ProSite, K: Presheaf, U: ProObject) -> UnionFind:
    """colim of K(C) over the comma category of maps U -> c(C), one node (C, germ, x) per element."""
    cat = ps.cat
    objs = list(dict.fromkeys([*ps.objects(), U(U.bottom)]))
    maps = {C: tuple(pro_service.morphisms(U, ps.constant(C))) for C in objs}
    uf = UnionFind()
    for C in objs:
        for f in maps[C]:
            for x in K.sections(C):
                uf.add((C, f.at_bottom, x))
    for k in cat.all_morphisms(objs):
        for f in maps[k.source]:
            moved = cat.compose(k, f.at_bottom)
            for x in K.sections(k.target):
                uf.union((k.target, moved, x), (k.source, f.at_bottom, K.restrict(k, x)))
    return uf


def comma_presheaf(ps: ProSite, K: Presheaf) -> Presheaf:
    """C |-> the comma colimit at c(C); restriction along k: C' -> C precomposes every germ with k."""
    colimits: Dict[str, UnionFind] = {}

    def classes(C: str) -> UnionFind:
        uf = colimits.get(C)
        if uf is None:
            uf = colimits[C] = comma_colimit(ps, K, ps.constant(C))
        return uf

    def restrict(k: Morphism, node: Section) -> Section:
        D, germ, x = node
        return classes(k.source).find((D, ps.cat.compose(germ, k), x))

    return Presheaf(ps.base, f"colim {K.name}", lambda C: classes(C).representatives(), restrict)


@dataclass(frozen=True)
class CommaComparison:
    """The comma-colimit presheaf of K and its sheafification, mapped into the sheafification of K."""
    K: Presheaf
    comma: Presheaf
    comma_sheaf: Sheafification
    target: Sheafification
    induced: SheafMorphism


def comma_comparison(ps: ProSite, K: Presheaf) -> CommaComparison:
    comma = comma_presheaf(ps, K)
    comma_sheaf, target = sheaf_service.sheafify(comma), sheaf_service.sheafify(K)
    evaluate = SheafMorphism(comma, K, lambda C, node: K.restrict(node[1], node[2]), name=f"ev_{K.name}")
    induced = sheaf_service.factor_through_unit(comma_sheaf, evaluate.then(target.unit))
    return CommaComparison(K, comma, comma_sheaf, target, induced)


def pullback_formula_violations(
    ps: ProSite, K: Presheaf, U: ProObject, comparison: Optional[CommaComparison] = None
) -> List[str]:
    """The level formula colim_i K#(U_i) against the sheafified comma-category colimit at U.

    Both sides are read at the bottom level: a map U -> c(C) is its bottom germ, so the comma
    colimit at U is the one at c(U(bottom)).
    """
    bottom = U(U.bottom)
    if bottom not in ps.objects():
        raise OutOfBudgetError(f"the bottom level {bottom} of {U.label} is outside the snapshot")
    cmp = comma_comparison(ps, K) if comparison is None else comparison
    for members in comma_colimit(ps, K, U).classes():
        images = {K.restrict(germ, x) for _, germ, x in members}
        if len(images) != 1:
            return [f"{K.name}({U.label}): a comma class restricts to {len(images)} different sections"]
    sheafified = cmp.target.sheaf
    try:
        image = cmp.induced.image(bottom)
    except PreconditionError as exc:
        return [f"{K.name}({U.label}): the sheafified comma colimit does not map to {sheafified.name}: {exc}"]
    found = []
    sections = set(sheafified.sections(bottom))
    glued = len(cmp.comma_sheaf.sheaf.sections(bottom))
    if len(image) != glued:
        found.append(f"{K.name}({U.label}): two sheafified comma classes give the same section")
    if image != sections:
        found.append(f"{K.name}({U.label}): {len(sections)} sheafified sections against {glued} comma classes")
    level = set(pullback_sheaf(ps, sheafified).sections(U))
    if level != sections:
        found.append(f"{K.name}({U.label}): the level colimit has {len(level)} sections, not {len(sections)}")
    return found


def check_pullback_formula(
    ps: ProSite, sheaves: Sequence[Presheaf], objects: Optional[Sequence[ProObject]] = None
) -> CheckResult:
    """π*K on pro-objects with at most three index elements, for each base presheaf K."""
    candidates = ps.samples if objects is None else tuple(objects)
    targets = [U for U in candidates if len(U.index) <= 3]
    failures, unverified, checked = [], [], 0
    for K in sheaves:
        cmp = comma_comparison(ps, K)
        for U in targets:
            try:
                failures.extend(pullback_formula_violations(ps, K, U, cmp))
                checked += 1
            except (OutOfBudgetError, MissingLimitError) as exc:
                unverified.append(f"{K.name}({U.label}): {exc}")
    return CheckResult.from_findings(
        "protop.pullback-formula", failures, unverified, checked,
        scope=f"sheaves={len(sheaves)} objects={len(targets)}",
    )


# ===== Equalizers of pro-coverings =====

def equalizer_check(ps: ProSite, f: ProMorphism, W: ProObject) -> CheckResult:
    """Mor(U, W) -> Mor(V, W) => Mor(V x_U V, W) is an equalizer for a pro-covering f: V -> U."""
    verdict = is_pro_covering(ps, f)
    if verdict.answer != ProCoveringAnswer.YES:
        raise PreconditionError(f"{f.source.label} -> {f.target.label} is not a pro-covering morphism: {verdict.reason}")
    U, V = f.target, f.source
    square = pro_service.pro_fiber_product(f, f)
    p, q = square.legs[0], square.legs[1]
    from_u = pro_service.hom_set(U, W)
    from_v = pro_service.hom_set(V, W)
    from_square = pro_service.hom_set(square.pro, W)
    restricted = [pro_service.compose(a, f) for a in from_u]
    failures = []
    if len(set(restricted)) != len(restricted):
        failures.append(f"Mor({U.label}, {W.label}) -> Mor({V.label}, {W.label}) is not injective")
    image = set(restricted)
    for b in from_v:
        left, right = pro_service.compose(b, p), pro_service.compose(b, q)
        if left not in from_square or right not in from_square:
            failures.append(f"a composite with the fiber product projections is not a pro-morphism into {W.label}")
            break
        if (left == right) != (b in image):
            failures.append(f"a map {V.label} -> {W.label} is equalized but not restricted from {U.label}"
                            if left == right else
                            f"a restricted map {V.label} -> {W.label} is not equalized")
            break
    return CheckResult.from_findings(
        "protop.equalizer", failures, checked=len(from_v),
        scope=f"|Mor(U,W)|={len(from_u)} |Mor(V,W)|={len(from_v)} |Mor(VxV,W)|={len(from_square)}",
    )


# ===== Smallness =====

def candidate_k(ps: ProSite, F: ProObject, selection: KSelection) -> List[ProMorphism]:
    """{D x_{F(i)} F -> F : i in I, D -> F(i) in K(F(i))}"""
    found = []
    for i in F.index.elements:
        for d in selection.of(F(i)):
            found.append(make_weak_covering(ps, F, CoveringFamily(F(i), (d,)), level=i).maps[0])
    return found


def check_pro_smallness(
    ps: ProSite, selection: Optional[KSelection] = None, objects: Optional[Sequence[ProObject]] = None
) -> CheckResult:
    """Every distinguished covering morphism onto a sample is refined by a member of its K-set."""
    selection = site_service.generate_K(ps.base) if selection is None else selection
    targets = ps.samples if objects is None else tuple(objects)
    failures, unverified, checked = [], [], 0
    for F in targets:
        try:
            ks = candidate_k(ps, F, selection)
        except (OutOfBudgetError, MissingLimitError) as exc:
            unverified.append(f"{F.label}: {exc}")
            continue
        for j in F.index.elements:
            for c in site_service.covering_morphisms_onto(ps.base, F(j)):
                try:
                    e = make_weak_covering(ps, F, CoveringFamily(F(j), (c,)), level=j).maps[0]
                except (OutOfBudgetError, MissingLimitError) as exc:
                    unverified.append(f"{F.label} at {j!r}: {exc}")
                    continue
                checked += 1
                refined = any(k.target == e.target and pro_service.factors_through(k, e) for k in ks)
                if not refined:
                    failures.append(
                        f"{F.label}: the covering {ps.cat.describe(c)} at level {j!r} refines no member of K"
                    )
    return CheckResult.from_findings(
        "protop.smallness", failures, unverified, checked, scope=f"samples={len(targets)}"
    )


# ===== Coproducts in the pro-site =====

def coproduct_covering_facts(
    ps: ProSite, claims: Sequence[DistinguishedWeakCovering] = (), limit: Optional[int] = None
) -> CheckResult:
    """Injections into finite coproducts, coproducts of members and coproducts of distinguished
    morphisms are distinguished; each claimed covering is replayed as well."""
    cat = ps.cat
    limit = get_settings().MAX_FAMILY_SIZE * 2 if limit is None else limit
    failures, unverified, checked = [], [], 0
    parts = [P for P in ps.samples if P.top is not None]
    pairs = list(combinations_with_replacement(parts, 2))[:limit]

    for A, B in pairs:
        label = f"{A.label} ⊔ {B.label}"
        try:
            checked += 1
            T = pro_service.pro_coproduct(cat, [A, B])
            t = T.pro.top
            at_top = cat.coproduct([A(t[0]), B(t[1])])
            if at_top is None:
                raise OutOfBudgetError(f"no coproduct of the top levels of {label}")
            cov = make_weak_covering(ps, T.pro, CoveringFamily(T.pro(t), at_top.injections), t)
            for w, inj in enumerate(T.injections):
                if iso_over(inj, cov.maps[w]) is None:
                    failures.append(f"injections: {label}: part {w} is not the pulled-back member")

            checked += 1
            covs = []
            for P in (A, B):
                onto = site_service.covering_morphisms_onto(ps.base, P(P.top))
                covs.append(make_weak_covering(ps, P, CoveringFamily(P(P.top), (onto[-1],))))
            sources = pro_service.pro_coproduct(cat, [c.members[0] for c in covs])
            step = pro_service.pro_copair(
                sources, T.pro, [pro_service.compose(T.injections[k], c.maps[0]) for k, c in enumerate(covs)]
            )
            _coproduct_witness(ps, T, [StepWitness(c, pro_service.identity(c.members[0])) for c in covs], step)
        except (OutOfBudgetError, MissingLimitError) as exc:
            unverified.append(f"{label}: {exc}")
        except (PreconditionError, ConstructionFailedError) as exc:
            failures.append(f"coproducts: {label}: {exc}")

    for P in parts:
        for fam in ps.base.families(P(P.top)):
            checked += 1
            try:
                cov = make_weak_covering(ps, P, fam)
                members = pro_service.pro_coproduct(cat, cov.members)
                _copair_witness(ps, cov, pro_service.pro_copair(members, P, cov.maps))
            except (OutOfBudgetError, MissingLimitError) as exc:
                unverified.append(f"{P.label}: {exc}")
            except (PreconditionError, ConstructionFailedError) as exc:
                failures.append(f"members: {P.label}: {exc}")

    for cov in claims:
        checked += 1
        failures.extend(f"claim over {cov.target.label}: {p}" for p in weak_covering_violations(ps, cov))

    return CheckResult.from_findings(
        "protop.coproduct-coverings", failures, unverified, checked, scope=f"pairs={len(pairs)}"
    )
