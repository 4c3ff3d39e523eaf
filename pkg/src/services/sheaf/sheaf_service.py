"""
Sheaf Service - sheaf condition, plus-construction sheafification, Yoneda, epimorphisms and transport
"""
from dataclasses import dataclass
from enum import Enum
from itertools import product
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

from loguru import logger

from src.core.errors import OutOfBudgetError, PreconditionError, ViolationError
from src.models.schemas.report import CheckResult
from src.services.fincat.category import Morphism
from src.services.fincat.functor import Functor
from src.services.sheaf.presheaf import MatchingFamily, Presheaf, Section, SheafMorphism
from src.services.site.site import CoveringFamily, SiteSpec
from src.utils.union_find import UnionFind

MORPHISM_SEARCH_LIMIT = 4096


# ===== Representables and constants =====

def yoneda(s: SiteSpec, W: str) -> Presheaf:
    """y(W): sections over U are the morphisms U -> W, restriction is precomposition."""
    cat = s.cat
    return Presheaf(s, f"y({W})", lambda U: cat.hom(U, W), lambda f, x: cat.compose(x, f))


def yoneda_map(s: SiteSpec, f: Morphism) -> SheafMorphism:
    cat = s.cat
    return SheafMorphism(
        yoneda(s, f.source), yoneda(s, f.target), lambda U, x: cat.compose(f, x), name=f"y({cat.describe(f)})"
    )


def constant_presheaf(s: SiteSpec, values: Sequence[Section] = ("*",), name: Optional[str] = None) -> Presheaf:
    vals = tuple(values)
    return Presheaf(s, name or f"const{len(vals)}", lambda U: vals, lambda f, x: x)


# ===== Sheaf condition =====

def _pairwise_pullbacks(s: SiteSpec, fam: CoveringFamily) -> Dict[Tuple[int, int], Tuple[Morphism, Morphism]]:
    cat = s.cat
    found = {}
    for j, n in enumerate(fam.members):
        for i in range(j + 1):
            cone = cat.fiber_product(fam.members[i], n)
            found[(i, j)] = (cone.legs[0], cone.legs[1])
    return found


def matching_families(F: Presheaf, fam: CoveringFamily) -> List[MatchingFamily]:
    """All tuples of member sections that agree on every pairwise pullback, self-pullbacks included."""
    overlaps = _pairwise_pullbacks(F.site, fam)
    members = fam.members
    found: List[MatchingFamily] = []

    def extend(prefix: List[Section]) -> None:
        k = len(prefix)
        if k == len(members):
            found.append(MatchingFamily(fam, tuple(prefix)))
            return
        for x in F.sections(members[k].source):
            prefix.append(x)
            ok = True
            for i in range(k + 1):
                left, right = overlaps[(i, k)]
                if F.restrict(left, prefix[i]) != F.restrict(right, x):
                    ok = False
                    break
            if ok:
                extend(prefix)
            prefix.pop()

    extend([])
    return found


def sheaf_condition(F: Presheaf, fam: CoveringFamily) -> Optional[str]:
    """None when F(U) -> matching families is a bijection, otherwise a description of the failure."""
    matches = matching_families(F, fam)
    images: Dict[Tuple[Section, ...], Section] = {}
    for x in F.sections(fam.target):
        key = tuple(F.restrict(m, x) for m in fam.members)
        if key in images:
            return f"sections {images[key]!r} and {x!r} over {fam.target} agree on every member"
        images[key] = x
    for mf in matches:
        if mf.data not in images:
            return f"matching family {mf.data!r} over {fam.target} has no gluing"
    return None


def is_sheaf(F: Presheaf, objects: Optional[Sequence[str]] = None, check_id: Optional[str] = None) -> CheckResult:
    s = F.site
    objs = s.objects() if objects is None else objects
    if F.domain is not None:
        objs = [u for u in objs if u in F.domain]
    failures: List[str] = []
    unverified: List[str] = []
    checked = 0
    for u in objs:
        for fam in s.families(u):
            try:
                problem = sheaf_condition(F, fam)
            except OutOfBudgetError as exc:
                unverified.append(str(exc))
                continue
            checked += 1
            if problem:
                failures.append(problem)
    return CheckResult.from_findings(check_id or f"sheaf.{F.name}", failures, unverified, checked)


def glue(S: Presheaf, U: str, members: Sequence[Morphism], values: Sequence[Section]) -> Section:
    """The unique section of S over U restricting to `values` along `members`."""
    found = [t for t in S.sections(U) if all(S.restrict(m, t) == v for m, v in zip(members, values))]
    if len(found) != 1:
        raise ViolationError(f"{S.name}: {len(found)} gluings over {U}, expected exactly one")
    return found[0]


# ===== Plus construction =====

class LocalSection(NamedTuple):
    """A matching family on a covering of its target, taken up to local agreement."""
    members: Tuple[Morphism, ...]
    data: Tuple[Section, ...]


class PlusPresheaf(Presheaf):
    """F+: matching families on basis coverings modulo agreement on a common refinement."""

    def __init__(self, F: Presheaf):
        self.base = F
        self._classes: Dict[str, UnionFind] = {}
        self._restricted: Dict[Tuple[Morphism, LocalSection], LocalSection] = {}
        super().__init__(F.site, f"{F.name}+", self._enumerate, self._restrict, domain=F.domain)
        self.unit = SheafMorphism(F, self, self._unit, name=f"eta_{F.name}")

    def _locally_equal(self, P: str, a: Section, b: Section) -> bool:
        F = self.base
        return a == b or self.site.covers(P, lambda h: F.restrict(h, a) == F.restrict(h, b))

    def equivalent(self, first: LocalSection, second: LocalSection) -> bool:
        cat = self.site.cat
        F = self.base
        for m, x in zip(first.members, first.data):
            for n, y in zip(second.members, second.data):
                cone = cat.fiber_product(m, n)
                if not self._locally_equal(cone.apex, F.restrict(cone.legs[0], x), F.restrict(cone.legs[1], y)):
                    return False
        return True

    def _enumerate(self, U: str) -> List[LocalSection]:
        uf = UnionFind()
        reps: List[LocalSection] = []
        for fam in self.site.families(U):
            for mf in matching_families(self.base, fam):
                elem = LocalSection(fam.members, mf.data)
                if elem in uf:
                    continue
                uf.add(elem)
                for rep in reps:
                    if self.equivalent(elem, rep):
                        uf.union(rep, elem)
                        break
                else:
                    reps.append(elem)
        self._classes[U] = uf
        logger.debug(f"{self.name}({U}): {len(reps)} classes from {len(uf)} matching families")
        return reps

    def classify(self, U: str, elem: LocalSection) -> LocalSection:
        reps = self.sections(U)
        uf = self._classes[U]
        if elem in uf:
            return uf.find(elem)
        for rep in reps:
            if self.equivalent(elem, rep):
                return rep
        raise PreconditionError(f"{self.name}: local section over {U} matches no class; the family does not cover")

    def _restrict(self, h: Morphism, elem: LocalSection) -> LocalSection:
        key = (h, elem)
        cached = self._restricted.get(key)
        if cached is None:
            cat = self.site.cat
            members, data = [], []
            for m, x in zip(elem.members, elem.data):
                cone = cat.fiber_product(h, m)
                members.append(cone.legs[0])
                data.append(self.base.restrict(cone.legs[1], x))
            cached = self.classify(h.source, LocalSection(tuple(members), tuple(data)))
            self._restricted[key] = cached
        return cached

    def _unit(self, U: str, x: Section) -> LocalSection:
        return self.classify(U, LocalSection((self.site.cat.identity(U),), (x,)))


@dataclass(frozen=True)
class Sheafification:
    source: Presheaf
    plus: PlusPresheaf
    sheaf: PlusPresheaf
    unit: SheafMorphism


def sheafify(F: Presheaf) -> Sheafification:
    """Plus construction applied twice; the unit is the composite of both plus units."""
    once = PlusPresheaf(F)
    twice = PlusPresheaf(once)
    return Sheafification(F, once, twice, once.unit.then(twice.unit))


def _factor_plus(P: PlusPresheaf, phi: SheafMorphism) -> SheafMorphism:
    S = phi.target

    def component(U: str, s: LocalSection) -> Section:
        values = [phi(m.source, x) for m, x in zip(s.members, s.data)]
        return glue(S, U, s.members, values)

    return SheafMorphism(P, S, component, name=f"{phi.name}+")


def factor_through_unit(sh: Sheafification, phi: SheafMorphism) -> SheafMorphism:
    """The map F++ -> S induced by phi: F -> S into a sheaf S."""
    return _factor_plus(sh.sheaf, _factor_plus(sh.plus, phi))


# ===== Morphisms of presheaves =====

def presheaf_morphisms(
    F: Presheaf,
    S: Presheaf,
    objects: Optional[Sequence[str]] = None,
    limit: int = MORPHISM_SEARCH_LIMIT,
) -> List[SheafMorphism]:
    """Every natural transformation F -> S on the given objects, by backtracking over components."""
    cat = F.site.cat
    objs = list(F.site.objects() if objects is None else objects)
    arrows = cat.all_morphisms(objs)
    position = {obj: k for k, obj in enumerate(objs)}
    checks: List[List[Morphism]] = [[] for _ in objs]
    for f in arrows:
        checks[max(position[f.source], position[f.target])].append(f)
    found: List[SheafMorphism] = []
    tables: List[Dict[Section, Section]] = []

    def natural(f: Morphism) -> bool:
        src, dst = tables[position[f.source]], tables[position[f.target]]
        return all(S.restrict(f, dst[x]) == src[F.restrict(f, x)] for x in F.sections(f.target))

    def extend() -> None:
        k = len(tables)
        if k == len(objs):
            if len(found) >= limit:
                raise OutOfBudgetError(f"more than {limit} presheaf morphisms {F.name} -> {S.name}")
            frozen = {obj: dict(tables[position[obj]]) for obj in objs}
            found.append(SheafMorphism(F, S, lambda U, x, t=frozen: t[U][x], name=f"nt{len(found)}"))
            return
        xs = F.sections(objs[k])
        for values in product(S.sections(objs[k]), repeat=len(xs)):
            tables.append(dict(zip(xs, values)))
            if all(natural(f) for f in checks[k]):
                extend()
            tables.pop()

    extend()
    return found


def verify_unit_universal(sh: Sheafification, S: Presheaf, objects: Optional[Sequence[str]] = None) -> List[str]:
    """Every F -> S factors through the unit exactly once, for a sheaf S."""
    problems = []
    outgoing = presheaf_morphisms(sh.sheaf, S, objects)
    for phi in presheaf_morphisms(sh.source, S, objects):
        hits = [psi for psi in outgoing if sh.unit.then(psi).equals(phi, objects)]
        if len(hits) != 1:
            problems.append(f"{phi.name} factors {len(hits)} times through the unit of {sh.sheaf.name}")
            continue
        if not factor_through_unit(sh, phi).equals(hits[0], objects):
            problems.append(f"the glued factorization of {phi.name} differs from the enumerated one")
    return problems


def is_epi_sheaf(phi: SheafMorphism, objects: Optional[Sequence[str]] = None) -> bool:
    """Local surjectivity: each target section is locally in the image."""
    s = phi.target.site
    T = phi.target
    objs = s.objects() if objects is None else objects
    for U in objs:
        for t in T.sections(U):
            if not s.covers(U, lambda h, t=t: T.restrict(h, t) in phi.image(h.source)):
                logger.debug(f"{phi.name}: section {t!r} over {U} is not locally in the image")
                return False
    return True


# ===== Transport along functors =====

class TransportDirection(str, Enum):
    PUSHFORWARD = "pushforward"
    PULLBACK = "pullback"


class KanExtensionPresheaf(Presheaf):
    """Pointwise colimit over the comma category of d -> u(c), built with union-find."""

    def __init__(self, F: Presheaf, u: Functor, target_site: SiteSpec):
        self.base = F
        self.functor = u
        self._classes: Dict[str, UnionFind] = {}
        super().__init__(target_site, f"{u.name}_!{F.name}", self._enumerate, self._restrict)

    def _source_objects(self) -> List[str]:
        objs = self.base.site.objects()
        if self.base.domain is not None:
            objs = [c for c in objs if c in self.base.domain]
        return list(objs)

    def _enumerate(self, d: str) -> List[Tuple[str, Morphism, Section]]:
        D = self.site.cat
        C = self.base.site.cat
        F, u = self.base, self.functor
        objs = self._source_objects()
        uf = UnionFind()
        for c in objs:
            for g in D.hom(d, u(c)):
                for x in F.sections(c):
                    uf.add((c, g, x))
        for k in C.all_morphisms(objs):
            uk = u(k)
            for g in D.hom(d, u(k.source)):
                moved = D.compose(uk, g)
                for x in F.sections(k.target):
                    uf.union((k.target, moved, x), (k.source, g, F.restrict(k, x)))
        self._classes[d] = uf
        return uf.representatives()

    def _restrict(self, h: Morphism, elem: Tuple[str, Morphism, Section]) -> Tuple[str, Morphism, Section]:
        self.sections(h.source)
        c, g, x = elem
        return self._classes[h.source].find((c, self.site.cat.compose(g, h), x))


def transport(
    F: Presheaf,
    u: Functor,
    direction: TransportDirection,
    along_site: SiteSpec,
    sheafify_result: bool = True,
) -> Presheaf:
    """Move F along u: C -> D.

    Pushforward takes a presheaf on D to one on `along_site` (over C) by precomposition.
    Pullback takes a presheaf on C to one on `along_site` (over D) as the comma-category
    colimit, sheafified unless `sheafify_result` is off.
    """
    direction = TransportDirection(direction)
    if direction is TransportDirection.PUSHFORWARD:
        return Presheaf(
            along_site,
            f"{u.name}^*{F.name}",
            lambda c: F.sections(u(c)),
            lambda k, x: F.restrict(u(k), x),
        )
    lan = KanExtensionPresheaf(F, u, along_site)
    if not sheafify_result:
        return lan
    return sheafify(lan).sheaf
