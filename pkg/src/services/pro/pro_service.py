"""
Pro Service - hom-set formula, level representations, common reindexing, and limits and coproducts in Pro(C)
"""
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

from loguru import logger

from src.core.errors import MalformedPresentationError, MissingLimitError
from src.services.fincat.category import Category, Cocone, Cone, Diagram, Morphism
from src.services.fincat.functor import Functor
from src.services.pro.index import Element, IndexPoset, product_poset
from src.services.pro.pro_object import ProMorphism, ProObject
from src.utils.union_find import UnionFind

Arrow = Tuple[int, int, ProMorphism]


# ===== Hom-sets =====

def hom_set(F: ProObject, G: ProObject) -> Tuple[ProMorphism, ...]:
    """lim over j of colim over i of Hom(F(i), G(j)), computed literally."""
    return _hom_set(id(F.category), F, G)


@lru_cache(maxsize=1024)
def _hom_set(category_id: int, F: ProObject, G: ProObject) -> Tuple[ProMorphism, ...]:
    F.index.require_cofiltered()
    G.index.require_cofiltered()
    cat = F.category
    choices: List[List[Morphism]] = []
    for j in G.index.elements:
        uf = UnionFind()
        for i in F.index.elements:
            for h in cat.hom(F(i), G(j)):
                uf.add((i, h))
        for a, b in F.index.order:
            if a == b:
                continue
            step = F.transition(a, b)
            for h in cat.hom(F(b), G(j)):
                uf.union((b, h), (a, cat.compose(h, step)))
        germs: Dict[Morphism, None] = {}
        for i, h in uf.representatives():
            germs.setdefault(cat.compose(h, F.to_bottom(i)))
        choices.append(list(germs))

    targets = G.index.elements
    position = {j: k for k, j in enumerate(targets)}
    checks: List[List[Tuple[Element, Element]]] = [[] for _ in targets]
    for a, b in G.index.order:
        if a != b:
            checks[max(position[a], position[b])].append((a, b))
    found: List[ProMorphism] = []
    chosen: List[Morphism] = []

    def extend() -> None:
        k = len(chosen)
        if k == len(targets):
            found.append(ProMorphism(F, G, tuple(zip(targets, chosen))))
            return
        for g in choices[k]:
            chosen.append(g)
            if all(cat.compose(G.transition(a, b), chosen[position[a]]) == chosen[position[b]] for a, b in checks[k]):
                extend()
            chosen.pop()

    extend()
    logger.debug(f"hom_set({F.label}, {G.label}) has {len(found)} elements")
    return tuple(found)


def constant_morphism(category: Category, f: Morphism) -> ProMorphism:
    return ProMorphism(ProObject.constant(category, f.source), ProObject.constant(category, f.target), ((0, f),))


def identity(F: ProObject) -> ProMorphism:
    return ProMorphism(F, F, tuple((j, F.to_bottom(j)) for j in F.index.elements))


def compose(g: ProMorphism, f: ProMorphism) -> ProMorphism:
    """g after f"""
    cat = f.source.category
    base = f.at_bottom
    return ProMorphism(f.source, g.target, tuple((j, cat.compose(h, base)) for j, h in g.germs))


# Every index here has a bottom, so F is isomorphic to F(bottom) and a morphism is its bottom germ.

def inverse(f: ProMorphism) -> Optional[ProMorphism]:
    """f is an iso iff its bottom germ is one in C."""
    back = f.source.category.inverse(f.at_bottom)
    if back is None:
        return None
    return ProMorphism.from_level(f.target, f.source, f.target.bottom, back)


def pro_find_iso(F: ProObject, G: ProObject) -> Optional[Tuple[ProMorphism, ProMorphism]]:
    h = F.category.find_iso(F(F.bottom), G(G.bottom))
    if h is None:
        return None
    f = ProMorphism.from_level(F, G, F.bottom, h)
    return f, inverse(f)


def lifts(given: ProMorphism, over: ProMorphism) -> Iterator[ProMorphism]:
    """Every u with over . u == given; over . u and given agree iff their bottom germs do."""
    if given.target != over.target:
        raise MalformedPresentationError(f"{given.target.label} and {over.target.label} differ; nothing to lift over")
    source, middle = given.source, over.source
    for h in source.category.lifts(given.at_bottom, over.at_bottom):
        yield ProMorphism.from_level(source, middle, source.bottom, h)


def isos_over(given: ProMorphism, over: ProMorphism) -> Iterator[ProMorphism]:
    """Isomorphisms u with over . u == given."""
    if given.target != over.target:
        raise MalformedPresentationError(f"{given.target.label} and {over.target.label} differ; nothing to lift over")
    source, middle = given.source, over.source
    for h in source.category.isos_over(given.at_bottom, over.at_bottom):
        yield ProMorphism.from_level(source, middle, source.bottom, h)


def factors_through(given: ProMorphism, over: ProMorphism) -> bool:
    return next(lifts(given, over), None) is not None


def morphisms(F: ProObject, G: ProObject) -> Iterator[ProMorphism]:
    """Hom(F, G) read off Hom_C(F(bottom), G(bottom)); the same set hom_set computes, lazily."""
    for h in F.category.hom(F(F.bottom), G(G.bottom)):
        yield ProMorphism.from_level(F, G, F.bottom, h)


# ===== Level representations =====

@dataclass(frozen=True)
class LevelRepresentation:
    pro: ProObject
    iso: ProMorphism
    grading: Tuple[Tuple[Element, int], ...]
    completed: bool = False


def complete_diagram(F: ProObject) -> ProObject:
    """Add lower bounds to a connected finite index until it is cofiltered.

    A missing lower bound of a and b becomes the limit of F over everything above a or b.
    """
    cat = F.category
    index = F.index
    elements = list(index.elements)
    pairs = set(index.order)
    levels = dict(F.levels)
    table = dict(F.transitions)
    for _ in range(len(elements) ** 2 + 1):
        if index.is_cofiltered():
            return ProObject.build(cat, index, levels, table, name=f"{F.label}^")
        a, b = next((a, b) for a in index.elements for b in index.elements if not index.lower_bounds(a, b))
        ups = [c for c in index.elements if index.leq(a, c) or index.leq(b, c)]
        if not any(index.leq(a, c) and index.leq(b, c) for c in ups):
            raise MalformedPresentationError(f"{a} and {b} have no common upper bound in the index of {F.label}")
        pos = {c: k for k, c in enumerate(ups)}
        arrows = tuple((pos[x], pos[y], table[(x, y)]) for x, y in index.covers() if x in pos and y in pos)
        cone = cat.limit(Diagram(tuple(levels[c] for c in ups), arrows))
        if cone is None:
            raise MissingLimitError(f"no limit over the elements above {a} and {b}")
        new = f"({a}∧{b})"
        elements.append(new)
        levels[new] = cone.apex
        table[(new, new)] = cat.identity(cone.apex)
        for c in ups:
            pairs.add((new, c))
            table[(new, c)] = cone.legs[pos[c]]
        index = IndexPoset.from_relations(elements, pairs)
        logger.debug(f"completed {F.label} with {new} = {cone.apex}")
    raise MalformedPresentationError(f"completion of {F.label} does not terminate")


def level_representation(F: ProObject) -> LevelRepresentation:
    """A directed, cofinitely graded presentation of F with a verified isomorphism."""
    if F.index.is_cofiltered():
        return LevelRepresentation(F, identity(F), tuple(F.index.grading().items()))
    completed = complete_diagram(F)
    reference = ProObject.constant(F.category, completed(completed.bottom))
    found = pro_find_iso(completed, reference)
    if found is None:
        raise MissingLimitError(f"completion of {F.label} is not isomorphic to its bottom level")
    return LevelRepresentation(completed, found[0], tuple(completed.index.grading().items()), completed=True)


# ===== Common reindexing =====

@dataclass(frozen=True)
class CommonReindex:
    """A single cofiltered index over which every node and arrow of a diagram is levelwise."""
    index: IndexPoset
    nodes: Tuple[ProObject, ...]
    arrows: Tuple[Arrow, ...]
    maps: Tuple[Tuple[Tuple[Element, ...], Tuple[Morphism, ...]], ...]

    def level(self, k: int, t: Tuple[Element, ...]) -> str:
        return self.nodes[k](t[k])

    def transition(self, k: int, s: Tuple[Element, ...], t: Tuple[Element, ...]) -> Morphism:
        return self.nodes[k].transition(s[k], t[k])

    def arrow_at(self, a: int, t: Tuple[Element, ...]) -> Morphism:
        return dict(self.maps)[t][a]

    @property
    def bottom(self) -> Tuple[Element, ...]:
        return tuple(n.bottom for n in self.nodes)


def common_reindex(nodes: Sequence[ProObject], arrows: Sequence[Arrow] = ()) -> CommonReindex:
    """Tuples of levels at which every arrow has exactly one compatible levelwise representative.

    Nodes sharing one index are reindexed along the diagonal, others over the product
    poset. The tuple of bottoms always survives, so the result is cofiltered.
    """
    nodes = tuple(nodes)
    for n in nodes:
        n.index.require_cofiltered()
    if nodes and all(n.index == nodes[0].index for n in nodes):
        base = nodes[0].index
        full = IndexPoset(
            tuple((e,) * len(nodes) for e in base.elements),
            frozenset(((a,) * len(nodes), (b,) * len(nodes)) for a, b in base.order),
        )
    else:
        full = product_poset([n.index for n in nodes])
    cat = nodes[0].category if nodes else None
    reps: Dict[Tuple[Element, ...], Tuple[Morphism, ...]] = {}
    for t in full.elements:
        row = []
        for p, q, f in arrows:
            src, dst = nodes[p], nodes[q]
            found = [
                h for h in cat.hom(src(t[p]), dst(t[q]))
                if cat.compose(h, src.to_bottom(t[p])) == f.germ(t[q])
            ]
            if len(found) != 1:
                break
            row.append(found[0])
        else:
            reps[t] = tuple(row)
    changed = True
    while changed:
        changed = False
        for s, t in sorted(full.order, key=repr):
            if s == t or s not in reps or t not in reps:
                continue
            for a, (p, q, _) in enumerate(arrows):
                left = cat.compose(nodes[q].transition(s[q], t[q]), reps[s][a])
                right = cat.compose(reps[t][a], nodes[p].transition(s[p], t[p]))
                if left != right:
                    del reps[t]
                    changed = True
                    break
    index = full.restrict(reps)
    return CommonReindex(index, nodes, tuple(arrows), tuple((t, reps[t]) for t in index.elements))


@dataclass(frozen=True)
class LevelMorphism:
    reindex: CommonReindex

    @property
    def index(self) -> IndexPoset:
        return self.reindex.index

    def at(self, t: Tuple[Element, ...]) -> Morphism:
        return self.reindex.arrow_at(0, t)

    def levels(self) -> List[Tuple[Tuple[Element, ...], Morphism]]:
        return [(t, self.at(t)) for t in self.index.elements]


def level_morphism(f: ProMorphism) -> LevelMorphism:
    """f as a levelwise map over the common reindex of its source and target."""
    return LevelMorphism(common_reindex((f.source, f.target), ((0, 1, f),)))


# ===== Limits and coproducts =====

@dataclass(frozen=True)
class ProLimit:
    pro: ProObject
    legs: Tuple[ProMorphism, ...]
    cones: Tuple[Tuple[Tuple[Element, ...], Cone], ...] = ()


def pro_finite_limits(category: Category, nodes: Sequence[ProObject], arrows: Sequence[Arrow] = (), name: str = "") -> ProLimit:
    """Levelwise limit after common reindexing."""
    reindex = common_reindex(nodes, arrows)
    cones: Dict[Tuple[Element, ...], Cone] = {}
    for t in reindex.index.elements:
        diagram = Diagram(
            tuple(reindex.level(k, t) for k in range(len(nodes))),
            tuple((p, q, reindex.arrow_at(a, t)) for a, (p, q, _) in enumerate(arrows)),
        )
        cone = category.limit(diagram)
        if cone is None:
            raise MissingLimitError(f"no levelwise limit at {t}")
        cones[t] = cone
    generators = {}
    for s, t in reindex.index.covers():
        legs = [category.compose(reindex.transition(k, s, t), cones[s].legs[k]) for k in range(len(nodes))]
        generators[(s, t)] = category.factor_through_limit(cones[t], cones[s].apex, legs)
    pro = ProObject.build(
        category, reindex.index, {t: c.apex for t, c in cones.items()}, generators, name=name or "lim"
    )
    bottom = cones[reindex.bottom]
    legs = tuple(
        ProMorphism(pro, n, tuple((j, category.compose(n.to_bottom(j), bottom.legs[k])) for j in n.index.elements))
        for k, n in enumerate(nodes)
    )
    return ProLimit(pro, legs, tuple((t, cones[t]) for t in pro.index.elements))


def pro_fiber_product(f: ProMorphism, g: ProMorphism) -> ProLimit:
    """Legs to f.source, g.source and the common target."""
    return pro_finite_limits(f.source.category, (f.source, g.source, f.target), ((0, 2, f), (1, 2, g)), name="pb")


def pro_product(category: Category, parts: Sequence[ProObject]) -> ProLimit:
    return pro_finite_limits(category, parts, (), name="prod")


def pro_pullback_pairing(limit: ProLimit, maps: Sequence[ProMorphism]) -> ProMorphism:
    """The map into a levelwise limit induced by a compatible family of maps into its nodes."""
    if not limit.cones:
        raise MissingLimitError(f"{limit.pro.label} was not built levelwise")
    cat = limit.pro.category
    source = maps[0].source
    apex = source(source.bottom)
    germs = tuple(
        (t, cat.factor_through_limit(cone, apex, [m.germ(t[k]) for k, m in enumerate(maps)]))
        for t, cone in limit.cones
    )
    return ProMorphism(source, limit.pro, germs)


@dataclass(frozen=True)
class ProCoproduct:
    pro: ProObject
    injections: Tuple[ProMorphism, ...]
    bottom_cocone: Cocone


def pro_coproduct(category: Category, parts: Sequence[ProObject], name: str = "") -> ProCoproduct:
    """Common reindex, then levelwise coproducts."""
    reindex = common_reindex(parts)
    cocones: Dict[Tuple[Element, ...], Cocone] = {}
    for t in reindex.index.elements:
        cocone = category.coproduct([reindex.level(k, t) for k in range(len(parts))])
        if cocone is None:
            raise MissingLimitError(f"no levelwise coproduct at {t}")
        cocones[t] = cocone
    generators = {}
    for s, t in reindex.index.covers():
        maps = [category.compose(cocones[t].injections[k], reindex.transition(k, s, t)) for k in range(len(parts))]
        generators[(s, t)] = category.factor_through_coproduct(cocones[s], cocones[t].apex, maps)
    pro = ProObject.build(
        category, reindex.index, {t: c.apex for t, c in cocones.items()}, generators,
        name=name or "⊔".join(p.label for p in parts) or "c(∅)",
    )
    injections = tuple(
        ProMorphism(
            part,
            pro,
            tuple((t, category.compose(cocones[t].injections[k], part.to_bottom(t[k]))) for t in pro.index.elements),
        )
        for k, part in enumerate(parts)
    )
    return ProCoproduct(pro, injections, cocones[reindex.bottom])


def pro_copair(coproduct: ProCoproduct, target: ProObject, maps: Sequence[ProMorphism]) -> ProMorphism:
    """The map out of a coproduct with the given restrictions to each part."""
    cat = coproduct.pro.category
    cocone = coproduct.bottom_cocone
    germs = tuple(
        (j, cat.factor_through_coproduct(cocone, target(j), [m.germ(j) for m in maps]))
        for j in target.index.elements
    )
    return ProMorphism(coproduct.pro, target, germs)


def pro_limit(
    shape: IndexPoset,
    nodes: Mapping[Element, ProObject],
    arrows: Mapping[Tuple[Element, Element], ProMorphism],
    category: Optional[Category] = None,
) -> ProLimit:
    """Limit of a diagram of pro-objects indexed by `shape`; arrows[(p, q)] goes nodes[p] -> nodes[q] for p < q.

    A cofiltered shape is glued into one index (the Grothendieck construction);
    any other finite shape falls back to levelwise finite limits.
    """
    cat = category or next(iter(nodes.values())).category
    order = list(shape.elements)
    if not shape.is_cofiltered():
        pos = {p: k for k, p in enumerate(order)}
        flat = [(pos[p], pos[q], f) for (p, q), f in arrows.items()]
        return pro_finite_limits(cat, [nodes[p] for p in order], flat)
    elements, pairs, levels, table = [], [], {}, {}
    for p in order:
        node = nodes[p]
        for i in node.index.elements:
            elements.append((p, i))
            levels[(p, i)] = node(i)
        for a, b in node.index.order:
            pairs.append(((p, a), (p, b)))
            table[((p, a), (p, b))] = node.transition(a, b)
    for (p, q), f in arrows.items():
        if not shape.leq(p, q) or p == q:
            raise MalformedPresentationError(f"diagram arrow {p} -> {q} does not follow the shape")
        for j in nodes[q].index.elements:
            pairs.append(((p, nodes[p].bottom), (q, j)))
            table[((p, nodes[p].bottom), (q, j))] = f.germ(j)
    glued_index = IndexPoset.from_relations(elements, pairs)
    pro = ProObject.build(cat, glued_index, levels, table, name="lim")
    root = (shape.bottom, nodes[shape.bottom].bottom)
    legs = tuple(
        ProMorphism(pro, nodes[q], tuple((j, pro.transition(root, (q, j))) for j in nodes[q].index.elements))
        for q in order
    )
    return ProLimit(pro, legs)


def verify_pro_limit(
    nodes: Sequence[ProObject],
    arrows: Sequence[Arrow],
    limit: ProLimit,
    tests: Sequence[ProObject],
) -> List[str]:
    """Every cone from a test object factors exactly once through the limit, all via hom_set."""
    problems = []
    for T in tests:
        through = hom_set(T, limit.pro)
        cones: List[Tuple[ProMorphism, ...]] = []
        options = [hom_set(T, n) for n in nodes]

        def extend(prefix: List[ProMorphism]) -> None:
            k = len(prefix)
            if k == len(nodes):
                cones.append(tuple(prefix))
                return
            for c in options[k]:
                prefix.append(c)
                if all(compose(f, prefix[p]) == prefix[q] for p, q, f in arrows if max(p, q) == k):
                    extend(prefix)
                prefix.pop()

        extend([])
        for cone in cones:
            hits = [u for u in through if all(compose(leg, u) == c for leg, c in zip(limit.legs, cone))]
            if len(hits) != 1:
                problems.append(f"a cone from {T.label} factors {len(hits)} times through {limit.pro.label}")
        if len(cones) != len(through):
            problems.append(f"{len(cones)} cones from {T.label} but {len(through)} maps into {limit.pro.label}")
    return problems


# ===== Limit functors =====

def apply_limit_functor(F: Functor, P: ProObject) -> str:
    """lim over the index of F(P(i)), computed in the target category."""
    pos = {i: k for k, i in enumerate(P.index.elements)}
    diagram = Diagram(
        tuple(F(P(i)) for i in P.index.elements),
        tuple((pos[a], pos[b], F(P.transition(a, b))) for a, b in P.index.covers()),
    )
    cone = F.target.limit(diagram)
    if cone is None:
        raise MissingLimitError(f"{F.target.name} has no limit of {F.name} applied to {P.label}")
    return cone.apex
