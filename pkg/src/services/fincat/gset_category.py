"""
Finite G-sets - the generator-backed category B(G) with canonical orbit-type objects
"""
from dataclasses import dataclass
from itertools import combinations_with_replacement, product
from typing import Callable, Dict, Hashable, Iterator, List, Optional, Sequence, Tuple

from loguru import logger

from src.config.settings import get_settings
from src.core.errors import MalformedPresentationError, MissingLimitError, OutOfBudgetError
from src.services.fincat.category import Category, Cocone, Cone, Diagram, Morphism
from src.services.fincat.group import FiniteGroup, OrbitType, orbit_types

Point = Tuple[int, int]  # (orbit position, coset index)

EMPTY = "∅"
JOIN = "⊔"


@dataclass(frozen=True)
class Normalization:
    """Canonical form of an abstract finite G-set plus the bijection onto its points."""
    types: Tuple[int, ...]
    to_canonical: Dict[Hashable, Point]
    from_canonical: Dict[Point, Hashable]


class GSetCategory(Category):
    """Finite G-sets and equivariant maps.

    An object is a multiset of orbit types G/H (H up to conjugacy) written with free
    orbits first, e.g. "G⊔*". Snapshots enumerate objects by orbit count, then by
    multiset order; any object up to `reach` orbits can be materialized on demand.
    """

    def __init__(
        self,
        group: FiniteGroup,
        budget: Optional[int] = None,
        reach: Optional[int] = None,
        name: Optional[str] = None,
    ):
        settings = get_settings()
        if group.order > settings.MAX_GROUP_ORDER:
            raise OutOfBudgetError(f"group order {group.order} exceeds {settings.MAX_GROUP_ORDER}")
        self.group = group
        self.types: Tuple[OrbitType, ...] = orbit_types(group)
        self.budget = settings.DEFAULT_BUDGET if budget is None else budget
        self.reach = settings.REACH if reach is None else reach
        self.name = name or f"B({group.name})"
        self.mode = "generator"
        self._labels = {t.label: t.index for t in self.types}
        self._coset_of = [
            {g: next(c for c, coset in enumerate(t.cosets) if g in coset) for g in group.elements}
            for t in self.types
        ]
        self._parse_cache: Dict[str, Tuple[int, ...]] = {}
        self._limit_maps: Dict[Cone, Dict[Tuple[Point, ...], Point]] = {}
        self._coproduct_maps: Dict[Cocone, Dict[Point, Tuple[int, Point]]] = {}
        self._limits: Dict[Diagram, Cone] = {}
        self._homs: Dict[Tuple[str, str], Tuple[Morphism, ...]] = {}
        self._snapshot = self.enumerate(self.budget)
        logger.debug(f"{self.name}: {len(self.types)} orbit types, snapshot {list(self._snapshot)}")

    # ===== Object encoding =====

    def name_of(self, types: Sequence[int]) -> str:
        ordered = sorted(types, reverse=True)
        if not ordered:
            return EMPTY
        return JOIN.join(self.types[t].label for t in ordered)

    def parse(self, obj: str) -> Tuple[int, ...]:
        cached = self._parse_cache.get(obj)
        if cached is not None:
            return cached
        if obj == EMPTY:
            types: Tuple[int, ...] = ()
        else:
            try:
                types = tuple(sorted((self._labels[part.strip()] for part in obj.split(JOIN)), reverse=True))
            except KeyError as exc:
                raise MalformedPresentationError(f"{obj!r} is not a finite {self.group.name}-set name") from exc
        if len(types) > self.reach:
            raise OutOfBudgetError(f"{obj} has {len(types)} orbits, reach is {self.reach}")
        if self.name_of(types) != obj:
            raise MalformedPresentationError(f"{obj!r} is not canonical; write {self.name_of(types)!r}")
        self._parse_cache[obj] = types
        return types

    def canonical(self, obj: str) -> str:
        """Canonical spelling of a possibly unsorted orbit list."""
        if obj == EMPTY:
            return obj
        return self.name_of(self._labels[p.strip()] for p in obj.split(JOIN))

    def enumerate(self, budget: int) -> Tuple[str, ...]:
        found: List[str] = []
        n = 0
        while len(found) < budget:
            for combo in combinations_with_replacement(range(len(self.types)), n):
                found.append(self.name_of(combo))
                if len(found) == budget:
                    break
            n += 1
        return tuple(found)

    def orbit_count(self, obj: str) -> int:
        return len(self.parse(obj))

    def points(self, obj: str) -> List[Point]:
        return [(p, c) for p, t in enumerate(self.parse(obj)) for c in range(self.types[t].size)]

    def act(self, obj: str, g: int, point: Point) -> Point:
        p, c = point
        return p, self.types[self.parse(obj)[p]].action[g][c]

    def stabilizer(self, obj: str, point: Point):
        p, c = point
        return self.types[self.parse(obj)[p]].stabilizer(self.group, c)

    def apply(self, f: Morphism, point: Point) -> Point:
        p, c = point
        q, c0 = f.key[p]
        source_type = self.types[self.parse(f.source)[p]]
        g = source_type.representatives[c]
        return self.act(f.target, g, (q, c0))

    def _morphism(self, source: str, target: str, key: Tuple[Point, ...]) -> Morphism:
        label = f"{source}→{target}:" + ",".join(f"{q}.{c}" for q, c in key)
        return Morphism(source, target, tuple(key), label)

    def morphism_from_points(self, source: str, target: str, images: Dict[Point, Point]) -> Morphism:
        """Equivariant map given by the images of the orbit base points."""
        key = tuple(images[(p, 0)] for p in range(self.orbit_count(source)))
        return self._morphism(source, target, key)

    # ===== Category structure =====

    def objects(self, budget: Optional[int] = None) -> Tuple[str, ...]:
        if budget is None or budget == self.budget:
            return self._snapshot
        return self.enumerate(budget)

    def contains(self, obj: str) -> bool:
        return obj in self._snapshot

    def hom(self, a: str, b: str) -> Tuple[Morphism, ...]:
        cached = self._homs.get((a, b))
        if cached is None:
            target_points = self.points(b)
            choices = []
            for t in self.parse(a):
                h = self.types[t].subgroup
                choices.append([y for y in target_points if h <= self.stabilizer(b, y)])
            cached = tuple(self._morphism(a, b, key) for key in product(*choices))
            self._homs[(a, b)] = cached
        return cached

    def identity(self, a: str) -> Morphism:
        return self._morphism(a, a, tuple((p, 0) for p in range(self.orbit_count(a))))

    def compose(self, g: Morphism, f: Morphism) -> Morphism:
        if f.target != g.source:
            raise MalformedPresentationError(f"{g} . {f} is not composable")
        return self._morphism(f.source, g.target, tuple(self.apply(g, y) for y in f.key))

    def describe(self, f: Morphism) -> str:
        return f.label

    def image_orbits(self, f: Morphism) -> frozenset:
        return frozenset(q for q, _ in f.key)

    def is_surjective(self, f: Morphism) -> bool:
        return len(self.image_orbits(f)) == self.orbit_count(f.target)

    def jointly_surjective(self, family: Sequence[Morphism], target: str) -> bool:
        hit = set()
        for f in family:
            hit |= self.image_orbits(f)
        return len(hit) == self.orbit_count(target)

    def inverse(self, f: Morphism) -> Optional[Morphism]:
        images = {x: self.apply(f, x) for x in self.points(f.source)}
        if len(set(images.values())) != len(images) or len(images) != len(self.points(f.target)):
            return None
        back = {y: x for x, y in images.items()}
        return self.morphism_from_points(f.target, f.source, back)

    def find_iso(self, a: str, b: str) -> Optional[Morphism]:
        return self.identity(a) if a == b else None

    def _lift_choices(self, given: Morphism, over: Morphism) -> List[List[Point]]:
        """Per orbit of given.source, the admissible base-point images in over.source."""
        if given.target != over.target:
            raise MalformedPresentationError(f"{given} and {over} have different targets")
        middle = self.points(over.source)
        choices = []
        for p, t in enumerate(self.parse(given.source)):
            h = self.types[t].subgroup
            wanted = self.apply(given, (p, 0))
            choices.append([y for y in middle if h <= self.stabilizer(over.source, y) and self.apply(over, y) == wanted])
        return choices

    def lifts(self, given: Morphism, over: Morphism) -> Iterator[Morphism]:
        for key in product(*self._lift_choices(given, over)):
            yield self._morphism(given.source, over.source, key)

    def isos_over(self, given: Morphism, over: Morphism) -> Iterator[Morphism]:
        """Lifts sending each orbit onto a distinct orbit of the same type."""
        src, dst = self.parse(given.source), self.parse(over.source)
        if sorted(src) != sorted(dst):
            return
        choices = self._lift_choices(given, over)
        chosen: List[Point] = []
        used = set()

        def extend() -> Iterator[Morphism]:
            p = len(chosen)
            if p == len(src):
                yield self._morphism(given.source, over.source, tuple(chosen))
                return
            for y in choices[p]:
                if y[0] in used or dst[y[0]] != src[p]:
                    continue
                chosen.append(y)
                used.add(y[0])
                yield from extend()
                chosen.pop()
                used.discard(y[0])

        yield from extend()

    def terminal(self) -> str:
        return self.name_of((0,))

    def initial(self) -> str:
        return EMPTY

    # ===== Canonical forms =====

    def normalize(self, points: Sequence[Hashable], act: Callable[[int, Hashable], Hashable]) -> Normalization:
        """Decompose an abstract G-set into orbits and map it onto canonical coset points."""
        group = self.group
        seen = set()
        orbits: List[Tuple[int, Dict[Hashable, int]]] = []
        for x in points:
            if x in seen:
                continue
            stab = frozenset(g for g in group.elements if act(g, x) == x)
            match = None
            for t in sorted(self.types, key=lambda t: -t.index):
                if len(t.subgroup) != len(stab):
                    continue
                for h in group.elements:
                    if group.conjugate(h, stab) == t.subgroup:
                        match = (t.index, h)
                        break
                if match:
                    break
            if match is None:
                raise MalformedPresentationError(f"stabilizer {sorted(stab)} matches no orbit type")
            t_index, h = match
            y = act(h, x)
            cosets: Dict[Hashable, int] = {}
            for k in group.elements:
                cosets[act(k, y)] = self._coset_of[t_index][k]
            seen.update(cosets)
            orbits.append((t_index, cosets))
            if len(orbits) > self.reach:
                raise OutOfBudgetError(f"construction exceeds reach of {self.reach} orbits")
        orbits.sort(key=lambda o: -o[0])
        to_canonical = {x: (p, c) for p, (_, cosets) in enumerate(orbits) for x, c in cosets.items()}
        return Normalization(
            types=tuple(t for t, _ in orbits),
            to_canonical=to_canonical,
            from_canonical={v: k for k, v in to_canonical.items()},
        )

    def limit(self, diagram: Diagram) -> Optional[Cone]:
        if diagram in self._limits:
            return self._limits[diagram]
        nodes = diagram.nodes
        node_points = [self.points(n) for n in nodes]
        checks: List[List[Tuple[int, int, Morphism]]] = [[] for _ in nodes]
        for i, j, f in diagram.arrows:
            checks[max(i, j)].append((i, j, f))
        tuples: List[Tuple[Point, ...]] = []

        def extend(prefix: List[Point]) -> None:
            k = len(prefix)
            if k == len(nodes):
                tuples.append(tuple(prefix))
                return
            for x in node_points[k]:
                prefix.append(x)
                if all(self.apply(f, prefix[i]) == prefix[j] for i, j, f in checks[k]):
                    extend(prefix)
                prefix.pop()

        extend([])

        def act(g: int, tup: Tuple[Point, ...]) -> Tuple[Point, ...]:
            return tuple(self.act(nodes[i], g, x) for i, x in enumerate(tup))

        norm = self.normalize(tuples, act)
        apex = self.name_of(norm.types)
        legs = []
        for i, node in enumerate(nodes):
            key = tuple(norm.from_canonical[(p, 0)][i] for p in range(len(norm.types)))
            legs.append(self._morphism(apex, node, key))
        cone = Cone(apex, tuple(legs))
        self._limit_maps[cone] = norm.to_canonical
        self._limits[diagram] = cone
        return cone

    def factor_through_limit(self, limit: Cone, apex: str, legs: Sequence[Morphism]) -> Morphism:
        table = self._limit_maps.get(limit)
        if table is None:
            return super().factor_through_limit(limit, apex, legs)
        key = []
        for p in range(self.orbit_count(apex)):
            tup = tuple(self.apply(leg, (p, 0)) for leg in legs)
            if tup not in table:
                raise MissingLimitError(f"legs from {apex} do not form a cone over {limit.apex}")
            key.append(table[tup])
        return self._morphism(apex, limit.apex, tuple(key))

    def coproduct(self, parts: Sequence[str]) -> Optional[Cocone]:
        tagged = [(k, x) for k, part in enumerate(parts) for x in self.points(part)]

        def act(g: int, item: Tuple[int, Point]) -> Tuple[int, Point]:
            k, x = item
            return k, self.act(parts[k], g, x)

        norm = self.normalize(tagged, act)
        apex = self.name_of(norm.types)
        injections = []
        for k, part in enumerate(parts):
            key = tuple(norm.to_canonical[(k, (p, 0))] for p in range(self.orbit_count(part)))
            injections.append(self._morphism(part, apex, key))
        cocone = Cocone(apex, tuple(injections))
        self._coproduct_maps[cocone] = norm.from_canonical
        return cocone

    def factor_through_coproduct(self, coproduct: Cocone, apex: str, maps: Sequence[Morphism]) -> Morphism:
        table = self._coproduct_maps.get(coproduct)
        if table is None:
            return super().factor_through_coproduct(coproduct, apex, maps)
        key = []
        for p in range(self.orbit_count(coproduct.apex)):
            k, x = table[(p, 0)]
            key.append(self.apply(maps[k], x))
        return self._morphism(coproduct.apex, apex, tuple(key))
