"""
Categories - morphisms, finite diagrams, cones and the table-backed presentation
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Dict, Hashable, Iterable, Iterator, List, Optional, Sequence, Tuple

from loguru import logger

from src.core.errors import MalformedPresentationError, MissingLimitError, OutOfBudgetError


@dataclass(frozen=True)
class Morphism:
    source: str
    target: str
    key: Hashable
    label: str = field(default="", compare=False)

    def __str__(self) -> str:
        return self.label or str(self.key)


@dataclass(frozen=True)
class Diagram:
    """A finite diagram: nodes are objects, arrows are (i, j, f) with f: nodes[i] -> nodes[j]."""
    nodes: Tuple[str, ...]
    arrows: Tuple[Tuple[int, int, Morphism], ...] = ()

    def __post_init__(self):
        for i, j, f in self.arrows:
            if f.source != self.nodes[i] or f.target != self.nodes[j]:
                raise MalformedPresentationError(f"diagram arrow {f} does not join node {i} to node {j}")

    @classmethod
    def cospan(cls, f: Morphism, g: Morphism) -> "Diagram":
        if f.target != g.target:
            raise MalformedPresentationError(f"cospan legs {f} and {g} have different targets")
        return cls((f.source, g.source, f.target), ((0, 2, f), (1, 2, g)))

    @classmethod
    def discrete(cls, objects: Sequence[str]) -> "Diagram":
        return cls(tuple(objects))

    @classmethod
    def wide_cospan(cls, legs: Sequence[Morphism]) -> "Diagram":
        """n morphisms into a common base; the base is the last node."""
        if not legs:
            raise MalformedPresentationError("wide cospan needs at least one leg")
        base = legs[0].target
        nodes = tuple(f.source for f in legs) + (base,)
        return cls(nodes, tuple((i, len(legs), f) for i, f in enumerate(legs)))


@dataclass(frozen=True)
class Cone:
    apex: str
    legs: Tuple[Morphism, ...]


@dataclass(frozen=True)
class Cocone:
    apex: str
    injections: Tuple[Morphism, ...]


class Category(ABC):
    """Objects are opaque string identifiers; morphisms carry source, target and a key."""

    name: str = "C"
    mode: str = "table"

    # ===== Presentation =====

    @abstractmethod
    def objects(self, budget: Optional[int] = None) -> Tuple[str, ...]:
        """Deterministic snapshot enumeration."""

    @abstractmethod
    def hom(self, a: str, b: str) -> Tuple[Morphism, ...]:
        pass

    @abstractmethod
    def compose(self, g: Morphism, f: Morphism) -> Morphism:
        """g after f"""

    @abstractmethod
    def identity(self, a: str) -> Morphism:
        pass

    def contains(self, obj: str) -> bool:
        return obj in self.objects()

    def describe(self, f: Morphism) -> str:
        return str(f)

    def compose_all(self, *fs: Morphism) -> Morphism:
        """compose_all(h, g, f) == h . g . f"""
        out = fs[-1]
        for g in reversed(fs[:-1]):
            out = self.compose(g, out)
        return out

    # ===== Chosen constructions (search by default) =====

    def limit(self, diagram: Diagram) -> Optional[Cone]:
        """Chosen limit cone, or None when no apex in scope is universal."""
        cones = list(self.cones(diagram))
        for candidate in cones:
            if all(len(self.factorizations(candidate, c)) == 1 for c in cones):
                return candidate
        return None

    def factor_through_limit(self, limit: Cone, apex: str, legs: Sequence[Morphism]) -> Morphism:
        found = self.factorizations(limit, Cone(apex, tuple(legs)))
        if len(found) != 1:
            raise MissingLimitError(f"cone over {apex} factors {len(found)} times through {limit.apex}")
        return found[0]

    def coproduct(self, parts: Sequence[str]) -> Optional[Cocone]:
        cocones = list(self.cocones(parts))
        for candidate in cocones:
            if all(len(self.cofactorizations(candidate, c)) == 1 for c in cocones):
                return candidate
        return None

    def factor_through_coproduct(self, coproduct: Cocone, apex: str, maps: Sequence[Morphism]) -> Morphism:
        found = self.cofactorizations(coproduct, Cocone(apex, tuple(maps)))
        if len(found) != 1:
            raise MissingLimitError(f"cocone at {apex} factors {len(found)} times through {coproduct.apex}")
        return found[0]

    # ===== Derived constructions =====

    def terminal(self) -> str:
        cone = self.limit(Diagram(()))
        if cone is None:
            raise MissingLimitError(f"{self.name} has no terminal object in scope")
        return cone.apex

    def initial(self) -> str:
        cocone = self.coproduct(())
        if cocone is None:
            raise MissingLimitError(f"{self.name} has no initial object in scope")
        return cocone.apex

    def product(self, a: str, b: str) -> Cone:
        cone = self.limit(Diagram.discrete((a, b)))
        if cone is None:
            raise MissingLimitError(f"no product {a} x {b} in {self.name}")
        return cone

    def fiber_product(self, f: Morphism, g: Morphism) -> Cone:
        """Pullback cone with legs (to f.source, to g.source, to the base)."""
        cone = self.limit(Diagram.cospan(f, g))
        if cone is None:
            raise MissingLimitError(f"no pullback of {f} and {g} in {self.name}")
        return cone

    def pullback_pairing(self, cone: Cone, f: Morphism, a: Morphism, b: Morphism) -> Morphism:
        """The map <a, b> into the pullback of f and g, given f . a == g . b."""
        return self.factor_through_limit(cone, a.source, (a, b, self.compose(f, a)))

    def product_pairing(self, cone: Cone, a: Morphism, b: Morphism) -> Morphism:
        return self.factor_through_limit(cone, a.source, (a, b))

    def is_iso(self, f: Morphism) -> bool:
        return self.inverse(f) is not None

    def inverse(self, f: Morphism) -> Optional[Morphism]:
        for g in self.hom(f.target, f.source):
            if self.compose(g, f) == self.identity(f.source) and self.compose(f, g) == self.identity(f.target):
                return g
        return None

    def find_iso(self, a: str, b: str) -> Optional[Morphism]:
        if a == b:
            return self.identity(a)
        for f in self.hom(a, b):
            if self.is_iso(f):
                return f
        return None

    def lifts(self, given: Morphism, over: Morphism) -> Iterator[Morphism]:
        """Every h with over . h == given."""
        for h in self.hom(given.source, over.source):
            if self.compose(over, h) == given:
                yield h

    def isos_over(self, given: Morphism, over: Morphism) -> Iterator[Morphism]:
        return (h for h in self.lifts(given, over) if self.is_iso(h))

    # ===== Enumeration helpers (snapshot-bounded) =====

    def cones(self, diagram: Diagram, apexes: Optional[Iterable[str]] = None) -> Iterator[Cone]:
        for apex in (self.objects() if apexes is None else apexes):
            choices = [self.hom(apex, node) for node in diagram.nodes]
            for legs in product(*choices):
                if all(self.compose(f, legs[i]) == legs[j] for i, j, f in diagram.arrows):
                    yield Cone(apex, tuple(legs))

    def cocones(self, parts: Sequence[str], apexes: Optional[Iterable[str]] = None) -> Iterator[Cocone]:
        for apex in (self.objects() if apexes is None else apexes):
            for maps in product(*[self.hom(p, apex) for p in parts]):
                yield Cocone(apex, tuple(maps))

    def factorizations(self, limit: Cone, cone: Cone) -> List[Morphism]:
        return [
            h for h in self.hom(cone.apex, limit.apex)
            if all(self.compose(leg, h) == c for leg, c in zip(limit.legs, cone.legs))
        ]

    def cofactorizations(self, coproduct: Cocone, cocone: Cocone) -> List[Morphism]:
        return [
            h for h in self.hom(coproduct.apex, cocone.apex)
            if all(self.compose(h, inj) == m for inj, m in zip(coproduct.injections, cocone.injections))
        ]

    def all_morphisms(self, objects: Optional[Sequence[str]] = None) -> List[Morphism]:
        objs = self.objects() if objects is None else objects
        return [f for a in objs for b in objs for f in self.hom(a, b)]

    def morphisms_into(self, target: str, sources: Optional[Sequence[str]] = None) -> List[Morphism]:
        return [f for a in (self.objects() if sources is None else sources) for f in self.hom(a, target)]


class TableCategory(Category):
    """A finite category given by an explicit composition table."""

    def __init__(
        self,
        name: str,
        objects: Sequence[str],
        morphisms: Dict[str, Tuple[str, str]],
        identities: Dict[str, str],
        compose_table: Dict[Tuple[str, str], str],
    ):
        self.name = name
        self.mode = "table"
        self._objects = tuple(objects)
        self._morphisms = dict(morphisms)
        self._identities = dict(identities)
        self._table = dict(compose_table)
        self._validate()
        logger.debug(f"table category {name}: {len(self._objects)} objects, {len(self._morphisms)} morphisms")

    def _validate(self) -> None:
        for name, (src, dst) in self._morphisms.items():
            if src not in self._objects or dst not in self._objects:
                raise MalformedPresentationError(f"morphism {name}: unknown endpoint {src} -> {dst}")
        for obj in self._objects:
            ident = self._identities.get(obj)
            if ident is None:
                raise MalformedPresentationError(f"object {obj} has no identity")
            if self._morphisms.get(ident) != (obj, obj):
                raise MalformedPresentationError(f"identity {ident} of {obj} is not an endomorphism of {obj}")
        for (g, f), h in self._table.items():
            for name in (g, f, h):
                if name not in self._morphisms:
                    raise MalformedPresentationError(f"compose entry {g} . {f} = {h}: unknown morphism {name}")
            if self._morphisms[g][0] != self._morphisms[f][1]:
                raise MalformedPresentationError(
                    f"compose entry {g} . {f}: target of {f} is {self._morphisms[f][1]}, source of {g} is {self._morphisms[g][0]}"
                )
            if self._morphisms[h] != (self._morphisms[f][0], self._morphisms[g][1]):
                raise MalformedPresentationError(f"compose entry {g} . {f} = {h}: {h} has the wrong endpoints")

    def _mor(self, name: str) -> Morphism:
        src, dst = self._morphisms[name]
        return Morphism(src, dst, name, name)

    def morphism(self, name: str) -> Morphism:
        if name not in self._morphisms:
            raise MalformedPresentationError(f"{self.name} has no morphism {name!r}")
        return self._mor(name)

    def objects(self, budget: Optional[int] = None) -> Tuple[str, ...]:
        return self._objects if budget is None else self._objects[:budget]

    def contains(self, obj: str) -> bool:
        return obj in self._objects

    @cached_property
    def _hom_index(self) -> Dict[Tuple[str, str], Tuple[Morphism, ...]]:
        index: Dict[Tuple[str, str], List[Morphism]] = {}
        for name in sorted(self._morphisms):
            m = self._mor(name)
            index.setdefault((m.source, m.target), []).append(m)
        return {k: tuple(v) for k, v in index.items()}

    def hom(self, a: str, b: str) -> Tuple[Morphism, ...]:
        for obj in (a, b):
            if obj not in self._objects:
                raise OutOfBudgetError(f"{obj} is not an object of {self.name}")
        return self._hom_index.get((a, b), ())

    def identity(self, a: str) -> Morphism:
        return self._mor(self._identities[a])

    def compose(self, g: Morphism, f: Morphism) -> Morphism:
        if f.target != g.source:
            raise MalformedPresentationError(f"{g} . {f} is not composable")
        if f.key == self._identities[f.source]:
            return g
        if g.key == self._identities[g.source]:
            return f
        h = self._table.get((g.key, f.key))
        if h is None:
            raise MalformedPresentationError(f"composition {g} . {f} missing from table of {self.name}")
        return self._mor(h)

    def table_entries(self) -> List[Tuple[str, str, str]]:
        return [(g, f, h) for (g, f), h in sorted(self._table.items())]

    def morphism_names(self) -> List[str]:
        return sorted(self._morphisms)


class FullSubcategory(Category):
    """Full subcategory of `parent` on a fixed object list; constructions by search inside it."""

    def __init__(self, parent: Category, objects: Sequence[str], name: Optional[str] = None):
        self.parent = parent
        self.name = name or f"{parent.name}|{len(objects)}"
        self.mode = "table"
        self._objects = tuple(objects)

    def objects(self, budget: Optional[int] = None) -> Tuple[str, ...]:
        return self._objects if budget is None else self._objects[:budget]

    def contains(self, obj: str) -> bool:
        return obj in self._objects

    def hom(self, a: str, b: str) -> Tuple[Morphism, ...]:
        if a not in self._objects or b not in self._objects:
            raise OutOfBudgetError(f"{a} -> {b} leaves the subcategory {self.name}")
        return self.parent.hom(a, b)

    def compose(self, g: Morphism, f: Morphism) -> Morphism:
        return self.parent.compose(g, f)

    def identity(self, a: str) -> Morphism:
        return self.parent.identity(a)

    def describe(self, f: Morphism) -> str:
        return self.parent.describe(f)

    def inverse(self, f: Morphism) -> Optional[Morphism]:
        return self.parent.inverse(f)

    def find_iso(self, a: str, b: str) -> Optional[Morphism]:
        return self.parent.find_iso(a, b)

    def lifts(self, given: Morphism, over: Morphism) -> Iterator[Morphism]:
        return self.parent.lifts(given, over)

    def isos_over(self, given: Morphism, over: Morphism) -> Iterator[Morphism]:
        return self.parent.isos_over(given, over)
