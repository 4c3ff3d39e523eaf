"""
Pro-objects - diagrams over finite cofiltered posets and their germ-presented morphisms
"""
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from src.core.errors import MalformedPresentationError
from src.services.fincat.category import Category, Morphism
from src.services.pro.index import Element, IndexPoset


@dataclass(frozen=True)
class ProObject:
    """F: I -> C with I a finite poset; transitions[(a, b)] is F(a) -> F(b) for every a <= b."""
    category: Category = field(compare=False, repr=False)
    index: IndexPoset
    levels: Tuple[Tuple[Element, str], ...]
    transitions: Tuple[Tuple[Tuple[Element, Element], Morphism], ...] = field(repr=False)
    name: str = field(default="", compare=False)

    # ===== Construction =====

    @classmethod
    def build(
        cls,
        category: Category,
        index: IndexPoset,
        levels: Mapping[Element, str],
        generators: Mapping[Tuple[Element, Element], Morphism],
        name: str = "",
    ) -> "ProObject":
        """Extend transitions given on Hasse edges to every comparable pair and check path independence."""
        table: Dict[Tuple[Element, Element], Morphism] = {(a, a): category.identity(levels[a]) for a in index.elements}
        for (a, b), f in generators.items():
            if not index.leq(a, b):
                raise MalformedPresentationError(f"transition {a} -> {b} does not follow the index order")
            if f.source != levels[a] or f.target != levels[b]:
                raise MalformedPresentationError(f"transition {a} -> {b} is not a map {levels[a]} -> {levels[b]}")
            table[(a, b)] = f
        edges = index.covers()
        for a, b in edges:
            if (a, b) not in table:
                raise MalformedPresentationError(f"no transition given for the edge {a} -> {b}")
        pending = True
        while pending:
            pending = False
            for a, b in edges:
                for c in index.elements:
                    if (b, c) in table:
                        composite = category.compose(table[(b, c)], table[(a, b)])
                        known = table.get((a, c))
                        if known is None:
                            table[(a, c)] = composite
                            pending = True
                        elif known != composite:
                            raise MalformedPresentationError(f"transitions {a} -> {c} depend on the path taken")
        missing = [p for p in index.order if p not in table]
        if missing:
            raise MalformedPresentationError(f"no transition for {missing[0]}")
        return cls(
            category,
            index,
            tuple((a, levels[a]) for a in index.elements),
            tuple(sorted(table.items(), key=lambda kv: (repr(kv[0][0]), repr(kv[0][1])))),
            name,
        )

    @classmethod
    def constant(cls, category: Category, obj: str) -> "ProObject":
        index = IndexPoset.single(0)
        return cls(category, index, ((0, obj),), (((0, 0), category.identity(obj)),), name=f"c({obj})")

    @classmethod
    def chain(cls, category: Category, stages: Sequence[str], steps: Sequence[Morphism], name: str = "") -> "ProObject":
        """stages[0] <- stages[1] <- ...; steps[i]: stages[i+1] -> stages[i]."""
        if len(steps) != len(stages) - 1:
            raise MalformedPresentationError(f"{len(stages)} stages need {len(stages) - 1} steps, got {len(steps)}")
        index = IndexPoset.chain(len(stages))
        levels = {i: s for i, s in enumerate(stages)}
        generators = {(i + 1, i): f for i, f in enumerate(steps)}
        return cls.build(category, index, levels, generators, name or "chain(" + ",".join(stages) + ")")

    # ===== Access =====

    @cached_property
    def _levels(self) -> Dict[Element, str]:
        return dict(self.levels)

    @cached_property
    def _transitions(self) -> Dict[Tuple[Element, Element], Morphism]:
        return dict(self.transitions)

    def __call__(self, i: Element) -> str:
        return self._levels[i]

    def transition(self, a: Element, b: Element) -> Morphism:
        found = self._transitions.get((a, b))
        if found is None:
            raise MalformedPresentationError(f"{a} <= {b} fails in the index of {self.label}")
        return found

    @property
    def bottom(self) -> Element:
        b = self.index.bottom
        if b is None:
            raise MalformedPresentationError(f"{self.label} has no bottom level; its index is not cofiltered")
        return b

    @property
    def top(self) -> Optional[Element]:
        return self.index.top

    def to_bottom(self, j: Element) -> Morphism:
        """F(bottom) -> F(j)"""
        return self.transition(self.bottom, j)

    @property
    def label(self) -> str:
        return self.name or "pro(" + ",".join(f"{i}:{o}" for i, o in self.levels) + ")"

    def restrict(self, subset: Sequence[Element], name: str = "") -> "ProObject":
        sub = self.index.restrict(subset)
        return ProObject(
            self.category,
            sub,
            tuple((a, self(a)) for a in sub.elements),
            tuple(kv for kv in self.transitions if kv[0] in sub.order),
            name,
        )

    def describe(self) -> Dict[str, object]:
        """Poset table plus object and morphism assignment."""
        return {
            "name": self.label,
            "index": [repr(e) for e in self.index.elements],
            "order": sorted([repr(a), repr(b)] for a, b in self.index.order if a != b),
            "levels": {repr(i): o for i, o in self.levels},
            "transitions": {f"{a!r}->{b!r}": self.category.describe(f) for (a, b), f in self.transitions if a != b},
        }


@dataclass(frozen=True)
class ProMorphism:
    """A compatible family of germs, each represented at the bottom of the source index.

    germs[j] is a map F(bottom) -> G(j); for j <= j' the target transition carries
    germ j to germ j'.
    """
    source: ProObject
    target: ProObject
    germs: Tuple[Tuple[Element, Morphism], ...]

    @cached_property
    def _germs(self) -> Dict[Element, Morphism]:
        return dict(self.germs)

    def germ(self, j: Element) -> Morphism:
        return self._germs[j]

    @property
    def at_bottom(self) -> Morphism:
        return self.germ(self.target.bottom)

    def violations(self) -> List[str]:
        cat = self.source.category
        found = []
        for a, b in self.target.index.order:
            if a != b and cat.compose(self.target.transition(a, b), self.germ(a)) != self.germ(b):
                found.append(f"germs at {a} and {b} are incompatible")
        return found

    @classmethod
    def from_level(cls, source: ProObject, target: ProObject, i: Element, f: Morphism) -> "ProMorphism":
        """The morphism represented by f: F(i) -> G(bottom)."""
        cat = source.category
        base = cat.compose(f, source.to_bottom(i))
        return cls(source, target, tuple((j, cat.compose(target.to_bottom(j), base)) for j in target.index.elements))


def describe_morphism(f: ProMorphism) -> Dict[str, object]:
    cat = f.source.category
    return {
        "source": f.source.label,
        "target": f.target.label,
        "germs": {repr(j): cat.describe(g) for j, g in f.germs},
    }
