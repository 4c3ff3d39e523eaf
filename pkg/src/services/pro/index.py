"""
Index Posets - finite posets indexing pro-objects, with cofilteredness and product reindexing
"""
from dataclasses import dataclass
from functools import cached_property
from itertools import product
from typing import Dict, FrozenSet, Hashable, Iterable, List, Optional, Sequence, Tuple

from src.core.errors import MalformedPresentationError

Element = Hashable


@dataclass(frozen=True)
class IndexPoset:
    """A finite poset; `order` holds every pair (a, b) with a <= b, reflexive and transitive."""
    elements: Tuple[Element, ...]
    order: FrozenSet[Tuple[Element, Element]]

    @classmethod
    def from_relations(cls, elements: Sequence[Element], pairs: Iterable[Tuple[Element, Element]]) -> "IndexPoset":
        elems = tuple(elements)
        known = set(elems)
        above: Dict[Element, set] = {e: {e} for e in elems}
        for a, b in pairs:
            if a not in known or b not in known:
                raise MalformedPresentationError(f"order pair ({a}, {b}) names an unknown element")
            above[a].add(b)
        changed = True
        while changed:
            changed = False
            for a in elems:
                grown = set(above[a])
                for b in above[a]:
                    grown |= above[b]
                if grown != above[a]:
                    above[a] = grown
                    changed = True
        for a in elems:
            for b in above[a]:
                if a != b and a in above[b]:
                    raise MalformedPresentationError(f"index order is not antisymmetric at {a}, {b}")
        return cls(elems, frozenset((a, b) for a in elems for b in above[a]))

    @classmethod
    def single(cls, element: Element = 0) -> "IndexPoset":
        return cls((element,), frozenset({(element, element)}))

    @classmethod
    def chain(cls, length: int) -> "IndexPoset":
        """0 > 1 > ... > length-1; the last element is the bottom."""
        if length < 1:
            raise MalformedPresentationError("a chain index needs at least one element")
        return cls.from_relations(range(length), ((i + 1, i) for i in range(length - 1)))

    def leq(self, a: Element, b: Element) -> bool:
        return (a, b) in self.order

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, item: Element) -> bool:
        return item in self._positions

    @cached_property
    def _positions(self) -> Dict[Element, int]:
        return {e: k for k, e in enumerate(self.elements)}

    def up_set(self, a: Element) -> Tuple[Element, ...]:
        return tuple(b for b in self.elements if self.leq(a, b))

    def lower_bounds(self, a: Element, b: Element) -> Tuple[Element, ...]:
        return tuple(c for c in self.elements if self.leq(c, a) and self.leq(c, b))

    def covers(self) -> List[Tuple[Element, Element]]:
        """Hasse edges (a, b): a < b with nothing strictly between."""
        edges = []
        for a, b in sorted(self.order, key=lambda p: (self._positions[p[0]], self._positions[p[1]])):
            if a == b:
                continue
            if not any(c not in (a, b) and self.leq(a, c) and self.leq(c, b) for c in self.elements):
                edges.append((a, b))
        return edges

    @property
    def bottom(self) -> Optional[Element]:
        for a in self.elements:
            if all(self.leq(a, b) for b in self.elements):
                return a
        return None

    @property
    def top(self) -> Optional[Element]:
        """The final element i0, when one exists."""
        for a in self.elements:
            if all(self.leq(b, a) for b in self.elements):
                return a
        return None

    def is_cofiltered(self) -> bool:
        if not self.elements:
            return False
        return all(self.lower_bounds(a, b) for a in self.elements for b in self.elements)

    def require_cofiltered(self) -> None:
        if not self.is_cofiltered():
            raise MalformedPresentationError(f"index {list(self.elements)} is not cofiltered")

    def down_set(self, a: Element) -> "IndexPoset":
        return self.restrict(b for b in self.elements if self.leq(b, a))

    def restrict(self, subset: Iterable[Element]) -> "IndexPoset":
        keep = set(subset)
        elems = tuple(e for e in self.elements if e in keep)
        return IndexPoset(elems, frozenset((a, b) for a, b in self.order if a in keep and b in keep))

    def grading(self) -> Dict[Element, int]:
        """Cofinite grading: the number of elements strictly above."""
        return {a: len(self.up_set(a)) - 1 for a in self.elements}


def product_poset(factors: Sequence[IndexPoset]) -> IndexPoset:
    """Componentwise order on tuples; the empty product is a single point."""
    elements = tuple(product(*(f.elements for f in factors)))
    order = frozenset(
        (s, t) for s in elements for t in elements if all(f.leq(a, b) for f, a, b in zip(factors, s, t))
    )
    return IndexPoset(elements, order)
