"""
Presheaves - set-valued functors on a site snapshot and the maps between them
"""
from dataclasses import dataclass, field
from typing import Callable, Collection, Dict, Hashable, List, Mapping, Optional, Sequence, Tuple

from src.core.errors import MalformedPresentationError, OutOfBudgetError
from src.services.fincat.category import Morphism
from src.services.site.site import CoveringFamily, SiteSpec

Section = Hashable


class Presheaf:
    """Sections per object and contravariant restriction maps.

    A presheaf built with a `domain` is only defined on those objects: touching
    anything else raises OutOfBudgetError instead of extending silently.
    """

    def __init__(
        self,
        site: SiteSpec,
        name: str,
        sections: Callable[[str], Sequence[Section]],
        restrict: Callable[[Morphism, Section], Section],
        domain: Optional[Collection[str]] = None,
    ):
        self.site = site
        self.name = name
        self._sections_fn = sections
        self._restrict_fn = restrict
        self.domain = frozenset(domain) if domain is not None else None
        self._sections: Dict[str, Tuple[Section, ...]] = {}

    def _check(self, obj: str) -> None:
        if self.domain is not None and obj not in self.domain:
            raise OutOfBudgetError(f"presheaf {self.name} is not defined on {obj}")

    def sections(self, obj: str) -> Tuple[Section, ...]:
        cached = self._sections.get(obj)
        if cached is None:
            self._check(obj)
            cached = tuple(self._sections_fn(obj))
            self._sections[obj] = cached
        return cached

    def restrict(self, f: Morphism, x: Section) -> Section:
        self._check(f.source)
        self._check(f.target)
        return self._restrict_fn(f, x)

    def __repr__(self) -> str:
        return f"Presheaf({self.name})"

    @classmethod
    def from_tables(
        cls,
        site: SiteSpec,
        name: str,
        sections: Mapping[str, Sequence[Section]],
        restrictions: Mapping[str, Mapping[Section, Section]],
    ) -> "Presheaf":
        """Finite presheaf on a table-backed site; restrictions are keyed by morphism name."""
        cat = site.cat
        tables = {k: dict(v) for k, v in restrictions.items()}

        def restrict(f: Morphism, x: Section) -> Section:
            if f == cat.identity(f.target):
                return x
            table = tables.get(str(f.key))
            if table is None or x not in table:
                raise MalformedPresentationError(f"presheaf {name}: no restriction of {x!r} along {f}")
            return table[x]

        return cls(site, name, lambda obj: sections[obj], restrict, domain=tuple(sections))


def presheaf_violations(F: Presheaf, objects: Optional[Sequence[str]] = None) -> List[str]:
    """Functoriality failures on the snapshot."""
    cat = F.site.cat
    objs = F.site.objects() if objects is None else objects
    found = []
    arrows = cat.all_morphisms(objs)
    for a in objs:
        for x in F.sections(a):
            if F.restrict(cat.identity(a), x) != x:
                found.append(f"{F.name}: identity on {a} moves {x!r}")
    for f in arrows:
        for g in arrows:
            if g.source != f.target:
                continue
            gf = cat.compose(g, f)
            for x in F.sections(g.target):
                if F.restrict(gf, x) != F.restrict(f, F.restrict(g, x)):
                    found.append(f"{F.name}: restriction along {cat.describe(gf)} is not the composite")
                    break
    return found


@dataclass(frozen=True)
class MatchingFamily:
    family: CoveringFamily
    data: Tuple[Section, ...]


@dataclass(frozen=True)
class SheafMorphism:
    source: Presheaf
    target: Presheaf
    component: Callable[[str, Section], Section] = field(compare=False)
    name: str = "phi"

    def __call__(self, obj: str, x: Section) -> Section:
        return self.component(obj, x)

    def image(self, obj: str) -> frozenset:
        return frozenset(self.component(obj, x) for x in self.source.sections(obj))

    def then(self, other: "SheafMorphism") -> "SheafMorphism":
        return SheafMorphism(
            self.source,
            other.target,
            lambda obj, x: other.component(obj, self.component(obj, x)),
            name=f"{other.name}.{self.name}",
        )

    def violations(self, objects: Optional[Sequence[str]] = None) -> List[str]:
        cat = self.source.site.cat
        objs = self.source.site.objects() if objects is None else objects
        found = []
        for f in cat.all_morphisms(objs):
            for x in self.source.sections(f.target):
                if self.target.restrict(f, self.component(f.target, x)) != self.component(f.source, self.source.restrict(f, x)):
                    found.append(f"{self.name} does not commute with restriction along {cat.describe(f)}")
                    break
        return found

    def equals(self, other: "SheafMorphism", objects: Optional[Sequence[str]] = None) -> bool:
        objs = self.source.site.objects() if objects is None else objects
        return all(
            self.component(obj, x) == other.component(obj, x) for obj in objs for x in self.source.sections(obj)
        )


def identity_morphism(F: Presheaf) -> SheafMorphism:
    return SheafMorphism(F, F, lambda obj, x: x, name=f"id_{F.name}")


class FiberProductPresheaf(Presheaf):
    """Sectionwise A x_C B for maps f: A -> C and g: B -> C."""

    def __init__(self, f: SheafMorphism, g: SheafMorphism):
        self.f = f
        self.g = g
        a, b = f.source, g.source

        def sections(obj: str):
            return [
                (x, y)
                for x in a.sections(obj)
                for y in b.sections(obj)
                if f.component(obj, x) == g.component(obj, y)
            ]

        def restrict(m: Morphism, pair):
            return (a.restrict(m, pair[0]), b.restrict(m, pair[1]))

        super().__init__(f.source.site, f"{a.name}x{b.name}", sections, restrict)
        self.first = SheafMorphism(self, a, lambda obj, p: p[0], name="pr1")
        self.second = SheafMorphism(self, b, lambda obj, p: p[1], name="pr2")


def product_presheaf(a: Presheaf, b: Presheaf, terminal: Presheaf) -> FiberProductPresheaf:
    to_point_a = SheafMorphism(a, terminal, lambda obj, x: terminal.sections(obj)[0], name="!")
    to_point_b = SheafMorphism(b, terminal, lambda obj, x: terminal.sections(obj)[0], name="!")
    return FiberProductPresheaf(to_point_a, to_point_b)
