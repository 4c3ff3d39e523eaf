"""
Functors and natural transformations between presented categories
"""
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

from src.services.fincat.category import Category, Diagram, Morphism
from src.services.fincat.group import FiniteGroup
from src.services.fincat.gset_category import GSetCategory


@dataclass(frozen=True)
class Functor:
    source: Category
    target: Category
    object_map: Callable[[str], str] = field(compare=False)
    morphism_map: Callable[[Morphism], Morphism] = field(compare=False)
    name: str = "F"
    limit_preserving: bool = False

    def __call__(self, item):
        if isinstance(item, Morphism):
            return self.morphism_map(item)
        return self.object_map(item)

    def violations(self, objects: Optional[Sequence[str]] = None) -> List[str]:
        """Identity and composition failures on the snapshot."""
        objs = self.source.objects() if objects is None else objects
        found: List[str] = []
        for a in objs:
            if self.morphism_map(self.source.identity(a)) != self.target.identity(self.object_map(a)):
                found.append(f"{self.name} does not preserve id_{a}")
        arrows = self.source.all_morphisms(objs)
        for f in arrows:
            image = self.morphism_map(f)
            if image.source != self.object_map(f.source) or image.target != self.object_map(f.target):
                found.append(f"{self.name}({self.source.describe(f)}) has the wrong endpoints")
                continue
            for g in arrows:
                if g.source != f.target:
                    continue
                lhs = self.morphism_map(self.source.compose(g, f))
                rhs = self.target.compose(self.morphism_map(g), image)
                if lhs != rhs:
                    found.append(f"{self.name} breaks composition at {self.source.describe(g)} . {self.source.describe(f)}")
        if self.limit_preserving:
            for a in objs:
                for b in objs:
                    cone = self.source.product(a, b)
                    image = self.target.limit(Diagram.discrete((self.object_map(a), self.object_map(b))))
                    if image is None or self.target.find_iso(image.apex, self.object_map(cone.apex)) is None:
                        found.append(f"{self.name} does not preserve the product {a} x {b}")
        return found

    def then(self, other: "Functor") -> "Functor":
        return Functor(
            self.source,
            other.target,
            lambda a: other.object_map(self.object_map(a)),
            lambda f: other.morphism_map(self.morphism_map(f)),
            name=f"{other.name}.{self.name}",
        )


@dataclass(frozen=True)
class NatTransform:
    source: Functor
    target: Functor
    components: Callable[[str], Morphism] = field(compare=False)

    def violations(self, objects: Optional[Sequence[str]] = None) -> List[str]:
        cat = self.source.target
        objs = self.source.source.objects() if objects is None else objects
        found = []
        for f in self.source.source.all_morphisms(objs):
            left = cat.compose(self.components(f.target), self.source.morphism_map(f))
            right = cat.compose(self.target.morphism_map(f), self.components(f.source))
            if left != right:
                found.append(f"naturality square at {self.source.source.describe(f)} does not commute")
        return found


def identity_functor(category: Category) -> Functor:
    return Functor(category, category, lambda a: a, lambda f: f, name=f"id_{category.name}", limit_preserving=True)


def inclusion_functor(sub: Category, parent: Category) -> Functor:
    """Objects and morphisms carried over verbatim; valid when `sub` is a full subcategory of `parent`."""
    return Functor(sub, parent, lambda a: a, lambda f: f, name=f"{sub.name}->{parent.name}")


def finite_sets(budget: Optional[int] = None) -> GSetCategory:
    """Finite sets as the category of sets with a trivial group action."""
    return GSetCategory(FiniteGroup.trivial(), budget=budget, name="FinSet")


def finite_set(finset: GSetCategory, size: int) -> str:
    return finset.name_of((0,) * size)


def hom_functor(category: Category, source: str, finset: GSetCategory) -> Functor:
    """Hom(source, -) into finite sets; elements are numbered in hom enumeration order."""
    cache: Dict[str, Dict[Morphism, int]] = {}

    def positions(obj: str) -> Dict[Morphism, int]:
        if obj not in cache:
            cache[obj] = {f: k for k, f in enumerate(category.hom(source, obj))}
        return cache[obj]

    def on_objects(obj: str) -> str:
        return finite_set(finset, len(positions(obj)))

    def on_morphisms(f: Morphism) -> Morphism:
        src, dst = positions(f.source), positions(f.target)
        images = {(k, 0): (dst[category.compose(f, x)], 0) for x, k in src.items()}
        return finset.morphism_from_points(on_objects(f.source), on_objects(f.target), images)

    return Functor(category, finset, on_objects, on_morphisms, name=f"Hom({source},-)", limit_preserving=True)


def constant_functor(category: Category, target: Category, value: str) -> Functor:
    ident = target.identity(value)
    return Functor(category, target, lambda a: value, lambda f: ident, name=f"const_{value}")
