"""
Sites - covering families, sieves, bases and saturation
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple

from src.config.settings import get_settings
from src.core.errors import MalformedPresentationError
from src.services.fincat.category import Category, Morphism
from src.services.fincat.gset_category import GSetCategory

Membership = Callable[[Morphism], bool]


@dataclass(frozen=True)
class CoveringFamily:
    target: str
    members: Tuple[Morphism, ...]

    def __post_init__(self):
        for m in self.members:
            if m.target != self.target:
                raise MalformedPresentationError(f"family member {m} does not land in {self.target}")

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class Sieve:
    """A sieve presented by generators; `arrows` holds its materialized part on the snapshot."""
    target: str
    generators: Tuple[Morphism, ...]
    arrows: FrozenSet[Morphism] = field(default=frozenset())

    def __len__(self) -> int:
        return len(self.arrows)


class BasisRule(ABC):
    name: str = "basis"

    @abstractmethod
    def families(self, cat: Category, target: str) -> Tuple[CoveringFamily, ...]:
        """Basis families over `target`, evaluated lazily."""


class ExplicitBasis(BasisRule):
    """Families listed by hand, plus the identity family on every object."""

    name = "explicit"

    def __init__(self, listed: Dict[str, Sequence[Sequence[Morphism]]]):
        self.listed = {t: tuple(tuple(f) for f in fams) for t, fams in listed.items()}

    def families(self, cat: Category, target: str) -> Tuple[CoveringFamily, ...]:
        found = [CoveringFamily(target, (cat.identity(target),))]
        for members in self.listed.get(target, ()):
            fam = CoveringFamily(target, members)
            if fam not in found:
                found.append(fam)
        return tuple(found)


class JointlySurjectiveBasis(BasisRule):
    """All finite jointly surjective families, represented by orbit-wise families.

    An orbit-wise family has one member per orbit of the target, mapping either the
    orbit itself or a free orbit onto it. Every jointly surjective family is refined
    by one of these, so they generate the same covering sieves.
    """

    name = "jointly-surjective"

    def families(self, cat: Category, target: str) -> Tuple[CoveringFamily, ...]:
        if not isinstance(cat, GSetCategory):
            raise MalformedPresentationError(f"rule {self.name} needs a finite G-set category, got {cat.name}")
        free = len(cat.types) - 1
        choices: List[List[Morphism]] = []
        for p, t in enumerate(cat.parse(target)):
            options = []
            for source_type in (t, free):
                m = cat.morphism_from_points(cat.name_of((source_type,)), target, {(0, 0): (p, 0)})
                if m not in options:
                    options.append(m)
            choices.append(options)
        return tuple(CoveringFamily(target, tuple(members)) for members in product(*choices))


class SiteSpec:
    """A category with a topology presented by a basis rule."""

    def __init__(self, cat: Category, basis: BasisRule, name: Optional[str] = None, depth: Optional[int] = None):
        self.cat = cat
        self.basis = basis
        self.name = name or cat.name
        self.depth = get_settings().SATURATION_DEPTH if depth is None else depth
        self.flags: Dict[str, bool] = {}
        self._families: Dict[str, Tuple[CoveringFamily, ...]] = {}

    def families(self, target: str) -> Tuple[CoveringFamily, ...]:
        if target not in self._families:
            self._families[target] = self.basis.families(self.cat, target)
        return self._families[target]

    def objects(self) -> Tuple[str, ...]:
        return self.cat.objects()

    # ===== Saturation =====

    def factors_through(self, h: Morphism, generators: Sequence[Morphism]) -> bool:
        cat = self.cat
        for g in generators:
            if g.target != h.target:
                continue
            if g == h:
                return True
            if any(cat.compose(g, k) == h for k in cat.hom(h.source, g.source)):
                return True
        return False

    def generated_membership(self, generators: Sequence[Morphism]) -> Membership:
        gens = tuple(generators)
        return lambda h: self.factors_through(h, gens)

    def covers(self, target: str, contains: Membership, depth: Optional[int] = None) -> bool:
        """Bounded fixed point: the sieve contains id, or some basis family is covered member-wise."""
        depth = self.depth if depth is None else depth
        if contains(self.cat.identity(target)):
            return True
        if depth == 0:
            return False
        for fam in self.families(target):
            if len(fam) == 1 and fam.members[0] == self.cat.identity(target):
                continue
            if all(self.covers(m.source, self._pullback(contains, m), depth - 1) for m in fam.members):
                return True
        return False

    def _pullback(self, contains: Membership, m: Morphism) -> Membership:
        return lambda h: contains(self.cat.compose(m, h))

    def __repr__(self) -> str:
        return f"SiteSpec({self.name}, basis={self.basis.name})"
