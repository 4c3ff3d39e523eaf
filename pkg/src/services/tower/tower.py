"""
Towers - finite towers in a base category, a sheaf snapshot or Pro(C), and the ambients they live in
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from src.core.errors import MalformedPresentationError
from src.services.fincat.category import Category, Cone
from src.services.pro import pro_service
from src.services.pro.pro_object import ProMorphism, ProObject
from src.services.sheaf import sheaf_service
from src.services.sheaf.presheaf import (
    FiberProductPresheaf,
    Presheaf,
    SheafMorphism,
    identity_morphism,
    product_presheaf,
)
from src.services.site.site import SiteSpec

Stage = Any
Step = Any


class StepMarker(str, Enum):
    EPI = "epi"
    COVERING = "covering"
    DISTINGUISHED = "distinguished-weak"


ALL_MARKERS: FrozenSet[StepMarker] = frozenset(StepMarker)


@dataclass(frozen=True)
class Pullback:
    """A chosen limit square: `first` goes to the left factor, `second` to the right one."""
    apex: Stage
    first: Step
    second: Step
    data: Any = field(default=None, compare=False, repr=False)
    base: Optional[Step] = field(default=None, compare=False, repr=False)


class Ambient(ABC):
    """Where a tower's stages live: composition, identities and the limits the calculus needs."""
    name: str = "ambient"

    @abstractmethod
    def source(self, step: Step) -> Stage:
        pass

    @abstractmethod
    def target(self, step: Step) -> Stage:
        pass

    @abstractmethod
    def identity(self, stage: Stage) -> Step:
        pass

    @abstractmethod
    def compose(self, g: Step, f: Step) -> Step:
        """g after f"""

    @abstractmethod
    def same(self, f: Step, g: Step) -> bool:
        pass

    @abstractmethod
    def is_iso(self, step: Step) -> bool:
        pass

    def same_stage(self, a: Stage, b: Stage) -> bool:
        return a == b

    @abstractmethod
    def fiber_product(self, f: Step, g: Step) -> Pullback:
        pass

    @abstractmethod
    def product(self, a: Stage, b: Stage) -> Pullback:
        pass

    @abstractmethod
    def pair(self, square: Pullback, a: Step, b: Step) -> Step:
        """The map into the apex with components a and b."""

    def label(self, stage: Stage) -> str:
        return str(stage)


class CategoryAmbient(Ambient):

    def __init__(self, category: Category):
        self.category = category
        self.name = category.name

    def source(self, step):
        return step.source

    def target(self, step):
        return step.target

    def identity(self, stage):
        return self.category.identity(stage)

    def compose(self, g, f):
        return self.category.compose(g, f)

    def same(self, f, g):
        return f == g

    def is_iso(self, step) -> bool:
        return self.category.is_iso(step)

    def fiber_product(self, f, g) -> Pullback:
        cone = self.category.fiber_product(f, g)
        return Pullback(cone.apex, cone.legs[0], cone.legs[1], data=cone, base=f)

    def product(self, a, b) -> Pullback:
        cone = self.category.product(a, b)
        return Pullback(cone.apex, cone.legs[0], cone.legs[1], data=cone)

    def pair(self, square: Pullback, a, b):
        cone: Cone = square.data
        if square.base is None:
            return self.category.product_pairing(cone, a, b)
        return self.category.pullback_pairing(cone, square.base, a, b)


class SheafAmbient(Ambient):
    """Presheaves on a site snapshot; equality of maps is checked on every snapshot object."""

    def __init__(self, site: SiteSpec, objects: Optional[Sequence[str]] = None):
        self.site = site
        self.objects = tuple(site.objects() if objects is None else objects)
        self.name = f"Sh({site.name})"
        self._terminal: Optional[Presheaf] = None

    def source(self, step: SheafMorphism):
        return step.source

    def target(self, step: SheafMorphism):
        return step.target

    def identity(self, stage: Presheaf):
        return identity_morphism(stage)

    def compose(self, g: SheafMorphism, f: SheafMorphism):
        return f.then(g)

    def same(self, f: SheafMorphism, g: SheafMorphism) -> bool:
        return f.equals(g, self.objects)

    def is_iso(self, step: SheafMorphism) -> bool:
        """Bijective on every snapshot object."""
        return all(
            len(step.source.sections(obj)) == len(step.target.sections(obj)) == len(step.image(obj))
            for obj in self.objects
        )

    def same_stage(self, a: Presheaf, b: Presheaf) -> bool:
        return a is b

    def fiber_product(self, f: SheafMorphism, g: SheafMorphism) -> Pullback:
        square = FiberProductPresheaf(f, g)
        return Pullback(square, square.first, square.second, data=square)

    def product(self, a: Presheaf, b: Presheaf) -> Pullback:
        if self._terminal is None:
            self._terminal = sheaf_service.constant_presheaf(self.site)
        square = product_presheaf(a, b, self._terminal)
        return Pullback(square, square.first, square.second, data=square)

    def pair(self, square: Pullback, a: SheafMorphism, b: SheafMorphism):
        return SheafMorphism(
            a.source, square.apex, lambda obj, x: (a(obj, x), b(obj, x)), name=f"<{a.name},{b.name}>"
        )

    def label(self, stage: Presheaf) -> str:
        return stage.name


class ProAmbient(Ambient):

    def __init__(self, category: Category):
        self.category = category
        self.name = f"Pro({category.name})"

    def source(self, step: ProMorphism):
        return step.source

    def target(self, step: ProMorphism):
        return step.target

    def identity(self, stage: ProObject):
        return pro_service.identity(stage)

    def compose(self, g: ProMorphism, f: ProMorphism):
        return pro_service.compose(g, f)

    def same(self, f, g) -> bool:
        return f == g

    def is_iso(self, step: ProMorphism) -> bool:
        return pro_service.inverse(step) is not None

    def fiber_product(self, f: ProMorphism, g: ProMorphism) -> Pullback:
        limit = pro_service.pro_fiber_product(f, g)
        return Pullback(limit.pro, limit.legs[0], limit.legs[1], data=limit, base=f)

    def product(self, a: ProObject, b: ProObject) -> Pullback:
        limit = pro_service.pro_product(self.category, [a, b])
        return Pullback(limit.pro, limit.legs[0], limit.legs[1], data=limit)

    def pair(self, square: Pullback, a: ProMorphism, b: ProMorphism):
        maps = [a, b] if square.base is None else [a, b, pro_service.compose(square.base, a)]
        return pro_service.pro_pullback_pairing(square.data, maps)

    def label(self, stage: ProObject) -> str:
        return stage.label


# ===== Towers =====

@dataclass(frozen=True)
class Tower:
    """Stages F_0 .. F_{n-1} with steps[i]: F_{i+1} -> F_i; `markers[i]` are claims about steps[i].

    The limit-ordinal clause is vacuous at finite length, so the transfinite composition
    target F_{<n} is the last stage.
    """
    ambient: Ambient = field(compare=False, repr=False)
    stages: Tuple[Stage, ...]
    steps: Tuple[Step, ...]
    markers: Tuple[FrozenSet[StepMarker], ...] = ()
    name: str = field(default="tower", compare=False)

    def __post_init__(self):
        if self.stages and len(self.steps) != len(self.stages) - 1:
            raise MalformedPresentationError(
                f"tower {self.name}: {len(self.stages)} stages need {len(self.stages) - 1} steps, got {len(self.steps)}"
            )
        if not self.stages and self.steps:
            raise MalformedPresentationError(f"tower {self.name} has steps but no stages")
        amb = self.ambient
        for i, step in enumerate(self.steps):
            if not amb.same_stage(amb.source(step), self.stages[i + 1]) or not amb.same_stage(amb.target(step), self.stages[i]):
                raise MalformedPresentationError(f"tower {self.name}: step {i + 1} does not go F_{i + 1} -> F_{i}")
        if not self.markers:
            object.__setattr__(self, "markers", tuple(frozenset() for _ in self.steps))
        elif len(self.markers) != len(self.steps):
            raise MalformedPresentationError(f"tower {self.name}: one marker set per step expected")

    @classmethod
    def of(
        cls,
        ambient: Ambient,
        stages: Sequence[Stage],
        steps: Sequence[Step],
        marker: Iterable[StepMarker] = (),
        name: str = "tower",
    ) -> "Tower":
        """A tower with the same marker set on every step."""
        flags = frozenset(StepMarker(m) for m in marker)
        return cls(ambient, tuple(stages), tuple(steps), tuple(flags for _ in steps), name)

    def __len__(self) -> int:
        return len(self.stages)

    @property
    def length(self) -> int:
        return len(self.stages)

    @property
    def last(self) -> Stage:
        return self.stages[-1]

    def marked(self, marker: StepMarker) -> List[int]:
        return [i for i, flags in enumerate(self.markers) if marker in flags]

    def transition(self, j: int, i: int) -> Step:
        """F_j -> F_i for j >= i."""
        if j < i:
            raise MalformedPresentationError(f"tower {self.name}: no transition F_{j} -> F_{i}")
        amb = self.ambient
        out = amb.identity(self.stages[j])
        for k in range(j - 1, i - 1, -1):
            out = amb.compose(self.steps[k], out)
        return out

    def describe(self) -> dict:
        return {
            "name": self.name,
            "length": self.length,
            "stages": [self.ambient.label(s) for s in self.stages],
            "markers": [sorted(m.value for m in flags) for flags in self.markers],
        }


@dataclass(frozen=True)
class TowerMorphism:
    """components[i]: source.stages[i] -> target.stages[i]"""
    source: Tower
    target: Tower
    components: Tuple[Step, ...]

    def violations(self) -> List[str]:
        amb = self.target.ambient
        found = []
        if self.source.length != self.target.length or len(self.components) != self.target.length:
            return [f"lengths {self.source.length} and {self.target.length} do not match"]
        for i in range(self.target.length - 1):
            left = amb.compose(self.target.steps[i], self.components[i + 1])
            right = amb.compose(self.components[i], self.source.steps[i])
            if not amb.same(left, right):
                found.append(f"square at step {i + 1} does not commute")
        return found
