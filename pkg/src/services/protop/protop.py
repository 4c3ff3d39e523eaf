"""
Pro-sites - Pro(C) over a base site with the weak or transfinite topology, and its distinguished coverings
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

from loguru import logger

from src.config.settings import get_settings
from src.core.errors import ViolationError
from src.models.schemas.report import CheckResult, Verdict
from src.services.fincat.category import Cone, Morphism
from src.services.pro import pro_service
from src.services.pro.index import Element
from src.services.pro.pro_object import ProMorphism, ProObject
from src.services.site import site_service
from src.services.site.site import CoveringFamily, SiteSpec
from src.services.tower.tower import ProAmbient, StepMarker, Tower


class Topology(str, Enum):
    WEAK = "weak"
    TRANSFINITE = "transfinite"


class ProSite:
    """Pro(C) over a base site; sieve questions are answered on a finite sample set of pro-objects."""

    def __init__(
        self,
        base: SiteSpec,
        topology: Topology = Topology.WEAK,
        budget: Optional[int] = None,
        samples: Optional[Sequence[ProObject]] = None,
    ):
        self.base = base
        self.cat = base.cat
        self.topology = Topology(topology)
        self.budget = get_settings().DEFAULT_BUDGET if budget is None else budget
        self.ambient = ProAmbient(base.cat)
        self.name = f"Pro({base.name})/{self.topology.value}"
        self._samples: Optional[Tuple[ProObject, ...]] = None if samples is None else tuple(samples)
        self._admissible: Optional[CheckResult] = None

    def objects(self) -> Tuple[str, ...]:
        return self.cat.objects(self.budget)

    def constant(self, obj: str) -> ProObject:
        return ProObject.constant(self.cat, obj)

    @property
    def samples(self) -> Tuple[ProObject, ...]:
        """Constants on the snapshot plus up to SAMPLE_CHAIN_LIMIT 2-chains along covering morphisms."""
        if self._samples is None:
            limit = get_settings().SAMPLE_CHAIN_LIMIT
            found = [self.constant(c) for c in self.objects()]
            chains: List[ProObject] = []
            for f in self.cat.all_morphisms(self.objects()):
                if len(chains) >= limit:
                    break
                if f.source == f.target or not site_service.is_covering_morphism(self.base, f):
                    continue
                chains.append(ProObject.chain(self.cat, [f.target, f.source], [f]))
            self._samples = tuple(found + chains)
            logger.debug(f"{self.name}: {len(found)} constant and {len(chains)} chain samples")
        return self._samples

    def admissibility(self) -> CheckResult:
        if self._admissible is None:
            self._admissible = site_service.check_admissible(self.base)
        return self._admissible

    def require_admissible(self) -> None:
        result = self.admissibility()
        if result.verdict == Verdict.FAIL:
            raise ViolationError(f"{self.base.name} is not admissible: {result.details}")

    def __repr__(self) -> str:
        return f"ProSite({self.name}, budget={self.budget})"


@dataclass(frozen=True)
class DistinguishedWeakCovering:
    """{F_w -> F} with F_w(i) = F(i) x_{F(level)} C_w over the down-set of `level`.

    `cones[w]` holds the chosen pullback squares per index element; `projections[w]` is F_w -> c(C_w).
    """
    target: ProObject
    level: Element
    family: CoveringFamily
    members: Tuple[ProObject, ...]
    maps: Tuple[ProMorphism, ...]
    projections: Tuple[ProMorphism, ...] = field(repr=False)
    cones: Tuple[Tuple[Tuple[Element, Cone], ...], ...] = field(default=(), compare=False, repr=False)

    def __len__(self) -> int:
        return len(self.members)

    def cone(self, w: int, i: Element) -> Cone:
        return dict(self.cones[w])[i]

    def level_map(self, w: int, i: Element):
        """F_w(i) -> F(i)"""
        return self.cone(w, i).legs[0]

    def describe(self) -> Dict[str, object]:
        cat = self.target.category
        return {
            "kind": "distinguished-weak",
            "target": self.target.label,
            "level": repr(self.level),
            "family": [cat.describe(m) for m in self.family.members],
            "members": [m.label for m in self.members],
        }


@dataclass(frozen=True)
class StepWitness:
    """A one-member distinguished weak covering and an isomorphism from its member to the step source over the target."""
    covering: DistinguishedWeakCovering
    iso: ProMorphism


@dataclass(frozen=True)
class TransfiniteCoveringMorphism:
    """A finite tower of distinguished weak covering morphisms; the morphism is its transfinite composition."""
    tower: Tower
    witnesses: Tuple[StepWitness, ...]

    @property
    def source(self) -> ProObject:
        return self.tower.last

    @property
    def target(self) -> ProObject:
        return self.tower.stages[0]

    @property
    def morphism(self) -> ProMorphism:
        return self.tower.transition(self.tower.length - 1, 0)

    def violations(self) -> List[str]:
        found = []
        if len(self.witnesses) != len(self.tower.steps):
            return [f"{len(self.tower.steps)} steps but {len(self.witnesses)} witnesses"]
        for i, (step, witness) in enumerate(zip(self.tower.steps, self.witnesses)):
            if StepMarker.DISTINGUISHED not in self.tower.markers[i]:
                found.append(f"step {i + 1} is not marked {StepMarker.DISTINGUISHED.value}")
            cov = witness.covering
            if len(cov) != 1 or cov.target != step.target:
                found.append(f"step {i + 1}: witness does not cover the step target by one member")
                continue
            if witness.iso.source != cov.members[0] or witness.iso.target != step.source:
                found.append(f"step {i + 1}: witness isomorphism has the wrong ends")
                continue
            if pro_service.compose(step, witness.iso) != cov.maps[0]:
                found.append(f"step {i + 1}: witness isomorphism does not lie over the target")
            elif pro_service.inverse(witness.iso) is None:
                found.append(f"step {i + 1}: witness map is not invertible")
        return found

    def describe(self) -> Dict[str, object]:
        return {
            "kind": "transfinite-chain",
            "tower": self.tower.describe(),
            "witnesses": [w.covering.describe() for w in self.witnesses],
        }


@dataclass(frozen=True)
class DistinguishedTransfiniteCovering:
    """{U_w -> U~ -> U}: a weak covering of the chain's last stage followed by the chain."""
    chain: TransfiniteCoveringMorphism
    top: DistinguishedWeakCovering
    maps: Tuple[ProMorphism, ...]

    @property
    def target(self) -> ProObject:
        return self.chain.target

    @property
    def members(self) -> Tuple[ProObject, ...]:
        return self.top.members

    def __len__(self) -> int:
        return len(self.maps)

    def describe(self) -> Dict[str, object]:
        return {"kind": "distinguished-transfinite", "chain": self.chain.describe(), "top": self.top.describe()}


class ProCoveringAnswer(str, Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class ProCoveringVerdict:
    answer: ProCoveringAnswer
    levels: Tuple[Tuple[Element, Morphism], ...] = field(default=(), repr=False)
    reason: str = ""

    def __bool__(self) -> bool:
        return self.answer == ProCoveringAnswer.YES
