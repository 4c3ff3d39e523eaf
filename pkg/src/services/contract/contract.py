"""
Contractibility records - splitting witnesses and the P-tower construction
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional, Tuple

from src.services.fincat.category import Morphism
from src.services.pro.pro_object import ProMorphism, ProObject, describe_morphism
from src.services.protop.protop import TransfiniteCoveringMorphism


class Contractibility(str, Enum):
    CONTRACTIBLE = "contractible"
    NOT_CONTRACTIBLE = "not-contractible"
    UNKNOWN = "unknown"


def _describe(f: Any) -> object:
    if isinstance(f, ProMorphism):
        return describe_morphism(f)
    return str(f)


@dataclass(frozen=True)
class ContractibilityWitness:
    """Splittings of every enumerated covering morphism onto `target`, or the first one that does not split."""
    target: Any
    verdict: Contractibility
    splittings: Tuple[Tuple[Any, Any], ...] = field(default=(), repr=False)
    failure: Optional[Any] = None
    scope: str = ""
    unverified: Tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.verdict == Contractibility.CONTRACTIBLE

    @property
    def label(self) -> str:
        return self.target.label if isinstance(self.target, ProObject) else str(self.target)

    def describe(self) -> Dict[str, object]:
        return {
            "kind": "contractibility",
            "target": self.label,
            "verdict": self.verdict.value,
            "scope": self.scope,
            "splittings": [{"covering": _describe(e), "section": _describe(s)} for e, s in self.splittings],
            "failure": None if self.failure is None else _describe(self.failure),
        }


@dataclass(frozen=True)
class PTowerRecord:
    """P^1(U) .. P^n(U) realized as one chain of distinguished weak covering morphisms.

    products[i] is the comma-category product computed directly and comparisons[i] its
    isomorphism onto results[i] over the previous stage. stabilized_at = n records P^{n+1} = P^n.
    """
    target: ProObject
    k_sets: Tuple[Tuple[Morphism, ...], ...]
    chain: TransfiniteCoveringMorphism
    products: Tuple[ProObject, ...] = field(repr=False)
    comparisons: Tuple[ProMorphism, ...] = field(repr=False)
    results: Tuple[ProObject, ...] = ()
    stabilized_at: Optional[int] = None

    @property
    def iterations(self) -> int:
        return len(self.results)

    @property
    def result(self) -> ProObject:
        return self.results[-1] if self.results else self.target

    def describe(self) -> Dict[str, object]:
        cat = self.target.category
        return {
            "kind": "p-tower",
            "target": self.target.label,
            "iterations": self.iterations,
            "k_sets": [[cat.describe(k) for k in ks] for ks in self.k_sets],
            "results": [r.label for r in self.results],
            "products": [p.label for p in self.products],
            "stabilized_at": self.stabilized_at,
            "chain": self.chain.describe(),
        }
