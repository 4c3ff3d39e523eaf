"""
Finite Groups - multiplication tables, subgroup lattices and coset actions
"""
from dataclasses import dataclass
from functools import cached_property
from typing import FrozenSet, List, Sequence, Tuple

from src.core.errors import MalformedPresentationError


@dataclass(frozen=True)
class FiniteGroup:
    """A finite group on elements 0..order-1 with 0 as identity."""
    name: str
    table: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        n = len(self.table)
        if n == 0 or any(len(row) != n for row in self.table):
            raise MalformedPresentationError(f"group {self.name}: table is not square")
        if tuple(self.table[0]) != tuple(range(n)) or tuple(r[0] for r in self.table) != tuple(range(n)):
            raise MalformedPresentationError(f"group {self.name}: element 0 is not the identity")
        for row in self.table:
            if sorted(row) != list(range(n)):
                raise MalformedPresentationError(f"group {self.name}: table is not a Latin square")
        for a in range(n):
            for b in range(n):
                for c in range(n):
                    if self.table[self.table[a][b]][c] != self.table[a][self.table[b][c]]:
                        raise MalformedPresentationError(f"group {self.name}: ({a}{b}){c} != {a}({b}{c})")

    @classmethod
    def cyclic(cls, n: int) -> "FiniteGroup":
        if n < 1:
            raise MalformedPresentationError(f"cyclic group of order {n}")
        return cls(f"Z/{n}", tuple(tuple((a + b) % n for b in range(n)) for a in range(n)))

    @classmethod
    def trivial(cls) -> "FiniteGroup":
        return cls("1", ((0,),))

    @classmethod
    def from_table(cls, name: str, rows: Sequence[Sequence[int]]) -> "FiniteGroup":
        return cls(name, tuple(tuple(int(x) for x in row) for row in rows))

    @property
    def order(self) -> int:
        return len(self.table)

    @property
    def elements(self) -> range:
        return range(self.order)

    def mul(self, a: int, b: int) -> int:
        return self.table[a][b]

    @cached_property
    def _inverses(self) -> Tuple[int, ...]:
        return tuple(next(b for b in self.elements if self.table[a][b] == 0) for a in self.elements)

    def inv(self, a: int) -> int:
        return self._inverses[a]

    def conjugate(self, g: int, subgroup: FrozenSet[int]) -> FrozenSet[int]:
        """g H g^-1"""
        gi = self.inv(g)
        return frozenset(self.mul(self.mul(g, h), gi) for h in subgroup)

    def generated(self, gens) -> FrozenSet[int]:
        found = {0}
        frontier = list(gens)
        while frontier:
            x = frontier.pop()
            if x in found:
                continue
            found.add(x)
            for y in list(found):
                frontier.extend((self.mul(x, y), self.mul(y, x)))
        return frozenset(found)

    @cached_property
    def subgroups(self) -> Tuple[FrozenSet[int], ...]:
        known = {frozenset({0})}
        frontier = [frozenset({0})]
        while frontier:
            h = frontier.pop()
            for g in self.elements:
                if g in h:
                    continue
                bigger = self.generated(set(h) | {g})
                if bigger not in known:
                    known.add(bigger)
                    frontier.append(bigger)
        return tuple(sorted(known, key=lambda s: (-len(s), sorted(s))))

    @cached_property
    def subgroup_classes(self) -> Tuple[FrozenSet[int], ...]:
        """One representative per conjugacy class, largest first."""
        reps: List[FrozenSet[int]] = []
        for h in self.subgroups:
            if not any(h in {self.conjugate(g, r) for g in self.elements} for r in reps):
                reps.append(h)
        return tuple(reps)


@dataclass(frozen=True)
class OrbitType:
    """The transitive G-set G/H with left cosets indexed from 0 (coset 0 is H)."""
    index: int
    label: str
    subgroup: FrozenSet[int]
    cosets: Tuple[FrozenSet[int], ...]
    representatives: Tuple[int, ...]
    action: Tuple[Tuple[int, ...], ...]  # action[g][c] = coset of g * rep_c

    @property
    def size(self) -> int:
        return len(self.cosets)

    def stabilizer(self, group: FiniteGroup, coset: int) -> FrozenSet[int]:
        return group.conjugate(self.representatives[coset], self.subgroup)


def orbit_types(group: FiniteGroup) -> Tuple[OrbitType, ...]:
    types = []
    classes = group.subgroup_classes
    for idx, h in enumerate(classes):
        if len(h) == group.order:
            label = "*"
        elif len(h) == 1:
            label = "G"
        else:
            label = f"G/H{idx}"
        cosets: List[FrozenSet[int]] = [h]
        for g in group.elements:
            c = frozenset(group.mul(g, x) for x in h)
            if c not in cosets:
                cosets.append(c)
        reps = tuple(min(c) if i else 0 for i, c in enumerate(cosets))
        action = tuple(
            tuple(next(k for k, c in enumerate(cosets) if group.mul(g, reps[j]) in c) for j in range(len(cosets)))
            for g in group.elements
        )
        types.append(OrbitType(idx, label, h, tuple(cosets), reps, action))
    return tuple(types)
