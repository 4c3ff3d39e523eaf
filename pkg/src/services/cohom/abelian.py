"""
Abelian presheaves - group modules, fixed-point presheaves on finite G-sets, free abelianization
and the Čech complex value types
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple

from sympy import Matrix, eye, zeros

from src.core.errors import MalformedPresentationError, PreconditionError
from src.services.fincat.category import Morphism
from src.services.fincat.group import FiniteGroup
from src.services.fincat.gset_category import GSetCategory
from src.services.sheaf.presheaf import Presheaf
from src.services.site.site import CoveringFamily, SiteSpec
from src.utils.integer_matrix import (
    AbelianInvariants,
    PresentedGroup,
    block_diagonal,
    check_homomorphism,
    lattice_basis,
    preimage_lift,
    solve_columns,
    span_contains,
)


def _same_modulo(first: Matrix, second: Matrix, relations: Matrix) -> bool:
    return first.shape == second.shape and span_contains(relations, first - second)


# ===== Group modules =====

@dataclass(frozen=True)
class GroupModule:
    """Z^r / R with a left action of a finite group; action[g] acts on generator coordinates."""
    group: FiniteGroup
    lattice: PresentedGroup
    action: Tuple[Matrix, ...] = field(repr=False)
    name: str = field(default="M", compare=False)
    _fixed: Dict[FrozenSet[int], Tuple[Matrix, PresentedGroup]] = field(
        default_factory=dict, init=False, compare=False, repr=False
    )
    _translated: Dict[Tuple[int, FrozenSet[int], FrozenSet[int]], Matrix] = field(
        default_factory=dict, init=False, compare=False, repr=False
    )

    @classmethod
    def trivial(cls, group: FiniteGroup, order: int = 0) -> "GroupModule":
        """Z (order 0) or Z/order with the trivial action."""
        lattice = PresentedGroup.cyclic(order)
        name = "Z" if order == 0 else f"Z/{order}"
        return cls(group, lattice, tuple(eye(1) for _ in group.elements), name=name)

    @classmethod
    def sign(cls, group: FiniteGroup) -> "GroupModule":
        """Z with g acting by -1 off a chosen index-2 subgroup."""
        halves = [h for h in group.subgroups if 2 * len(h) == group.order]
        if not halves:
            raise MalformedPresentationError(f"{group.name} has no subgroup of index 2")
        kernel = halves[0]
        action = tuple(Matrix([[1 if g in kernel else -1]]) for g in group.elements)
        return cls(group, PresentedGroup.free(1), action, name="Z⁻")

    @classmethod
    def regular(cls, group: FiniteGroup) -> "GroupModule":
        """Z[G] with basis e_h and g e_h = e_{gh}."""
        n = group.order
        action = []
        for g in group.elements:
            m = zeros(n, n)
            for h in group.elements:
                m[group.mul(g, h), h] = 1
            action.append(m)
        return cls(group, PresentedGroup.free(n), tuple(action), name="Z[G]")

    @classmethod
    def augmentation_ideal(cls, group: FiniteGroup) -> "GroupModule":
        """I_G with basis e_h - e_0 for h != 0; g(e_h - e_0) = (e_gh - e_0) - (e_g - e_0)."""
        n = group.order
        if n < 2:
            raise MalformedPresentationError(f"the augmentation ideal of {group.name} is zero")
        action = []
        for g in group.elements:
            m = zeros(n - 1, n - 1)
            for h in range(1, n):
                gh = group.mul(g, h)
                if gh != 0:
                    m[gh - 1, h - 1] += 1
                if g != 0:
                    m[g - 1, h - 1] -= 1
            action.append(m)
        return cls(group, PresentedGroup.free(n - 1), tuple(action), name="I_G")

    @staticmethod
    def augmentation_maps(group: FiniteGroup) -> Tuple["ModuleMap", "ModuleMap"]:
        """0 -> I_G -> Z[G] -> Z -> 0"""
        n = group.order
        ideal, regular, trivial = GroupModule.augmentation_ideal(group), GroupModule.regular(group), GroupModule.trivial(group)
        inclusion = zeros(n, n - 1)
        for h in range(1, n):
            inclusion[h, h - 1] = 1
            inclusion[0, h - 1] = -1
        return (
            ModuleMap(ideal, regular, inclusion, name="ι"),
            ModuleMap(regular, trivial, Matrix([[1] * n]), name="ε"),
        )

    @property
    def rank(self) -> int:
        return self.lattice.generators

    def violations(self) -> List[str]:
        found = []
        r, rel = self.rank, self.lattice.relations
        if len(self.action) != self.group.order:
            return [f"{self.name}: {len(self.action)} action matrices for a group of order {self.group.order}"]
        for g, a in enumerate(self.action):
            if a.shape != (r, r):
                return [f"{self.name}: action of {g} is {a.shape[0]}x{a.shape[1]}, expected {r}x{r}"]
            if not check_homomorphism(self.lattice, self.lattice, a):
                found.append(f"{self.name}: action of {g} does not preserve the relations")
        if not _same_modulo(self.action[0], eye(r), rel):
            found.append(f"{self.name}: the identity does not act trivially")
        for g in self.group.elements:
            for h in self.group.elements:
                if not _same_modulo(self.action[g] * self.action[h], self.action[self.group.mul(g, h)], rel):
                    found.append(f"{self.name}: action of {g}·{h} is not the product of the actions")
                    return found
        return found

    def fixed_points(self, subgroup: FrozenSet[int]) -> Tuple[Matrix, PresentedGroup]:
        """M^H as a basis B of {x : (h - 1) x in R for h in H} and R in B-coordinates."""
        cached = self._fixed.get(subgroup)
        if cached is None:
            r, rel = self.rank, self.lattice.relations
            moves = [self.action[h] - eye(r) for h in sorted(subgroup) if h != 0]
            if moves:
                stacked = Matrix.vstack(*moves)
                targets = block_diagonal([rel] * len(moves))
                basis = lattice_basis(preimage_lift(stacked, targets))
            else:
                basis = eye(r)
            coords = solve_columns(basis, rel)
            if coords is None:
                raise MalformedPresentationError(f"{self.name}: a relation is not fixed by {sorted(subgroup)}")
            cached = (basis, PresentedGroup(basis.cols, coords))
            self._fixed[subgroup] = cached
        return cached

    def translate(self, g: int, source: FrozenSet[int], target: FrozenSet[int]) -> Matrix:
        """x |-> g x from M^source to M^target, in fixed-lattice coordinates (target <= g source g^-1)."""
        key = (g, source, target)
        cached = self._translated.get(key)
        if cached is None:
            b_src, _ = self.fixed_points(source)
            b_dst, _ = self.fixed_points(target)
            cached = solve_columns(b_dst, self.action[g] * b_src)
            if cached is None:
                raise MalformedPresentationError(f"{self.name}: {g} does not carry M^{sorted(source)} into M^{sorted(target)}")
            self._translated[key] = cached
        return cached

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class ModuleMap:
    """An equivariant homomorphism given on generator coordinates."""
    source: GroupModule
    target: GroupModule
    matrix: Matrix
    name: str = field(default="φ", compare=False)

    def violations(self) -> List[str]:
        if self.source.group != self.target.group:
            return [f"{self.name}: modules over different groups"]
        if not check_homomorphism(self.source.lattice, self.target.lattice, self.matrix):
            return [f"{self.name}: not a homomorphism {self.source} -> {self.target}"]
        rel = self.target.lattice.relations
        for g in self.source.group.elements:
            left = self.target.action[g] * self.matrix
            right = self.matrix * self.source.action[g]
            if not _same_modulo(left, right, rel):
                return [f"{self.name}: not equivariant at {g}"]
        return []


# ===== Abelian presheaves =====

class AbelianPresheaf(ABC):
    """Finitely presented abelian groups per object with integer restriction matrices.

    restriction(f) for f: V -> U is the matrix of K(U) -> K(V) on generator coordinates.
    """

    def __init__(self, site: SiteSpec, name: str):
        self.site = site
        self.name = name
        self._groups: Dict[str, PresentedGroup] = {}

    @abstractmethod
    def _build_group(self, obj: str) -> PresentedGroup:
        pass

    @abstractmethod
    def restriction(self, f: Morphism) -> Matrix:
        pass

    def group(self, obj: str) -> PresentedGroup:
        cached = self._groups.get(obj)
        if cached is None:
            cached = self._build_group(obj)
            self._groups[obj] = cached
        return cached

    def invariants(self, obj: str) -> AbelianInvariants:
        return self.group(obj).invariants()

    def violations(self, objects: Optional[Sequence[str]] = None) -> List[str]:
        """Identities, composition and relation-preservation on the snapshot."""
        cat = self.site.cat
        objs = self.site.objects() if objects is None else tuple(objects)
        found = []
        for a in objs:
            ka = self.group(a)
            if not _same_modulo(self.restriction(cat.identity(a)), eye(ka.generators), ka.relations):
                found.append(f"{self.name}: restriction along id_{a} is not the identity")
            for b in objs:
                for f in cat.hom(a, b):
                    if not check_homomorphism(self.group(b), ka, self.restriction(f)):
                        found.append(f"{self.name}: restriction along {cat.describe(f)} breaks relations")
                    for c in objs:
                        for g in cat.hom(b, c):
                            left = self.restriction(cat.compose(g, f))
                            right = self.restriction(f) * self.restriction(g)
                            if not _same_modulo(left, right, ka.relations):
                                found.append(f"{self.name}: not functorial along {cat.describe(g)} . {cat.describe(f)}")
                                return found
        return found

    def __repr__(self) -> str:
        return f"AbelianPresheaf({self.name})"


class FixedPointPresheaf(AbelianPresheaf):
    """X |-> Hom_G(X, M) = prod over orbits G/H of X of M^H."""

    def __init__(self, site: SiteSpec, module: GroupModule, name: Optional[str] = None):
        cat = site.cat
        if not isinstance(cat, GSetCategory):
            raise PreconditionError(f"{site.name} is not a category of finite G-sets")
        if cat.group != module.group:
            raise PreconditionError(f"{module.name} is a module over {module.group.name}, the site is over {cat.group.name}")
        super().__init__(site, name or f"Hom(-,{module.name})")
        self.cat = cat
        self.module = module

    def _subgroup(self, obj: str, p: int) -> FrozenSet[int]:
        return self.cat.types[self.cat.parse(obj)[p]].subgroup

    def _build_group(self, obj: str) -> PresentedGroup:
        parts = [self.module.fixed_points(self._subgroup(obj, p))[1] for p in range(self.cat.orbit_count(obj))]
        return PresentedGroup(sum(g.generators for g in parts), block_diagonal([g.relations for g in parts]))

    def _offsets(self, obj: str) -> List[int]:
        out, acc = [], 0
        for p in range(self.cat.orbit_count(obj)):
            out.append(acc)
            acc += self.module.fixed_points(self._subgroup(obj, p))[0].cols
        return out

    def blocks(self, obj: str) -> List[range]:
        """Generator positions of each orbit's M^H inside Hom_G(obj, M)."""
        offsets = self._offsets(obj) + [self.group(obj).generators]
        return [range(offsets[p], offsets[p + 1]) for p in range(self.cat.orbit_count(obj))]

    def restriction(self, f: Morphism) -> Matrix:
        cat = self.cat
        src_off, dst_off = self._offsets(f.source), self._offsets(f.target)
        m = zeros(self.group(f.source).generators, self.group(f.target).generators)
        for q, (p, c) in enumerate(f.key):
            # the base point of orbit q lands on rep_c . (p, 0)
            g = cat.types[cat.parse(f.target)[p]].representatives[c]
            block = self.module.translate(g, self._subgroup(f.target, p), self._subgroup(f.source, q))
            r, s = src_off[q], dst_off[p]
            m[r:r + block.rows, s:s + block.cols] = m[r:r + block.rows, s:s + block.cols] + block
        return m


class FreeAbelianPresheaf(AbelianPresheaf):
    """Z[F]: free on the sections of a set-valued presheaf."""

    def __init__(self, F: Presheaf, name: Optional[str] = None):
        super().__init__(F.site, name or f"Z[{F.name}]")
        self.base = F

    def _build_group(self, obj: str) -> PresentedGroup:
        return PresentedGroup.free(len(self.base.sections(obj)))

    def restriction(self, f: Morphism) -> Matrix:
        source = self.base.sections(f.source)
        position = {x: k for k, x in enumerate(source)}
        m = zeros(len(source), len(self.base.sections(f.target)))
        for j, x in enumerate(self.base.sections(f.target)):
            m[position[self.base.restrict(f, x)], j] = 1
        return m


@dataclass
class AbelianMap:
    """component(U): K(U) -> L(U) on generator coordinates."""
    source: AbelianPresheaf
    target: AbelianPresheaf
    component: Callable[[str], Matrix]
    name: str = "φ"

    def violations(self, objects: Optional[Sequence[str]] = None) -> List[str]:
        cat = self.source.site.cat
        objs = self.source.site.objects() if objects is None else tuple(objects)
        for a in objs:
            if not check_homomorphism(self.source.group(a), self.target.group(a), self.component(a)):
                return [f"{self.name}: component at {a} is not a homomorphism"]
            for b in objs:
                for f in cat.hom(a, b):
                    left = self.target.restriction(f) * self.component(b)
                    right = self.component(a) * self.source.restriction(f)
                    if not _same_modulo(left, right, self.target.group(a).relations):
                        return [f"{self.name}: not natural along {cat.describe(f)}"]
        return []


@dataclass
class ShortExactSequence:
    """0 -> A -> B -> C -> 0 given by its two maps."""
    first: AbelianMap
    second: AbelianMap
    name: str = "0→A→B→C→0"

    @property
    def terms(self) -> Tuple[AbelianPresheaf, AbelianPresheaf, AbelianPresheaf]:
        return self.first.source, self.first.target, self.second.target


# ===== Čech complexes =====

@dataclass(frozen=True)
class CohomologyGroup:
    degree: int
    free_rank: int = 0
    torsion: Tuple[int, ...] = ()

    @classmethod
    def of(cls, degree: int, invariants: AbelianInvariants) -> "CohomologyGroup":
        return cls(degree, invariants.free_rank, invariants.torsion)

    @property
    def invariants(self) -> AbelianInvariants:
        return AbelianInvariants(self.free_rank, self.torsion)

    def __str__(self) -> str:
        return str(self.invariants)


@dataclass(frozen=True)
class CechComplex:
    """C^0 -> ... -> C^max_degree; differentials[n] is C^n -> C^{n+1}.

    A normalized complex keeps only the cochains on non-degenerate simplices; kept[n] lists
    their positions among the generators of the full C^n.
    """
    family: Optional[CoveringFamily]
    groups: Tuple[PresentedGroup, ...] = field(repr=False)
    differentials: Tuple[Matrix, ...] = field(repr=False)
    tuples: Tuple[Tuple[Tuple[int, ...], ...], ...] = field(default=(), repr=False)
    name: str = field(default="Č", compare=False)
    kept: Tuple[Tuple[int, ...], ...] = field(default=(), repr=False)

    @property
    def max_degree(self) -> int:
        return len(self.groups) - 1

    @property
    def normalized(self) -> bool:
        return bool(self.kept)

    def ranks(self) -> List[int]:
        return [g.generators for g in self.groups]

    def restrict_rows(self, matrix: Matrix, degree: int) -> Matrix:
        """Rows of a full-C^degree matrix that survive normalization."""
        return matrix.extract(list(self.kept[degree]), list(range(matrix.cols))) if self.kept else matrix

    def restrict_columns(self, matrix: Matrix, degree: int) -> Matrix:
        return matrix.extract(list(range(matrix.rows)), list(self.kept[degree])) if self.kept else matrix
