"""
Cohomology Service - Čech complexes of covering families, cohomology by Smith normal form, the
bar-resolution oracle, comparison maps, colimits and the Čech colimit identity over a pro-site
"""
import random
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

from loguru import logger
from sympy import Matrix, eye, zeros

from src.config.settings import get_settings
from src.core.errors import (
    DegreeOutOfRangeError,
    MalformedPresentationError,
    MissingLimitError,
    OutOfBudgetError,
    PreconditionError,
    ViolationError,
)
from src.models.schemas.report import CheckResult
from src.services.cohom.abelian import (
    AbelianMap,
    AbelianPresheaf,
    CechComplex,
    CohomologyGroup,
    FixedPointPresheaf,
    FreeAbelianPresheaf,
    GroupModule,
    ModuleMap,
    ShortExactSequence,
)
from src.services.fincat.category import Cone, Diagram, Morphism
from src.services.fincat.group import FiniteGroup
from src.services.fincat.gset_category import GSetCategory
from src.services.pro import pro_service
from src.services.pro.pro_object import ProMorphism
from src.services.protop import protop_service
from src.services.protop.protop import ProCoveringAnswer, ProSite
from src.services.sheaf.presheaf import Presheaf
from src.services.site import site_service
from src.services.site.site import CoveringFamily, SiteSpec
from src.utils.integer_matrix import (
    PresentedGroup,
    Subquotient,
    block_diagonal,
    cohomology_subquotient,
    direct_limit,
    hstack,
    induced_map,
    preimage_lift,
    quotient_invariants,
    solve_columns,
    span_contains,
)

MAX_COCHAIN_RANK = 64  # normalized cochains per copy of M in the top bar degree


# ===== Coefficients =====

def fixed_point_presheaf(site: SiteSpec, module: GroupModule, name: Optional[str] = None) -> FixedPointPresheaf:
    problems = module.violations()
    if problems:
        raise MalformedPresentationError(problems[0])
    return FixedPointPresheaf(site, module, name)


def free_abelian(F: Presheaf) -> FreeAbelianPresheaf:
    return FreeAbelianPresheaf(F)


def module_map(phi: ModuleMap, source: FixedPointPresheaf, target: FixedPointPresheaf) -> AbelianMap:
    """Hom_G(-, M) -> Hom_G(-, N) induced by an equivariant M -> N, orbit by orbit."""
    problems = phi.violations()
    if problems:
        raise MalformedPresentationError(problems[0])
    cat = source.cat

    def component(obj: str) -> Matrix:
        blocks = []
        for t in cat.parse(obj):
            h = cat.types[t].subgroup
            b_src, _ = phi.source.fixed_points(h)
            b_dst, _ = phi.target.fixed_points(h)
            block = solve_columns(b_dst, phi.matrix * b_src)
            if block is None:
                raise MalformedPresentationError(f"{phi.name} does not preserve fixed points of {sorted(h)}")
            blocks.append(block)
        return block_diagonal(blocks)

    return AbelianMap(source, target, component, name=phi.name)


def module_sequence(site: SiteSpec, first: ModuleMap, second: ModuleMap) -> ShortExactSequence:
    """The sequence of fixed-point presheaves induced by A -> B -> C."""
    if first.target != second.source:
        raise MalformedPresentationError(f"{first.name} and {second.name} are not composable")
    a = fixed_point_presheaf(site, first.source)
    b = fixed_point_presheaf(site, first.target)
    c = fixed_point_presheaf(site, second.target)
    return ShortExactSequence(
        module_map(first, a, b), module_map(second, b, c),
        name=f"0→{first.source.name}→{first.target.name}→{second.target.name}→0",
    )


def standard_sequences(site: SiteSpec) -> List[ShortExactSequence]:
    """0→Z→Z→Z/2→0 by doubling, and 0→I_G→Z[G]→Z→0 for a nontrivial group."""
    cat = site.cat
    if not isinstance(cat, GSetCategory):
        raise PreconditionError(f"{site.name} is not a category of finite G-sets")
    group = cat.group
    Z, Z2 = GroupModule.trivial(group), GroupModule.trivial(group, 2)
    found = [module_sequence(site, ModuleMap(Z, Z, Matrix([[2]]), name="2"), ModuleMap(Z, Z2, Matrix([[1]]), name="mod 2"))]
    if group.order >= 2:
        found.append(module_sequence(site, *GroupModule.augmentation_maps(group)))
    return found


# ===== Exactness =====

def exactness_defects(
    a: PresentedGroup, b: PresentedGroup, c: PresentedGroup, alpha: Matrix, beta: Matrix
) -> Dict[str, str]:
    """Where 0 -> a -> b -> c -> 0 fails to be exact, keyed by position."""
    defects: Dict[str, str] = {}
    if not span_contains(a.relations, preimage_lift(alpha, b.relations)):
        defects["left"] = "not injective"
    if not span_contains(c.relations, beta * alpha):
        defects["composite"] = "the composite is not zero"
    if not span_contains(hstack(b.generators, [alpha, b.relations]), preimage_lift(beta, c.relations)):
        defects["middle"] = "the kernel is larger than the image"
    image = hstack(c.generators, [beta, c.relations])
    if not span_contains(image, eye(c.generators)):
        defects["right"] = f"cokernel {quotient_invariants(image, c.generators)}"
    return defects


def _locally_surjective(seq: ShortExactSequence, obj: str) -> bool:
    """Some covering morphism e: V -> obj carries every section of C(obj) into the image of B(V)."""
    _, _, C = seq.terms
    for e in site_service.covering_morphisms_onto(C.site, obj):
        v = C.group(e.source)
        if span_contains(hstack(v.generators, [seq.second.component(e.source), v.relations]), C.restriction(e)):
            return True
    return False


def sequence_violations(seq: ShortExactSequence, objects: Optional[Sequence[str]] = None) -> List[str]:
    """Exactness as sheaves: section-wise left exact and locally surjective."""
    A, B, C = seq.terms
    objs = A.site.objects() if objects is None else tuple(objects)
    found: List[str] = []
    for obj in objs:
        defects = exactness_defects(
            A.group(obj), B.group(obj), C.group(obj), seq.first.component(obj), seq.second.component(obj)
        )
        found.extend(f"{seq.name} at {obj}: {text}" for key, text in defects.items() if key != "right")
        if "right" in defects and not _locally_surjective(seq, obj):
            found.append(f"{seq.name} at {obj}: not locally surjective, {defects['right']}")
    return found


# ===== Čech complexes =====

def _wide_pullback(s: SiteSpec, legs: Sequence[Morphism]) -> Cone:
    cone = s.cat.limit(Diagram.wide_cospan(legs))
    if cone is None:
        raise MissingLimitError(f"no fiber product of {len(legs)} members over {legs[0].target}")
    return cone


def _kept_generators(K: AbelianPresheaf, apex: str, legs: Sequence[Morphism], tup: Tuple[int, ...]) -> List[int]:
    """Positions in K(apex) over orbits that no degeneracy hits.

    A simplex is degenerate when two consecutive entries name the same member and the same point.
    Only fixed-point presheaves split by orbit; any other K keeps every position.
    """
    if not isinstance(K, FixedPointPresheaf):
        return list(range(K.group(apex).generators))
    cat = K.cat
    kept: List[int] = []
    for p, block in enumerate(K.blocks(apex)):
        images = [cat.apply(leg, (p, 0)) for leg in legs]
        if any(tup[i] == tup[i + 1] and images[i] == images[i + 1] for i in range(len(tup) - 1)):
            continue
        kept.extend(block)
    return kept


def _restrict_group(g: PresentedGroup, kept: Sequence[int]) -> PresentedGroup:
    inside = set(kept)
    rel = g.relations
    cols = [j for j in range(rel.cols) if all(rel[i, j] == 0 for i in range(rel.rows) if i not in inside)]
    return PresentedGroup(len(kept), rel.extract(list(kept), cols))


def _verify_square_zero(groups: Sequence[PresentedGroup], differentials: Sequence[Matrix], name: str) -> None:
    for n in range(len(differentials) - 1):
        if not span_contains(groups[n + 2].relations, differentials[n + 1] * differentials[n]):
            raise MalformedPresentationError(f"{name}: d∘d is not zero at degree {n}")


def _assemble(
    family: Optional[CoveringFamily],
    full: Sequence[PresentedGroup],
    differentials: Sequence[Matrix],
    kept: Sequence[Sequence[int]],
    tuples: Tuple,
    name: str,
) -> CechComplex:
    """The complex on the full cochains, or on the kept ones when `kept` is given."""
    if not kept:
        _verify_square_zero(full, differentials, name)
        return CechComplex(family, tuple(full), tuple(differentials), tuples, name)
    groups = [_restrict_group(g, k) for g, k in zip(full, kept)]
    restricted = []
    for n, d in enumerate(differentials):
        surviving = set(kept[n + 1])
        dropped = [i for i in range(d.rows) if i not in surviving]
        if any(v != 0 for v in d.extract(dropped, list(kept[n]))):
            raise MalformedPresentationError(f"{name}: d carries a normalized cochain onto a degenerate simplex")
        restricted.append(d.extract(list(kept[n + 1]), list(kept[n])))
    _verify_square_zero(groups, restricted, name)
    return CechComplex(family, tuple(groups), tuple(restricted), tuples, name, tuple(tuple(k) for k in kept))


def cech_complex(
    K: AbelianPresheaf, f: CoveringFamily, max_degree: Optional[int] = None, normalized: bool = True
) -> CechComplex:
    """C^n = prod over (n+1)-tuples of members of K(V_w0 x_U ... x_U V_wn), alternating face sums.

    The normalized complex drops cochains on degenerate simplices; it has the same cohomology.
    """
    top = get_settings().CECH_MAX_DEGREE if max_degree is None else max_degree
    if top < 1:
        raise DegreeOutOfRangeError(f"a Čech complex needs max_degree >= 1, got {top}")
    s = K.site
    cat = s.cat
    members = f.members
    cones: Dict[Tuple[int, ...], Cone] = {}

    def cone_of(tup: Tuple[int, ...]) -> Cone:
        if tup not in cones:
            try:
                cones[tup] = _wide_pullback(s, [members[w] for w in tup])
            except OutOfBudgetError as exc:
                raise OutOfBudgetError(f"Čech nerve of {f.target} at {tup}: {exc}") from exc
        return cones[tup]

    tuples = [tuple(product(range(len(members)), repeat=n + 1)) for n in range(top + 1)]
    full, offsets, kept = [], [], []
    for level in tuples:
        parts = [K.group(cone_of(t).apex) for t in level]
        offs = _offsets(level, parts)
        offsets.append(offs)
        full.append(PresentedGroup(sum(g.generators for g in parts), block_diagonal([g.relations for g in parts])))
        if normalized:
            kept.append([
                offs[t] + i for t in level for i in _kept_generators(K, cone_of(t).apex, cone_of(t).legs[:-1], t)
            ])

    differentials = []
    for n in range(top):
        d = zeros(full[n + 1].generators, full[n].generators)
        for t in tuples[n + 1]:
            cone = cone_of(t)
            for k in range(len(t)):
                face = t[:k] + t[k + 1:]
                legs = [leg for i, leg in enumerate(cone.legs[:-1]) if i != k] + [cone.legs[-1]]
                delta = cat.factor_through_limit(cone_of(face), cone.apex, legs)
                block = K.restriction(delta)
                r, c = offsets[n + 1][t], offsets[n][face]
                d[r:r + block.rows, c:c + block.cols] = d[r:r + block.rows, c:c + block.cols] + (-1) ** k * block
        differentials.append(d)
    complex_ = _assemble(f, full, differentials, kept, tuple(tuples), f"Č({f.target};{K.name})")
    logger.debug(f"{complex_.name}: ranks {complex_.ranks()}")
    return complex_


def _offsets(keys: Sequence, parts: Sequence[PresentedGroup]) -> Dict:
    out, acc = {}, 0
    for key, g in zip(keys, parts):
        out[key] = acc
        acc += g.generators
    return out


def _subquotient(c: CechComplex, degree: int) -> Subquotient:
    if not 0 <= degree < c.max_degree:
        raise DegreeOutOfRangeError(f"{c.name} was built to degree {c.max_degree}; H^{degree} needs degree {degree + 1}")
    return cohomology_subquotient(c.groups, c.differentials, degree)


def cohomology(c: CechComplex, degree: int) -> CohomologyGroup:
    return CohomologyGroup.of(degree, _subquotient(c, degree).invariants())


def cohomology_sequence(c: CechComplex, degrees: Optional[Sequence[int]] = None) -> List[CohomologyGroup]:
    return [cohomology(c, j) for j in (range(c.max_degree) if degrees is None else degrees)]


def induced_cohomology_map(source: CechComplex, target: CechComplex, chain_map: Sequence[Matrix], degree: int) -> Matrix:
    """H^degree(source) -> H^degree(target) in subquotient coordinates."""
    return induced_map(_subquotient(source, degree), _subquotient(target, degree), chain_map[degree])


def cech_chain_map(
    K: AbelianPresheaf, lower: CechComplex, upper: CechComplex, v: Morphism, u: Morphism
) -> List[Matrix]:
    """Č(upper) -> Č(lower) for one-member families and a square upper . v == u . lower."""
    cat = K.site.cat
    f_low, f_up = lower.family.members[0], upper.family.members[0]
    if cat.compose(f_up, v) != cat.compose(u, f_low):
        raise ViolationError("the level square does not commute")
    maps = []
    for n in range(min(lower.max_degree, upper.max_degree) + 1):
        low = _wide_pullback(K.site, [f_low] * (n + 1))
        up = _wide_pullback(K.site, [f_up] * (n + 1))
        legs = [cat.compose(v, leg) for leg in low.legs[:-1]] + [cat.compose(u, low.legs[-1])]
        full = K.restriction(cat.factor_through_limit(up, low.apex, legs))
        # simplicial maps keep degenerate simplices degenerate
        maps.append(lower.restrict_rows(upper.restrict_columns(full, n), n))
    return maps


# ===== The bar-resolution oracle =====

def bar_complex(group: FiniteGroup, module: GroupModule, max_degree: int, normalized: bool = True) -> CechComplex:
    """Inhomogeneous cochains Maps(G^n, M) with the standard coboundary.

    Normalized cochains vanish on every tuple with an identity entry, so only those tuples are dropped
    along with the coboundary terms landing on them.
    """
    problems = module.violations()
    if problems:
        raise MalformedPresentationError(problems[0])
    r = module.rank
    elements = [g for g in group.elements if g != 0] if normalized else list(group.elements)
    tuples = [tuple(product(elements, repeat=n)) for n in range(max_degree + 1)]
    groups = [
        PresentedGroup(r * len(level), block_diagonal([module.lattice.relations] * len(level)))
        for level in tuples
    ]
    differentials = []
    for n in range(max_degree):
        pos = {t: k * r for k, t in enumerate(tuples[n])}
        d = zeros(groups[n + 1].generators, groups[n].generators)
        for row, sigma in enumerate(tuples[n + 1]):
            terms = [(sigma[1:], module.action[sigma[0]])]
            for i in range(1, n + 1):
                merged = sigma[:i - 1] + (group.mul(sigma[i - 1], sigma[i]),) + sigma[i + 1:]
                terms.append((merged, (-1) ** i * eye(r)))
            terms.append((sigma[:-1], (-1) ** (n + 1) * eye(r)))
            for tau, block in terms:
                c = pos.get(tau)
                if c is None:
                    continue
                d[row * r:row * r + r, c:c + r] = d[row * r:row * r + r, c:c + r] + block
        differentials.append(d)
    name = f"Bar({group.name};{module.name})"
    _verify_square_zero(groups, differentials, name)
    return CechComplex(None, tuple(groups), tuple(differentials), name=name)


def bar_oracle(group: FiniteGroup, module: GroupModule, degree: int) -> CohomologyGroup:
    if degree < 0:
        raise DegreeOutOfRangeError(f"negative degree {degree}")
    return cohomology(bar_complex(group, module, degree + 1), degree)


# ===== Presentation independence =====

def random_unimodular(n: int, rng: random.Random, moves: int = 12) -> Matrix:
    m = eye(n)
    if n == 0:
        return m
    for _ in range(moves):
        i, j = rng.randrange(n), rng.randrange(n)
        if i == j:
            m[i, :] = -m[i, :]
        else:
            m[i, :] = m[i, :] + rng.choice((-2, -1, 1, 2)) * m[j, :]
    return m


def rebase(c: CechComplex, bases: Sequence[Matrix]) -> CechComplex:
    """The same complex after the change of basis x |-> bases[n] x on every C^n."""
    groups = tuple(PresentedGroup(g.generators, p * g.relations) for g, p in zip(c.groups, bases))
    inverses = [p if p.rows == 0 else p.inv() for p in bases]
    differentials = tuple(bases[n + 1] * d * inverses[n] for n, d in enumerate(c.differentials))
    return CechComplex(c.family, groups, differentials, c.tuples, name=f"{c.name}'")


def check_presentation_independence(c: CechComplex, seed: Optional[int] = None) -> CheckResult:
    seed = get_settings().DEFAULT_SEED if seed is None else seed
    rng = random.Random(seed)
    moved = rebase(c, [random_unimodular(g.generators, rng) for g in c.groups])
    failures = []
    for j in range(c.max_degree):
        before, after = cohomology(c, j), cohomology(moved, j)
        if before != after:
            failures.append(f"{c.name}: H^{j} is {before} before and {after} after a change of basis")
    return CheckResult.from_findings(
        "cohom.presentation-independence", failures, checked=c.max_degree, scope=f"seed={seed}"
    )


# ===== Suite checks =====

def orbit_covering(site: SiteSpec) -> CoveringFamily:
    """{G -> *} on a site of finite G-sets."""
    cat = site.cat
    if not isinstance(cat, GSetCategory):
        raise PreconditionError(f"{site.name} is not a category of finite G-sets")
    free = next(t for t in cat.types if len(t.subgroup) == 1)
    point = cat.terminal()
    return CoveringFamily(point, (cat.hom(free.label, point)[0],))


def bar_degree_cap(group: FiniteGroup, wanted: int, normalized: bool = True) -> int:
    """Largest max_degree <= wanted whose top cochain group stays within MAX_COCHAIN_RANK copies of M
    and whose orbit-covering nerve stays within the G-set reach."""
    per_entry = group.order - 1 if normalized else group.order
    reach = get_settings().REACH
    top = 1
    while top < wanted and per_entry ** (top + 1) <= MAX_COCHAIN_RANK and group.order ** (top + 1) <= reach:
        top += 1
    return top


def check_cech_against_bar(
    site: SiteSpec, modules: Optional[Sequence[GroupModule]] = None, max_degree: Optional[int] = None
) -> CheckResult:
    """Ȟ^j({G -> *}, Hom_G(-, M)) equals the bar cohomology H^j(G, M) degree by degree."""
    cat = site.cat
    if not isinstance(cat, GSetCategory):
        return CheckResult.from_findings(
            "cohom.cech-bar", [], [f"{site.name} is not a category of finite G-sets"], scope="site"
        )
    group = cat.group
    wanted = get_settings().CECH_MAX_DEGREE if max_degree is None else max_degree
    top = bar_degree_cap(group, wanted)
    mods = list(modules) if modules is not None else [GroupModule.trivial(group), GroupModule.trivial(group, 2)]
    fam = orbit_covering(site)
    failures, unverified, checked = [], [], 0
    for M in mods:
        try:
            cech = cech_complex(fixed_point_presheaf(site, M), fam, top)
            bar = bar_complex(group, M, top)
        except (OutOfBudgetError, MissingLimitError) as exc:
            unverified.append(f"{M.name}: {exc}")
            continue
        for j in range(top):
            left, right = cohomology(cech, j), cohomology(bar, j)
            checked += 1
            if left != right:
                failures.append(f"{M.name}: Čech H^{j} = {left} but bar H^{j} = {right}")
        logger.debug(f"{site.name}: Ȟ(G→*, {M.name}) = {[str(cohomology(cech, j)) for j in range(top)]}")
    if top < wanted:
        unverified.append(f"degrees {top}..{wanted - 1} exceed the cochain cap for |G| = {group.order}")
    return CheckResult.from_findings(
        "cohom.cech-bar", failures, unverified, checked, scope=f"degrees=0..{top - 1} modules={len(mods)}"
    )


def orbit_cohomology(site: SiteSpec, max_degree: Optional[int] = None) -> List[Tuple[CohomologyGroup, CohomologyGroup]]:
    """(Ȟ^j({G -> *}, Z), H^j(G, Z)) for j below the capped degree."""
    fam = orbit_covering(site)
    group = site.cat.group
    wanted = get_settings().CECH_MAX_DEGREE if max_degree is None else max_degree
    top = bar_degree_cap(group, wanted)
    Z = GroupModule.trivial(group)
    cech = cech_complex(fixed_point_presheaf(site, Z), fam, top)
    bar = bar_complex(group, Z, top)
    return [(cohomology(cech, j), cohomology(bar, j)) for j in range(top)]


def check_orbit_cohomology(site: SiteSpec, max_degree: Optional[int] = None) -> CheckResult:
    """The integral cohomology of the orbit covering, printed degree by degree next to the oracle."""
    check_id = "cohom.orbit-covering"
    if not isinstance(site.cat, GSetCategory):
        return CheckResult.from_findings(check_id, [], [f"{site.name} is not a category of finite G-sets"], scope="site")
    name = site.cat.group.name
    try:
        pairs = orbit_cohomology(site, max_degree)
    except (OutOfBudgetError, MissingLimitError) as exc:
        return CheckResult.from_findings(check_id, [], [str(exc)], scope=f"G={name}")
    failures = [
        f"H^{j}({name},Z): Čech gives {cech} but the bar oracle gives {bar}"
        for j, (cech, bar) in enumerate(pairs)
        if cech != bar
    ]
    values = " ".join(f"H^{j}({name},Z)={cech}" for j, (cech, _) in enumerate(pairs))
    return CheckResult.from_findings(check_id, failures, checked=len(pairs), scope=values)


def check_h0_equalizer(K: AbelianPresheaf, families: Sequence[CoveringFamily]) -> CheckResult:
    """For a sheaf K, Ȟ^0(f, K) = K(U) and K(U) -> C^0 lands in the cycles."""
    failures, unverified, checked = [], [], 0
    for fam in families:
        try:
            c = cech_complex(K, fam, 1)
            restrictions = [K.restriction(m) for m in fam.members]
        except (OutOfBudgetError, MissingLimitError) as exc:
            unverified.append(f"{fam.target}: {exc}")
            continue
        checked += 1
        rho = Matrix.vstack(*restrictions) if restrictions else zeros(0, K.group(fam.target).generators)
        if not span_contains(c.groups[1].relations, c.differentials[0] * rho):
            failures.append(f"{K.name}({fam.target}) does not restrict to cocycles")
            continue
        h0, ku = cohomology(c, 0), CohomologyGroup.of(0, K.invariants(fam.target))
        if h0 != ku:
            failures.append(f"{K.name}: Ȟ^0 over {fam.target} is {h0}, sections are {ku}")
    return CheckResult.from_findings("cohom.h0-equalizer", failures, unverified, checked, scope=f"families={len(families)}")


# ===== The Čech colimit identity over a pro-site =====

def pro_cech_complex(
    ps: ProSite, K: AbelianPresheaf, f: ProMorphism, max_degree: int, normalized: bool = True
) -> CechComplex:
    """Čech complex of π*K along a pro-morphism.

    π*K(W) is the colimit of K over W's index; the index has a bottom, so the colimit is K at the
    bottom level and the coboundary restricts along bottom germs.
    """
    cat = ps.cat
    V, U = f.source, f.target
    limits = []
    for n in range(max_degree + 1):
        nodes = [V] * (n + 1) + [U]
        arrows = [(k, n + 1, f) for k in range(n + 1)]
        limits.append(pro_service.pro_finite_limits(cat, nodes, arrows, name=f"V^{n + 1}"))

    apexes = [lim.pro(lim.pro.bottom) for lim in limits]
    full = [K.group(apex) for apex in apexes]
    kept = [
        _kept_generators(K, apex, [leg.at_bottom for leg in lim.legs[:-1]], (0,) * (n + 1))
        for n, (apex, lim) in enumerate(zip(apexes, limits))
    ] if normalized else []

    differentials = []
    for n in range(max_degree):
        upper, lower = limits[n + 1], limits[n]
        d = zeros(full[n + 1].generators, full[n].generators)
        for k in range(n + 2):
            legs = [leg for i, leg in enumerate(upper.legs[:-1]) if i != k] + [upper.legs[-1]]
            delta = pro_service.pro_pullback_pairing(lower, legs)
            d += (-1) ** k * K.restriction(delta.at_bottom)
        differentials.append(d)
    return _assemble(None, full, differentials, kept, (), f"Č({U.label};π*{K.name})")


def cech_colim_check(
    ps: ProSite, K: AbelianPresheaf, f: ProMorphism, degrees: Optional[Sequence[int]] = None
) -> CheckResult:
    """colim over covering levels of Ȟ^j(f_i, K) against Ȟ^j(f, π*K), degree by degree."""
    degs = list(range(3) if degrees is None else degrees)
    top = max(degs) + 1
    verdict = protop_service.is_pro_covering(ps, f)
    if verdict.answer == ProCoveringAnswer.UNKNOWN:
        return CheckResult.from_findings("cohom.cech-colim", [], [verdict.reason], scope=f"target={f.target.label}")
    if verdict.answer == ProCoveringAnswer.NO:
        raise PreconditionError(f"{f.source.label} -> {f.target.label} is not pro-covering: {verdict.reason}")

    failures, unverified, checked = [], [], 0
    try:
        lm = pro_service.level_morphism(f)
        levels = [t for t, _ in verdict.levels]
        complexes = {
            t: cech_complex(K, CoveringFamily(g.target, (g,)), top) for t, g in verdict.levels
        }
        pairs = [(s, t) for s in levels for t in levels if s != t and lm.index.leq(s, t)]
        chain_maps = {
            (s, t): cech_chain_map(
                K, complexes[s], complexes[t], lm.reindex.transition(0, s, t), lm.reindex.transition(1, s, t)
            )
            for s, t in pairs
        }
        pro_side = pro_cech_complex(ps, K, f, top)
    except (OutOfBudgetError, MissingLimitError) as exc:
        return CheckResult.from_findings("cohom.cech-colim", [], [str(exc)], scope=f"target={f.target.label}")

    pos = {t: k for k, t in enumerate(levels)}
    for j in degs:
        subs = {t: _subquotient(complexes[t], j) for t in levels}
        arrows = [(pos[t], pos[s], induced_map(subs[t], subs[s], chain_maps[(s, t)][j])) for s, t in pairs]
        colim = CohomologyGroup.of(j, direct_limit([subs[t].as_group() for t in levels], arrows).invariants())
        pro = cohomology(pro_side, j)
        checked += 1
        if colim != pro:
            failures.append(f"degree {j}: colimit of levels is {colim}, pro-level Čech is {pro}")
    logger.info(f"{ps.name}: Čech colimit over {len(levels)} levels of {f.target.label}, degrees {degs}")
    return CheckResult.from_findings(
        "cohom.cech-colim", failures, unverified, checked, scope=f"levels={len(levels)} degrees={degs}"
    )
