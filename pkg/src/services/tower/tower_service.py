"""
Tower Service - transfinite composition, pullback towers, concatenation, products, transfinite checks,
splittings over weakly contractible bases and the refinement of sheaf towers by site towers
"""
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from loguru import logger

from src.config.settings import get_settings
from src.core.errors import (
    ConstructionFailedError,
    MissingLimitError,
    OutOfBudgetError,
    PreconditionError,
    ViolationError,
    WorkbenchError,
)
from src.models.schemas.report import CheckResult
from src.services.fincat.category import Morphism
from src.services.sheaf import sheaf_service
from src.services.sheaf.presheaf import Presheaf, Section, SheafMorphism
from src.services.site import site_service
from src.services.site.site import CoveringFamily, SiteSpec
from src.services.tower.tower import (
    ALL_MARKERS,
    CategoryAmbient,
    Pullback,
    SheafAmbient,
    Step,
    StepMarker,
    Tower,
    TowerMorphism,
)

Splitter = Callable[[SheafMorphism], Optional[SheafMorphism]]


# ===== Tower calculus =====

def transfinite_composition(t: Tower) -> Step:
    """F_{<n} -> F_0; a one-stage tower gives the identity of its stage."""
    if not t.stages:
        raise PreconditionError(f"tower {t.name} is empty")
    return t.transition(t.length - 1, 0)


def pullback_tower(t: Tower, p0: Step, mu: int = 0) -> Tuple[Tower, TowerMorphism]:
    """E_i = E_0 for i <= mu and E_0 x_{F_mu} F_i above, with the natural map E -> t.

    p0 goes E_0 -> F_mu.
    """
    amb = t.ambient
    if not 0 <= mu < t.length:
        raise PreconditionError(f"stage {mu} is outside tower {t.name} of length {t.length}")
    if not amb.same_stage(amb.target(p0), t.stages[mu]):
        raise PreconditionError(f"the base change map does not land in stage {mu} of {t.name}")
    e0 = amb.source(p0)
    stages, components = [], []
    squares: Dict[int, Pullback] = {}
    for i in range(t.length):
        if i <= mu:
            stages.append(e0)
            components.append(amb.compose(t.transition(mu, i), p0))
            continue
        try:
            square = amb.fiber_product(p0, t.transition(i, mu))
        except MissingLimitError as exc:
            raise MissingLimitError(f"pullback tower of {t.name}: stage {i}: {exc}") from exc
        squares[i] = square
        stages.append(square.apex)
        components.append(square.second)
    steps = []
    for i in range(t.length - 1):
        if i + 1 <= mu:
            steps.append(amb.identity(e0))
        elif i == mu:
            steps.append(squares[i + 1].first)
        else:
            upper = squares[i + 1]
            steps.append(amb.pair(squares[i], upper.first, amb.compose(t.steps[i], upper.second)))
    markers = tuple(ALL_MARKERS if i < mu else t.markers[i] for i in range(t.length - 1))
    pulled = Tower(amb, tuple(stages), tuple(steps), markers, name=f"pb({t.name})")
    return pulled, TowerMorphism(pulled, t, tuple(components))


def concatenate(f: Tower, g: Tower, glue: Optional[Step] = None) -> Tower:
    """f followed by g, where glue: G_0 -> F_{<n} is an isomorphism (the identity by default)."""
    amb = f.ambient
    if not f.stages or not g.stages:
        raise PreconditionError("concatenation needs two non-empty towers")
    if glue is None:
        if not amb.same_stage(g.stages[0], f.last):
            raise PreconditionError(f"{g.name} does not start at the last stage of {f.name}")
        glue = amb.identity(f.last)
    elif not amb.same_stage(amb.source(glue), g.stages[0]) or not amb.same_stage(amb.target(glue), f.last):
        raise PreconditionError(f"the gluing map does not go from {g.name} to the end of {f.name}")
    elif not amb.is_iso(glue):
        raise PreconditionError(f"the gluing map from {g.name} to the end of {f.name} is not an isomorphism")
    return Tower(
        amb,
        f.stages + g.stages,
        f.steps + (glue,) + g.steps,
        f.markers + (ALL_MARKERS,) + g.markers,
        name=f"{f.name}+{g.name}",
    )


def splice(f: Tower, g: Tower) -> Tower:
    """f then g sharing the stage F_{<n} = G_0, so no gluing step is inserted."""
    amb = f.ambient
    if not f.stages or not g.stages:
        raise PreconditionError("splicing needs two non-empty towers")
    if not amb.same_stage(g.stages[0], f.last):
        raise PreconditionError(f"{g.name} does not start at the last stage of {f.name}")
    return Tower(amb, f.stages + g.stages[1:], f.steps + g.steps, f.markers + g.markers, name=f"{f.name}+{g.name}")


def odot_product(
    f: Tower,
    g: Tower,
    odot: Optional[Callable[[object, object], Pullback]] = None,
) -> Tower:
    """Stages F_k (.) G_k, with a tower held at its last stage once it runs out; length max(n, m).

    (.) is the ambient's categorical product unless `odot` supplies another limit-preserving
    bifunctor as a product-like square.
    """
    amb = f.ambient
    if not f.stages or not g.stages:
        raise PreconditionError("the product of towers needs two non-empty towers")
    combine = odot or amb.product
    n = max(f.length, g.length)

    def at(t: Tower, k: int) -> int:
        return min(k, t.length - 1)

    squares = [combine(f.stages[at(f, k)], g.stages[at(g, k)]) for k in range(n)]
    steps, markers = [], []
    for k in range(n - 1):
        left = f.transition(at(f, k + 1), at(f, k))
        right = g.transition(at(g, k + 1), at(g, k))
        upper = squares[k + 1]
        steps.append(amb.pair(squares[k], amb.compose(left, upper.first), amb.compose(right, upper.second)))
        flags = ALL_MARKERS
        if k + 1 < f.length:
            flags = flags & f.markers[k]
        if k + 1 < g.length:
            flags = flags & g.markers[k]
        markers.append(flags)
    return Tower(amb, tuple(s.apex for s in squares), tuple(steps), tuple(markers), name=f"{f.name}⊙{g.name}")


# ===== Transfinite checks =====

def check_topos_transfinite(site: SiteSpec, towers: Sequence[Tower], check_id: str = "tower.topos-transfinite") -> CheckResult:
    """Every epi-marked step is epi and every transfinite composition is epi, on the supplied towers."""
    failures: List[str] = []
    unverified: List[str] = []
    checked = 0
    for t in towers:
        try:
            bad = [
                f"{t.name}: step {i + 1} is marked epi but is not"
                for i in t.marked(StepMarker.EPI)
                if not sheaf_service.is_epi_sheaf(t.steps[i])
            ]
            failures.extend(bad)
            if not bad and not sheaf_service.is_epi_sheaf(transfinite_composition(t)):
                failures.append(f"{t.name}: transfinite composition is not epi")
            checked += 1
        except OutOfBudgetError as exc:
            unverified.append(f"{t.name}: {exc}")
    logger.info(f"{site.name}: {check_id} over {len(towers)} towers")
    return CheckResult.from_findings(check_id, failures, unverified, checked, scope=f"towers={len(towers)}")


def check_site_transfinite(site: SiteSpec, towers: Sequence[Tower], check_id: str = "tower.site-transfinite") -> CheckResult:
    """Covering-marked steps cover and so does every transfinite composition."""
    failures: List[str] = []
    unverified: List[str] = []
    checked = 0
    for t in towers:
        try:
            bad = [
                f"{t.name}: step {i + 1} is marked covering but does not cover"
                for i in t.marked(StepMarker.COVERING)
                if not site_service.is_covering_morphism(site, t.steps[i])
            ]
            failures.extend(bad)
            if not bad and not site_service.is_covering_morphism(site, transfinite_composition(t)):
                failures.append(f"{t.name}: transfinite composition does not cover")
            checked += 1
        except OutOfBudgetError as exc:
            unverified.append(f"{t.name}: {exc}")
    logger.info(f"{site.name}: {check_id} over {len(towers)} towers")
    return CheckResult.from_findings(check_id, failures, unverified, checked, scope=f"towers={len(towers)}")


# ===== Splittings =====

@dataclass(frozen=True)
class Splitting:
    tower: Tower
    section: SheafMorphism
    partial: Tuple[SheafMorphism, ...]


def representable_splitter(site: SiteSpec, W: str) -> Splitter:
    """Sections of maps onto y(W), found through Yoneda as an element over W hitting id_W."""
    ident = site.cat.identity(W)

    def split(phi: SheafMorphism) -> Optional[SheafMorphism]:
        X = phi.source
        for x in X.sections(W):
            if phi(W, x) == ident:
                return SheafMorphism(phi.target, X, lambda V, h, x=x: X.restrict(h, x), name=f"s_{W}")
        return None

    return split


def split_tower_over_contractible(t: Tower, splitter: Splitter) -> Splitting:
    """A section of the transfinite composition built stage by stage.

    s_{i+1} splits the base change of step i+1 along s_i; the final section composes
    back to the identity of F_0.
    """
    amb = t.ambient
    if not t.stages:
        raise PreconditionError(f"tower {t.name} is empty")
    base = t.stages[0]
    section = amb.identity(base)
    partial = [section]
    for i, step in enumerate(t.steps):
        square = amb.fiber_product(section, step)
        split = splitter(square.first)
        if split is None or not amb.same(amb.compose(square.first, split), amb.identity(base)):
            raise ConstructionFailedError(f"{t.name}: no splitting of step {i + 1} over {amb.label(base)}", step=i + 1)
        section = amb.compose(square.second, split)
        partial.append(section)
    if not amb.same(amb.compose(transfinite_composition(t), section), amb.identity(base)):
        raise ConstructionFailedError(f"{t.name}: the assembled section does not split", step=t.length - 1)
    logger.debug(f"split {t.name} over {amb.label(base)} in {t.length - 1} steps")
    return Splitting(t, section, tuple(partial))


# ===== Refinement by site towers =====

@dataclass(frozen=True)
class Refinement:
    """A covering-marked site tower, its Yoneda image and the map from that image to the sheaf tower."""
    site_tower: Tower
    yoneda_tower: Tower
    morphism: TowerMorphism


def element_map(F: Presheaf, x: Section, representable: Presheaf) -> SheafMorphism:
    """y(C) -> F classifying x in F(C)."""
    return SheafMorphism(representable, F, lambda V, h: F.restrict(h, x), name=f"[{x!r}]")


def representable_tower(
    site: SiteSpec,
    base: str,
    steps: Sequence[Morphism],
    marker: Sequence[StepMarker] = (),
    ambient: Optional[SheafAmbient] = None,
    name: str = "",
) -> Tower:
    """The Yoneda image of a site tower C_0 <- C_1 <- ...; steps[i] goes C_{i+1} -> C_i."""
    cat = site.cat
    objects = [base] + [f.source for f in steps]
    reps = [sheaf_service.yoneda(site, c) for c in objects]
    maps = [
        SheafMorphism(reps[i + 1], reps[i], lambda V, h, f=f: cat.compose(f, h), name=f"y({cat.describe(f)})")
        for i, f in enumerate(steps)
    ]
    return Tower.of(ambient or SheafAmbient(site), reps, maps, marker, name=name or "y(" + ",".join(objects) + ")")


def _covering_subfamily(
    site: SiteSpec, target: str, candidates: Sequence[Tuple[str, Morphism, Section]], max_size: int
) -> Optional[Tuple[Tuple[str, Morphism, Section], ...]]:
    for size in range(1, max_size + 1):
        for chosen in combinations(candidates, size):
            if site_service.is_covering_family(site, CoveringFamily(target, tuple(h for _, h, _ in chosen))):
                return chosen
    return None


def refine_sheaf_tower(
    site: SiteSpec,
    t: Tower,
    start: Tuple[str, Section],
    max_family_size: Optional[int] = None,
) -> Refinement:
    """Cover each stage by a representable, pulling back one step at a time.

    `start` is (C_0, x_0) with x_0 in F_0(C_0) classifying an epi y(C_0) -> F_0. At each step the
    pullback of y(C_i) along F_{i+1} -> F_i is covered by a smallest finite family, whose
    coproduct becomes C_{i+1}.
    """
    max_size = get_settings().MAX_FAMILY_SIZE if max_family_size is None else max_family_size
    cat = site.cat
    amb = t.ambient
    if not isinstance(amb, SheafAmbient):
        raise PreconditionError(f"tower {t.name} does not live in a sheaf snapshot")
    for i, step in enumerate(t.steps):
        if not sheaf_service.is_epi_sheaf(step, amb.objects):
            raise PreconditionError(f"{t.name}: step {i + 1} is not an epimorphism")
    c0, x0 = start
    y0 = sheaf_service.yoneda(site, c0)
    pi0 = element_map(t.stages[0], x0, y0)
    if not sheaf_service.is_epi_sheaf(pi0, amb.objects):
        raise PreconditionError(f"{x0!r} over {c0} does not cover {amb.label(t.stages[0])}")

    objects, elements, site_steps = [c0], [x0], []
    for i, step in enumerate(t.steps):
        ci, xi = objects[-1], elements[-1]
        upper, lower = t.stages[i + 1], t.stages[i]
        candidates = [
            (d, h, z)
            for d in amb.objects
            for h in cat.hom(d, ci)
            for z in upper.sections(d)
            if step(d, z) == lower.restrict(h, xi)
        ]
        chosen = _covering_subfamily(site, ci, candidates, max_size)
        if chosen is None:
            raise OutOfBudgetError(f"{t.name}: no family of at most {max_size} members covers {ci} at step {i + 1}")
        cocone = cat.coproduct([d for d, _, _ in chosen])
        if cocone is None:
            raise OutOfBudgetError(f"{t.name}: the coproduct of the chosen family over {ci} is out of scope")
        copair = cat.factor_through_coproduct(cocone, ci, [h for _, h, _ in chosen])
        try:
            glued = sheaf_service.glue(upper, cocone.apex, cocone.injections, [z for _, _, z in chosen])
        except WorkbenchError as exc:
            raise ViolationError(f"{t.name}: stage {i + 1} does not glue over {cocone.apex}: {exc}") from exc
        objects.append(cocone.apex)
        elements.append(glued)
        site_steps.append(copair)
        logger.debug(f"refined step {i + 1} of {t.name}: {cocone.apex} -> {ci} from {len(chosen)} members")

    site_tower = Tower.of(CategoryAmbient(cat), objects, site_steps, [StepMarker.COVERING], name=f"C({t.name})")
    yoneda_tower = representable_tower(
        site, c0, site_steps, [StepMarker.EPI, StepMarker.COVERING], ambient=amb, name=f"y(C({t.name}))"
    )
    reps = yoneda_tower.stages
    components = tuple(element_map(t.stages[i], x, reps[i]) for i, x in enumerate(elements))
    return Refinement(site_tower, yoneda_tower, TowerMorphism(yoneda_tower, t, components))
