"""
Towers suite - seeded covering walks read as site and sheaf towers, splittings over weakly
contractible bases and refinement of sheaf towers by site towers
"""
import random
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

from src.config.settings import get_settings
from src.core.errors import MissingLimitError, OutOfBudgetError, PreconditionError
from src.models.schemas.report import CheckResult
from src.models.schemas.witness import WitnessKind
from src.services.fincat.category import Morphism
from src.services.site import site_service
from src.services.tower import tower_service
from src.services.tower.tower import CategoryAmbient, StepMarker, Tower
from src.services.workbench.campaign import Campaign, campaign_rng, prefixes
from src.services.workbench.registry import SuiteContext, suite_check

WALKS = 6
REFINED = 4
REFINED_LENGTH = 3


def covering_steps(ctx: SuiteContext, obj: str) -> List[Morphism]:
    """Non-identity covering morphisms onto obj from the snapshot."""
    site = ctx.site

    def build() -> List[Morphism]:
        ident = site.cat.identity(obj)
        return [d for d in site_service.covering_morphisms_onto(site, obj) if d != ident]

    return ctx.memo(f"onto:{obj}", build)


def covering_walk(ctx: SuiteContext, rng: random.Random, base: str, length: int) -> Tuple[Morphism, ...]:
    """base <- C_1 <- ... with each step drawn from the covering morphisms onto the last stage."""
    steps, current = [], base
    for _ in range(length - 1):
        onto = covering_steps(ctx, current)
        if not onto:
            break
        d = rng.choice(onto)
        steps.append(d)
        current = d.source
    return tuple(steps)


def walks(ctx: SuiteContext, check_id: str, count: int = WALKS) -> List[Tuple[str, Tuple[Morphism, ...]]]:
    rng = campaign_rng(ctx.seed, check_id)
    objects = list(ctx.site.objects())
    bases = objects + ctx.contractibles()
    max_length = get_settings().MAX_TOWER_LENGTH
    found = []
    for _ in range(count):
        base = rng.choice(bases)
        found.append((base, covering_walk(ctx, rng, base, rng.randint(1, max_length // 2))))
    return found


@suite_check("towers", "tower.topos-transfinite")
def topos_transfinite(ctx: SuiteContext) -> CheckResult:
    """Yoneda images of covering walks, including walks from weakly contractible bases, are epi towers."""
    site = ctx.site
    towers = [
        tower_service.representable_tower(site, base, steps, [StepMarker.EPI], name=f"walk{n}")
        for n, (base, steps) in enumerate(walks(ctx, "tower.topos-transfinite"))
    ]
    return tower_service.check_topos_transfinite(site, towers)


@suite_check("towers", "tower.site-transfinite")
def site_transfinite(ctx: SuiteContext) -> CheckResult:
    site = ctx.site
    ambient = CategoryAmbient(site.cat)
    towers = []
    for n, (base, steps) in enumerate(walks(ctx, "tower.site-transfinite")):
        stages = [base] + [d.source for d in steps]
        towers.append(Tower.of(ambient, stages, steps, [StepMarker.COVERING], name=f"walk{n}"))
    return tower_service.check_site_transfinite(site, towers)


# ===== Splittings =====

@dataclass(frozen=True)
class SplitCase:
    base: str
    steps: Tuple[Morphism, ...]


@suite_check("towers", "tower.split-over-contractible")
def split_over_contractible(ctx: SuiteContext) -> CheckResult:
    """Epi towers over a weakly contractible representable split stage by stage."""
    check_id = "tower.split-over-contractible"
    site = ctx.site
    cat = site.cat
    bases = ctx.contractibles()
    if not bases:
        return CheckResult.from_findings(check_id, [], ["no weakly contractible object besides the initial one"])
    max_length = get_settings().MAX_TOWER_LENGTH

    def generate(rng: random.Random) -> SplitCase:
        base = rng.choice(bases)
        return SplitCase(base, covering_walk(ctx, rng, base, rng.randint(1, max_length)))

    def describe(case: SplitCase) -> str:
        if not case.steps:
            return case.base
        stages = " <- ".join([case.base] + [d.source for d in case.steps])
        return f"{stages} via {'; '.join(cat.describe(d) for d in case.steps)}"

    def examine(case: SplitCase) -> Optional[str]:
        t = tower_service.representable_tower(site, case.base, case.steps, [StepMarker.EPI], name=describe(case))
        split = tower_service.split_tower_over_contractible(t, tower_service.representable_splitter(site, case.base))
        amb = t.ambient
        if not amb.same(amb.compose(tower_service.transfinite_composition(t), split.section), amb.identity(t.stages[0])):
            return "the section does not compose to the identity"
        ctx.witness(
            check_id, WitnessKind.SPLITTING, describe(case),
            {"base": case.base, "stages": t.length, "partial_sections": len(split.partial)},
        )
        return None

    def shrink(case: SplitCase) -> List[SplitCase]:
        return [replace(case, steps=steps) for steps in prefixes(case.steps)]

    campaign = Campaign(
        check_id, generate, examine, get_settings().SPLIT_CAMPAIGN, shrink=shrink, describe=describe
    )
    return campaign.run(ctx.seed, scope=f"bases={','.join(bases)} max-length={max_length}")


# ===== Refinement =====

@suite_check("towers", "tower.refinement")
def refinement(ctx: SuiteContext) -> CheckResult:
    """Sheaf towers of covering walks are refined by covering site towers with a commuting map."""
    site = ctx.site
    rng = campaign_rng(ctx.seed, "tower.refinement")
    objects = list(site.objects())
    failures, unverified, checked = [], [], 0
    for n in range(REFINED):
        base = rng.choice(objects)
        steps = covering_walk(ctx, rng, base, rng.randint(2, REFINED_LENGTH))
        t = tower_service.representable_tower(site, base, steps, [StepMarker.EPI], name=f"walk{n}")
        try:
            refined = tower_service.refine_sheaf_tower(site, t, (base, site.cat.identity(base)))
        except (OutOfBudgetError, MissingLimitError) as exc:
            unverified.append(str(exc))
            continue
        except PreconditionError as exc:
            failures.append(str(exc))
            continue
        checked += 1
        problems = refined.morphism.violations()
        covering = tower_service.check_site_transfinite(site, [refined.site_tower])
        if problems:
            failures.append(f"{t.name}: {problems[0]}")
        elif not covering.passed:
            failures.append(f"{t.name}: the refining site tower is not covering: {covering.details}")
    return CheckResult.from_findings("tower.refinement", failures, unverified, checked, scope=f"towers={REFINED}")
