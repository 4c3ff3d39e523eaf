"""
Cohomology suite - Čech cohomology of finite G-set sites against the bar oracle, and the
Čech colimit identity over seeded pro-coverings
"""
import random
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

from src.config.settings import get_settings
from src.core.errors import OutOfBudgetError, PreconditionError
from src.models.schemas.report import CheckResult, Verdict
from src.models.schemas.witness import WitnessKind
from src.services.cohom import cohom_service
from src.services.cohom.abelian import GroupModule
from src.services.fincat.category import Morphism
from src.services.fincat.gset_category import GSetCategory
from src.services.pro.pro_object import ProObject
from src.services.protop import protop_service
from src.services.site import site_service
from src.services.site.site import CoveringFamily
from src.services.workbench.campaign import Campaign, halves
from src.services.workbench.registry import SuiteContext, suite_check

COLIM_DEGREES = (0, 1, 2)
MAX_COVER_ORBITS = 2
INDEPENDENCE_DEGREE = 3


def integers(ctx: SuiteContext):
    """Hom_G(-, Z) with trivial action."""
    site = ctx.site
    cohom_service.orbit_covering(site)
    return ctx.memo("Z", lambda: cohom_service.fixed_point_presheaf(site, GroupModule.trivial(site.cat.group)))


@suite_check("cohomology", "cohom.cech-bar")
def cech_bar(ctx: SuiteContext) -> CheckResult:
    return cohom_service.check_cech_against_bar(ctx.site)


@suite_check("cohomology", "cohom.orbit-covering")
def orbit_covering(ctx: SuiteContext) -> CheckResult:
    result = cohom_service.check_orbit_cohomology(ctx.site)
    if result.verdict != Verdict.UNVERIFIED:
        values = [part for part in result.details.split() if part.startswith("H^")]
        ctx.witness("cohom.orbit-covering", WitnessKind.COHOMOLOGY, ctx.site.name, {"groups": values})
    return result


@suite_check("cohomology", "cohom.h0-equalizer")
def h0_equalizer(ctx: SuiteContext) -> CheckResult:
    site = ctx.site
    families = [cohom_service.orbit_covering(site)]
    for obj in site.objects():
        families.extend(site.families(obj)[:1])
    return cohom_service.check_h0_equalizer(integers(ctx), families)


@suite_check("cohomology", "cohom.presentation-independence")
def presentation_independence(ctx: SuiteContext) -> CheckResult:
    """Rebases the full orbit-covering complex; the normalized one is too small to move."""
    site = ctx.site
    group = site.cat.group if isinstance(site.cat, GSetCategory) else None
    top = cohom_service.bar_degree_cap(group, INDEPENDENCE_DEGREE, normalized=False) if group else 1
    c = cohom_service.cech_complex(integers(ctx), cohom_service.orbit_covering(site), top, normalized=False)
    return cohom_service.check_presentation_independence(c, seed=ctx.seed)


@suite_check("cohomology", "cohom.sheaf-exactness")
def sheaf_exactness(ctx: SuiteContext) -> CheckResult:
    """The standard coefficient sequences are exact as sequences of sheaves."""
    seqs = ctx.memo("sequences", lambda: cohom_service.standard_sequences(ctx.site))
    failures = [p for seq in seqs for p in cohom_service.sequence_violations(seq)]
    names = ", ".join(seq.name for seq in seqs)
    return CheckResult.from_findings("cohom.sheaf-exactness", failures, checked=len(seqs), scope=f"sequences: {names}")


# ===== The Čech colimit identity =====

@dataclass(frozen=True)
class ColimCase:
    sample: ProObject
    covering: Morphism
    degrees: Tuple[int, ...]


def _orbits(label: str) -> int:
    return label.count("⊔") + 1


@suite_check("cohomology", "cohom.cech-colim")
def cech_colim(ctx: SuiteContext) -> CheckResult:
    """colim over levels of Ȟ^j(f_i, Z) against Ȟ^j(f, π*Z) on seeded distinguished pro-coverings."""
    check_id = "cohom.cech-colim"
    K = integers(ctx)
    ps = ctx.pro_site
    cat = ps.cat
    pairs = []
    for P in ps.samples:
        if P.top is None:
            continue
        top = P(P.top)
        for d in site_service.covering_morphisms_onto(ps.base, top):
            if d != cat.identity(top) and _orbits(d.source) <= MAX_COVER_ORBITS:
                pairs.append((P, d))
    if not pairs:
        return CheckResult.from_findings(check_id, [], ["no covering morphism onto a sample"])

    def generate(rng: random.Random) -> ColimCase:
        P, d = rng.choice(pairs)
        return ColimCase(P, d, COLIM_DEGREES)

    def examine(case: ColimCase) -> Optional[str]:
        top = case.sample(case.sample.top)
        try:
            f = protop_service.make_weak_covering(ps, case.sample, CoveringFamily(top, (case.covering,))).maps[0]
            result = cohom_service.cech_colim_check(ps, K, f, case.degrees)
        except PreconditionError as exc:
            return str(exc)
        if result.verdict == Verdict.UNVERIFIED:
            raise OutOfBudgetError(result.details)
        return result.details if result.verdict == Verdict.FAIL else None

    def shrink(case: ColimCase) -> List[ColimCase]:
        return [replace(case, degrees=part) for part in halves(case.degrees)]

    def describe(case: ColimCase) -> str:
        return f"{case.sample.label} along {cat.describe(case.covering)} degrees {list(case.degrees)}"

    campaign = Campaign(check_id, generate, examine, get_settings().COLIM_CAMPAIGN, shrink=shrink, describe=describe)
    return campaign.run(ctx.seed, scope=f"pairs={len(pairs)} degrees={list(COLIM_DEGREES)}")
