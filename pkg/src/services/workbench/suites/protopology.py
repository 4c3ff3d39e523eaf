"""
Protopology suite - distinguished coverings of the pro-site, basis closure campaigns,
the equalizer of a covering and the pullback sheaf
"""
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

from src.config.settings import get_settings
from src.core.errors import MissingLimitError, OutOfBudgetError, PreconditionError
from src.models.schemas.report import CheckResult, Verdict
from src.models.schemas.witness import WitnessKind
from src.services.pro import pro_service
from src.services.pro.pro_object import ProObject
from src.services.protop import protop_service
from src.services.protop.protop import DistinguishedWeakCovering, ProSite
from src.services.sheaf import sheaf_service
from src.services.site import site_service
from src.services.site.site import CoveringFamily
from src.services.workbench.campaign import Campaign, halves
from src.services.workbench.registry import SuiteContext, combine, suite_check

EQUALIZER_MORPHISMS = 6
THREE_CHAINS = 2


def constant_samples(ps: ProSite) -> List[ProObject]:
    return [P for P in ps.samples if len(P.index) == 1]


def distinguished_coverings(ctx: SuiteContext) -> List[DistinguishedWeakCovering]:
    """Every basis family over every constant sample, pulled back to the pro-site."""

    def build() -> List[DistinguishedWeakCovering]:
        ps = ctx.pro_site
        found = []
        for U in constant_samples(ps):
            for fam in ps.base.families(U(U.top)):
                try:
                    found.append(protop_service.make_weak_covering(ps, U, fam))
                except (OutOfBudgetError, MissingLimitError):
                    continue
        return found

    return ctx.memo("distinguished-coverings", build)


def one_member_coverings(ctx: SuiteContext) -> List:
    """Pro-covering morphisms c(D) x U -> U from single covering morphisms onto constant samples."""

    def build() -> List:
        ps = ctx.pro_site
        found = []
        for U in constant_samples(ps):
            top = U(U.top)
            for d in site_service.covering_morphisms_onto(ps.base, top):
                if d == ps.cat.identity(top) or len(found) >= EQUALIZER_MORPHISMS:
                    continue
                try:
                    found.append(protop_service.make_weak_covering(ps, U, CoveringFamily(top, (d,))).maps[0])
                except (OutOfBudgetError, MissingLimitError):
                    continue
        return found

    return ctx.memo("one-member-coverings", build)


def three_chains(ps: ProSite) -> List[ProObject]:
    """Two-chains of the sample set extended by one more covering morphism."""
    cat = ps.cat
    found = []
    for P in ps.samples:
        if len(P.index) != 2 or len(found) >= THREE_CHAINS:
            continue
        top, below = P(P.top), P(P.bottom)
        step = P.transition(P.bottom, P.top)
        for g in site_service.covering_morphisms_onto(ps.base, below):
            if g.source in (below, top) or g.source not in ps.objects():
                continue
            found.append(ProObject.chain(cat, [top, below, g.source], [step, g]))
            break
    return found


@suite_check("protopology", "protop.base-change")
def base_change(ctx: SuiteContext) -> CheckResult:
    return protop_service.check_base_change(ctx.pro_site)


@suite_check("protopology", "protop.smallness")
def smallness(ctx: SuiteContext) -> CheckResult:
    return protop_service.check_pro_smallness(ctx.pro_site)


@suite_check("protopology", "protop.coproduct-coverings")
def coproduct_coverings(ctx: SuiteContext) -> CheckResult:
    claims = distinguished_coverings(ctx)
    for cov in claims:
        ctx.witness("protop.coproduct-coverings", WitnessKind.COVERING, cov.target.label, cov.describe())
    return protop_service.coproduct_covering_facts(ctx.pro_site, claims)


# ===== Basis closure =====

@dataclass(frozen=True)
class CompositionCase:
    """Inner choice -1 is the identity family; otherwise it indexes the member's families
    (weak) or the covering morphisms of a one-step chain over the member (transfinite)."""
    kind: str
    target: str
    outer: int
    inners: Tuple[int, ...]


class CompositionExaminer:

    def __init__(self, ctx: SuiteContext, transfinite: bool):
        self.ps = ctx.pro_site
        self.kinds = ("weak", "transfinite") if transfinite else ("weak",)
        self.targets = [
            U(U.top) for U in constant_samples(self.ps)
            if any(len(fam) for fam in self.ps.base.families(U(U.top)))
        ]
        self._outers = {}

    def outer(self, target: str, k: int) -> DistinguishedWeakCovering:
        key = (target, k)
        if key not in self._outers:
            fams = [fam for fam in self.ps.base.families(target) if len(fam)]
            self._outers[key] = protop_service.make_weak_covering(
                self.ps, self.ps.constant(target), fams[k % len(fams)]
            )
        return self._outers[key]

    def generate(self, rng) -> CompositionCase:
        kind = rng.choice(self.kinds)
        target = rng.choice(self.targets)
        k = rng.randrange(4)
        width = len(self.outer(target, k).members)
        return CompositionCase(kind, target, k, tuple(rng.randrange(-1, 3) for _ in range(width)))

    def _identity(self, member: ProObject) -> DistinguishedWeakCovering:
        top = member(member.top)
        return protop_service.make_weak_covering(self.ps, member, CoveringFamily(top, (self.ps.cat.identity(top),)))

    def _weak_inner(self, member: ProObject, choice: int) -> DistinguishedWeakCovering:
        fams = [fam for fam in self.ps.base.families(member(member.top)) if len(fam)]
        if choice < 0 or not fams:
            return self._identity(member)
        return protop_service.make_weak_covering(self.ps, member, fams[choice % len(fams)])

    def _transfinite_inner(self, member: ProObject, choice: int):
        ps = self.ps
        top = member(member.top)
        onto = [d for d in site_service.covering_morphisms_onto(ps.base, top) if d != ps.cat.identity(top)]
        if choice < 0 or not onto:
            return protop_service.as_transfinite(ps, self._identity(member))
        chain = protop_service.extend_chain(ps, protop_service.trivial_chain(ps, member), onto[choice % len(onto)])
        return protop_service.make_transfinite_covering(ps, chain, self._identity(chain.source))

    def examine(self, case: CompositionCase) -> Optional[str]:
        ps = self.ps
        outer = self.outer(case.target, case.outer)
        if case.kind == "weak":
            inners = [self._weak_inner(m, c) for m, c in zip(outer.members, case.inners)]
            result = protop_service.compose_weak(ps, outer, inners)
            problems = protop_service.weak_covering_violations(ps, result)
        else:
            inners = [self._transfinite_inner(m, c) for m, c in zip(outer.members, case.inners)]
            result = protop_service.compose_transfinite(ps, protop_service.as_transfinite(ps, outer), inners)
            problems = result.chain.violations()
        return problems[0] if problems else None

    @staticmethod
    def shrink(case: CompositionCase) -> List[CompositionCase]:
        """Replace half of the non-identity inner choices by the identity family."""
        moving = [w for w, c in enumerate(case.inners) if c >= 0]
        parts = halves(moving) or ([tuple(moving)] if moving else [])
        return [replace(case, inners=tuple(-1 if w in part else c for w, c in enumerate(case.inners))) for part in parts]

    @staticmethod
    def describe(case: CompositionCase) -> str:
        return f"{case.kind} over {case.target} family {case.outer} inners {list(case.inners)}"


@suite_check("protopology", "protop.composition")
def composition(ctx: SuiteContext) -> CheckResult:
    """Composed distinguished coverings generate the sieve of the composite family."""
    transfinite = ctx.admissibility().verdict != Verdict.FAIL
    examiner = CompositionExaminer(ctx, transfinite)
    if not examiner.targets:
        return CheckResult.from_findings("protop.composition", [], ["no constant sample has a nonempty covering family"])
    campaign = Campaign(
        "protop.composition",
        examiner.generate,
        examiner.examine,
        get_settings().COMPOSITION_CAMPAIGN,
        shrink=examiner.shrink,
        describe=examiner.describe,
    )
    result = campaign.run(ctx.seed, scope=f"kinds={'+'.join(examiner.kinds)}")
    if campaign.minimal is not None:
        ctx.witness("protop.composition", WitnessKind.COUNTEREXAMPLE, examiner.describe(campaign.minimal))
    return result


# ===== Equalizer and pullback sheaf =====

@suite_check("protopology", "protop.equalizer")
def equalizer(ctx: SuiteContext) -> CheckResult:
    """Mor(U, W) is the equalizer of Mor(V, W) => Mor(V x_U V, W) for every suite pro-covering, every sample W."""
    ps = ctx.pro_site
    morphisms = one_member_coverings(ctx)
    targets = ps.samples
    failures, checked = [], 0
    for f in morphisms:
        for W in targets:
            try:
                result = protop_service.equalizer_check(ps, f, W)
            except PreconditionError as exc:
                failures.append(str(exc))
                break
            checked += 1
            if result.verdict == Verdict.FAIL:
                failures.append(f"{f.source.label} -> {f.target.label} into {W.label}: {result.details}")
    return CheckResult.from_findings(
        "protop.equalizer", failures, checked=checked, scope=f"morphisms={len(morphisms)} targets={len(targets)}"
    )


def base_sheaves(ps: ProSite) -> List:
    base = ps.base
    return [sheaf_service.constant_presheaf(base)] + [sheaf_service.yoneda(base, W) for W in ps.objects()]


@suite_check("protopology", "protop.pullback-sheaf")
def pullback_sheaf(ctx: SuiteContext) -> CheckResult:
    ps = ctx.pro_site
    coverings = distinguished_coverings(ctx)
    sheaves = base_sheaves(ps)
    results = [protop_service.check_pullback_sheaf(ps, K, coverings) for K in sheaves]
    return combine("protop.pullback-sheaf", results, scope=f"sheaves={len(sheaves)} coverings={len(coverings)}")


@suite_check("protopology", "protop.pullback-formula")
def pullback_formula(ctx: SuiteContext) -> CheckResult:
    ps = ctx.pro_site
    objects = list(ps.samples) + three_chains(ps)
    return protop_service.check_pullback_formula(ps, base_sheaves(ps), objects)
