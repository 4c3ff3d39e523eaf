"""
Contractibility suite - weakly contractible objects, the dc-category, the P construction and
exactness of sections over contractible and non-contractible objects
"""
from typing import List

from src.config.settings import get_settings
from src.core.errors import MissingLimitError, OutOfBudgetError
from src.models.schemas.report import CheckResult, Verdict
from src.models.schemas.witness import WitnessKind
from src.services.cohom import cohom_service
from src.services.cohom.abelian import ShortExactSequence
from src.services.contract import contract_service
from src.services.contract.contract import Contractibility, PTowerRecord
from src.services.pro import pro_service
from src.services.protop import protop_service
from src.services.workbench.registry import SuiteContext, combine, suite_check

P_ITERATIONS = 2


def p_tower(ctx: SuiteContext) -> PTowerRecord:
    """P^2 of the terminal constant."""
    ps = ctx.pro_site
    return ctx.memo("p-tower", lambda: contract_service.iterate_P(ps, ps.constant(ps.cat.terminal()), P_ITERATIONS))


def sequences(ctx: SuiteContext) -> List[ShortExactSequence]:
    return ctx.memo("sequences", lambda: cohom_service.standard_sequences(ctx.site))


def pro_contractibles(ctx: SuiteContext) -> List[str]:
    objects = set(ctx.pro_site.objects())
    return [U for U in ctx.contractibles() if U in objects]


@suite_check("contractibility", "contract.weak-contractibility")
def weak_contractibility(ctx: SuiteContext) -> CheckResult:
    """Every recorded splitting of a weakly contractible object is a section."""
    check_id = "contract.weak-contractibility"
    site = ctx.site
    cat = site.cat
    failures, unverified, checked, found = [], [], 0, []
    for U in site.objects():
        w = contract_service.is_weakly_contractible(site, U)
        if w.verdict == Contractibility.UNKNOWN:
            unverified.extend(w.unverified)
            continue
        checked += 1
        if w.verdict != Contractibility.CONTRACTIBLE:
            continue
        found.append(U)
        for e, s in w.splittings:
            if cat.compose(e, s) != cat.identity(U):
                failures.append(f"the recorded section of {cat.describe(e)} does not split it")
        ctx.witness(check_id, WitnessKind.CONTRACTIBILITY, U, w.describe())
    return CheckResult.from_findings(
        check_id, failures, unverified, checked, scope=f"contractible: {', '.join(found) or 'none'}"
    )


@suite_check("contractibility", "contract.enough-contractibles")
def enough_contractibles(ctx: SuiteContext) -> CheckResult:
    return contract_service.has_enough_contractibles(ctx.site)


@suite_check("contractibility", "contract.dc-category")
def dc_category(ctx: SuiteContext) -> CheckResult:
    return contract_service.check_dc_category(ctx.site)


@suite_check("contractibility", "contract.coproduct-contractible")
def coproduct_contractible(ctx: SuiteContext) -> CheckResult:
    return contract_service.coproduct_of_contractibles(ctx.site)


@suite_check("contractibility", "contract.dc-restriction")
def dc_restriction(ctx: SuiteContext) -> CheckResult:
    return contract_service.dc_restriction_check(ctx.site)


# ===== The P construction =====

@suite_check("contractibility", "contract.p-contractible")
def p_contractible(ctx: SuiteContext) -> CheckResult:
    rec = p_tower(ctx)
    ctx.witness("contract.p-contractible", WitnessKind.P_TOWER, rec.target.label, rec.describe())
    return contract_service.check_P_contractible(ctx.pro_site, rec)


@suite_check("contractibility", "contract.p-tower")
def p_tower_realization(ctx: SuiteContext) -> CheckResult:
    """The chain realizing P^2 is verified step by step and ends at a weakly contractible object."""
    check_id = "contract.p-tower"
    ps = ctx.pro_site
    rec = p_tower(ctx)
    failures = [f"chain: {p}" for p in rec.chain.violations()]
    for n, step in enumerate(rec.chain.witnesses):
        failures.extend(f"step {n + 1}: {p}" for p in protop_service.weak_covering_violations(ps, step.covering))
    unverified = []
    witness = contract_service.is_weakly_contractible(ps, rec.result)
    if witness.verdict == Contractibility.UNKNOWN:
        unverified.extend(witness.unverified)
    elif witness.verdict == Contractibility.NOT_CONTRACTIBLE:
        if rec.stabilized_at is None:
            unverified.append(f"P has not stabilized after {rec.iterations} iterations")
        else:
            failures.append(f"the stable value {rec.result.label} is not weakly contractible")
    match = next(
        (C for C in ps.objects() if pro_service.pro_find_iso(rec.result, ps.constant(C)) is not None),
        rec.result.label,
    )
    checked = len(rec.chain.witnesses) + 1
    scope = f"P^{rec.iterations}({rec.target.label})≅{match} steps={len(rec.chain.witnesses)}"
    return CheckResult.from_findings(check_id, failures, unverified, checked, scope=scope)


@suite_check("contractibility", "contract.transfinite-split")
def transfinite_split(ctx: SuiteContext) -> CheckResult:
    bases = pro_contractibles(ctx)
    if not bases:
        return CheckResult.from_findings(
            "contract.transfinite-split", [], ["no weakly contractible object in the pro-site snapshot"]
        )
    ps = ctx.pro_site
    return contract_service.transfinite_split_check(ps, ps.constant(bases[0]), limit=get_settings().SPLIT_CAMPAIGN)


# ===== Exactness of sections =====

@suite_check("contractibility", "contract.gamma-exact")
def gamma_exact(ctx: SuiteContext) -> CheckResult:
    """Γ(U, -) keeps every standard sequence exact at weakly contractible U."""
    ps = ctx.pro_site
    bases = pro_contractibles(ctx)
    seqs = sequences(ctx)
    if not bases:
        return CheckResult.from_findings("contract.gamma-exact", [], ["no weakly contractible object in scope"])
    results = [contract_service.gamma_exactness_check(ps, U, seq) for U in bases for seq in seqs]
    return combine("contract.gamma-exact", results, scope=f"objects={','.join(bases)} sequences={len(seqs)}")


@suite_check("contractibility", "contract.gamma-boundary")
def gamma_boundary(ctx: SuiteContext) -> CheckResult:
    """Right exactness of Γ(U, -) is lost somewhere off the contractibles; the first loss is recorded."""
    check_id = "contract.gamma-boundary"
    ps = ctx.pro_site
    contractible = set(ctx.contractibles())
    try:
        initial = ps.cat.initial()
    except MissingLimitError:
        initial = None
    candidates = [U for U in ps.objects() if U not in contractible and U != initial]
    found, unverified, checked = [], [], 0
    for U in candidates:
        for seq in sequences(ctx):
            try:
                result = contract_service.gamma_exactness_check(ps, U, seq)
            except (OutOfBudgetError, MissingLimitError) as exc:
                unverified.append(str(exc))
                continue
            checked += 1
            if result.verdict == Verdict.FAIL:
                found.append(result.details.split("first-failure: ", 1)[-1])
                ctx.witness(check_id, WitnessKind.COUNTEREXAMPLE, f"Γ({U}, {seq.name})", {"defect": found[-1]})
    if not found:
        reason = f"no right-exactness defect on {len(candidates)} non-contractible objects"
        return CheckResult.from_findings(check_id, [], unverified + [reason])
    return CheckResult.from_findings(check_id, [], checked=checked, scope=f"defects={len(found)} first: {found[0]}")
