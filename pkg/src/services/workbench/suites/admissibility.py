"""
Admissibility suite - category laws, coherence, subcanonicity, coproducts and K-selections of the base site
"""
from src.models.schemas.report import CheckResult, Verdict
from src.models.schemas.witness import WitnessKind
from src.services.fincat import category_service
from src.services.site import site_service
from src.services.workbench.registry import SuiteContext, suite_check

FLAG_CHECKS = {
    "admissible": "site.admissible",
    "coherent": "site.coherent",
    "subcanonical": "site.subcanonical",
}


def _site_result(ctx: SuiteContext, check_id: str) -> CheckResult:
    if check_id == "site.admissible":
        return ctx.admissibility()
    run = {
        "site.coherent": site_service.check_coherent,
        "site.subcanonical": site_service.check_subcanonical,
    }[check_id]
    return ctx.memo(check_id, lambda: run(ctx.site))


@suite_check("admissibility", "fincat.category-laws")
def category_laws(ctx: SuiteContext) -> CheckResult:
    return category_service.check_category_laws(ctx.site.cat, ctx.budget).as_check("fincat.category-laws")


@suite_check("admissibility", "site.coherent")
def coherent(ctx: SuiteContext) -> CheckResult:
    return _site_result(ctx, "site.coherent")


@suite_check("admissibility", "site.subcanonical")
def subcanonical(ctx: SuiteContext) -> CheckResult:
    return _site_result(ctx, "site.subcanonical")


@suite_check("admissibility", "site.pullback-stability")
def pullback_stability(ctx: SuiteContext) -> CheckResult:
    return site_service.check_pullback_stability(ctx.site)


@suite_check("admissibility", "site.composition-closure")
def composition_closure(ctx: SuiteContext) -> CheckResult:
    return site_service.check_composition_closure(ctx.site)


@suite_check("admissibility", "site.admissible")
def admissible(ctx: SuiteContext) -> CheckResult:
    result = ctx.admissibility()
    if result.verdict == Verdict.FAIL:
        ctx.witness("site.admissible", WitnessKind.COUNTEREXAMPLE, ctx.site.name, {"details": result.details})
    return result


@suite_check("admissibility", "site.k-selection")
def k_selection(ctx: SuiteContext) -> CheckResult:
    selection = site_service.generate_K(ctx.site)
    return site_service.verify_K(ctx.site, selection)


@suite_check("admissibility", "workbench.declared-flags")
def declared_flags(ctx: SuiteContext) -> CheckResult:
    """Flags a site file declares must agree with what the checks find."""
    failures, unverified = [], []
    for key, declared in sorted(ctx.flags.items()):
        if key not in FLAG_CHECKS:
            unverified.append(f"{key}: no check decides this flag")
            continue
        found = _site_result(ctx, FLAG_CHECKS[key])
        if found.verdict == Verdict.UNVERIFIED:
            unverified.append(f"{key}: {found.details}")
        elif found.passed != declared:
            failures.append(f"{key} is declared {str(declared).lower()} but {FLAG_CHECKS[key]} is {found.verdict.value}")
    checked = len(ctx.flags) - len(unverified)
    scope = "declared=" + (",".join(sorted(ctx.flags)) or "none")
    return CheckResult.from_findings("workbench.declared-flags", failures, unverified, checked, scope=scope)
