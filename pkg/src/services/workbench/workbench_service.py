"""
Workbench service - runs suites over a site, writes and reads line-oriented reports, replays them
"""
import hashlib
import time
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from loguru import logger

from src.config.settings import get_settings
from src.core.errors import (
    FixtureHashMismatchError,
    IndeterminateError,
    MissingLimitError,
    OutOfBudgetError,
    PreconditionError,
    SiteFileError,
    UnknownSuiteError,
    ViolationError,
    WorkbenchError,
)
from src.models.schemas.report import CheckResult, Report, ReplayResult, Verdict
from src.models.schemas.witness import WitnessRecord
from src.services.site.site import SiteSpec
from src.services.workbench import suites  # noqa: F401  registers the checks
from src.services.workbench.registry import ALL, SUITES, SuiteContext, checks_for
from src.services.workbench.site_file import SiteFile, read_site_file

UNVERIFIED_ERRORS = (OutOfBudgetError, MissingLimitError, IndeterminateError)

SiteInput = Union[SiteSpec, SiteFile, str, Path]


def _resolve(site: SiteInput, budget: int) -> SiteFile:
    if isinstance(site, SiteFile):
        return site
    if isinstance(site, SiteSpec):
        return SiteFile(site, "", None, {})
    return read_site_file(site, budget)


def run_check(ctx: SuiteContext, check_id: str, fn) -> CheckResult:
    """One check, with errors the check did not handle folded into a verdict."""
    try:
        result = fn(ctx)
    except UNVERIFIED_ERRORS as exc:
        return CheckResult.from_findings(check_id, [], [f"{type(exc).__name__}: {exc}"])
    except ViolationError as exc:
        logger.warning(f"{check_id}: violation: {exc}")
        return CheckResult.from_findings(check_id, [f"violation: {exc}"])
    except PreconditionError as exc:
        return CheckResult.from_findings(check_id, [], [f"precondition: {exc}"])
    except WorkbenchError as exc:
        logger.warning(f"{check_id}: {type(exc).__name__}: {exc}")
        return CheckResult.from_findings(check_id, [f"{type(exc).__name__}: {exc}"])
    if result.check_id != check_id:
        result = result.model_copy(update={"check_id": check_id})
    return result


def run_suite(site: SiteInput, suite: str, seed: Optional[int] = None, budget: Optional[int] = None) -> Report:
    """Run every check of a suite (or of all suites) once, in registry order.

    Checks share one context and its memoized constructions, so they run one after another;
    the report sorts its lines by check id.
    """
    if suite != ALL and suite not in SUITES:
        raise UnknownSuiteError(f"unknown suite {suite!r}; known: {', '.join(SUITES + (ALL,))}")
    settings = get_settings()
    seed = settings.DEFAULT_SEED if seed is None else seed
    budget = settings.DEFAULT_BUDGET if budget is None else budget
    parsed = _resolve(site, budget)
    spec = parsed.site
    ctx = SuiteContext(site=spec, seed=seed, budget=budget, flags=dict(parsed.flags))

    log = logger.bind(suite=suite, site=spec.name)
    started = time.perf_counter()
    checks = []
    for check_id, fn in checks_for(suite):
        result = run_check(ctx, check_id, fn)
        log.debug(result.line())
        checks.append(result)

    report = Report(
        suite=suite,
        site_name=spec.name,
        fixture_path=parsed.path or "",
        fixture_sha256=parsed.sha256,
        seed=seed,
        budget=budget,
        checks=checks,
        witnesses=list(ctx.witnesses),
        wall_time=time.perf_counter() - started,
    )
    log.info(
        f"{suite} on {spec.name}: {len(checks)} checks, {len(report.failures)} FAIL, "
        f"{len(report.unverified)} UNVERIFIED in {report.wall_time:.2f}s"
    )
    return report


# ===== Report files =====

def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_witnesses(report: Report, path: Union[str, Path]) -> Path:
    """JSON lines, one witness per line; the report footer records the file and its hash."""
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("".join(w.to_line() + "\n" for w in report.witnesses), encoding="utf-8")
    report.witness_file = str(out)
    report.witness_sha256 = _sha256(out)
    logger.info(f"wrote {len(report.witnesses)} witnesses to {out}")
    return out


def read_witnesses(path: Union[str, Path]) -> List[WitnessRecord]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [WitnessRecord.from_line(line) for line in lines if line.strip()]


def write_report(report: Report, path: Union[str, Path]) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(report.render(), encoding="utf-8")
    logger.info(f"wrote report {out} (body-sha256 {report.body_sha256[:12]})")
    return out


def parse_report(text: str, path: Optional[str] = None) -> Tuple[Report, Dict[str, str]]:
    """A rendered report back into a Report, plus the footer exactly as written."""
    checks, footer = [], {}
    for number, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        if raw.startswith("# "):
            key, sep, value = raw[2:].partition("=")
            if not sep:
                raise SiteFileError("footer line must be key=value", number, 3, path)
            footer[key.strip()] = value.strip()
            continue
        parts = raw.split(" ", 3)
        if len(parts) < 3 or parts[0] != "CHECK" or parts[2] not in Verdict.__members__:
            raise SiteFileError("expected CHECK <id> <verdict> <details>", number, 1, path)
        checks.append(CheckResult(check_id=parts[1], verdict=Verdict(parts[2]), details=parts[3] if len(parts) > 3 else ""))
    missing = [key for key in ("suite", "site", "seed", "budget", "body-sha256") if key not in footer]
    if missing:
        raise PreconditionError(f"report {path or ''} has no {', '.join(missing)} in its footer")
    report = Report(
        suite=footer["suite"],
        site_name=footer["site"],
        fixture_path=footer.get("fixture", ""),
        fixture_sha256=footer.get("fixture-sha256", ""),
        seed=int(footer["seed"]),
        budget=int(footer["budget"]),
        checks=checks,
        witness_file=footer.get("witnesses", ""),
        witness_sha256=footer.get("witnesses-sha256", ""),
    )
    return report, footer


def report_location(path: Union[str, Path]) -> Path:
    """A report path as given, else inside REPORT_DIR."""
    report_path = Path(path)
    if report_path.is_file():
        return report_path
    fallback = Path(get_settings().REPORT_DIR) / report_path
    if not fallback.is_file():
        raise PreconditionError(f"no report at {report_path}")
    return fallback


def read_report(path: Union[str, Path]) -> Tuple[Report, Dict[str, str]]:
    report_path = report_location(path)
    return parse_report(report_path.read_text(encoding="utf-8"), str(report_path))


# ===== Replay =====

def _locate(recorded: str, report_path: Path) -> Path:
    """A recorded path as written, else relative to the report's directory."""
    candidate = Path(recorded)
    if candidate.is_file() or candidate.is_absolute():
        return candidate
    return report_path.parent / candidate


def verify_report(report: Report, footer: Dict[str, str], report_path: Path) -> Path:
    """Check the body hash, the witness sidecar hash and the fixture hash; returns the fixture path."""
    if report.body_sha256 != footer["body-sha256"]:
        raise FixtureHashMismatchError(f"{report_path}: the CHECK lines do not match the recorded body-sha256")
    if report.witness_file:
        sidecar = _locate(report.witness_file, report_path)
        if not sidecar.is_file() or _sha256(sidecar) != report.witness_sha256:
            raise FixtureHashMismatchError(f"{report_path}: witness file {sidecar} does not match witnesses-sha256")
    if not report.fixture_path:
        raise PreconditionError(f"{report_path} was not produced from a fixture file and cannot be replayed")
    fixture = _locate(report.fixture_path, report_path)
    if not fixture.is_file():
        raise PreconditionError(f"fixture {fixture} recorded in {report_path} is missing")
    if _sha256(fixture) != report.fixture_sha256:
        raise FixtureHashMismatchError(f"fixture {fixture} changed since {report_path} was written")
    return fixture


def replay(report_path: Union[str, Path], budget: Optional[int] = None) -> ReplayResult:
    """Rerun a stored report from its footer and compare the CHECK lines.

    At the recorded budget the lines must come out byte-identical. A raised budget is a
    non-replay comparison: every recorded check must be present again, and changed
    verdicts are listed rather than treated as errors.
    """
    original, footer = read_report(report_path)
    path = report_location(report_path)
    fixture = verify_report(original, footer, path)
    run_budget = original.budget if budget is None else budget
    mode = "replay" if run_budget == original.budget else "non-replay"

    rerun = run_suite(read_site_file(fixture, run_budget), original.suite, original.seed, run_budget)
    rerun.fixture_path = original.fixture_path
    before = {c.check_id: c for c in original.checks}
    after = {c.check_id: c for c in rerun.checks}
    differences = [f"missing in rerun: {cid}" for cid in before if cid not in after]
    if mode == "replay":
        differences += [f"new in rerun: {cid}" for cid in after if cid not in before]
        differences += [
            f"{cid}: {before[cid].line()} != {after[cid].line()}"
            for cid in before if cid in after and before[cid].line() != after[cid].line()
        ]
    else:
        differences += [
            f"{cid}: {before[cid].verdict.value} -> {after[cid].verdict.value}"
            for cid in before if cid in after and before[cid].verdict != after[cid].verdict
        ]

    if differences:
        logger.warning(f"{mode} of {path}: {len(differences)} differences, first: {differences[0]}")
    else:
        logger.info(f"{mode} of {path}: {len(before)} CHECK lines reproduced")
    return ReplayResult(original=original, rerun=rerun, mode=mode, differences=differences)
