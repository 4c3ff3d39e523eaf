import pytest

from src.core.errors import (
    ConstructionFailedError,
    OutOfBudgetError,
    PreconditionError,
    SiteFileError,
    UnknownSuiteError,
    ViolationError,
)
from src.models.schemas.report import CheckResult, Report, Verdict
from src.models.schemas.witness import WitnessKind, WitnessRecord
from src.services.fincat.gset_category import GSetCategory
from src.services.site.site import ExplicitBasis
from src.services.workbench import catalog, registry, workbench_service
from src.services.workbench.campaign import Campaign, campaign_rng, halves, prefixes
from src.services.workbench.registry import SuiteContext
from src.services.workbench.site_file import dump_site, load_site, parse_site, read_site_file

TWO_ARROWS = """\
[site]
name = bad
[objects]
a
b
[morphisms]
ida: a -> a
idb: b -> b
f: a -> b
[identities]
a = ida
b = idb
[compose]
f . f = f
"""


# ===== Site files =====

class TestSiteFile:

    def test_table_fixture(self, fixture_dir):
        """b2.site is the inclusion poset of {1,2} with its union covering."""
        parsed = read_site_file(fixture_dir / "b2.site")
        site = parsed.site
        assert site.name == "B2"
        assert set(site.objects()) == {"∅", "{1}", "{2}", "{1,2}"}
        assert isinstance(site.basis, ExplicitBasis)
        assert [m.source for m in site.basis.listed["{1,2}"][0]] == ["{1}", "{2}"]
        assert parsed.flags == {"admissible": False}
        assert len(parsed.sha256) == 64

    def test_generator_fixture(self, fixture_dir):
        """bg2.site is finite Z/2-sets, six objects at budget 6."""
        site = read_site_file(fixture_dir / "bg2.site").site
        assert isinstance(site.cat, GSetCategory)
        assert site.cat.group.order == 2
        assert len(site.objects()) == 6

    def test_load_site(self, fixture_dir):
        """load_site returns the site alone, its category laws already checked."""
        site = load_site(fixture_dir / "bset.site")
        assert site.name == "BSet"
        assert site.cat.group.order == 1
        assert len(site.objects()) == 4

    def test_budget_override(self, fixture_dir):
        small = read_site_file(fixture_dir / "bg2.site", budget=3).site
        assert len(small.objects()) < 6

    def test_hash_follows_the_bytes(self, fixture_dir):
        text = (fixture_dir / "bset.site").read_text(encoding="utf-8")
        assert parse_site(text).sha256 != parse_site(text + "\n# trailing comment\n").sha256

    def test_dump_and_parse(self, b2):
        """A dumped table site parses back to the same objects and coverings."""
        again = parse_site(dump_site(b2, {"admissible": False})).site
        assert set(again.objects()) == set(b2.objects())
        assert len(again.families("{1,2}")) == len(b2.families("{1,2}"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(PreconditionError):
            read_site_file(tmp_path / "nope.site")

    # ===== Errors with positions =====

    def test_malformed_compose_triple(self):
        """f . f is not composable when f: a -> b."""
        with pytest.raises(SiteFileError) as err:
            parse_site(TWO_ARROWS, "bad.site")
        assert err.value.line == 14
        assert err.value.column == 1
        assert "not composable" in str(err.value)
        assert str(err.value).startswith("bad.site:14:1:")

    def test_unknown_section(self):
        with pytest.raises(SiteFileError) as err:
            parse_site("[sites]\nname = x\n")
        assert (err.value.line, err.value.column) == (1, 2)

    def test_missing_composition(self):
        text = TWO_ARROWS.replace("f . f = f\n", "").replace("f: a -> b\n", "f: a -> b\ng: b -> b\n")
        text = text.replace("[compose]\n", "")
        with pytest.raises(SiteFileError, match="is missing"):
            parse_site(text)

    def test_unknown_object_column(self):
        with pytest.raises(SiteFileError) as err:
            parse_site(TWO_ARROWS.replace("f: a -> b", "f: a -> c"))
        assert err.value.line == 9
        assert err.value.column == len("f: a -> ") + 1

    def test_flag_must_be_boolean(self, fixture_dir):
        text = (fixture_dir / "bset.site").read_text(encoding="utf-8").replace("admissible = true", "admissible = maybe")
        with pytest.raises(SiteFileError, match="true or false"):
            parse_site(text)

    def test_generator_site_needs_a_rule(self):
        with pytest.raises(SiteFileError, match="needs a \\[rule\\]"):
            parse_site("[site]\nkind = finite-g-sets\ngroup = cyclic\norder = 2\n")


# ===== Fixture catalog =====

class TestCatalog:

    def test_catalog_entries(self, fixture_dir):
        names = [f.name for f in catalog.load_catalog(fixture_dir).fixtures]
        assert names == ["b2", "bg2", "bg3", "bset"]

    def test_fixture_by_name(self, fixture_dir):
        assert catalog.fixture_path("bg2", fixture_dir).name == "bg2.site"
        assert catalog.fixture_path("b2.site", fixture_dir).name == "b2.site"

    def test_unknown_fixture(self, fixture_dir):
        with pytest.raises(PreconditionError):
            catalog.fixture_path("b7", fixture_dir)

    def test_listing_sizes(self, fixture_dir):
        """beta_hint is card(Mor) of the snapshot."""
        listings = {f.name: f for f in catalog.list_fixtures(fixture_dir)}
        assert listings["b2"].objects == 4
        assert listings["b2"].beta_hint == 9
        assert listings["bg2"].objects == 6
        assert listings["bg2"].beta_hint > listings["bg2"].objects

    def test_missing_catalog(self, tmp_path):
        with pytest.raises(PreconditionError):
            catalog.load_catalog(tmp_path)


# ===== Campaigns =====

class TestCampaign:

    @staticmethod
    def digits(rng):
        return tuple(rng.randrange(10) for _ in range(8))

    def test_rng_is_per_check(self):
        assert campaign_rng(42, "a").random() == campaign_rng(42, "a").random()
        assert campaign_rng(42, "a").random() != campaign_rng(42, "b").random()

    def test_halves_and_prefixes(self):
        assert halves((1, 2, 3)) == [(1,), (2, 3)]
        assert halves((1,)) == []
        assert prefixes((1, 2, 3)) == [(1,), (1, 2)]
        assert prefixes((1, 2)) == [(1,)]

    def test_failure_shrinks_to_the_culprit(self):
        """Bisection keeps the half that still fails until one digit is left."""
        campaign = Campaign("t.sevens", self.digits, lambda c: "has a 7" if 7 in c else None, 20, shrink=halves)
        result = campaign.run(seed=3)
        assert result.verdict == Verdict.FAIL
        assert campaign.minimal == (7,)
        assert "shrunk from" in result.details

    def test_passing_campaign(self):
        result = Campaign("t.ok", self.digits, lambda c: None, 10).run(seed=3)
        assert result.verdict == Verdict.PASS
        assert "checked=10" in result.details
        assert "seed=3 cases=10" in result.details

    def test_out_of_budget_cases_are_unverified(self):
        def examine(case):
            raise OutOfBudgetError("too big")

        result = Campaign("t.budget", self.digits, examine, 5).run(seed=1)
        assert result.verdict == Verdict.UNVERIFIED

    def test_construction_failure_fails(self):
        def examine(case):
            raise ConstructionFailedError("no lift", step=2)

        result = Campaign("t.construct", self.digits, examine, 3).run(seed=1)
        assert result.verdict == Verdict.FAIL
        assert "step 2: no lift" in result.details

    def test_same_seed_same_result(self):
        run = lambda: Campaign("t.det", self.digits, lambda c: "odd" if sum(c) % 2 else None, 15, shrink=halves).run(9)
        assert run() == run()

    def test_repeated_draws_count_once(self):
        """Three possible cases give three checked cases however often they are drawn."""
        seen = []

        def examine(case):
            seen.append(case)

        campaign = Campaign("t.few", lambda rng: rng.randrange(3), examine, 10, max_draws=5)
        result = campaign.run(seed=4)
        assert result.verdict == Verdict.PASS
        assert "checked=3 " in result.details
        assert "cases=3 draws=50" in result.details
        assert sorted(seen) == [0, 1, 2]


# ===== Registry and the runner =====

class TestRegistry:

    def test_every_suite_has_checks(self):
        for suite in registry.SUITES:
            assert registry.checks_for(suite), suite

    def test_check_ids_are_unique(self):
        ids = [cid for cid, _ in registry.checks_for(registry.ALL)]
        assert len(ids) == len(set(ids))
        assert {"site.admissible", "cohom.orbit-covering", "contract.p-contractible"} <= set(ids)

    def test_unknown_suite_for_registration(self):
        with pytest.raises(KeyError):
            registry.suite_check("topology", "x.y")

    def test_combine(self):
        parts = [
            CheckResult(check_id="a", verdict=Verdict.PASS),
            CheckResult(check_id="a", verdict=Verdict.FAIL, details="broken"),
        ]
        result = registry.combine("a", parts)
        assert result.verdict == Verdict.FAIL
        assert "broken" in result.details

    def test_runner_folds_errors(self, b2):
        """Precondition errors become UNVERIFIED, violations and construction failures FAIL."""
        ctx = SuiteContext(site=b2, seed=1, budget=4)

        def needs_groups(ctx):
            raise PreconditionError("not a G-set site")

        def cannot_build(ctx):
            raise ConstructionFailedError("stuck", step=1)

        def not_contractible(ctx):
            raise ViolationError("* is not weakly contractible (not-contractible)")

        pre = workbench_service.run_check(ctx, "x.pre", needs_groups)
        assert pre.verdict == Verdict.UNVERIFIED
        assert "precondition: not a G-set site" in pre.details
        assert workbench_service.run_check(ctx, "x.build", cannot_build).verdict == Verdict.FAIL
        broken = workbench_service.run_check(ctx, "x.split", not_contractible)
        assert broken.verdict == Verdict.FAIL
        assert "violation: * is not weakly contractible" in broken.details

    def test_context_memo(self, b2):
        ctx = SuiteContext(site=b2, seed=1, budget=4)
        calls = []
        ctx.memo("k", lambda: calls.append(1) or len(calls))
        assert ctx.memo("k", lambda: calls.append(1) or len(calls)) == 1

    def test_unknown_suite(self, b2):
        with pytest.raises(UnknownSuiteError):
            workbench_service.run_suite(b2, "topology")


# ===== Reports =====

class TestReports:

    @pytest.fixture
    def report(self):
        return Report(
            suite="cohomology",
            site_name="BZ2",
            fixture_path="fixtures/bg2.site",
            fixture_sha256="0" * 64,
            seed=42,
            budget=6,
            checks=[
                CheckResult(check_id="cohom.orbit-covering", verdict=Verdict.PASS, details="checked=5 H^0(Z/2,Z)=Z"),
                CheckResult(check_id="cohom.cech-bar", verdict=Verdict.UNVERIFIED, details="checked=0 reason: cap"),
            ],
        )

    def test_lines_sorted_by_check_id(self, report):
        lines = report.body().splitlines()
        assert lines[0].startswith("CHECK cohom.cech-bar UNVERIFIED")
        assert lines[1] == "CHECK cohom.orbit-covering PASS checked=5 H^0(Z/2,Z)=Z"

    def test_footer(self, report):
        footer = report.render().splitlines()[2:]
        assert footer[:4] == ["# suite=cohomology", "# site=BZ2", "# seed=42", "# budget=6"]
        assert footer[-1] == f"# body-sha256={report.body_sha256}"

    def test_parse_rendered(self, report):
        parsed, footer = workbench_service.parse_report(report.render())
        assert parsed.body() == report.body()
        assert footer["body-sha256"] == report.body_sha256
        assert (parsed.seed, parsed.budget, parsed.suite) == (42, 6, "cohomology")

    def test_parse_rejects_other_lines(self, report):
        with pytest.raises(SiteFileError):
            workbench_service.parse_report("RESULT x PASS\n" + report.render())

    def test_parse_needs_footer(self, report):
        with pytest.raises(PreconditionError):
            workbench_service.parse_report(report.body())

    def test_exit_code(self, report):
        assert report.exit_code == 0
        report.checks.append(CheckResult(check_id="x", verdict=Verdict.FAIL))
        assert report.exit_code == 1

    def test_witness_sidecar(self, report, tmp_path):
        report.witnesses = [WitnessRecord(check_id="cohom.orbit-covering", kind=WitnessKind.COHOMOLOGY, subject="BZ2")]
        out = workbench_service.write_witnesses(report, tmp_path / "w.jsonl")
        assert workbench_service.read_witnesses(out) == report.witnesses
        assert f"# witnesses-sha256={report.witness_sha256}" in report.render()

    def test_verdict_folding(self):
        assert CheckResult.from_findings("a", []).verdict == Verdict.PASS
        assert CheckResult.from_findings("a", [], ["cap"]).verdict == Verdict.UNVERIFIED
        assert CheckResult.from_findings("a", [], ["cap"], checked=2).verdict == Verdict.PASS
        assert CheckResult.from_findings("a", ["bad"], ["cap"], checked=2).verdict == Verdict.FAIL


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
