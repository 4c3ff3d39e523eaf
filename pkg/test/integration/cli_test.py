from pathlib import Path

import pytest

from src.main import EXIT_ERROR, EXIT_FAIL, EXIT_OK, main
from src.models.schemas.report import CheckResult, Report, Verdict

FIXTURES = Path(__file__).resolve().parent.parent.parent / "fixtures"


def canned(verdict: Verdict) -> Report:
    return Report(
        suite="cohomology",
        site_name="BZ2",
        seed=7,
        budget=5,
        checks=[CheckResult(check_id="cohom.cech-bar", verdict=verdict, details="checked=1")],
    )


# ===== check =====

class TestCheckCommand:

    def test_arguments_reach_the_runner(self, mocker, capsys):
        run = mocker.patch("src.main.workbench_service.run_suite", return_value=canned(Verdict.PASS))
        site = FIXTURES / "bg2.site"
        code = main(["check", str(site), "--suite", "cohomology", "--seed", "7", "--budget", "5"])
        assert code == EXIT_OK
        run.assert_called_once_with(site, "cohomology", 7, 5)
        out = capsys.readouterr().out
        assert out.startswith("CHECK cohom.cech-bar PASS checked=1\n")
        assert "# seed=7" in out

    def test_fail_exit_code(self, mocker):
        mocker.patch("src.main.workbench_service.run_suite", return_value=canned(Verdict.FAIL))
        assert main(["check", str(FIXTURES / "bg2.site"), "--suite", "cohomology"]) == EXIT_FAIL

    def test_unverified_does_not_fail(self, mocker):
        mocker.patch("src.main.workbench_service.run_suite", return_value=canned(Verdict.UNVERIFIED))
        assert main(["check", str(FIXTURES / "bg2.site")]) == EXIT_OK

    def test_report_and_witness_files(self, tmp_path):
        """A real run over b2 writes both files and exits 1 on the disjointness failure."""
        out, witnesses = tmp_path / "b2.report", tmp_path / "b2.jsonl"
        code = main([
            "check", str(FIXTURES / "b2.site"), "--suite", "admissibility",
            "--out", str(out), "--witnesses", str(witnesses),
        ])
        assert code == EXIT_FAIL
        text = out.read_text(encoding="utf-8")
        assert "CHECK site.admissible FAIL" in text
        assert f"# witnesses={witnesses}" in text
        assert witnesses.read_text(encoding="utf-8").strip()

    def test_unknown_site_is_an_error(self, tmp_path):
        assert main(["check", str(tmp_path / "missing.site")]) == EXIT_ERROR

    def test_unknown_suite_is_rejected_by_the_parser(self):
        with pytest.raises(SystemExit):
            main(["check", str(FIXTURES / "b2.site"), "--suite", "topology"])


# ===== replay and fixtures =====

class TestReplayCommand:

    def test_replay_round(self, tmp_path, capsys):
        out = tmp_path / "b2.report"
        main(["check", str(FIXTURES / "b2.site"), "--suite", "admissibility", "--out", str(out)])
        capsys.readouterr()
        assert main(["replay", str(out)]) == EXIT_FAIL
        assert "difference" not in capsys.readouterr().out

    def test_tampered_report(self, tmp_path):
        out = tmp_path / "b2.report"
        main(["check", str(FIXTURES / "b2.site"), "--suite", "admissibility", "--out", str(out)])
        out.write_text(out.read_text(encoding="utf-8").replace("FAIL", "PASS"), encoding="utf-8")
        assert main(["replay", str(out)]) == EXIT_ERROR

    def test_missing_report(self, tmp_path):
        assert main(["replay", str(tmp_path / "none.report")]) == EXIT_ERROR


class TestFixturesCommand:

    def test_list(self, capsys):
        assert main(["fixtures", "list", "--dir", str(FIXTURES)]) == EXIT_OK
        out = capsys.readouterr().out.splitlines()
        assert [row.split()[0] for row in out] == ["b2", "bg2", "bg3", "bset"]
        assert "beta_hint=9" in out[0]


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
