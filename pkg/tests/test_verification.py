"""
Tests for the verification suites.
"""

import pytest

from icbandit.errors import ConfigurationError
from icbandit.services import verification
from icbandit.services.verification import VerificationBudget

SMALL = VerificationBudget(
    fuzz_steps=200,
    fuzz_seeds=1,
    affinity_cases=10,
    truthfulness_cases=4,
    moment_cases=100,
    perturbation_cases=100,
    scan_horizon=200,
    scan_trials=1,
)


class TestResolveSuites:
    """Tests for suite selection."""

    def test_all(self):
        assert verification.resolve_suites(["all"]) == list(verification.SUITES)

    def test_dedupes_in_order(self):
        assert verification.resolve_suites(["moments", "simplex", "moments"]) == ["moments", "simplex"]

    def test_unknown(self):
        with pytest.raises(ConfigurationError) as exc_info:
            verification.resolve_suites(["speed"])
        assert "all" in exc_info.value.details["known"]


class TestSuites:
    """Each suite passes on a small battery."""

    @pytest.mark.parametrize("suite", verification.SUITES)
    def test_suite_passes(self, suite):
        report = verification.verify([suite], budget=SMALL)
        assert report.suites == [suite]
        assert report.checks
        failing = [check.name for check in report.checks if not check.passed]
        assert not failing

    def test_exp3_is_flagged(self):
        report = verification.verify(["affinity", "truthfulness"], budget=SMALL)
        statuses = {(check.suite, check.name): check.status for check in report.checks}
        assert statuses[("affinity", "exp3")] == "expected-non-ic"
        assert statuses[("truthfulness", "exp3")] == "expected-non-ic"

    def test_literal_ts_offset_is_documented(self):
        report = verification.verify(["ts-validity"], budget=SMALL)
        literal = next(check for check in report.checks if check.name == "ts-prod-c0=K")
        assert literal.status == "documented-breach"
        assert literal.detail["first_breach_round"] == 1

    def test_algorithm_filter(self):
        report = verification.verify(["affinity", "truthfulness"], budget=SMALL, algorithms=["lb-prod", "exp3"])
        assert report.algorithms == ["lb-prod", "exp3"]
        names = [(check.suite, check.name) for check in report.checks]
        assert names == [
            ("affinity", "lb-prod"),
            ("affinity", "exp3"),
            ("truthfulness", "lb-prod"),
            ("truthfulness", "exp3"),
        ]
        assert report.passed

    def test_filter_covers_linearized_form(self):
        report = verification.verify(["affinity"], budget=SMALL, algorithms=["ts-omd-ds"])
        assert [check.name for check in report.checks] == ["ts-omd-ds-linearized"]

    def test_filter_leaves_other_suites(self):
        report = verification.verify(["moments"], budget=SMALL, algorithms=["bwsu"])
        assert [check.name for check in report.checks] == ["lb-prod"]

    def test_unknown_algorithm(self):
        with pytest.raises(ConfigurationError):
            verification.verify(["affinity"], budget=SMALL, algorithms=["hedge"])

    def test_summary_counts(self):
        report = verification.verify(["ts-moments"], budget=SMALL)
        assert report.summary() == {"pass": 2}

    def test_quick_budget_from_settings(self, test_settings):
        budget = verification.quick_budget(test_settings)
        assert budget.moment_cases == 50
        assert budget.fuzz_steps == 200
        assert budget.affinity_cases == 10
        assert budget.truthfulness_cases == 5

    def test_quick_budget_from_environment(self, monkeypatch):
        monkeypatch.setenv("ICBANDIT_VERIFY_CASES", "20")
        monkeypatch.setenv("ICBANDIT_VERIFY_STEPS", "100")
        monkeypatch.setenv("ICBANDIT_VERIFY_SEEDS", "1")
        report = verification.verify(["moments"])
        assert report.checks[0].cases == 20
        assert not report.full

