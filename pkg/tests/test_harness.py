"""Experiment harness: scoring, determinism, CSV, conditional passes."""

from fractions import Fraction

import numpy as np
import pytest

from feaslab.harness import (
    ExperimentReport,
    emit_csv,
    load_config,
    run_macro,
    score_cd,
)
from feaslab.types import Decision


class TestScoreCd:
    def test_all_acceptable_scores_one(self):
        union = {(0, Fraction("0.5")): [(int(Decision.INFEASIBLE), 3)]}
        truth = np.array([[0.5]])
        assert score_cd(union, truth, [1.5]) == 1

    def test_desirable_declared_infeasible_scores_zero(self):
        union = {(0, Fraction("0.5")): [(int(Decision.INFEASIBLE), 3)]}
        truth = np.array([[0.1]])
        assert score_cd(union, truth, [1.5]) == 0

    def test_pending_on_unacceptable_scores_zero(self):
        union = {(0, Fraction("0.1")): [(int(Decision.PENDING), 0)]}
        truth = np.array([[0.9]])
        assert score_cd(union, truth, [1.5]) == 0

    def test_joint_over_systems(self):
        union = {
            (0, Fraction("0.5")): [
                (int(Decision.FEASIBLE), 1),
                (int(Decision.INFEASIBLE), 1),
            ]
        }
        truth = np.array([[0.1], [0.9]])
        assert score_cd(union, truth, [1.5]) == 1
        truth = np.array([[0.1], [0.1]])
        assert score_cd(union, truth, [1.5]) == 0


def small_config(**overrides):
    body = {
        "id": "unit",
        "source": {"kind": "synthetic", "p": [[0.1], [0.9]]},
        "spec": {"alpha": 0.1, "theta": [2.0]},
        "procedure": {"kind": "brf"},
        "plans": [{"thresholds": [[0.5]]}],
        "macro_reps": 20,
        "master_seed": 77,
    }
    body.update(overrides)
    return load_config(body)


class TestRunMacro:
    def test_obs_totals_consistent(self):
        report = run_macro(small_config())
        assert report.obs_total_mean == pytest.approx(sum(report.obs_pass_mean))
        assert 0.0 <= report.pcd_hat <= 1.0

    def test_single_rep_has_no_se(self):
        report = run_macro(small_config(macro_reps=1))
        assert report.pcd_se is None
        assert report.obs_total_se is None

    def test_threads_do_not_change_results(self):
        a = run_macro(small_config())
        cfg = small_config()
        cfg.threads = 4
        b = run_macro(cfg)
        assert a.pcd_hat == b.pcd_hat
        assert a.obs_total_mean == b.obs_total_mean

    def test_rf_procedure_runs(self):
        report = run_macro(
            small_config(procedure={"kind": "rf", "n0": 10, "b": 4}, macro_reps=5)
        )
        assert report.obs_total_mean >= 40  # at least n0 batches of 4

    def test_conditional_pass_skipped_when_single_feasible(self):
        # system 0 is the lone feasible one at 0.5: pass 2 must not run
        cfg = small_config(
            procedure={"kind": "mpb", "heuristic": "bn"},
            plans=[
                {"thresholds": [[0.5]]},
                {"thresholds": [[0.3]], "when": "multiple_feasible"},
            ],
            macro_reps=10,
        )
        report = run_macro(cfg)
        assert len(report.obs_pass_mean) == 1

    def test_conditional_pass_runs_when_multiple_feasible(self):
        cfg = load_config(
            {
                "id": "multi",
                "source": {"kind": "synthetic", "p": [[0.1], [0.1]]},
                "spec": {"alpha": 0.1, "theta": [2.0]},
                "procedure": {"kind": "mpb", "heuristic": "bn"},
                "plans": [
                    {"thresholds": [[0.5]]},
                    {"thresholds": [[0.3]], "when": "multiple_feasible"},
                ],
                "macro_reps": 5,
                "master_seed": 9,
            }
        )
        report = run_macro(cfg)
        assert len(report.obs_pass_mean) == 2


class TestCsv:
    def test_determinism_byte_identical(self, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        emit_csv(run_macro(small_config()), a)
        emit_csv(run_macro(small_config()), b)
        assert a.read_bytes() == b.read_bytes()

    def test_seed_changes_output(self, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        emit_csv(run_macro(small_config()), a)
        emit_csv(run_macro(small_config(master_seed=78)), b)
        assert a.read_bytes() != b.read_bytes()

    def test_header_and_shape(self, tmp_path):
        path = tmp_path / "r.csv"
        emit_csv(run_macro(small_config()), path)
        lines = path.read_text().splitlines()
        assert lines[0] == "config_id,procedure,pass,metric,value,se"
        assert any(line.split(",")[3] == "pcd" for line in lines[1:])
        assert any(line.split(",")[3] == "obs_total" for line in lines[1:])

    def test_empty_report_header_only(self, tmp_path):
        report = ExperimentReport(
            config_id="empty",
            procedure="brf",
            macro_reps=1,
            pcd_hat=1.0,
            pcd_se=None,
            obs_pass_mean=[],
            obs_pass_se=[],
            obs_total_mean=0.0,
            obs_total_se=None,
            undecided_mean=0.0,
            capped_reps=0,
        )
        path = tmp_path / "e.csv"
        emit_csv(report, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "config_id,procedure,pass,metric,value,se"


class TestThresholdStrings:
    def test_decimal_round_trip(self):
        from feaslab.types import threshold_str

        for text in ("0.05", "0.5", "0.25", "0.007", "0.1282051282"):
            assert threshold_str(Fraction(text)) == text

    def test_non_decimal_falls_back_to_float_repr(self):
        from feaslab.types import threshold_str

        assert threshold_str(Fraction(1, 3)) == repr(1 / 3)


class TestConfigValidation:
    def test_unknown_procedure_rejected(self):
        with pytest.raises(ValueError):
            small_config(procedure={"kind": "nope"})

    def test_truth_shape_checked(self):
        with pytest.raises(ValueError):
            small_config(truth={"kind": "given", "p": [[0.5]]})

    def test_plan_constraint_count_checked(self):
        with pytest.raises(ValueError):
            small_config(plans=[{"thresholds": [[0.5], [0.4]]}])
