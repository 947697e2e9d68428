"""Composite driving score and evaluator aggregation."""

import math

import pytest
from hypothesis import given, strategies as st

from teledrive.scoring import (
    EvaluatorSheet,
    InfractionCounts,
    aggregate_evaluators,
    counts_from_events,
    driving_score,
    load_sheet,
    save_sheet,
)


class TestDrivingScore:
    def test_ideal_run(self):
        assert driving_score(InfractionCounts(1.0)) == 1.0

    def test_direct_evaluation(self):
        c = InfractionCounts(1.0, collisions=1, lane_deviations=2, signs_run=1)
        assert driving_score(c, "town") == pytest.approx(0.8 * 0.81 * 0.9, abs=1e-15)

    def test_half_increment(self):
        c = InfractionCounts(1.0, lane_deviations=0.5)
        assert driving_score(c, "obstacle") == pytest.approx(0.9 ** 0.5, abs=1e-12)

    def test_mcity_suppresses_signs(self):
        c = InfractionCounts(0.9, signs_run=3)
        assert driving_score(c, "mcity") == pytest.approx(0.9)
        assert driving_score(c, "town") == pytest.approx(0.9 * 0.9 ** 3)

    def test_invalid_counts_rejected(self):
        with pytest.raises(ValueError):
            InfractionCounts(1.2)
        with pytest.raises(ValueError):
            InfractionCounts(1.0, collisions=-1)
        with pytest.raises(ValueError):
            driving_score(InfractionCounts(1.0), "freeway")

    @given(
        c=st.floats(1e-6, 1.0),  # normal-range floats; subnormals lose the identity
        nc=st.floats(0.0, 10.0),
        nl=st.floats(0.0, 10.0),
        ns=st.floats(0.0, 10.0),
    )
    def test_score_in_unit_interval_and_log_linear(self, c, nc, nl, ns):
        score = driving_score(InfractionCounts(c, nc, nl, ns), "town")
        assert 0.0 <= score <= 1.0
        expected_log = math.log(c) + nc * math.log(0.8) + (nl + ns) * math.log(0.9)
        assert math.log(score) == pytest.approx(expected_log, abs=1e-9)

    @given(nc=st.floats(0.0, 5.0), delta=st.floats(0.1, 3.0))
    def test_monotone_in_collisions(self, nc, delta):
        low = driving_score(InfractionCounts(1.0, collisions=nc), "town")
        high = driving_score(InfractionCounts(1.0, collisions=nc + delta), "town")
        assert high < low


class TestAggregation:
    def _sheets(self, scores_by_eval):
        # Build sheets whose single run has C set to yield the target score.
        return [
            EvaluatorSheet(eid, {"run1": InfractionCounts(completion=s)})
            for eid, s in scores_by_eval.items()
        ]

    def test_identical_sheets(self):
        counts = InfractionCounts(1.0, collisions=1)
        sheets = [EvaluatorSheet(e, {"r": counts}) for e in ("e1", "e2", "e3")]
        report = aggregate_evaluators(sheets, "obstacle")
        assert report.runs[0].mean == pytest.approx(0.8)
        assert report.runs[0].sd == 0.0

    def test_mean_and_sd(self):
        report = aggregate_evaluators(
            self._sheets({"e1": 1.0, "e2": 0.9, "e3": 0.8}), "town")
        assert report.runs[0].mean == pytest.approx(0.9)
        assert report.runs[0].sd == pytest.approx(0.1)

    def test_single_simulator_sheet_degenerates(self):
        counts = InfractionCounts(1.0, lane_deviations=2)
        report = aggregate_evaluators([EvaluatorSheet("sim", {"r": counts})], "town")
        assert report.runs[0].mean == pytest.approx(driving_score(counts, "town"))

    def test_empty_sheets_rejected(self):
        with pytest.raises(ValueError):
            aggregate_evaluators([], "town")

    def test_mismatched_runs_rejected(self):
        s1 = EvaluatorSheet("e1", {"r1": InfractionCounts(1.0)})
        s2 = EvaluatorSheet("e2", {"r2": InfractionCounts(1.0)})
        with pytest.raises(ValueError):
            aggregate_evaluators([s1, s2], "town")

    def test_sheet_rejects_non_half_steps(self):
        with pytest.raises(ValueError):
            EvaluatorSheet("e1", {"r": InfractionCounts(1.0, collisions=0.25)})


class TestCountsFromEvents:
    def test_empty_events_full_route(self):
        c = counts_from_events([], completion=1.0)
        assert c == InfractionCounts(1.0, 0, 0, 0)

    def test_summation_with_weights(self):
        events = [
            {"kind": "collision", "weight": 1.0},
            {"kind": "collision", "weight": 1.0},
            {"kind": "lane_deviation", "weight": 0.5},
        ]
        c = counts_from_events(events, completion=0.8)
        assert c.collisions == 2.0
        assert c.lane_deviations == 0.5
        assert c.signs_run == 0.0

    def test_aborted_run_freezes_partial_completion(self):
        c = counts_from_events([], completion=0.4, aborted=True)
        assert c.completion == 0.4
        with pytest.raises(ValueError):
            counts_from_events([], completion=1.0, aborted=True)

    def test_stop_and_red_both_count_as_signs(self):
        events = [{"kind": "ran_stop"}, {"kind": "ran_red"}]
        assert counts_from_events(events, 1.0).signs_run == 2.0

    def test_integer_validation_for_simulator(self):
        counts_from_events([{"kind": "collision"}], 1.0).require_integers()
        with pytest.raises(ValueError):
            InfractionCounts(1.0, lane_deviations=0.5).require_integers()


def test_sheet_round_trip(tmp_path):
    sheet = EvaluatorSheet(
        "e1",
        {"run1": InfractionCounts(0.95, 1.0, 0.5, 0.0),
         "run2": InfractionCounts(1.0)},
        notes="second run clean",
    )
    p = tmp_path / "sheet.json"
    save_sheet(sheet, p)
    loaded = load_sheet(p)
    assert loaded.evaluator_id == sheet.evaluator_id
    assert loaded.runs == sheet.runs
    assert loaded.notes == sheet.notes
