import math

import pytest
from hypothesis import given, strategies as st

from tunecore.errors import (
    IllegalTransition,
    MissingObjectiveMetric,
    NonFiniteMetric,
    NonMonotonicStep,
)
from tunecore.trials import (
    LIFECYCLE_EVENTS,
    TRANSITIONS,
    ObjectiveSpec,
    ResourceRequest,
    ResultRecord,
    Trial,
    TrialDecision,
    TrialStatus,
    apply_transition,
    canonical_best,
    canonical_latest,
    record_result,
)

from conftest import make_trial


class TestTransitions:
    def test_pending_start_runs(self):
        t = make_trial("t1", status=TrialStatus.PENDING)
        assert apply_transition(t, "start").status is TrialStatus.RUNNING

    def test_terminal_states_reject_everything(self):
        for status in (TrialStatus.COMPLETED, TrialStatus.STOPPED, TrialStatus.ERRORED):
            t = make_trial("t1", steps=[0.5], status=status)
            for event in LIFECYCLE_EVENTS:
                with pytest.raises(IllegalTransition):
                    apply_transition(t, event)

    def test_pause_resume_round_trip(self):
        t = make_trial("t1", status=TrialStatus.RUNNING)
        paused = apply_transition(t, "pause")
        assert paused.status is TrialStatus.PAUSED
        assert apply_transition(paused, "resume").status is TrialStatus.RUNNING

    def test_paused_may_be_stopped(self):
        t = make_trial("t1", status=TrialStatus.PAUSED)
        assert apply_transition(t, "stop").status is TrialStatus.STOPPED

    def test_unknown_event_rejected(self):
        with pytest.raises(IllegalTransition):
            apply_transition(make_trial("t1"), "bogus")

    @given(st.lists(st.sampled_from(LIFECYCLE_EVENTS), max_size=30))
    def test_random_event_streams_respect_the_table(self, events):
        trial = make_trial("t1", status=TrialStatus.PENDING)
        seen = [trial.status]
        for event in events:
            try:
                trial = apply_transition(trial, event)
            except IllegalTransition:
                continue
            seen.append(trial.status)
        # never leaves a terminal state, and every accepted pair is in the table
        for before, after in zip(seen, seen[1:]):
            assert not before.is_terminal
            assert any(
                TRANSITIONS.get((before, e)) is after for e in LIFECYCLE_EVENTS
            )


class TestResultRecord:
    def test_rejects_nan_and_inf(self):
        for bad in (float("nan"), float("inf"), float("-inf")):
            with pytest.raises(NonFiniteMetric):
                ResultRecord(step=1, metrics={"loss": bad})

    def test_rejects_non_numeric_metric(self):
        with pytest.raises(NonFiniteMetric):
            ResultRecord(step=1, metrics={"loss": "NaN"})

    def test_rejects_bad_step(self):
        with pytest.raises(ValueError):
            ResultRecord(step=0, metrics={"loss": 0.5})
        with pytest.raises(ValueError):
            ResultRecord(step=1.5, metrics={"loss": 0.5})


class TestRecordResult:
    def test_appends_when_step_advances(self):
        t = make_trial("t1", steps=[(1, 0.9), (3, 0.8)])
        t2 = record_result(t, ResultRecord(step=4, metrics={"loss": 0.7}), "loss")
        assert t2.last_step == 4
        assert len(t2.results) == 3

    def test_equal_step_is_non_monotonic(self):
        t = make_trial("t1", steps=[(3, 0.8)])
        with pytest.raises(NonMonotonicStep):
            record_result(t, ResultRecord(step=3, metrics={"loss": 0.7}), "loss")

    def test_missing_objective_rejected(self):
        t = make_trial("t1")
        with pytest.raises(MissingObjectiveMetric):
            record_result(t, ResultRecord(step=1, metrics={"acc": 0.7}), "loss")

    def test_only_running_trials_record(self):
        t = make_trial("t1", status=TrialStatus.PAUSED)
        with pytest.raises(IllegalTransition):
            record_result(t, ResultRecord(step=1, metrics={"loss": 0.5}), "loss")

    @given(st.lists(st.integers(min_value=1, max_value=100), min_size=1, max_size=30))
    def test_accepted_sequences_are_strictly_increasing(self, steps):
        trial = make_trial("t1")
        for step in steps:
            try:
                trial = record_result(trial, ResultRecord(step=step, metrics={"loss": 0.5}), "loss")
            except NonMonotonicStep:
                pass
        recorded = [r.step for r in trial.results]
        assert recorded == sorted(set(recorded))


class TestObjective:
    def test_max_mode_negates(self):
        obj = ObjectiveSpec(metric="acc", mode="max")
        assert obj.canonical({"acc": 0.75}) == -0.75
        assert obj.user_value(-0.75) == 0.75

    def test_errored_trials_rank_worst(self, objective):
        t = make_trial("t1", status=TrialStatus.ERRORED)
        assert canonical_latest(t, objective) == math.inf
        assert canonical_best(t, objective) == math.inf

    def test_best_and_latest(self, objective):
        t = make_trial("t1", steps=[0.9, 0.3, 0.5])
        assert canonical_best(t, objective) == 0.3
        assert canonical_latest(t, objective) == 0.5


class TestInvariants:
    def test_trial_rejects_unordered_results(self):
        with pytest.raises(NonMonotonicStep):
            make_trial("t1", steps=[(2, 0.5), (2, 0.4)])

    def test_checkpoint_beyond_history_rejected(self):
        from tunecore.trials import CheckpointRef

        with pytest.raises(ValueError):
            Trial(
                id="t1",
                config={},
                results=(ResultRecord(step=1, metrics={"loss": 1.0}),),
                checkpoints=(CheckpointRef("t1", 5, "/tmp/x", "d"),),
            )

    def test_resource_request_rejects_negative(self):
        with pytest.raises(ValueError):
            ResourceRequest(cpus=-1)

    def test_restart_decision_requires_config(self):
        with pytest.raises(ValueError):
            TrialDecision.restart(None)
