import pytest

from depthnav.metrics import (
    EvalLog,
    EvalStep,
    format_report,
    intervention_count,
    summarize,
    velocity_decrease,
)


def step(t, v=0.5, command="forward", ped=None, fov=False, collision=False, stuck=False):
    return EvalStep(
        t=t, pose=(t, 0.0, 0.0), v=v, w=0.0, command=command,
        ped_distance=ped, ped_in_fov=fov, collision=collision, stuck=stuck,
    )


def log_of(steps, route="r", completed=True):
    return EvalLog(route=route, steps=tuple(steps), completed=completed, duration=steps[-1].t + 0.1)


class TestInterventionCount:
    def test_clean_run_zero(self):
        lg = log_of([step(0.1 * i) for i in range(50)])
        assert intervention_count(lg) == 0

    def test_spaced_collisions_count_individually(self):
        lg = log_of(
            [step(0.0), step(1.0, collision=True), step(4.0, collision=True), step(7.0, collision=True)]
        )
        assert intervention_count(lg) == 3

    def test_refractory_merges_close_events(self):
        lg = log_of([step(0.0), step(1.0, collision=True), step(1.5, collision=True)])
        assert intervention_count(lg) == 1

    def test_chained_events_within_refractory_merge(self):
        # events every 0.5 s for 4 s form one episode
        lg = log_of([step(0.5 * i, collision=True) for i in range(9)])
        assert intervention_count(lg) == 1

    def test_stuck_counts_too(self):
        lg = log_of([step(0.0), step(1.0, stuck=True), step(5.0, collision=True)])
        assert intervention_count(lg) == 2

    def test_invariant_under_resampling(self):
        coarse = log_of([step(0.0), step(1.0, collision=True), step(5.0, collision=True)])
        fine_steps = []
        for i in range(60):
            t = 0.1 * i
            fine_steps.append(step(t, collision=t in (1.0, 5.0)))
        fine = log_of(fine_steps)
        assert intervention_count(coarse) == intervention_count(fine) == 2


class TestVelocityDecrease:
    def test_constant_velocity_zero_percent(self):
        steps = [step(0.1 * i, v=0.4, ped=(2.0 if i < 5 else None), fov=i < 5) for i in range(10)]
        assert velocity_decrease(log_of(steps)) == pytest.approx(0.0)

    def test_half_speed_near_is_fifty_percent(self):
        near = [step(0.1 * i, v=0.3, ped=2.0, fov=True) for i in range(5)]
        far = [step(1.0 + 0.1 * i, v=0.6) for i in range(5)]
        assert velocity_decrease(log_of(near + far)) == pytest.approx(50.0)

    def test_stop_steps_excluded(self):
        near = [step(0.1 * i, v=0.3, ped=2.0, fov=True) for i in range(5)]
        far = [step(1.0 + 0.1 * i, v=0.6) for i in range(5)]
        poison = [step(2.0, v=0.0, command="stop"), step(2.1, v=0.0, command="stop", ped=1.0, fov=True)]
        assert velocity_decrease(log_of(near + far + poison)) == pytest.approx(50.0)

    def test_out_of_fov_near_steps_not_in_near_stratum(self):
        near_fov = [step(0.1 * i, v=0.3, ped=2.0, fov=True) for i in range(5)]
        near_blind = [step(0.5 + 0.1 * i, v=0.01, ped=2.0, fov=False) for i in range(5)]
        far = [step(2.0 + 0.1 * i, v=0.6) for i in range(5)]
        # blind steps belong to neither stratum
        assert velocity_decrease(log_of(near_fov + near_blind + far)) == pytest.approx(50.0)

    def test_insufficient_data_raises(self):
        only_far = log_of([step(0.1 * i, v=0.5) for i in range(5)])
        with pytest.raises(ValueError, match="insufficient"):
            velocity_decrease(only_far)

    def test_rescaling_invariance(self):
        near = [step(0.1 * i, v=0.2, ped=2.5, fov=True) for i in range(4)]
        far = [step(1.0 + 0.1 * i, v=0.5) for i in range(4)]
        a = velocity_decrease(log_of(near + far))
        near2 = [step(0.1 * i, v=0.4, ped=2.5, fov=True) for i in range(4)]
        far2 = [step(1.0 + 0.1 * i, v=1.0) for i in range(4)]
        b = velocity_decrease(log_of(near2 + far2))
        assert a == pytest.approx(b)


class TestSummarize:
    def test_single_run_means_equal_run(self):
        near = [step(0.1 * i, v=0.3, ped=2.0, fov=True) for i in range(5)]
        far = [step(1.0 + 0.1 * i, v=0.6) for i in range(5)]
        lg = log_of(near + far)
        rep = summarize([lg])
        assert rep["mean_interventions"] == 0
        assert rep["mean_vel_decrease_pct"] == pytest.approx(50.0)
        assert rep["mean_time_min"] == pytest.approx(lg.duration / 60.0)

    def test_two_runs_average(self):
        a = log_of([step(0.0), step(1.0, collision=True)], route="a")
        b = log_of(
            [step(0.0), step(1.0, collision=True), step(4.0, collision=True), step(8.0, collision=True)],
            route="b",
        )
        rep = summarize([a, b])
        assert rep["mean_interventions"] == pytest.approx(2.0)

    def test_report_column_headers(self):
        lg = log_of([step(0.0), step(0.1)])
        text = format_report(summarize([lg]))
        assert "Interventions" in text and "Time (min)" in text and "Vel. decrease" in text

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            summarize([])


class TestEvalLogIO:
    def test_round_trip(self, tmp_path):
        lg = log_of([step(0.0), step(0.1, collision=True), step(0.2, ped=1.5, fov=True)])
        path = tmp_path / "log.jsonl"
        lg.save(path)
        back = EvalLog.load(path)
        assert back == lg

    def test_time_must_increase(self):
        with pytest.raises(ValueError):
            log_of([step(0.2), step(0.1)])
