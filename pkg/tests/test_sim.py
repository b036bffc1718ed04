import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qadmit.analytic import bd_stationary
from qadmit.errors import ConfigurationError, OutOfRangeError
from qadmit.policy import ThresholdPolicy, WindowedDrainPolicy
from qadmit.sim import (
    flow_identity_residual,
    flow_identity_residuals,
    last_low_time,
    occupancy_fraction,
    run_simulation,
    window_diversions,
)
from qadmit.stream import EventStream, ModelParams, generate_stream, replication_seed

PARAMS = ModelParams(0.9, 0.5, window=4.0)


def hand_stream(pairs, horizon, params=None):
    return EventStream.from_pairs(pairs, horizon, params)


def test_admit_all_hand_trace():
    s = hand_stream([(1.0, 1), (2.0, -1), (3.0, -1)], 4.0)
    traj, trace, m = run_simulation(s, "admit-all")
    assert traj.post_event_queue.tolist() == [1, 0, 0]
    assert traj.pre_event_queue.tolist() == [0, 1, 0]
    assert m.wasted_count == 1  # token at t=3 finds an empty queue
    assert trace.count() == 0


def test_threshold_zero_hand_counts():
    s = generate_stream(PARAMS, 500.0, seed=4)
    traj, trace, m = run_simulation(s, "threshold:x=0")
    assert not traj.post_event_queue.any()
    assert m.wasted_count == int((s.marks == -1).sum())
    assert trace.count() == int((s.marks == 1).sum())


def test_token_only_stream_from_q0():
    s = hand_stream([(1.0, -1), (2.0, -1), (3.0, -1)], 4.0)
    traj, trace, _ = run_simulation(s, "admit-all", q0=10)
    assert traj.post_event_queue.tolist() == [9, 8, 7]
    assert flow_identity_residual(traj, trace, s, 4.0) == 0


def test_unknown_policy_handle():
    s = hand_stream([(1.0, 1)], 2.0)
    with pytest.raises(ConfigurationError):
        run_simulation(s, "drain-all")
    with pytest.raises(ConfigurationError):
        run_simulation(s, object())
    with pytest.raises(ValueError):
        run_simulation(s, "admit-all", q0=-1)


def test_threshold_mean_queue_matches_oracle():
    params = ModelParams(0.9, 0.5)
    sol = bd_stationary(params, 2)
    means = []
    for i in range(4):
        s = generate_stream(params, 2e5, replication_seed(50, i))
        _, _, m = run_simulation(s, "threshold:auto")
        means.append(m.mean_queue_event)
    assert np.mean(means) == pytest.approx(sol.mean_queue, rel=0.02)


def test_event_and_time_averages_agree_for_poisson_sampling():
    # PASTA: event-sampled and time-integrated queue averages coincide
    s = generate_stream(PARAMS, 2e5, seed=51)
    _, _, m = run_simulation(s, "threshold:auto")
    assert m.mean_queue_event == pytest.approx(m.mean_queue_time, rel=0.02)


def test_flow_identity_zero_everywhere_mixed_policies():
    for i, spec in enumerate(
        ["admit-all", "threshold:x=0", "threshold:auto", "windowed-drain"] * 3
    ):
        params = ModelParams(0.9, 0.5, window=3.0)
        s = generate_stream(params, 500.0 + 3.0, replication_seed(60, i))
        q0 = i % 5
        traj, trace, _ = run_simulation(s, spec, q0=q0, t_end=500.0)
        assert not flow_identity_residuals(traj, trace, s).any()
        for t in (0.0, 123.4, 500.0):
            assert flow_identity_residual(traj, trace, s, t) == 0


def test_flow_identity_empty_stream():
    s = hand_stream([], 5.0)
    traj, trace, m = run_simulation(s, "admit-all", q0=3)
    assert flow_identity_residual(traj, trace, s, 2.0) == 0
    assert m.n_events == 0


@settings(max_examples=40, deadline=None)
@given(
    marks=st.lists(st.sampled_from([1, -1]), min_size=1, max_size=60),
    q0=st.integers(0, 6),
    x=st.integers(0, 4),
)
def test_flow_identity_property_hand_streams(marks, q0, x):
    times = np.arange(1.0, len(marks) + 1.0)
    s = EventStream(times, np.array(marks), horizon=len(marks) + 1.0)
    traj, trace, _ = run_simulation(s, ThresholdPolicy(x), q0=q0)
    assert not flow_identity_residuals(traj, trace, s).any()
    # unit jumps and nonnegativity
    post, pre = traj.post_event_queue, traj.pre_event_queue
    assert np.all(np.abs(post - pre) <= 1)
    assert post.min(initial=q0) >= 0


class _ReplayPolicy:
    """Feed back a fixed arrival-decision sequence."""

    lookahead = 0.0

    def __init__(self, decisions):
        self.decisions = list(decisions)
        self._i = 0

    def reset(self):
        self._i = 0

    def decide(self, state):
        d = self.decisions[self._i]
        self._i += 1
        return bool(d)


def test_removing_one_diversion_dominates_pathwise():
    params = ModelParams(0.9, 0.5, window=2.0)
    s = generate_stream(params, 120.0 + 2.0, replication_seed(70, 0))
    traj, trace, _ = run_simulation(s, "threshold:auto", t_end=120.0)
    n = traj.pre_event_queue.size
    arrivals = np.flatnonzero(s.marks[:n] == 1)
    base_decisions = trace.decisions[arrivals]
    for j in np.flatnonzero(base_decisions)[:10]:
        flipped = base_decisions.copy()
        flipped[j] = 0
        alt, alt_trace, _ = run_simulation(s, _ReplayPolicy(flipped), t_end=120.0)
        assert np.all(alt.post_event_queue >= traj.post_event_queue)
        assert not flow_identity_residuals(alt, alt_trace, s).any()


def test_window_diversions():
    s = generate_stream(PARAMS, 300.0, seed=71)
    traj, trace, _ = run_simulation(s, "threshold:x=0")
    assert window_diversions(trace, s, 50.0, 50.0) == 0
    arrivals_in = int(
        ((s.marks == 1) & (s.times > 50.0) & (s.times <= 120.0)).sum()
    )
    assert window_diversions(trace, s, 50.0, 120.0) == arrivals_in
    _, trace_all, _ = run_simulation(s, "admit-all")
    assert window_diversions(trace_all, s, 0.0, 300.0) == 0
    with pytest.raises(ValueError):
        window_diversions(trace, s, 10.0, 5.0)


def test_occupancy_fraction_edges_and_hand_value():
    s = hand_stream([(1.0, 1), (2.0, 1), (3.0, -1)], 4.0)
    traj, _, _ = run_simulation(s, "admit-all")
    assert occupancy_fraction(traj, s, 10, 0.0, 4.0) == 1.0
    assert occupancy_fraction(traj, s, -1, 0.0, 4.0) == 0.0
    # Q path: 0 on [0,1), 1 on [1,2), 2 on [2,3), 1 on [3,4] -> Q<=1 on 3 of 4
    assert occupancy_fraction(traj, s, 1, 0.0, 4.0) == pytest.approx(0.75)
    with pytest.raises(ValueError):
        occupancy_fraction(traj, s, 1, 2.0, 2.0)


def test_occupancy_matches_stationary_mass():
    params = ModelParams(0.9, 0.5)
    sol = bd_stationary(params, 2)
    s = generate_stream(params, 1e5, seed=72)
    traj, _, _ = run_simulation(s, "threshold:auto")
    frac = occupancy_fraction(traj, s, 1, 1e4, 1e5)
    assert frac == pytest.approx(float(sol.probs[:2].sum()), abs=0.02)
    # time below twice the stationary mean is at least one half (Markov)
    assert occupancy_fraction(traj, s, 2 * sol.mean_queue, 1e4, 1e5) >= 0.5


def test_last_low_time_cases():
    s = hand_stream([(1.0, 1), (2.0, 1), (3.5, -1), (4.0, 1)], 6.0)
    traj, _, _ = run_simulation(s, "admit-all", q0=0)
    # Q: 0,[0,1) 1,[1,2) 2,[2,3.5) 1,[3.5,4) 2,[4,6]
    assert last_low_time(traj, s, -1, 0.0, 6.0) == 0.0  # never that low
    assert last_low_time(traj, s, 10, 0.0, 6.0) == 6.0  # always low -> duration
    # last dip to <=1 is [3.5, 4.0); sup of the low set is the jump epoch 4.0
    assert last_low_time(traj, s, 1, 0.0, 6.0) == pytest.approx(4.0)
    with pytest.raises(ValueError):
        last_low_time(traj, s, 1, 0.0, 0.0)


def test_last_low_time_five_event_dip():
    # dip below the level at relative 3.2, recovery at 3.5, window of 10
    s = hand_stream(
        [(1.0, 1), (2.0, 1), (3.2, -1), (3.5, 1), (9.0, 1)], 12.0
    )
    traj, _, _ = run_simulation(s, "admit-all", q0=1)
    # Q: 1,2,3 then 2 on [3.2,3.5), 3 on [3.5,9), 4 after
    assert last_low_time(traj, s, 2, 0.0, 10.0) == pytest.approx(3.5)


def test_last_low_time_out_of_range():
    s = hand_stream([(1.0, 1)], 2.0)
    traj, _, _ = run_simulation(s, "admit-all")
    with pytest.raises(OutOfRangeError):
        last_low_time(traj, s, 1, 0.0, 3.0)


def test_last_low_time_window_right_open():
    # a drop to the low level exactly at the window end lies outside [0, B)
    s = hand_stream([(1.0, 1), (2.0, 1), (5.0, -1)], 6.0)
    traj, _, _ = run_simulation(s, "admit-all", q0=0)
    # Q: 0 on [0,1), 1 on [1,2), 2 on [2,5), 1 at 5.0 = window end
    assert last_low_time(traj, s, 1, 0.0, 5.0) == pytest.approx(2.0)
    # widening the window past the drop picks it up again
    assert last_low_time(traj, s, 1, 0.0, 6.0) == pytest.approx(6.0)


def test_metrics_diversion_rate_uses_nominal_event_rate():
    params = ModelParams(0.9, 0.5)
    s = generate_stream(params, 5e4, seed=73)
    _, trace, m = run_simulation(s, "threshold:auto", burn_in=0.0)
    expected = params.total_rate * trace.count() / m.n_events
    assert m.diversion_rate == pytest.approx(expected)
    sol = bd_stationary(params, 2)
    assert m.diversion_rate == pytest.approx(sol.diversion_rate, abs=0.02)


def test_burn_in_discards_prefix():
    params = ModelParams(0.9, 0.5)
    s = generate_stream(params, 2e4, seed=74)
    traj, trace, m = run_simulation(s, "threshold:auto", q0=0, burn_in=0.5)
    n = m.n_events
    assert m.n_burned == n // 2
    assert m.mean_queue_event == pytest.approx(
        traj.pre_event_queue[m.n_burned:].mean()
    )
    # wasted_count stays a raw full-path quantity
    assert m.wasted_count == int(
        ((s.marks[:n] == -1) & (traj.pre_event_queue == 0)).sum()
    )


def test_t_end_truncates_and_lookahead_sees_past_it():
    params = ModelParams(0.9, 0.5, window=5.0)
    s = generate_stream(params, 105.0, seed=75)
    traj, trace, m = run_simulation(s, "windowed-drain", t_end=100.0)
    assert traj.pre_event_queue.size == int((s.times <= 100.0).sum())
    assert traj.t_end == 100.0
    with pytest.raises(OutOfRangeError):
        flow_identity_residual(traj, trace, s, 101.0)


def test_fast_paths_match_generic_reference():
    params = ModelParams(0.9, 0.5, window=4.0)
    s = generate_stream(params, 800.0 + 4.0, seed=76)

    class GenericThreshold:
        lookahead = 0.0

        def decide(self, state):
            from qadmit.policy import threshold_decide

            return threshold_decide(2, state)

    class GenericDrain:
        def __init__(self):
            self.inner = WindowedDrainPolicy(params)
            self.lookahead = params.window

        def reset(self):
            self.inner.reset()

        def decide(self, state):
            self.inner.budget.refill_to(state.now)
            from qadmit.policy import windowed_drain_decide

            return windowed_drain_decide(params, self.inner.budget, state)

    for fast, generic in (
        (ThresholdPolicy(2), GenericThreshold()),
        (WindowedDrainPolicy(params), GenericDrain()),
    ):
        tf, hf, _ = run_simulation(s, fast, t_end=800.0)
        tg, hg, _ = run_simulation(s, generic, t_end=800.0)
        assert np.array_equal(hf.decisions, hg.decisions)
        assert np.array_equal(tf.post_event_queue, tg.post_event_queue)
