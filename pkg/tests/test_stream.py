import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qadmit.errors import ConfigurationError, OutOfRangeError
from qadmit.stream import (
    EventStream,
    ModelParams,
    count_events,
    generate_stream,
    net_input,
    replication_seed,
    running_extreme,
    stream_to_csv,
)

PARAMS = ModelParams(arrival_rate=0.9, divert_budget=0.5, window=8.0)


def test_params_validation():
    with pytest.raises(ConfigurationError):
        ModelParams(arrival_rate=0.4, divert_budget=0.5)  # not overloaded
    with pytest.raises(ConfigurationError):
        ModelParams(arrival_rate=1.0, divert_budget=0.5)
    with pytest.raises(ConfigurationError):
        ModelParams(arrival_rate=0.9, divert_budget=1.2)
    with pytest.raises(ConfigurationError):
        ModelParams(arrival_rate=0.9, divert_budget=0.5, window=math.inf)
    p = ModelParams(0.9, 0.5)
    assert p.drift == pytest.approx(0.4)
    assert p.total_rate == pytest.approx(1.4)


def test_stream_invariants_enforced():
    with pytest.raises(ValueError):
        EventStream(np.array([1.0, 1.0]), np.array([1, -1]), 5.0)
    with pytest.raises(ValueError):
        EventStream(np.array([1.0, 2.0]), np.array([1, 2]), 5.0)
    with pytest.raises(ValueError):
        EventStream(np.array([1.0, 6.0]), np.array([1, -1]), 5.0)
    with pytest.raises(ValueError):
        EventStream(np.array([0.0]), np.array([1]), 5.0)


def test_determinism_byte_identical():
    a = generate_stream(PARAMS, 1e4, seed=123)
    b = generate_stream(PARAMS, 1e4, seed=123)
    assert a.times.tobytes() == b.times.tobytes()
    assert a.marks.tobytes() == b.marks.tobytes()
    c = generate_stream(PARAMS, 1e4, seed=124)
    assert a.times.tobytes() != c.times.tobytes()


def test_event_count_within_four_sigma():
    st_ = generate_stream(PARAMS, 1e4, seed=7)
    expected = PARAMS.total_rate * 1e4  # 1.4e4
    sigma = math.sqrt(expected)
    assert abs(len(st_) - expected) <= 4 * sigma


def test_mark_fraction_within_four_sigma():
    st_ = generate_stream(PARAMS, 1e4, seed=7)
    frac = (st_.marks == 1).mean()
    target = 0.9 / 1.4
    sigma = math.sqrt(target * (1 - target) / len(st_))
    assert abs(frac - target) <= 4 * sigma


def test_mean_drift_over_seeds():
    # E[S(0,t)] = drift * t; 10^4 independent replications
    t = 50.0
    vals = np.empty(10_000)
    for i in range(vals.size):
        s = generate_stream(PARAMS, t, replication_seed(99, i))
        vals[i] = s.prefix[-1]
    se = vals.std(ddof=1) / math.sqrt(vals.size)
    assert abs(vals.mean() - PARAMS.drift * t) <= 4 * se


def test_replication_seed_mixing():
    a = generate_stream(PARAMS, 100.0, replication_seed(5, 0))
    b = generate_stream(PARAMS, 100.0, replication_seed(5, 1))
    a2 = generate_stream(PARAMS, 100.0, replication_seed(5, 0))
    assert a.times.tobytes() != b.times.tobytes()
    assert a.times.tobytes() == a2.times.tobytes()
    assert replication_seed(5, 1, 2).entropy != replication_seed(5, 2, 1).entropy


def test_count_events_basics():
    s = EventStream.from_pairs([(1.0, 1), (2.0, 1), (3.0, -1)], horizon=5.0)
    assert count_events(s, 0.0) == 0
    assert count_events(s, 2.5) == 2
    assert count_events(s, 2.0) == 2  # closed on the right
    assert count_events(s, 3.0) == 3
    with pytest.raises(OutOfRangeError):
        count_events(s, 5.5)
    with pytest.raises(OutOfRangeError):
        count_events(s, -0.1)


def test_net_input_examples():
    s = EventStream.from_pairs([(1.0, 1), (2.0, 1), (3.0, -1)], horizon=5.0)
    assert net_input(s, 1.5, 1.5) == 0
    assert net_input(s, 0.0, 2.5) == 2
    assert net_input(s, 0.0, 3.0) == 1  # token at 3.0 included
    with pytest.raises(ValueError):
        net_input(s, 2.0, 1.0)


def test_net_input_counts_marks_exactly():
    s = generate_stream(PARAMS, 500.0, seed=2)
    rng = np.random.default_rng(0)
    for _ in range(50):
        a, b = sorted(rng.uniform(0, 500.0, size=2))
        na, nb = count_events(s, a), count_events(s, b)
        plus = int((s.marks[na:nb] == 1).sum())
        minus = int((s.marks[na:nb] == -1).sum())
        val = net_input(s, a, b)
        assert val == plus - minus
        assert abs(val) <= nb - na


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.0, 300.0), min_size=3, max_size=3))
def test_net_input_additive(points):
    s = generate_stream(PARAMS, 300.0, seed=11)
    a, b, c = sorted(points)
    assert net_input(s, a, b) + net_input(s, b, c) == net_input(s, a, c)


def test_running_extreme_examples():
    s = EventStream.from_pairs([(1.0, 1), (2.0, -1), (3.0, -1)], horizon=4.0)
    assert running_extreme(s, 3.5, 4.0, "min") == (0, 3.5)  # empty interval
    assert running_extreme(s, 0.0, 3.0, "min") == (-1, 3.0)  # walk path 1,0,-1
    assert running_extreme(s, 0.0, 3.0, "max") == (1, 1.0)
    with pytest.raises(ValueError):
        running_extreme(s, 0.0, 3.0, "sup")


def test_running_extreme_first_epoch_ties():
    s = EventStream.from_pairs([(1.0, 1), (2.0, -1), (3.0, 1), (4.0, -1)], horizon=5.0)
    # walk 1,0,1,0: max 1 first attained at 1.0, min 0 first at 2.0
    assert running_extreme(s, 0.0, 5.0, "max") == (1, 1.0)
    assert running_extreme(s, 0.0, 5.0, "min") == (0, 2.0)


def test_stream_csv_dump(tmp_path):
    s = generate_stream(PARAMS, 50.0, seed=3)
    path = tmp_path / "stream.csv"
    stream_to_csv(s, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "n,time,mark"
    assert len(lines) == len(s) + 1
    n, t, mark = lines[1].split(",")
    assert n == "1"
    assert float(t) == s.times[0]
    assert int(mark) == s.marks[0]


def test_generate_stream_bad_args():
    with pytest.raises(ConfigurationError):
        generate_stream(PARAMS, math.inf, seed=0)
    with pytest.raises(ConfigurationError):
        generate_stream(PARAMS, -1.0, seed=0)


def test_tie_nudging_restores_strict_order():
    from qadmit.stream import _nudge_ties

    times = np.array([1.0, 2.0, 2.0, 2.0, 3.0])
    fixed = _nudge_ties(times.copy(), horizon=3.0)
    assert np.all(np.diff(fixed) > 0)
    assert fixed.size == 5
    assert fixed[1] == 2.0 and fixed[2] == np.nextafter(2.0, np.inf)
    # a tie at the horizon edge gets nudged out and dropped
    edge = np.array([1.0, 3.0, 3.0])
    fixed = _nudge_ties(edge.copy(), horizon=3.0)
    assert fixed.tolist() == [1.0, 3.0]
