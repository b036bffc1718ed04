"""Discrete-event engine: fold a policy over a stream, produce the queue path.

Per-event dynamics: an admitted arrival increments the queue, a service
token decrements it if positive (otherwise the token is wasted), a diverted
arrival leaves it unchanged.  The engine keeps the full pre/post-event
queue path so that the flow identity

    Q(t) = Q(0) + S(0,t) + J(t) - H(t)

can be checked exactly at every epoch, and computes the two performance
functionals (event-average queue, diversion rate) plus the wasted-token
count.

The built-in policies run through allocation-free fast paths (the windowed
heuristic via a sliding-window minimum over the walk's prefix sums); any
other object with a ``decide(state)`` method runs through a generic path
that materializes a ``PolicyState`` per arrival.  Fast and generic paths
are decision-for-decision identical, which the tests pin down.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, OutOfRangeError
from .policy import (
    AdmitAllPolicy,
    DecisionTrace,
    PolicyState,
    ThresholdPolicy,
    WindowedDrainPolicy,
    make_policy,
)
from .stream import EventStream, count_events

DEFAULT_BURN_IN = 0.1


@dataclass
class QueueTrajectory:
    """Piecewise-constant queue path sampled at event epochs.

    ``pre_event_queue[n]`` is Q just before event n, ``post_event_queue[n]``
    just after; the path is right-continuous and equals ``initial`` before
    the first event.  Covers events up to ``t_end``.
    """

    initial: int
    pre_event_queue: np.ndarray
    post_event_queue: np.ndarray
    t_end: float

    def queue_at(self, stream: EventStream, t: float) -> int:
        """Queue length at time t (right-continuous)."""
        if t > self.t_end:
            raise OutOfRangeError(f"t={t} beyond simulated range {self.t_end}")
        n = count_events(stream, t)
        if n == 0:
            return self.initial
        return int(self.post_event_queue[n - 1])


@dataclass
class SimMetrics:
    """Run-level summaries.

    ``mean_queue_event`` and ``mean_queue_time`` are the event-sampled and
    time-integral queue averages; both honor the burn-in, as does
    ``diversion_rate``.  ``wasted_count`` is the raw J(t_end) from time 0
    (it feeds the flow identity, so it is never trimmed).
    """

    mean_queue_event: float
    mean_queue_time: float
    diversion_rate: float
    wasted_count: int
    wasted_rate: float
    n_events: int
    n_burned: int


def _simulate_admit_all(marks: np.ndarray, q0: int):
    # Lindley recursion in closed form: reflection lifts the free walk by
    # the running amount of wasted tokens.
    base = q0 + np.cumsum(marks)
    lift = -np.minimum(np.minimum.accumulate(base), 0)
    post = base + lift
    pre = np.empty_like(post)
    pre[0] = q0
    pre[1:] = post[:-1]
    return pre, post, np.zeros(marks.size, dtype=np.int8)


def _simulate_threshold(marks: np.ndarray, q0: int, x: int):
    marks_l = marks.tolist()
    n = len(marks_l)
    pre = np.empty(n, dtype=np.int64)
    post = np.empty(n, dtype=np.int64)
    hs = np.zeros(n, dtype=np.int8)
    q = q0
    for i in range(n):
        pre[i] = q
        mk = marks_l[i]
        if mk == 1:
            if q == x:
                hs[i] = 1
            else:
                q += 1
        elif q > 0:
            q -= 1
        post[i] = q
    return pre, post, hs


def _window_end_indices(times: np.ndarray, window: float, n_sim: int) -> np.ndarray:
    # m[i] = index of the last event with Z <= Z_i + window, over the whole
    # stream (windows of late in-horizon events may reach past t_end)
    return np.searchsorted(times, times[:n_sim] + window, side="right") - 1


def _sliding_prefix_min(prefix: np.ndarray, ends: np.ndarray) -> list:
    """min of prefix over indices [i+2, ends[i]+1] for each event i.

    None where the range is empty.  ``ends`` must be nondecreasing, which
    holds because event times are sorted.
    """
    mins: list = [None] * ends.size
    dq: deque[int] = deque()
    right = 1  # next prefix index to ingest
    pl = prefix.tolist()
    for i in range(ends.size):
        hi = ends[i] + 1
        while right <= hi:
            v = pl[right]
            while dq and pl[dq[-1]] >= v:
                dq.pop()
            dq.append(right)
            right += 1
        lo = i + 2
        while dq and dq[0] < lo:
            dq.popleft()
        if dq and dq[0] <= hi:
            mins[i] = pl[dq[0]]
    return mins


def _simulate_windowed_drain(stream: EventStream, policy, q0: int, n_sim: int):
    params = policy.params
    w = params.window
    ends = _window_end_indices(stream.times, w, n_sim)
    mins = _sliding_prefix_min(stream.prefix, ends)
    prefix_l = stream.prefix.tolist()
    times_l = stream.times[:n_sim].tolist()
    marks_l = stream.marks[:n_sim].tolist()

    pre = np.empty(n_sim, dtype=np.int64)
    post = np.empty(n_sim, dtype=np.int64)
    hs = np.zeros(n_sim, dtype=np.int8)
    q = q0
    cap = policy.budget.cap
    rate = params.divert_budget
    tokens = policy.budget.tokens
    last_t = policy.budget.last_time
    for i in range(n_sim):
        pre[i] = q
        if marks_l[i] == 1:
            t = times_l[i]
            if t > last_t:
                tokens = min(cap, tokens + rate * (t - last_t))
                last_t = t
            divert = False
            if tokens >= 1.0:
                m = mins[i]
                low = 0 if m is None else min(0, m - prefix_l[i + 1])
                if q + low >= 1:
                    divert = True
                    tokens -= 1.0
            if divert:
                hs[i] = 1
            else:
                q += 1
        elif q > 0:
            q -= 1
        post[i] = q
    policy.budget.tokens = tokens
    policy.budget.last_time = last_t
    return pre, post, hs


def _simulate_generic(stream: EventStream, policy, q0: int, n_sim: int):
    w = float(getattr(policy, "lookahead", 0.0))
    times = stream.times
    marks_l = stream.marks[:n_sim].tolist()
    ends = _window_end_indices(times, w, n_sim)
    pre = np.empty(n_sim, dtype=np.int64)
    post = np.empty(n_sim, dtype=np.int64)
    hs = np.zeros(n_sim, dtype=np.int8)
    q = q0
    for i in range(n_sim):
        pre[i] = q
        mk = marks_l[i]
        if mk == 1:
            t = float(times[i])
            win = [(float(times[j]) - t, int(stream.marks[j])) for j in range(i, ends[i] + 1)]
            state = PolicyState(queue=q, window=win, now=t, current_mark=1)
            if policy.decide(state):
                hs[i] = 1
            else:
                q += 1
        elif q > 0:
            q -= 1
        post[i] = q
    return pre, post, hs


def run_simulation(
    stream: EventStream,
    policy,
    q0: int = 0,
    t_end: float | None = None,
    burn_in: float = DEFAULT_BURN_IN,
):
    """Apply a policy to a stream and return (trajectory, trace, metrics).

    ``policy`` is a selection string (resolved against ``stream.params``)
    or a policy object.  Events up to ``t_end`` (default: the stream
    horizon) are simulated; a longer stream lets lookahead policies see
    full windows near the end.  ``burn_in`` is the fraction of leading
    events excluded from the stationary metrics.
    """
    if q0 < 0:
        raise ValueError(f"q0 must be >= 0, got {q0}")
    if isinstance(policy, str):
        policy = make_policy(policy, stream.params)
    if hasattr(policy, "reset"):
        policy.reset()
    if t_end is None:
        t_end = stream.horizon
    n_sim = count_events(stream, t_end)

    if n_sim == 0:
        pre = np.empty(0, dtype=np.int64)
        post = np.empty(0, dtype=np.int64)
        hs = np.zeros(0, dtype=np.int8)
    elif isinstance(policy, AdmitAllPolicy):
        pre, post, hs = _simulate_admit_all(stream.marks[:n_sim], q0)
    elif isinstance(policy, ThresholdPolicy):
        pre, post, hs = _simulate_threshold(stream.marks[:n_sim], q0, policy.x)
    elif isinstance(policy, WindowedDrainPolicy):
        pre, post, hs = _simulate_windowed_drain(stream, policy, q0, n_sim)
    elif hasattr(policy, "decide"):
        pre, post, hs = _simulate_generic(stream, policy, q0, n_sim)
    else:
        raise ConfigurationError(f"policy handle {policy!r} has no decide()")

    trajectory = QueueTrajectory(
        initial=q0, pre_event_queue=pre, post_event_queue=post, t_end=float(t_end)
    )
    trace = DecisionTrace(decisions=hs)
    metrics = _compute_metrics(stream, trajectory, trace, burn_in)
    return trajectory, trace, metrics


def _compute_metrics(
    stream: EventStream, trajectory: QueueTrajectory, trace, burn_in: float
) -> SimMetrics:
    pre = trajectory.pre_event_queue
    post = trajectory.post_event_queue
    hs = trace.decisions
    n = pre.size
    t_end = trajectory.t_end
    wasted_mask = (stream.marks[:n] == -1) & (pre == 0)
    wasted_count = int(wasted_mask.sum())

    if n == 0:
        return SimMetrics(
            mean_queue_event=float("nan"),
            mean_queue_time=float(trajectory.initial),
            diversion_rate=0.0,
            wasted_count=0,
            wasted_rate=0.0,
            n_events=0,
            n_burned=0,
        )

    n_burn = int(burn_in * n)
    t_start = float(stream.times[n_burn - 1]) if n_burn >= 1 else 0.0
    mean_event = float(pre[n_burn:].mean())

    bounds = np.concatenate(([t_start], stream.times[n_burn:n], [t_end]))
    values = np.concatenate(([post[n_burn - 1] if n_burn >= 1 else trajectory.initial], post[n_burn:]))
    dts = np.diff(bounds)
    mean_time = float((values * dts).sum() / (t_end - t_start))

    n_used = n - n_burn
    if stream.params is not None:
        event_rate = stream.params.total_rate
    else:
        event_rate = n_used / (t_end - t_start) if t_end > t_start else 0.0
    diversion_rate = event_rate * float(hs[n_burn:].sum()) / n_used if n_used else 0.0

    return SimMetrics(
        mean_queue_event=mean_event,
        mean_queue_time=mean_time,
        diversion_rate=diversion_rate,
        wasted_count=wasted_count,
        wasted_rate=wasted_count / t_end if t_end > 0 else 0.0,
        n_events=n,
        n_burned=n_burn,
    )


def flow_identity_residual(
    trajectory: QueueTrajectory, trace, stream: EventStream, t: float
) -> int:
    """Q(t) - [Q(0) + S(0,t) + J(t) - H(t)]; zero on every lawful path."""
    if t > trajectory.t_end:
        raise OutOfRangeError(f"t={t} beyond simulated range {trajectory.t_end}")
    n = count_events(stream, t)
    q_t = int(trajectory.post_event_queue[n - 1]) if n >= 1 else trajectory.initial
    s = int(stream.prefix[n])
    pre = trajectory.pre_event_queue[:n]
    j = int(((stream.marks[:n] == -1) & (pre == 0)).sum())
    h = int(trace.decisions[:n].sum())
    return q_t - (trajectory.initial + s + j - h)


def flow_identity_residuals(trajectory: QueueTrajectory, trace, stream: EventStream) -> np.ndarray:
    """Residuals at every simulated event epoch at once."""
    n = trajectory.pre_event_queue.size
    s = stream.prefix[1 : n + 1]
    j = np.cumsum((stream.marks[:n] == -1) & (trajectory.pre_event_queue == 0))
    h = np.cumsum(trace.decisions[:n], dtype=np.int64)
    return trajectory.post_event_queue - (trajectory.initial + s + j - h)


def window_diversions(trace, stream: EventStream, a: float, b: float) -> int:
    """Number of diversions among events in (a, b]."""
    if a > b:
        raise ValueError(f"need a <= b, got a={a}, b={b}")
    n_total = trace.decisions.size
    na = min(count_events(stream, a), n_total)
    nb = min(count_events(stream, b), n_total)
    return int(trace.decisions[na:nb].sum())


def _segments(trajectory: QueueTrajectory, stream: EventStream, t0: float, t1: float):
    """Boundaries and queue values of the piecewise-constant path on [t0, t1]."""
    n0 = count_events(stream, t0)
    n1 = count_events(stream, t1)
    q_at_t0 = trajectory.post_event_queue[n0 - 1] if n0 >= 1 else trajectory.initial
    bounds = np.concatenate(([t0], stream.times[n0:n1], [t1]))
    values = np.concatenate(([q_at_t0], trajectory.post_event_queue[n0:n1]))
    return bounds, values


def occupancy_fraction(
    trajectory: QueueTrajectory,
    stream: EventStream,
    q_level: float,
    t0: float,
    t1: float,
) -> float:
    """Exact fraction of [t0, t1] during which Q(t) <= q_level."""
    if not t0 < t1:
        raise ValueError(f"need t0 < t1, got t0={t0}, t1={t1}")
    if t1 > trajectory.t_end:
        raise OutOfRangeError(f"t1={t1} beyond simulated range {trajectory.t_end}")
    bounds, values = _segments(trajectory, stream, t0, t1)
    dts = np.diff(bounds)
    return float(dts[values <= q_level].sum() / (t1 - t0))


def last_low_time(
    trajectory: QueueTrajectory,
    stream: EventStream,
    q_level: float,
    t_start: float,
    duration: float,
) -> float:
    """Last time in [0, duration) at which Q(t_start + .) sits at or below q_level.

    Returns the supremum of the low set relative to ``t_start`` (an event
    epoch or the window length), or 0.0 if the queue stays above the level
    throughout.
    """
    if duration <= 0:
        raise ValueError(f"duration must be > 0, got {duration}")
    t_stop = t_start + duration
    if t_stop > trajectory.t_end:
        raise OutOfRangeError(f"window end {t_stop} beyond simulated range {trajectory.t_end}")
    bounds, values = _segments(trajectory, stream, t_start, t_stop)
    # the window is right-open: a jump exactly at its end lies outside, and
    # its zero-length segment must not count as time spent low
    low = np.flatnonzero((values <= q_level) & (np.diff(bounds) > 0))
    if low.size == 0:
        return 0.0
    return float(bounds[low[-1] + 1] - t_start)
