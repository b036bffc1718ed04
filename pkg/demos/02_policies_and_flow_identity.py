"""Run the three diversion policies on one stream and balance the books.

Every sample path satisfies the exact conservation identity

    Q(t) = Q(0) + S(0,t) + J(t) - H(t)

queue = initial + net input + wasted tokens - diversions.  It holds
event-by-event with integer equality, which makes it a merciless
correctness check on the simulator and on any policy plugged into it.
"""

import numpy as np

from qadmit import (
    EventStream,
    ModelParams,
    flow_identity_residuals,
    generate_stream,
    run_simulation,
)

# a tiny hand trace first: arrival, token, token from an empty queue
tiny = EventStream.from_pairs([(1.0, 1), (2.0, -1), (3.0, -1)], horizon=4.0)
traj, trace, metrics = run_simulation(tiny, "admit-all")
print("hand trace (admit-all):")
print(f"  queue after each event : {traj.post_event_queue.tolist()}")
print(f"  wasted tokens          : {metrics.wasted_count} (the token at t=3)")
print(f"  residuals              : {flow_identity_residuals(traj, trace, tiny).tolist()}")

params = ModelParams(arrival_rate=0.9, divert_budget=0.5, window=8.0)
stream = generate_stream(params, horizon=50_000.0 + params.window, seed=11)

print("\npolicy comparison on one shared stream (horizon 5e4):")
print(f"{'policy':>16} {'mean Q':>8} {'divert rate':>12} {'wasted/t':>9} {'max Q':>6}")
for spec in ("admit-all", "threshold:auto", "windowed-drain"):
    traj, trace, m = run_simulation(stream, spec, t_end=50_000.0)
    assert not flow_identity_residuals(traj, trace, stream).any()
    print(
        f"{spec:>16} {m.mean_queue_event:8.2f} {m.diversion_rate:12.4f} "
        f"{m.wasted_rate:9.4f} {traj.post_event_queue.max():6d}"
    )

print("""
admit-all lets the overload through: the queue grows without bound (its
mean over a finite run is just the runaway transient).  Both diversion
policies stabilize the queue while spending less than the 0.5 budget.
The windowed heuristic holds the queue near 2 because it only ever
diverts arrivals whose absence provably cannot idle the server within
the lookahead window.
""")

# dominance: removing diversions can only raise the queue, pathwise
base, _, _ = run_simulation(stream, "admit-all", t_end=50_000.0)
drained, _, _ = run_simulation(stream, "windowed-drain", t_end=50_000.0)
print("admit-all dominates windowed-drain pathwise:",
      bool(np.all(base.post_event_queue >= drained.post_event_queue)))
