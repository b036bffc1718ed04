"""The threshold policy's exact stationary law and its heavy-traffic scaling.

A threshold policy diverts an arrival exactly when the queue sits at x, so
the queue is a birth-death chain truncated at x with a closed-form
stationary law.  That gives an analytic oracle for simulations and, swept
over arrival rates, the divergence law of the best online policy: the
optimal mean queue grows like log_{1/(1-p)} 1/(1-lambda).
"""

import numpy as np

from qadmit import (
    ModelParams,
    bd_stationary,
    generate_stream,
    min_feasible_threshold,
    online_scaling_table,
    run_simulation,
)

params = ModelParams(arrival_rate=0.9, divert_budget=0.5)
x_star = min_feasible_threshold(params)
sol = bd_stationary(params, x_star)
print(f"smallest feasible threshold at (lam=0.9, p=0.5): x* = {x_star}")
print(f"stationary law pi = {np.round(sol.probs, 5)}")
print(f"exact mean queue  = {sol.mean_queue:.6f}")
print(f"diversion rate    = {sol.diversion_rate:.6f} (budget 0.5)")

stream = generate_stream(params, 500_000.0, seed=23)
_, _, m = run_simulation(stream, "threshold:auto")
print(f"simulated mean    = {m.mean_queue_event:.6f} "
      f"({abs(m.mean_queue_event / sol.mean_queue - 1):.3%} off the oracle)")

print("\nonline scaling table, p = 0.5, lambda = 1 - 2^-k:")
print(f"{'k':>3} {'lambda':>12} {'x*':>4} {'mean queue':>11} {'log term':>9} {'ratio':>7}")
rows = online_scaling_table(0.5, [1 - 2.0**-k for k in range(4, 15)])
for k, row in zip(range(4, 15), rows):
    print(f"{k:3d} {row.arrival_rate:12.8f} {row.x_star:4d} "
          f"{row.q_opt:11.4f} {row.log_term:9.3f} {row.ratio:7.4f}")
print("\nthe ratio column drifting toward 1 is the online divergence law:")
print("no lookahead means the mean queue must grow with every halving of 1-lambda")
