"""Peeking inside a run with a per-generation callback.

The callback receives the live working set.  Here it records the angle
threshold, the share of feasible subproblems and how often a child replaced
nothing, one or two incumbents.  Watch the threshold open up to a right
angle, after which the comparator behaves like constrained dominance.
"""

import math

from moead_acdp import AlgoConfig, get_problem, run

log = []


def record(state):
    if state.context is None:
        return
    feasible = float((state.CV == 0).mean())
    log.append((state.generation, state.context.theta, feasible, state.replacements.copy()))


cfg = AlgoConfig(N=100, eval_budget=20_000, comparator="acdp", seed=5)
run(get_problem("LIR-A"), cfg, callback=record, compute_metrics=False)

print(" gen   theta/(pi/2)  feasible")
for gen, theta, feasible, _ in log[:: max(len(log) // 12, 1)]:
    print(f"{gen:4d}   {theta / (math.pi / 2):10.4f}  {feasible:8.2f}")
print("cumulative replacements per child (0, 1, 2):", log[-1][3].tolist())
