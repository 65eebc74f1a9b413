"""Registering your own constrained problem.

The evaluator returns objectives, inequality values (``g >= 0`` means
satisfied) and equality values.  Here the problem is a simple two-objective
bowl with one circular infeasible hole punched into its front.  With no
front generator supplied, the reference front comes from a dense Sobol scan.
"""

import numpy as np

from moead_acdp import AlgoConfig, get_problem, register_problem, run


def bowl(x):
    d = float(np.sum((x[1:] - 0.5) ** 2))
    f = np.array([x[0] + d, 1.0 - np.sqrt(x[0]) + d])
    hole = (f[0] - 0.5) ** 2 + (f[1] - 0.3) ** 2 - 0.1**2
    return f, np.array([hole]), None


register_problem("BOWL-HOLE", n=3, m=2, bounds=(0.0, 1.0), evaluator=bowl, replace=True)
problem = get_problem("BOWL-HOLE")

front = problem.reference_front(200)
print(f"reference front: {len(front)} points ({front.source})")

for comparator in ("acdp", "cdp"):
    res = run(problem, AlgoConfig(N=50, eval_budget=10_000, comparator=comparator, seed=3))
    print(f"{comparator:5s} IGD={res.metrics.igd:.4f} HV={res.metrics.hv:.4f} size={res.archive_size}")
