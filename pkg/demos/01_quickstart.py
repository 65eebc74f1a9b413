"""A first run: MOEA/D with the angle-based comparator on LIR-A.

LIR-A starts its random population far from the front, behind two thick
infeasible walls.  Plain constrained dominance tends to stall against the
first wall; the angle-based rule lets weakly infeasible but well-placed
children through early on and tightens to ordinary dominance later.

    python demos/01_quickstart.py
"""

from moead_acdp import AlgoConfig, get_problem, run

problem = get_problem("LIR-A")
print(f"{problem.name}: n={problem.n}, m={problem.m}")

# A reduced budget keeps this under a few seconds.
config = AlgoConfig(N=100, T=30, eval_budget=20_000, comparator="acdp", seed=1)
result = run(problem, config)

print(f"generations run   : {result.generations}")
print(f"evaluations used  : {result.evaluations}")
print(f"archive size      : {result.archive_size}")
print(f"IGD               : {result.metrics.igd:.5f}")
print(f"HV                : {result.metrics.hv:.5f}")
print(f"reference front   : {result.metrics.reference_front}")
