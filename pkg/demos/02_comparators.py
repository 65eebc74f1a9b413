"""Same problem, same seeds, five ways of handling constraints.

Every comparator sees an identical random stream for variation, so any
difference in the outcome comes from the replacement rule alone.  The
summary ends with a rank-sum test of each baseline against ACDP.

    python demos/02_comparators.py [problem] [runs]
"""

import sys

import numpy as np

from moead_acdp import COMPARATORS, AlgoConfig, get_problem, run
from moead_acdp.stats import compare_samples, summarize

problem = get_problem(sys.argv[1] if len(sys.argv) > 1 else "LIR-B")
runs = int(sys.argv[2]) if len(sys.argv) > 2 else 5

scores = {}
for name in COMPARATORS:
    values = []
    for seed in range(runs):
        cfg = AlgoConfig(N=100, eval_budget=20_000, comparator=name, seed=seed)
        values.append(run(problem, cfg).metrics.igd)
    scores[name] = np.array(values)
    s = summarize(values)
    print(f"{name:8s} IGD mean {s.mean:.4g}  median {s.median:.4g}  std {s.std:.2g}")

print("\nagainst acdp (lower IGD is better):")
for name, values in scores.items():
    if name == "acdp":
        continue
    p, mark = compare_samples(values, scores["acdp"])
    print(f"  {name:8s} p={p:.3g}  {mark}")
