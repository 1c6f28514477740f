"""Fairness measures on a hand-built prediction set.

Three groups; "p" is privileged. The binary and per-value groupings give
different disparate impact because the unprivileged groups differ in size.
"""

import numpy as np

from fairbench.metrics import REGISTRY, PredictionSet, disparate_impact, full_metric_vector

# privileged: 8 of 10 predicted positive; B: 4 of 10; A: 18 of 30
s = np.array(["p"] * 10 + ["B"] * 10 + ["A"] * 30)
y_pred = np.r_[[1] * 8 + [0] * 2, [1] * 4 + [0] * 6, [1] * 18 + [0] * 12]
y_true = np.random.default_rng(0).integers(0, 2, len(s))

ps = PredictionSet(y_true, y_pred, s, privileged="p")
print("DI pooled     ", disparate_impact(ps, "binary"))   # (22/40) / 0.8
print("DI per value  ", disparate_impact(ps, "average"))  # mean of 0.5 and 0.75

vector = full_metric_vector(ps)
print(f"\n{len(REGISTRY)} measures:")
for name in REGISTRY:
    value = vector[name]
    print(f"  {name:16s} {'undefined' if value is None else f'{value:.4f}'}")
