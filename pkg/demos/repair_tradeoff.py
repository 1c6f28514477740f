"""Sweep the repair level on synthetic data and watch accuracy trade
against disparate impact.

The synthetic table has a label bias of 0.4 between groups and a proxy
feature that leaks group membership. Repairing the numeric features pulls
the group distributions together. The logistic regression on top loses the
proxy signal and its predictions move toward parity.
"""

import numpy as np

from fairbench.data import synth_generate
from fairbench.interventions import LAMBDA_GRID
from fairbench.metrics import PredictionSet, full_metric_vector
from fairbench.preprocess import make_splits, make_variant
from fairbench.runner import RunSpec, train_and_predict

table = make_variant(synth_generate(3000, 0.4, seed=1), "numerical")
plans = make_splits(table.n_rows, n_splits=5, master_seed=7)
spec = RunSpec("synth", "numerical", "group", "di_remover", n_splits=5)
groups = table.frame["group"].to_numpy()

print(" lambda   acc    di_bin")
for lam in LAMBDA_GRID[::4]:
    acc, di = [], []
    for plan in plans:
        pred, _ = train_and_predict(table, spec, lam, plan.train_indices, plan.test_indices)
        te = plan.test_indices
        m = full_metric_vector(PredictionSet(table.labels[te], pred, groups[te], "priv"))
        acc.append(m["acc"])
        di.append(m["di_bin"])
    print(f"  {lam:4.2f}  {np.mean(acc):.3f}  {np.mean(di):.3f}")
