"""Run the three pipeline stages on the synthetic dataset and read back
the stability summary.

Equivalent to ``fairbench all --dataset synth --splits 3 ...`` on the
command line.
"""

import csv
import sys
import tempfile
from pathlib import Path

from fairbench import cli

outdir = Path(sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp(prefix="fairbench-demo-"))
code = cli.main([
    "all", "--outdir", str(outdir), "--dataset", "synth", "--splits", "3",
    "--variant", "numerical_binary",
    "--algorithm", "logreg", "gnb", "two_nb", "prejudice_remover",
])
print("exit code", code)

# mean and spread of DI per algorithm over the three splits
with open(outdir / "analysis" / "stability_synth.csv", newline="") as fh:
    for row in csv.DictReader(fh):
        if row["metric"] == "di_bin":
            print(f"{row['algorithm']:18s} di_bin mean {float(row['mean']):.3f}  std {row['std']}")
print("artifacts under", outdir)
