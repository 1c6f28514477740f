"""Synthetic stand-ins shaped like the public raw files (which are not bundled)."""

from __future__ import annotations

import numpy as np

from fairbench._io import make_rng

_GERMAN_CODES = {
    "checking_status": ["A11", "A12", "A13", "A14"],
    "credit_history": ["A30", "A31", "A32", "A33", "A34"],
    "purpose": ["A40", "A41", "A42", "A43", "A44", "A45", "A46", "A48", "A49", "A410"],
    "savings": ["A61", "A62", "A63", "A64", "A65"],
    "employment": ["A71", "A72", "A73", "A74", "A75"],
    "personal_status": ["A91", "A92", "A93", "A94"],
    "other_debtors": ["A101", "A102", "A103"],
    "property": ["A121", "A122", "A123", "A124"],
    "other_installment_plans": ["A141", "A142", "A143"],
    "housing": ["A151", "A152", "A153"],
    "job": ["A171", "A172", "A173", "A174"],
    "telephone": ["A191", "A192"],
    "foreign_worker": ["A201", "A202"],
}


def german_like_uci_text(n: int = 1000, seed: int = 0) -> str:
    """Whitespace-delimited rows in the german.data layout (20 attributes + credit).

    Roughly 70% good risks; checking status, duration, amount and age carry
    signal so learners have something to fit.
    """
    rng = make_rng(seed)
    good = rng.random(n) < 0.7
    rows = []
    for i in range(n):
        g = bool(good[i])
        cat = {k: v[int(rng.integers(0, len(v)))] for k, v in _GERMAN_CODES.items()}
        if rng.random() < 0.5:
            cat["checking_status"] = "A14" if g else "A11"
        duration = int(np.clip(rng.normal(18 if g else 26, 10), 4, 72))
        amount = int(np.clip(rng.lognormal(7.8 if g else 8.1, 0.7), 250, 18424))
        age = int(np.clip(rng.normal(37 if g else 33, 11), 19, 75))
        row = [
            cat["checking_status"], duration, cat["credit_history"], cat["purpose"], amount,
            cat["savings"], cat["employment"], int(rng.integers(1, 5)), cat["personal_status"],
            cat["other_debtors"], int(rng.integers(1, 5)), cat["property"], age,
            cat["other_installment_plans"], cat["housing"], int(rng.integers(1, 5)), cat["job"],
            int(rng.integers(1, 3)), cat["telephone"], cat["foreign_worker"], 1 if g else 2,
        ]
        rows.append(" ".join(str(v) for v in row))
    return "\n".join(rows) + "\n"


def write_german_like(data_dir, n: int = 1000, seed: int = 0):
    """Write ``german.csv`` (with header) into ``data_dir`` via convert_uci."""
    from pathlib import Path

    from fairbench.data import GERMAN_COLUMNS, convert_uci

    data_dir = Path(data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    raw = data_dir / "german.data"
    raw.write_text(german_like_uci_text(n, seed), encoding="utf-8")
    convert_uci(raw, data_dir / "german.csv", GERMAN_COLUMNS, None)
    return data_dir / "german.csv"
