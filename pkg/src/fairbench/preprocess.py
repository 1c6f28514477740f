"""Dataset variants (original / numerical / numerical_binary) and split plans."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

import numpy as np
import pandas as pd

from ._io import atomic_write_text, make_rng, read_csv, write_csv
from .data import ColumnSpec, DatasetSchema, RawTable, SensitiveSpec, serialize_table

VARIANTS = ("original", "numerical", "numerical_binary")
CODE_SUFFIX = "__code"


class PreprocessError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ProcessedTable:
    variant: str
    table: RawTable
    encoding_map: dict[str, list[str]] = field(default_factory=dict)
    sensitive_encoding: dict[str, dict[str, int]] = field(default_factory=dict)
    indicator_columns: dict[str, list[str]] = field(default_factory=dict)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise PreprocessError(f"unknown variant {self.variant!r}")

    @property
    def schema(self) -> DatasetSchema:
        return self.table.schema

    @property
    def frame(self) -> pd.DataFrame:
        return self.table.frame

    @property
    def n_rows(self) -> int:
        return self.table.n_rows

    @property
    def labels(self) -> np.ndarray:
        return self.table.labels

    @property
    def sensitive_names(self) -> list[str]:
        return self.schema.names("sensitive")

    def sensitive_values(self, column: str) -> np.ndarray:
        return self.frame[column].to_numpy()

    def sensitive_binary(self, column: str) -> np.ndarray:
        """1 for the privileged value, 0 otherwise."""
        priv = self.schema.privileged(column)
        return np.array([str(v) == priv for v in self.frame[column]], dtype=np.int64)

    def feature_names(self, sensitive_as_feature: bool = False) -> list[str]:
        names = self.schema.names("feature")
        if sensitive_as_feature:
            names = names + [s + CODE_SUFFIX for s in self.sensitive_names]
        return names

    def feature_matrix(self, sensitive_as_feature: bool = False) -> tuple[np.ndarray, list[str]]:
        """Numeric design matrix. Categorical features of the ``original``
        variant enter as ordinal codes (first-appearance order)."""
        names = self.feature_names(sensitive_as_feature)
        cols = []
        for name in names:
            values = self.frame[name]
            if name in self.encoding_map:
                lookup = {c: i for i, c in enumerate(self.encoding_map[name])}
                cols.append(np.array([lookup[str(v)] for v in values], dtype=float))
            else:
                cols.append(values.to_numpy(dtype=float))
        if not cols:
            return np.zeros((self.n_rows, 0)), names
        return np.column_stack(cols), names


# ---------------------------------------------------------------- operations


def combine_sensitive(table: RawTable, attrs: list[str]) -> RawTable:
    """Add a combined sensitive column, e.g. race + sex -> 'race-sex' = 'White-Woman'."""
    if len(attrs) < 2:
        raise PreprocessError("combine_sensitive needs at least two sensitive attributes")
    schema = table.schema
    for a in attrs:
        if a not in table.frame.columns or schema.column(a).role != "sensitive":
            raise PreprocessError(f"{a!r} is not a sensitive column of {schema.name}")
    name = "-".join(attrs)
    frame = table.frame.copy()
    parts = [frame[a].astype(str).to_numpy() for a in attrs]
    frame[name] = np.array(["-".join(vals) for vals in zip(*parts)], dtype=object)
    privileged = "-".join(schema.privileged(a) for a in attrs)
    columns = _insert_before_label(schema, ColumnSpec(name, "categorical", "sensitive"))
    new_schema = replace(
        schema,
        columns=columns,
        sensitive=schema.sensitive + (SensitiveSpec(name, privileged),),
    )
    frame = frame[[c.name for c in columns if c.name in frame.columns]]
    return RawTable(new_schema, frame, dict(table.report))


def _insert_before_label(schema: DatasetSchema, spec: ColumnSpec) -> tuple[ColumnSpec, ...]:
    cols = [c for c in schema.columns if c.name != spec.name]
    idx = next(i for i, c in enumerate(cols) if c.role == "label")
    return tuple(cols[:idx] + [spec] + cols[idx:])


def _first_appearance(values) -> list[str]:
    return list(dict.fromkeys(str(v) for v in values))


def as_original(table: RawTable) -> ProcessedTable:
    """The ``original`` variant: cleaned table, categoricals kept as-is."""
    schema = table.schema
    frame = table.frame.copy()
    encoding = {
        c.name: _first_appearance(frame[c.name])
        for c in schema.columns
        if c.role == "feature" and c.kind == "categorical"
    }
    frame, sens_enc = _with_codes(frame, schema)
    schema = replace(schema, columns=_code_columns(schema))
    frame = frame[schema.names()]
    return ProcessedTable("original", RawTable(schema, frame, dict(table.report)), encoding, sens_enc)


def _with_codes(frame: pd.DataFrame, schema: DatasetSchema):
    enc = {}
    for s in schema.names("sensitive"):
        cats = _first_appearance(frame[s])
        enc[s] = {c: i for i, c in enumerate(cats)}
        frame[s + CODE_SUFFIX] = np.array([enc[s][str(v)] for v in frame[s]], dtype=np.int64)
    return frame, enc


def _code_columns(schema: DatasetSchema) -> tuple[ColumnSpec, ...]:
    base = [c for c in schema.columns if not c.name.endswith(CODE_SUFFIX)]
    codes = [ColumnSpec(s + CODE_SUFFIX, "numeric", "drop") for s in schema.names("sensitive")]
    idx = next(i for i, c in enumerate(base) if c.role == "label")
    return tuple(base[:idx] + codes + base[idx:])


def encode_numerical(table: RawTable) -> ProcessedTable:
    """One-hot encode categorical features (category order = first appearance).

    Sensitive columns stay categorical; an integer code column
    ``<name>__code`` is added next to each.
    """
    schema = table.schema
    src = table.frame
    data: dict[str, np.ndarray] = {}
    columns: list[ColumnSpec] = []
    encoding: dict[str, list[str]] = {}
    indicators: dict[str, list[str]] = {}
    for c in schema.columns:
        if c.role == "feature" and c.kind == "categorical":
            values = src[c.name].astype(str).to_numpy()
            cats = _first_appearance(values)
            encoding[c.name] = cats
            indicators[c.name] = []
            for cat in cats:
                col = f"{c.name}={cat}"
                data[col] = (values == cat).astype(np.int64)
                columns.append(ColumnSpec(col, "numeric", "feature"))
                indicators[c.name].append(col)
        else:
            data[c.name] = src[c.name].to_numpy().copy()
            columns.append(c)
    frame = pd.DataFrame(data)
    new_schema = replace(schema, columns=tuple(columns))
    frame, sens_enc = _with_codes(frame, new_schema)
    new_schema = replace(new_schema, columns=_code_columns(new_schema))
    frame = frame[new_schema.names()]
    return ProcessedTable("numerical", RawTable(new_schema, frame, dict(table.report)), encoding, sens_enc, indicators)


def binarize_sensitive(pt: ProcessedTable) -> ProcessedTable:
    """Privileged value -> 1, everything else -> 0, for every sensitive column."""
    if pt.variant not in ("numerical", "numerical_binary"):
        raise PreprocessError(f"binarize_sensitive needs a numerical variant, got {pt.variant!r}")
    schema = pt.schema
    frame = pt.frame.copy()
    columns = []
    sensitive = []
    sens_enc = {}
    for c in schema.columns:
        if c.role == "sensitive":
            priv = schema.privileged(c.name)
            values = frame[c.name].astype(str).to_numpy()
            if priv not in values:
                raise PreprocessError(f"privileged value {priv!r} absent from {c.name!r}")
            bits = (values == priv).astype(np.int64)
            frame[c.name] = bits
            frame[c.name + CODE_SUFFIX] = bits
            columns.append(ColumnSpec(c.name, "numeric", "sensitive"))
            sensitive.append(SensitiveSpec(c.name, "1"))
            sens_enc[c.name] = {"0": 0, "1": 1}
        else:
            columns.append(c)
    new_schema = replace(schema, columns=tuple(columns), sensitive=tuple(sensitive))
    table = RawTable(new_schema, frame, dict(pt.table.report))
    return ProcessedTable("numerical_binary", table, dict(pt.encoding_map), sens_enc, dict(pt.indicator_columns))


def make_variant(table: RawTable, variant: str) -> ProcessedTable:
    if variant == "original":
        return as_original(table)
    pt = encode_numerical(table)
    return binarize_sensitive(pt) if variant == "numerical_binary" else pt


# ---------------------------------------------------------------- splits


@dataclass(frozen=True)
class SplitPlan:
    split_id: int
    seed: int
    train_indices: np.ndarray
    test_indices: np.ndarray

    def __eq__(self, other):
        return (
            isinstance(other, SplitPlan)
            and self.split_id == other.split_id
            and self.seed == other.seed
            and np.array_equal(self.train_indices, other.train_indices)
            and np.array_equal(self.test_indices, other.test_indices)
        )


def train_size(n_rows: int, train_fraction: float) -> int:
    frac = Fraction(train_fraction).limit_denominator(10**6)
    return math.ceil(frac * n_rows)


def split_indices(n_rows: int, train_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    n_train = train_size(n_rows, train_fraction)
    if n_train < 1 or n_train >= n_rows:
        raise PreprocessError(f"{n_rows} rows cannot give non-empty train and test sets at fraction {train_fraction}")
    perm = make_rng(seed).permutation(n_rows)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def make_splits(n_rows: int, n_splits: int = 10, train_fraction: float = 2 / 3, master_seed: int = 42) -> list[SplitPlan]:
    """``n_splits`` uniform random holdout splits; split i is seeded with master_seed XOR i."""
    if n_splits < 1:
        raise PreprocessError("n_splits must be >= 1")
    if not 0 < train_fraction < 1:
        raise PreprocessError("train_fraction must lie in (0, 1)")
    plans = []
    for i in range(n_splits):
        seed = master_seed ^ i
        train, test = split_indices(n_rows, train_fraction, seed)
        plans.append(SplitPlan(i, seed, train, test))
    return plans


# ---------------------------------------------------------------- persistence


def processed_path(outdir, dataset: str, variant: str) -> Path:
    return Path(outdir) / "processed" / f"{dataset}_{variant}.csv"


def splits_path(outdir, dataset: str, seed: int) -> Path:
    return Path(outdir) / "splits" / f"{dataset}_{seed}.csv"


def save_processed(pt: ProcessedTable, outdir) -> Path:
    path = processed_path(outdir, pt.schema.name, pt.variant)
    atomic_write_text(path, serialize_table(pt.table))
    meta = {
        "variant": pt.variant,
        "name": pt.schema.name,
        "columns": [[c.name, c.kind, c.role] for c in pt.schema.columns],
        "sensitive": [[s.column, s.privileged_value] for s in pt.schema.sensitive],
        "encoding_map": pt.encoding_map,
        "sensitive_encoding": pt.sensitive_encoding,
        "indicator_columns": pt.indicator_columns,
    }
    atomic_write_text(path.with_suffix(".meta.json"), json.dumps(meta, indent=1, sort_keys=True) + "\n")
    return path


def load_processed(outdir, dataset: str, variant: str) -> ProcessedTable:
    path = processed_path(outdir, dataset, variant)
    meta = json.loads(path.with_suffix(".meta.json").read_text(encoding="utf-8"))
    columns = tuple(ColumnSpec(*c) for c in meta["columns"])
    schema = DatasetSchema(
        name=meta["name"],
        columns=columns,
        sensitive=tuple(SensitiveSpec(*s) for s in meta["sensitive"]),
        positive_label="1",
    )
    header, rows = read_csv(path)
    by_name = {c.name: c for c in columns}
    int_cols = {c for cols in meta["indicator_columns"].values() for c in cols}
    data = {}
    for j, name in enumerate(header):
        raw = [r[j] for r in rows]
        spec = by_name[name]
        as_int = name in int_cols or name.endswith(CODE_SUFFIX) or spec.role == "label"
        if as_int or (spec.role == "sensitive" and spec.kind == "numeric"):
            data[name] = np.array([int(v) for v in raw], dtype=np.int64)
        elif spec.kind == "numeric":
            data[name] = np.array([float(v) for v in raw], dtype=float)
        else:
            data[name] = np.array(raw, dtype=object)
    frame = pd.DataFrame(data)
    return ProcessedTable(
        meta["variant"],
        RawTable(schema, frame),
        meta["encoding_map"],
        meta["sensitive_encoding"],
        meta["indicator_columns"],
    )


def save_splits(plans: list[SplitPlan], outdir, dataset: str, master_seed: int) -> Path:
    rows = []
    for p in plans:
        part = {int(i): "train" for i in p.train_indices}
        part.update({int(i): "test" for i in p.test_indices})
        rows.extend((p.split_id, i, part[i]) for i in sorted(part))
    path = splits_path(outdir, dataset, master_seed)
    write_csv(path, ["split_id", "row_index", "partition"], rows)
    return path


def load_splits(outdir, dataset: str, master_seed: int) -> list[SplitPlan]:
    _, rows = read_csv(splits_path(outdir, dataset, master_seed))
    by_split: dict[int, tuple[list[int], list[int]]] = {}
    for sid, idx, part in rows:
        train, test = by_split.setdefault(int(sid), ([], []))
        (train if part == "train" else test).append(int(idx))
    return [
        SplitPlan(sid, master_seed ^ sid, np.array(tr, dtype=np.int64), np.array(te, dtype=np.int64))
        for sid, (tr, te) in sorted(by_split.items())
    ]

