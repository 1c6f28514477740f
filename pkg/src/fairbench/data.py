"""Dataset schemas, loading, dataset-specific transforms and a synthetic generator.

A schema file is an INI-style text file (see ``fairbench/schemas/``)::

    [dataset]
    name = ricci
    positive_label = 1
    label_threshold = 70
    missing_token = ?
    sensitive = Race:W

    [columns]
    Position = categorical feature
    Race = categorical sensitive
    Combine = numeric label

Optional sections: ``[filters]`` (named row predicates applied at load time)
and ``[transform.<name>]`` (declarative post-load transforms, applied in file
order by :func:`apply_dataset_transforms`).
"""

from __future__ import annotations

import configparser
import csv
import io
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np
import pandas as pd

from ._io import csv_text, make_rng

KINDS = ("categorical", "numeric")
ROLES = ("feature", "sensitive", "label", "drop")
FILTER_OPS = ("between", "==", "!=", ">=", "<=", ">", "<", "in", "notin")


class SchemaError(ValueError):
    pass


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: str
    role: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.role not in ROLES:
            raise SchemaError(f"column {self.name!r}: unknown role {self.role!r}")


@dataclass(frozen=True)
class SensitiveSpec:
    column: str
    privileged_value: str


@dataclass(frozen=True)
class RowFilter:
    """Named predicate ``<column> <op> <args...>``; rows failing it are dropped."""

    name: str
    column: str
    op: str
    args: tuple[str, ...]

    def mask(self, values: list[str]) -> np.ndarray:
        op, args = self.op, self.args
        if op == "between":
            lo, hi = float(args[0]), float(args[1])
            return np.array([_num_or_nan(v) >= lo and _num_or_nan(v) <= hi for v in values])
        if op in ("in", "notin"):
            members = set(args)
            hit = np.array([v in members for v in values])
            return hit if op == "in" else ~hit
        target = args[0]
        tnum = _num_or_nan(target)
        out = []
        for v in values:
            vnum = _num_or_nan(v)
            if not math.isnan(tnum) and not math.isnan(vnum):
                a, b = vnum, tnum
            else:
                a, b = v, target
            if op == "==":
                out.append(a == b)
            elif op == "!=":
                out.append(a != b)
            elif isinstance(a, str):
                out.append(False)
            elif op == ">=":
                out.append(a >= b)
            elif op == "<=":
                out.append(a <= b)
            elif op == ">":
                out.append(a > b)
            else:
                out.append(a < b)
        return np.array(out, dtype=bool)


@dataclass(frozen=True)
class Transform:
    name: str
    kind: str  # discretize | map
    options: tuple[tuple[str, str], ...]

    def opt(self, key: str) -> str:
        for k, v in self.options:
            if k == key:
                return v
        raise SchemaError(f"transform {self.name!r} needs option {key!r}")

    @property
    def mapping(self) -> dict[str, str]:
        reserved = {"kind", "source", "target"}
        return {k: v for k, v in self.options if k not in reserved}


@dataclass(frozen=True)
class DatasetSchema:
    name: str
    columns: tuple[ColumnSpec, ...]
    sensitive: tuple[SensitiveSpec, ...]
    positive_label: str
    missing_token: str = "?"
    row_filters: tuple[RowFilter, ...] = ()
    label_threshold: float | None = None
    derived: tuple[str, ...] = ()
    transforms: tuple[Transform, ...] = ()

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise SchemaError(f"{self.name}: duplicate column names")
        labels = [c for c in self.columns if c.role == "label"]
        if len(labels) != 1:
            raise SchemaError(f"{self.name}: exactly one label column required, got {len(labels)}")
        if not any(c.role == "sensitive" for c in self.columns):
            raise SchemaError(f"{self.name}: at least one sensitive column required")
        by_name = {c.name: c for c in self.columns}
        for s in self.sensitive:
            if s.column not in by_name or by_name[s.column].role != "sensitive":
                raise SchemaError(f"{self.name}: {s.column!r} is not a sensitive column")
        for f in self.row_filters:
            if f.column not in by_name:
                raise SchemaError(f"{self.name}: filter {f.name!r} references unknown column {f.column!r}")
            if f.op not in FILTER_OPS:
                raise SchemaError(f"{self.name}: filter {f.name!r} has unknown op {f.op!r}")
        for d in self.derived:
            if d not in by_name:
                raise SchemaError(f"{self.name}: derived column {d!r} is not declared")

    @property
    def label(self) -> str:
        return next(c.name for c in self.columns if c.role == "label")

    def column(self, name: str) -> ColumnSpec:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)

    def names(self, role: str | None = None) -> list[str]:
        return [c.name for c in self.columns if role is None or c.role == role]

    def privileged(self, column: str) -> str:
        for s in self.sensitive:
            if s.column == column:
                return s.privileged_value
        raise KeyError(column)


@dataclass(frozen=True, eq=False)
class RawTable:
    """A loaded table. ``frame`` holds str for categorical, float for numeric
    and int 0/1 for the label column; ``schema`` describes the frame as it is
    now (label already encoded, filters and drop columns consumed)."""

    schema: DatasetSchema
    frame: pd.DataFrame
    report: dict = field(default_factory=dict)

    def equals(self, other: "RawTable") -> bool:
        return self.schema == other.schema and self.frame.equals(other.frame)

    @property
    def n_rows(self) -> int:
        return len(self.frame)

    @property
    def labels(self) -> np.ndarray:
        return self.frame[self.schema.label].to_numpy(dtype=np.int64)

    def validate(self, check_sensitive: bool = True) -> "RawTable":
        schema, frame = self.schema, self.frame
        if len(frame) == 0:
            raise DataError(f"{schema.name}: empty table")
        y = frame[schema.label].to_numpy()
        if not set(np.unique(y)).issubset({0, 1}):
            raise DataError(f"{schema.name}: label not in {{0, 1}}")
        for c in schema.columns:
            if c.name not in frame.columns:
                continue
            if c.kind == "numeric" and c.role != "label":
                vals = frame[c.name].to_numpy(dtype=float)
                if not np.all(np.isfinite(vals)):
                    raise DataError(f"{schema.name}: non-finite value in {c.name!r}")
            elif c.kind == "categorical" and c.role != "label":
                if (frame[c.name].astype(str) == schema.missing_token).any():
                    raise DataError(f"{schema.name}: missing token left in {c.name!r}")
        if check_sensitive:
            for s in schema.sensitive:
                observed = set(frame[s.column].astype(str))
                if s.privileged_value not in observed:
                    raise DataError(
                        f"{schema.name}: privileged value {s.privileged_value!r} "
                        f"not observed in {s.column!r}"
                    )
        return self


# ---------------------------------------------------------------- schema I/O


def _num_or_nan(text: str) -> float:
    try:
        return float(text)
    except (TypeError, ValueError):
        return math.nan


def parse_schema(text: str) -> DatasetSchema:
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",), inline_comment_prefixes=None)
    cp.optionxform = str
    cp.read_string(text)
    if "dataset" not in cp or "columns" not in cp:
        raise SchemaError("schema needs [dataset] and [columns] sections")
    ds = cp["dataset"]
    columns = []
    for name, spec in cp["columns"].items():
        parts = spec.split()
        if len(parts) != 2:
            raise SchemaError(f"column {name!r}: expected '<kind> <role>', got {spec!r}")
        columns.append(ColumnSpec(name, parts[0], parts[1]))
    sensitive = []
    for item in _split_list(ds.get("sensitive", "")):
        col, _, priv = item.partition(":")
        if not priv:
            raise SchemaError(f"sensitive entry {item!r} must be '<column>:<privileged value>'")
        sensitive.append(SensitiveSpec(col.strip(), priv.strip()))
    filters = []
    if "filters" in cp:
        for fname, expr in cp["filters"].items():
            parts = expr.split()
            if len(parts) < 3:
                raise SchemaError(f"filter {fname!r}: expected '<column> <op> <args>'")
            filters.append(RowFilter(fname, parts[0], parts[1], tuple(parts[2:])))
    transforms = []
    for section in cp.sections():
        if section.startswith("transform."):
            opts = tuple(cp[section].items())
            kind = dict(opts).get("kind")
            if kind not in ("discretize", "map"):
                raise SchemaError(f"{section}: unknown transform kind {kind!r}")
            transforms.append(Transform(section.split(".", 1)[1], kind, opts))
    threshold = ds.get("label_threshold", "").strip()
    return DatasetSchema(
        name=ds["name"].strip(),
        columns=tuple(columns),
        sensitive=tuple(sensitive),
        positive_label=ds.get("positive_label", "1").strip(),
        missing_token=ds.get("missing_token", "?").strip(),
        row_filters=tuple(filters),
        label_threshold=float(threshold) if threshold else None,
        derived=tuple(_split_list(ds.get("derived", ""))),
        transforms=tuple(transforms),
    )


def _split_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def load_schema(path: str | Path) -> DatasetSchema:
    return parse_schema(Path(path).read_text(encoding="utf-8"))


def builtin_schema(name: str) -> DatasetSchema:
    """Schema shipped with the package (adult, german, ricci, propublica_*)."""
    ref = resources.files("fairbench.schemas").joinpath(f"{name}.schema")
    if not ref.is_file():
        raise KeyError(f"no built-in schema {name!r}; available: {', '.join(builtin_schema_names())}")
    return parse_schema(ref.read_text(encoding="utf-8"))


def builtin_schema_names() -> list[str]:
    root = resources.files("fairbench.schemas")
    return sorted(p.name[: -len(".schema")] for p in root.iterdir() if p.name.endswith(".schema"))


# ---------------------------------------------------------------- loading


def load_dataset(schema: DatasetSchema, source) -> RawTable:
    """Parse delimited text against ``schema``.

    ``source`` may be bytes, a binary/text file object or a path. Rows with
    the missing token in any schema column are dropped, then row filters are
    applied in order, the label is binarized and ``drop`` columns removed.
    The returned table's ``report`` holds the drop counts.
    """
    text = _read_source(source)
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise DataError(f"{schema.name}: source is empty") from None
    index: dict[str, int] = {}
    for i, h in enumerate(header):
        index.setdefault(h, i)  # duplicated header names: first occurrence wins
    wanted = [c for c in schema.columns if c.name not in schema.derived]
    missing_cols = [c.name for c in wanted if c.name not in index]
    if missing_cols:
        raise DataError(f"{schema.name}: unknown column(s) {missing_cols} (not in source header)")

    cols = {c.name: [] for c in wanted}
    n_in = 0
    n_missing = 0
    token = schema.missing_token
    for row in reader:
        if not row or all(cell.strip() == "" for cell in row):
            continue
        n_in += 1
        cells = [row[index[c.name]].strip() if index[c.name] < len(row) else token for c in wanted]
        if any(cell == token for cell in cells):
            n_missing += 1
            continue
        for c, cell in zip(wanted, cells):
            cols[c.name].append(cell)

    keep = np.ones(len(next(iter(cols.values()))), dtype=bool)
    filter_drops = {}
    for f in schema.row_filters:
        m = f.mask(cols[f.column]) & keep
        filter_drops[f.name] = int(keep.sum() - m.sum())
        keep = m
    data = {}
    for c in wanted:
        if c.role == "drop":
            continue
        vals = [v for v, k in zip(cols[c.name], keep) if k]
        if c.role == "label":
            data[c.name] = _encode_label(schema, vals)
        elif c.kind == "numeric":
            try:
                arr = np.array([float(v) for v in vals], dtype=float)
            except ValueError as exc:
                raise DataError(f"{schema.name}: non-numeric value in {c.name!r}: {exc}") from None
            if not np.all(np.isfinite(arr)):
                raise DataError(f"{schema.name}: non-finite value in {c.name!r}")
            data[c.name] = arr
        else:
            data[c.name] = np.array(vals, dtype=object)
    frame = pd.DataFrame(data)
    if len(frame) == 0:
        raise DataError(f"{schema.name}: no rows left after dropping missing data and filtering")
    report = {
        "rows_in": n_in,
        "dropped_missing": n_missing,
        "dropped_by_filter": filter_drops,
        "rows_out": len(frame),
    }
    table = RawTable(_loaded_schema(schema), frame, report)
    # sensitive columns touched by transforms are checked once the transforms ran
    return table.validate(check_sensitive=not schema.transforms)


def _read_source(source) -> str:
    if isinstance(source, (bytes, bytearray)):
        return bytes(source).decode("utf-8-sig")
    if isinstance(source, (str, Path)):
        return Path(source).read_text(encoding="utf-8-sig")
    data = source.read()
    return data.decode("utf-8-sig") if isinstance(data, bytes) else data


def _encode_label(schema: DatasetSchema, values: list[str]) -> np.ndarray:
    if schema.label_threshold is not None:
        try:
            nums = np.array([float(v) for v in values])
        except ValueError:
            raise DataError(f"{schema.name}: label threshold needs numeric label values") from None
        return (nums >= schema.label_threshold).astype(np.int64)
    distinct = set(values)
    if len(distinct) > 2:
        raise DataError(
            f"{schema.name}: label column {schema.label!r} is not binary "
            f"({len(distinct)} distinct values: {sorted(distinct)[:5]}...)"
        )
    return np.array([v == schema.positive_label for v in values], dtype=np.int64)


def _loaded_schema(schema: DatasetSchema) -> DatasetSchema:
    label = schema.label
    columns = []
    for c in schema.columns:
        if c.role == "drop":
            continue
        columns.append(ColumnSpec(c.name, "categorical", "label") if c.name == label else c)
    return replace(schema, columns=tuple(columns), positive_label="1", label_threshold=None, row_filters=())


def serialize_table(table: RawTable) -> str:
    """Comma-delimited text in schema column order; numerics shortest round-trip."""
    names = [n for n in table.schema.names() if n in table.frame.columns]
    rows = zip(*(table.frame[n].tolist() for n in names)) if len(table.frame) else []
    return csv_text(names, rows)


# ---------------------------------------------------------------- transforms


def apply_dataset_transforms(table: RawTable) -> RawTable:
    """Run the schema's declarative transforms (in file order) on a copy."""
    schema = table.schema
    frame = table.frame.copy()
    for t in schema.transforms:
        if t.kind == "discretize":
            col = t.opt("column")
            if col not in frame.columns:
                raise DataError(f"transform {t.name!r} references absent column {col!r}")
            threshold = float(t.opt("threshold"))
            vals = np.array([float(v) for v in frame[col]])
            frame[col] = np.where(vals >= threshold, t.opt("at_or_above"), t.opt("below")).astype(object)
        else:
            src, dst = t.opt("source"), t.opt("target")
            if src not in frame.columns:
                raise DataError(f"transform {t.name!r} references absent column {src!r}")
            mapping = t.mapping
            unknown = sorted(set(frame[src].astype(str)) - set(mapping))
            if unknown:
                raise DataError(f"transform {t.name!r}: no mapping for {unknown}")
            frame[dst] = np.array([mapping[str(v)] for v in frame[src]], dtype=object)
    names = [n for n in schema.names() if n in frame.columns]
    frame = frame[names]
    out = RawTable(replace(schema, transforms=(), derived=()), frame.reset_index(drop=True), dict(table.report))
    return out.validate()


def load_prepared(schema: DatasetSchema, source) -> RawTable:
    """load_dataset followed by apply_dataset_transforms."""
    return apply_dataset_transforms(load_dataset(schema, source))


# ---------------------------------------------------------------- synthetic data

SYNTH_SCHEMA = DatasetSchema(
    name="synth",
    columns=(
        ColumnSpec("x_signal", "numeric", "feature"),
        ColumnSpec("x_proxy", "numeric", "feature"),
        ColumnSpec("x_noise", "numeric", "feature"),
        ColumnSpec("x_cat", "categorical", "feature"),
        ColumnSpec("group", "categorical", "sensitive"),
        ColumnSpec("y", "categorical", "label"),
    ),
    sensitive=(SensitiveSpec("group", "priv"),),
    positive_label="1",
)


def synth_generate(n: int, bias: float, seed: int) -> RawTable:
    """Two-group table whose label base rates differ by ``bias``.

    P[y=1 | priv] = 0.5 + bias/2 and P[y=1 | unpriv] = 0.5 - bias/2. Features:
    ``x_signal`` depends on y only, ``x_proxy`` on group only, ``x_noise`` and the
    3-level category ``x_cat`` on neither.
    """
    if n < 20:
        raise ValueError("synth_generate needs n >= 20")
    if not 0.0 <= bias <= 1.0:
        raise ValueError("bias must lie in [0, 1]")
    rng = make_rng(seed)
    priv = rng.random(n) < 0.5
    p_pos = np.where(priv, 0.5 + bias / 2, 0.5 - bias / 2)
    y = (rng.random(n) < p_pos).astype(np.int64)
    x_signal = rng.normal(loc=1.5 * y - 0.75, scale=1.0)
    x_proxy = rng.normal(loc=np.where(priv, 0.5, -0.5), scale=1.0)
    x_noise = rng.normal(size=n)
    cat_idx = rng.integers(0, 3, size=n)
    frame = pd.DataFrame(
        {
            "x_signal": np.round(x_signal, 6),
            "x_proxy": np.round(x_proxy, 6),
            "x_noise": np.round(x_noise, 6),
            "x_cat": np.array(["a", "b", "c"], dtype=object)[cat_idx],
            "group": np.where(priv, "priv", "unpriv").astype(object),
            "y": y,
        }
    )
    return RawTable(SYNTH_SCHEMA, frame, {"rows_in": n, "rows_out": n}).validate()


# ---------------------------------------------------------------- raw UCI converters


ADULT_COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education-num", "marital-status",
    "occupation", "relationship", "race", "sex", "capital-gain", "capital-loss",
    "hours-per-week", "native-country", "income-per-year",
]

GERMAN_COLUMNS = [
    "checking_status", "duration", "credit_history", "purpose", "credit_amount",
    "savings", "employment", "installment_rate", "personal_status", "other_debtors",
    "residence_since", "property", "age", "other_installment_plans", "housing",
    "existing_credits", "job", "people_liable", "telephone", "foreign_worker", "credit",
]


def convert_uci(src: str | Path, dst: str | Path, columns: list[str], delimiter: str | None) -> int:
    """Add a header row to a headerless UCI file and rewrite it comma-delimited.

    ``delimiter=None`` splits on runs of whitespace (german.data); otherwise
    cells are split on the delimiter and stripped (adult.data).
    """
    out_rows = []
    for line in Path(src).read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.startswith("|"):
            continue
        cells = line.split() if delimiter is None else [c.strip() for c in line.split(delimiter)]
        if len(cells) != len(columns):
            raise DataError(f"{src}: expected {len(columns)} cells, got {len(cells)}")
        out_rows.append(cells)
    Path(dst).write_text(csv_text(columns, out_rows), encoding="utf-8")
    return len(out_rows)

