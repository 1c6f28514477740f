"""``fairbench`` command line: preprocess, benchmark, analyze, all.

Settings come from built-in defaults, then ``FAIRBENCH_OUTDIR``, then an
optional flat ``key = value`` config file, then flags. The merged settings
are written to ``<outdir>/config.resolved`` by every stage.

Exit codes: 0 success, 1 usage or config error, 2 missing prerequisite
artifacts or raw data, 3 some cells failed.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

from . import data
from ._io import atomic_write_text
from .analysis import AnalysisError, analyze
from .preprocess import VARIANTS, combine_sensitive, make_splits, make_variant, save_processed, save_splits
from .runner import (
    ALGORITHMS,
    OBJECTIVES,
    MissingArtifact,
    RunnerError,
    RunSpec,
    algorithm_family,
    incompatibility,
    run_specs,
)

EXIT_OK, EXIT_USAGE, EXIT_MISSING, EXIT_PARTIAL = 0, 1, 2, 3
DATA_DOC = "docs/DATA.md"
SYNTH = "synth"


class ConfigError(ValueError):
    pass


@dataclass
class Config:
    outdir: str = "fairbench-out"
    data_dir: str = "data"
    datasets: list = field(default_factory=lambda: ["ricci", "adult", "german", "propublica_recidivism", "propublica_violent"])
    variants: list = field(default_factory=lambda: list(VARIANTS))
    algorithms: list = field(default_factory=lambda: list(ALGORITHMS))
    # per-dataset list; empty means every declared attribute plus their combination
    sensitive: dict = field(default_factory=dict)
    splits: int = 10
    seed: int = 42
    workers: int = 1
    objective: str = "report_all"
    sensitive_as_feature: bool = True
    repair_keeps_sensitive: bool = False
    synth_n: int = 2000
    synth_bias: float = 0.4

    def validate(self) -> "Config":
        for v in self.variants:
            if v not in VARIANTS:
                raise ConfigError(f"unknown variant {v!r}; choose from {', '.join(VARIANTS)}")
        for a in self.algorithms:
            try:
                algorithm_family(a)
            except RunnerError as exc:
                raise ConfigError(str(exc)) from None
        if self.objective not in OBJECTIVES:
            raise ConfigError(f"unknown objective {self.objective!r}")
        if self.splits < 1 or self.workers < 1:
            raise ConfigError("splits and workers must be >= 1")
        known = set(data.builtin_schema_names()) | {SYNTH}
        for d in self.datasets:
            if d not in known:
                raise ConfigError(f"unknown dataset {d!r}; choose from {', '.join(sorted(known))}")
        return self

    def resolved_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "sensitive":
                for ds in sorted(value):
                    lines.append(f"sensitive.{ds} = {', '.join(value[ds])}")
                continue
            if isinstance(value, list):
                value = ", ".join(value)
            elif isinstance(value, bool):
                value = "true" if value else "false"
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"


def _split(text: str) -> list[str]:
    return [t.strip() for t in text.replace("\n", ",").split(",") if t.strip()]


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def read_config_file(path, cfg: Config) -> Config:
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    parser.optionxform = str
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        parser.read_string("[fairbench]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"bad config file {path}: {exc}") from None
    scalars = {f.name: f for f in fields(Config)}
    for key, value in parser["fairbench"].items():
        if key.startswith("sensitive."):
            cfg.sensitive[key.split(".", 1)[1]] = _split(value)
        elif key in ("datasets", "variants", "algorithms"):
            setattr(cfg, key, _split(value))
        elif key in ("splits", "seed", "workers", "synth_n"):
            setattr(cfg, key, int(value))
        elif key == "synth_bias":
            cfg.synth_bias = float(value)
        elif key in ("sensitive_as_feature", "repair_keeps_sensitive"):
            setattr(cfg, key, _bool(value))
        elif key in scalars:
            setattr(cfg, key, value.strip())
        else:
            raise ConfigError(f"unknown config key {key!r}")
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairbench", description="Fairness-intervention benchmark pipeline.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("preprocess", "clean raw datasets, write processed variants and split plans"),
        ("benchmark", "train and evaluate every configured cell"),
        ("analyze", "stability, correlation, tradeoff and variant-comparison outputs"),
        ("all", "preprocess, benchmark and analyze in sequence"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--outdir", help="output directory (default $FAIRBENCH_OUTDIR or ./fairbench-out)")
        p.add_argument("--data-dir", dest="data_dir", help="directory holding <dataset>.csv raw files")
        p.add_argument("--dataset", nargs="+", dest="datasets", metavar="NAME")
        p.add_argument("--algorithm", nargs="+", dest="algorithms", metavar="NAME")
        p.add_argument("--variant", nargs="+", dest="variants", metavar="TAG")
        p.add_argument("--sensitive", nargs="+", metavar="NAME", help="sensitive attributes, e.g. race sex race-sex")
        p.add_argument("--splits", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--objective", choices=OBJECTIVES)
        feat = p.add_mutually_exclusive_group()
        feat.add_argument("--sensitive-as-feature", dest="saf", action="store_true", default=None)
        feat.add_argument("--no-sensitive-as-feature", dest="saf", action="store_false")
        p.add_argument(
            "--repair-keeps-sensitive", action="store_true", default=None,
            help="let the di_remover base learner see the sensitive codes",
        )
    return parser


def resolve_config(args, environ=None) -> Config:
    environ = os.environ if environ is None else environ
    cfg = Config()
    if environ.get("FAIRBENCH_OUTDIR"):
        cfg.outdir = environ["FAIRBENCH_OUTDIR"]
    if args.config:
        read_config_file(args.config, cfg)
    for name in ("outdir", "data_dir", "datasets", "algorithms", "variants", "splits", "seed", "workers", "objective"):
        value = getattr(args, name)
        if value is not None:
            setattr(cfg, name, value)
    if args.saf is not None:
        cfg.sensitive_as_feature = args.saf
    if args.repair_keeps_sensitive:
        cfg.repair_keeps_sensitive = True
    if args.sensitive:
        for ds in cfg.datasets:
            cfg.sensitive[ds] = list(args.sensitive)
    return cfg.validate()


def default_sensitive(schema) -> list[str]:
    names = [s.column for s in schema.sensitive]
    return names + (["-".join(names[:2])] if len(names) >= 2 else [])


def _schema_for(dataset: str):
    return data.SYNTH_SCHEMA if dataset == SYNTH else data.builtin_schema(dataset)


def sensitive_for(cfg: Config, dataset: str) -> list[str]:
    return cfg.sensitive.get(dataset) or default_sensitive(_schema_for(dataset))


def _say(msg: str) -> None:
    print(msg, flush=True)


def _write_resolved(cfg: Config) -> None:
    atomic_write_text(Path(cfg.outdir) / "config.resolved", cfg.resolved_text())


# ---------------------------------------------------------------- stages


def load_raw(cfg: Config, dataset: str):
    if dataset == SYNTH:
        return data.synth_generate(cfg.synth_n, cfg.synth_bias, cfg.seed)
    path = Path(cfg.data_dir) / f"{dataset}.csv"
    if not path.exists():
        raise MissingArtifact(f"raw file {path} not found; see {DATA_DOC} for how to obtain and convert it")
    return data.load_prepared(data.builtin_schema(dataset), path)


def cmd_preprocess(cfg: Config) -> int:
    _write_resolved(cfg)
    for dataset in cfg.datasets:
        table = load_raw(cfg, dataset)
        declared = table.schema.names("sensitive")
        for name in sensitive_for(cfg, dataset):
            if name in declared:
                continue
            parts = name.split("-")
            if len(parts) < 2 or any(p not in declared for p in parts):
                raise ConfigError(f"{dataset}: unknown sensitive attribute {name!r}; declared: {', '.join(declared)}")
            table = combine_sensitive(table, parts)
            declared = table.schema.names("sensitive")
        for variant in cfg.variants:
            pt = make_variant(table, variant)
            path = save_processed(pt, cfg.outdir)
            _say(f"{dataset:24s} {variant:18s} {pt.n_rows:7d} rows  -> {path}")
        plans = make_splits(table.n_rows, cfg.splits, 2 / 3, cfg.seed)
        save_splits(plans, cfg.outdir, dataset, cfg.seed)
        report = table.report
        if report.get("rows_in") is not None and report.get("rows_in") != table.n_rows:
            _say(f"{dataset:24s} {report['rows_in']} raw rows, {table.n_rows} kept {_drop_summary(report)}")
    return EXIT_OK


def _drop_summary(report: dict) -> str:
    parts = []
    if report.get("dropped_missing"):
        parts.append(f"missing={report['dropped_missing']}")
    for name, count in (report.get("dropped_by_filter") or {}).items():
        parts.append(f"{name}={count}")
    return "(" + ", ".join(parts) + ")" if parts else ""


def build_specs(cfg: Config) -> list[RunSpec]:
    specs = []
    for dataset in cfg.datasets:
        for variant in cfg.variants:
            for sensitive in sensitive_for(cfg, dataset):
                for algorithm in cfg.algorithms:
                    reason = incompatibility(algorithm, variant)
                    if reason:
                        _say(f"skip {algorithm} on {dataset}/{variant}: {reason}")
                        continue
                    specs.append(
                        RunSpec(
                            dataset, variant, sensitive, algorithm,
                            n_splits=cfg.splits, master_seed=cfg.seed, objective=cfg.objective,
                            sensitive_as_feature=cfg.sensitive_as_feature,
                            repair_keeps_sensitive=cfg.repair_keeps_sensitive,
                        )
                    )
    return specs


def cmd_benchmark(cfg: Config) -> int:
    _write_resolved(cfg)
    specs = build_specs(cfg)
    if not specs:
        raise ConfigError("no compatible (algorithm, variant) pairs configured")
    summary = run_specs(specs, cfg.outdir, cfg.workers, log=_say)
    _say(f"{len(specs)} result files; {summary['failed']} failed cells, {summary['selection_failed']} failed selections")
    return EXIT_PARTIAL if summary["failed"] or summary["selection_failed"] else EXIT_OK


def cmd_analyze(cfg: Config) -> int:
    _write_resolved(cfg)
    try:
        written = analyze(cfg.outdir, cfg.datasets, cfg.seed, cfg.workers, log=_say)
    except AnalysisError as exc:
        raise MissingArtifact(str(exc)) from None
    _say(f"{len(written)} analysis files written under {Path(cfg.outdir) / 'analysis'}")
    return EXIT_OK


def cmd_all(cfg: Config) -> int:
    cmd_preprocess(cfg)
    code = cmd_benchmark(cfg)
    cmd_analyze(cfg)
    return code


COMMANDS = {"preprocess": cmd_preprocess, "benchmark": cmd_benchmark, "analyze": cmd_analyze, "all": cmd_all}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except MissingArtifact as exc:
        print(f"fairbench: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except (ConfigError, RunnerError, data.SchemaError, data.DataError, KeyError, ValueError) as exc:
        print(f"fairbench: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
