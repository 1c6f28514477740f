import json

import numpy as np
import pytest

from fairbench.data import synth_generate
from fairbench.preprocess import SplitPlan, make_splits, make_variant, save_processed, save_splits
from fairbench.runner import (
    MissingArtifact,
    RunnerError,
    RunSpec,
    algorithm_family,
    cell_id,
    enumerate_cells,
    execute_cell,
    incompatibility,
    load_record,
    parse_results_name,
    prediction_metrics,
    read_results,
    record_path,
    results_path,
    run_id,
    run_specs,
    select_param,
    validation_split,
)

N_SPLITS = 3


@pytest.fixture(scope="module")
def staged(tmp_path_factory):
    out = tmp_path_factory.mktemp("stage")
    t = synth_generate(300, 0.4, 11)
    for variant in ("original", "numerical", "numerical_binary"):
        save_processed(make_variant(t, variant), out)
    save_splits(make_splits(t.n_rows, N_SPLITS, master_seed=42), out, "synth", 42)
    return out


def spec(**kw):
    base = dict(dataset="synth", variant="numerical_binary", sensitive="group", n_splits=N_SPLITS)
    base.update(kw)
    return RunSpec(**base)


def test_cell_counts():
    assert len(enumerate_cells(spec(algorithm="di_remover", n_splits=10))) == 210
    base = enumerate_cells(spec(algorithm="gnb", n_splits=10))
    assert len(base) == 10 and {p for _, p in base} == {None}
    assert len(enumerate_cells(spec(algorithm="zafar", n_splits=10))) == 100
    cells = enumerate_cells(spec(algorithm="two_nb", n_splits=2))
    assert cells[:2] == [(0, 0.0), (0, 0.1)] and cells[11] == (1, 0.0)


def test_spec_validation():
    with pytest.raises(RunnerError, match="requires numerical_binary"):
        spec(algorithm="two_nb", variant="original")
    with pytest.raises(RunnerError):
        spec(algorithm="di_remover", variant="original")
    with pytest.raises(RunnerError):
        spec(algorithm="gnb", param_grid=(0.5,))
    with pytest.raises(RunnerError):
        spec(algorithm="gnb", objective="best_f1")
    assert incompatibility("zafar", "numerical") == "requires numerical_binary"
    assert incompatibility("logreg", "original") is None
    assert algorithm_family("di_remover-tree") == ("di_remover", "tree")
    assert algorithm_family("di_remover") == ("di_remover", "logreg")
    with pytest.raises(RunnerError):
        algorithm_family("di_remover-forest")


def test_run_id_is_stable_and_distinct():
    a = run_id("d", "numerical", "s", "gnb", None, 42)
    assert a == run_id("d", "numerical", "s", "gnb", None, 42)
    assert len(a) == 20 and int(a, 16) >= 0
    assert a != run_id("d", "numerical", "s", "gnb", None, 43)
    assert run_id("d", "n", "s", "zafar", 0.1, 1) != run_id("d", "n", "s", "zafar", 0.10000000000000002, 1)
    s1 = spec(algorithm="logreg")
    s2 = spec(algorithm="logreg", sensitive_as_feature=False)
    assert cell_id(s1, None, 42) != cell_id(s2, None, 42)
    assert cell_id(s1, None, 42) == run_id("synth", "numerical_binary", "group", "logreg", None, 42)


def test_nine_row_split_sizes(staged):
    plan = make_splits(9, 1, master_seed=5)[0]
    assert (len(plan.train_indices), len(plan.test_indices)) == (6, 3)


def test_repair_at_zero_matches_baseline(staged):
    plan = make_splits(300, N_SPLITS, master_seed=42)[1]
    for base in ("logreg", "gnb", "tree"):
        rep = execute_cell(staged, spec(algorithm=f"di_remover-{base}", variant="numerical"), plan, 0.0)
        plain = execute_cell(staged, spec(algorithm=base, variant="numerical", sensitive_as_feature=False), plan, None)
        assert rep.status == plain.status == "ok"
        assert rep.metrics == plain.metrics


def test_rerun_is_byte_identical_and_predictions_reload(staged):
    plan = make_splits(300, N_SPLITS, master_seed=42)[0]
    s = spec(algorithm="prejudice_remover")
    r1 = execute_cell(staged, s, plan, 5.0)
    first = record_path(staged, r1.run_id).read_bytes()
    r2 = execute_cell(staged, s, plan, 5.0)
    assert record_path(staged, r2.run_id).read_bytes() == first
    assert prediction_metrics(staged, r1.run_id, "1") == r1.metrics
    assert load_record(staged, r1.run_id).metrics == r1.metrics


def test_failed_cell_is_recorded(staged, tmp_path):
    from fairbench.preprocess import load_processed

    pt = load_processed(staged, "synth", "numerical_binary")
    y = pt.labels
    one_class = np.nonzero(y == 1)[0][:20]
    plan = SplitPlan(0, 99, one_class, np.nonzero(y == 0)[0][:10])
    rec = execute_cell(tmp_path, spec(algorithm="logreg"), plan, None, pt=pt)
    assert rec.status == "failed" and "single class" in rec.error
    assert all(v is None for v in rec.metrics.values())
    assert record_path(tmp_path, rec.run_id).exists()


def test_select_param_examples():
    cands = [(0.1, {"di_bin": 0.8, "acc": 0.9}), (0.2, {"di_bin": 0.95, "acc": 0.7})]
    assert select_param(cands, "best_di") == 0.2
    assert select_param(cands, "best_accuracy") == 0.1
    assert select_param([(0.3, {"di_bin": 0.5, "acc": 0.5})], "best_di") == 0.3
    assert select_param(cands, "report_all") == [0.1, 0.2]
    # ties go to the smaller parameter; undefined scores lose
    tie = [(0.5, {"di_bin": 1.1}), (0.2, {"di_bin": 0.9}), (0.1, {"di_bin": None})]
    assert select_param(tie, "best_di") == 0.2
    assert select_param([(0.1, None), (0.2, {"acc": 0.6})], "best_accuracy") == 0.2
    with pytest.raises(RunnerError):
        select_param([(0.1, None)], "best_di")


def test_validation_split_stays_inside_training_rows():
    plan = make_splits(300, 1, master_seed=42)[0]
    s = spec(algorithm="two_nb")
    tr, va = validation_split(plan, s)
    assert set(tr) | set(va) == set(plan.train_indices)
    assert not set(va) & set(plan.test_indices)
    assert len(tr) == 134
    again = validation_split(plan, spec(algorithm="two_nb", param_grid=(0.3,)))
    assert np.array_equal(again[0], tr)


def test_run_specs_resume_and_results(staged, tmp_path):
    import shutil

    out = tmp_path / "out"
    shutil.copytree(staged / "processed", out / "processed")
    shutil.copytree(staged / "splits", out / "splits")
    specs = [spec(algorithm="gnb"), spec(algorithm="zafar", param_grid=(0.01, 1.0))]
    first = run_specs(specs, out)
    assert first["cells"] == 3 + 6 and first["failed"] == 0
    csv1 = results_path(out, specs[1]).read_bytes()
    # drop one record to simulate an interruption
    victim = next((out / "records").glob("*.json"))
    victim.unlink()
    second = run_specs(specs, out)
    assert second["cells"] == 1 and second["skipped"] == 8
    assert results_path(out, specs[1]).read_bytes() == csv1
    rows = read_results(results_path(out, specs[1]))
    assert [(r.split_id, r.param) for r in rows] == [(i, p) for i in range(3) for p in (0.01, 1.0)]
    header = results_path(out, specs[0]).read_text().splitlines()[0].split(",")
    assert header[:4] == ["run_id", "split_id", "param", "acc"] and len(header) == 41


def test_run_specs_with_selection(staged, tmp_path):
    import shutil

    out = tmp_path / "sel"
    shutil.copytree(staged / "processed", out / "processed")
    shutil.copytree(staged / "splits", out / "splits")
    s = spec(algorithm="two_nb", param_grid=(0.0, 1.0), objective="best_di")
    res = run_specs([s], out)
    assert res["selection_failed"] == 0
    rows = read_results(results_path(out, s))
    assert len(rows) == N_SPLITS
    for r in rows:
        payloads = [
            json.loads((out / "validation" / f"{cell_id(s, p, 42 ^ r.split_id)}.json").read_text())
            for p in (0.0, 1.0)
        ]
        best = select_param([(p["param"], p["metrics"]) for p in payloads], "best_di")
        assert r.param == best


def test_missing_stage_is_reported(tmp_path):
    with pytest.raises(MissingArtifact, match="fairbench preprocess"):
        run_specs([spec(algorithm="gnb")], tmp_path)


def test_parse_results_name():
    assert parse_results_name("propublica_violent_numerical_binary_race-sex_di_remover-tree.csv") == (
        "propublica_violent", "numerical_binary", "race-sex", "di_remover-tree",
    )
    assert parse_results_name("german_original_age_gnb.csv") == ("german", "original", "age", "gnb")
    with pytest.raises(RunnerError):
        parse_results_name("nonsense.csv")
