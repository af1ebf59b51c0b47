import numpy as np
import pytest

from lrptransfer.errors import EvalError
from lrptransfer.evaluate import (
    RANGE_END,
    RANGE_START,
    SplitResult,
    StudyConfig,
    StudyReport,
    balanced_accuracy,
    export,
    export_csv,
    read_results_csv,
    relabel,
    report_hash,
    run_condition,
    run_study,
)
from lrptransfer.synth import SynthConfig

from reference import (
    brute_force_relabel,
    confusion_matrix_ba,
    range_pattern_to_predictions,
)


def _pred(lrp_windows):
    pred = np.zeros(81, dtype=bool)
    pred[list(lrp_windows)] = True
    return pred


def test_all_range_lrp_keeps_range_lrp():
    pred = _pred(range(RANGE_START, RANGE_END + 1))
    truth = relabel(pred)
    assert truth[RANGE_START:].all()
    assert not truth[:RANGE_START].any()


def test_all_range_nolrp_leaves_only_fixed_final_window():
    pred = _pred([])
    truth = relabel(pred)
    assert truth[RANGE_END]
    assert not truth[:RANGE_END].any()


def test_change_point_at_prediction_boundary():
    # NoLRP predictions for start offsets -2.00..-1.60 (k=60..68), LRP after
    pred = _pred(range(69, 81))
    truth = relabel(pred)
    assert not truth[:69].any()
    assert truth[69:].all()


def test_relabel_single_transition_property(rng):
    for _ in range(500):
        pred = rng.random(81) < rng.random()
        truth = relabel(pred)
        assert not truth[:RANGE_START].any() or truth[RANGE_START:].all()
        diffs = np.flatnonzero(np.diff(truth.astype(int)))
        assert len(diffs) == 1  # exactly one NoLRP -> LRP transition
        assert truth[RANGE_END]
        assert not truth[:RANGE_START].any()


def test_relabel_agrees_with_brute_force_on_random_patterns(rng):
    for _ in range(2000):
        bits = int(rng.integers(0, 1 << 21))
        pred = range_pattern_to_predictions(bits)
        assert np.array_equal(relabel(pred), brute_force_relabel(pred))


def test_relabel_scan_variant_excludes_final_window():
    # all range NoLRP except the final window's prediction: with the
    # boundary window excluded the scan sees the same triple
    pred = _pred([RANGE_END])
    with_boundary = relabel(pred, include_boundary=True)
    without_boundary = relabel(pred, include_boundary=False)
    assert np.array_equal(with_boundary, without_boundary)
    # boundary-only NoLRP triple: windows 78..80 NoLRP, everything else LRP
    pred = _pred(range(RANGE_START, 78))
    with_b = relabel(pred, include_boundary=True)
    without_b = relabel(pred, include_boundary=False)
    # including the boundary finds the (78,79,80) triple; excluding it
    # cannot complete a triple ending at the final window
    assert not np.array_equal(with_b, without_b)
    assert np.array_equal(
        without_b, brute_force_relabel(pred, include_boundary=False)
    )


def test_relabel_requires_complete_vector():
    with pytest.raises(EvalError):
        relabel(np.zeros(80, dtype=bool))


def test_relabel_accepts_label_strings():
    pred = np.array(["NoLRP"] * 81)
    pred[79] = "LRP"
    truth = relabel(pred)
    assert truth[RANGE_END]


def test_balanced_accuracy_perfect():
    truth = np.array([True, True, False, False])
    ba, tpr, tnr = balanced_accuracy(truth, truth)
    assert (ba, tpr, tnr) == (1.0, 1.0, 1.0)


def test_balanced_accuracy_definition():
    truth = np.array([True] * 10 + [False] * 10)
    pred = truth.copy()
    pred[:2] = False  # TPR 0.8
    pred[10] = True   # TNR 0.9
    ba, tpr, tnr = balanced_accuracy(pred, truth)
    assert tpr == pytest.approx(0.8)
    assert tnr == pytest.approx(0.9)
    assert ba == pytest.approx(0.85)
    assert ba == pytest.approx((tpr + tnr) / 2)


def test_balanced_accuracy_matches_confusion_oracle(rng):
    truth = rng.random(10_000) < 0.5
    pred = rng.random(10_000) < 0.5
    ours = balanced_accuracy(pred, truth)
    ref = confusion_matrix_ba(pred, truth)
    assert ours == ref


def test_random_predictions_near_half(rng):
    truth = np.array([True, False] * 5000)
    pred = rng.random(10_000) < 0.5
    ba, _, _ = balanced_accuracy(pred, truth)
    assert abs(ba - 0.5) < 0.02


def test_balanced_accuracy_permutation_invariant(rng):
    truth = rng.random(500) < 0.4
    pred = rng.random(500) < 0.6
    perm = rng.permutation(500)
    assert balanced_accuracy(pred, truth) == balanced_accuracy(pred[perm], truth[perm])


def test_missing_class_is_an_error():
    with pytest.raises(EvalError):
        balanced_accuracy(np.array([True, False]), np.array([True, True]))


# ---------------------------------------------------------------------------
# Study-level behavior on a miniature synthetic dataset


@pytest.fixture(scope="module")
def mini_config():
    return StudyConfig(
        seed=0,
        conditions=("A", "C"),
        channel_sets=("custom-8",),
        n_subjects=2,
        synth=SynthConfig(trials_per_set=8),
        mechanical_delay_s=0.02,
    )


@pytest.fixture(scope="module")
def mini_report(mini_config):
    return run_study(mini_config)


def test_split_structure(mini_report):
    results = mini_report.results
    assert len(results) == 2 * 2 * 3  # conditions x subjects x permutations
    for r in results:
        assert r.test_set not in r.train_sets
        assert len(r.train_sets) == 2
        assert r.ba == pytest.approx((r.tpr + r.tnr) / 2)


def test_condition_c_trains_bilateral_tests_unilateral(mini_config):
    from lrptransfer.evaluate import build_dataset

    dataset = build_dataset(mini_config)
    results = run_condition(dataset, "C", "custom-8", mini_config)
    assert len(results) == 2 * 3
    assert all(r.condition == "C" for r in results)


def test_results_per_cell_count(mini_report):
    cell = mini_report.cell("A", "custom-8")
    assert len(cell) == 6  # subjects x 3 permutations


def test_csv_round_trip(mini_report, tmp_path):
    path = tmp_path / "results.csv"
    export_csv(mini_report, path)
    loaded = read_results_csv(path)
    for a, b in zip(loaded, mini_report.results):
        assert (a.subject, a.condition, a.channel_set) == (
            b.subject, b.condition, b.channel_set)
        assert (a.train_sets, a.test_set) == (b.train_sets, b.test_set)
        # floats round-trip exactly through the 17-digit format
        assert (a.tpr, a.tnr, a.ba) == (b.tpr, b.tnr, b.ba)
    again = StudyReport(results=loaded, config=mini_report.config)
    assert again.aggregates() == mini_report.aggregates()
    assert report_hash(again) == report_hash(mini_report)


def test_csv_column_order(mini_report, tmp_path):
    path = tmp_path / "results.csv"
    export_csv(mini_report, path)
    header = path.read_text().splitlines()[0]
    assert header == "subject,condition,channel_set,train_sets,test_set,tpr,tnr,ba"


def test_empty_report_is_header_only(tmp_path):
    path = tmp_path / "empty.csv"
    export_csv(StudyReport(results=[]), path)
    lines = path.read_text().splitlines()
    assert lines == ["subject,condition,channel_set,train_sets,test_set,tpr,tnr,ba"]


def test_export_writes_svg_per_cell(mini_report, tmp_path):
    paths = export(mini_report, tmp_path, formats=("csv", "svg"))
    names = {p.split("/")[-1] for p in paths}
    assert "results.csv" in names
    assert "A_custom-8.svg" in names
    assert "C_custom-8.svg" in names


def test_aggregates_flag_imbalance():
    results = [
        SplitResult("S00", "A", "custom-8", (0, 1), 2, tpr=0.95, tnr=0.55, ba=0.75),
    ]
    report = StudyReport(results=results)
    assert report.aggregates()[0]["imbalanced"]


def test_run_study_cells_subset(mini_config):
    import dataclasses
    cfg = dataclasses.replace(mini_config, cells=(("A", "custom-8"),))
    report = run_study(cfg)
    assert {(r.condition, r.channel_set) for r in report.results} == {("A", "custom-8")}


def test_default_config_covers_full_matrix():
    cfg = StudyConfig()
    assert cfg.conditions == ("A", "B", "C")
    assert len(cfg.channel_sets) == 8
    assert set(cfg.channel_sets) == {
        "custom-32", "custom-21", "custom-16", "custom-8", "custom-4",
        "standard-32", "standard-21", "standard-16",
    }
    assert cfg.n_subjects == 8


def test_config_json_round_trip(mini_config, tmp_path):
    import json
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(mini_config.to_dict()))
    loaded = StudyConfig.from_json(path)
    assert loaded == mini_config
