import csv
import json

from lrptransfer.cli import main
from lrptransfer.evaluate import StudyConfig
from lrptransfer.synth import SynthConfig


def _run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_synth_then_ingest_round_trip(tmp_path, capsys):
    outdir = tmp_path / "synth"
    code, out, _ = _run(
        capsys, "synth", "--seed", "3", "--subjects", "1", "--sets", "1",
        "--trials", "3", "--out", str(outdir), "--brainvision",
    )
    assert code == 0
    stem = outdir / "S00_unilateral_set0"
    cache = tmp_path / "ingested.lrpx"
    code, out, _ = _run(
        capsys, "ingest",
        "--eeg", str(stem) + ".vhdr",
        "--motion", str(stem) + "_motion.csv",
        "--subject", "S00", "--condition", "unilateral", "--set-index", "0",
        "--out", str(cache),
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["n_trials"] == 3
    assert payload["n_valid"] == 3


def test_onsets_writes_trial_csv(tmp_path, capsys):
    outdir = tmp_path / "synth"
    _run(capsys, "synth", "--seed", "4", "--subjects", "1", "--sets", "1",
         "--trials", "3", "--out", str(outdir))
    cache = outdir / "S00_unilateral_set0.lrpx"
    trials_csv = tmp_path / "trials.csv"
    code, out, _ = _run(
        capsys, "onsets", "--cache", str(cache),
        "--mechanical-delay", "0.02", "--out", str(trials_csv),
    )
    assert code == 0
    with open(trials_csv) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 3
    assert set(rows[0]) == {"subject", "set", "trial", "condition",
                            "onset_sample", "valid", "reason"}
    assert all(r["valid"] == "1" for r in rows)


def test_train_then_evaluate_transfer(tmp_path, capsys):
    outdir = tmp_path / "sessions"
    _run(capsys, "synth", "--seed", "5", "--subjects", "1", "--sets", "3",
         "--trials", "6", "--out", str(outdir))
    config = StudyConfig(
        seed=5, n_subjects=1, data_kind="cache", cache_dir=str(outdir),
        mechanical_delay_s=0.02,
    )
    cfg_path = tmp_path / "study.json"
    cfg_path.write_text(json.dumps(config.to_dict()))

    model_path = tmp_path / "model.lrpx"
    code, out, _ = _run(
        capsys, "train", "--config", str(cfg_path), "--subject", "S00",
        "--condition", "bilateral", "--channel-set", "custom-8",
        "--sets", "0,1", "--out", str(model_path),
    )
    assert code == 0
    assert model_path.exists()

    code, out, _ = _run(
        capsys, "evaluate", "--config", str(cfg_path),
        "--model", str(model_path), "--subject", "S00",
        "--test-condition", "unilateral", "--test-set", "2",
        "--out", str(tmp_path / "eval.csv"),
    )
    assert code == 0
    row = json.loads(out)
    assert row["test_condition"] == "unilateral"
    assert 0.0 <= row["ba"] <= 1.0


def test_run_study_deterministic_hash(tmp_path, capsys):
    config = StudyConfig(
        seed=2, conditions=("A",), channel_sets=("custom-4",), n_subjects=1,
        synth=SynthConfig(trials_per_set=6), mechanical_delay_s=0.02,
    )
    cfg_path = tmp_path / "study.json"
    cfg_path.write_text(json.dumps(config.to_dict()))
    hashes = []
    csv_bytes = []
    for run in ("one", "two"):
        out_dir = tmp_path / run
        code, out, _ = _run(
            capsys, "run-study", "--config", str(cfg_path),
            "--formats", "csv", "--out", str(out_dir),
        )
        assert code == 0
        hashes.append(json.loads(out)["report_sha256"])
        csv_bytes.append((out_dir / "results.csv").read_bytes())
        assert (out_dir / "effective_config.json").exists()
        assert (out_dir / "summary.json").exists()
    assert hashes[0] == hashes[1]
    assert csv_bytes[0] == csv_bytes[1]


def test_effective_config_replay(tmp_path, capsys):
    config = StudyConfig(
        seed=8, conditions=("A",), channel_sets=("custom-4",), n_subjects=1,
        synth=SynthConfig(trials_per_set=6), mechanical_delay_s=0.02,
    )
    cfg_path = tmp_path / "study.json"
    cfg_path.write_text(json.dumps(config.to_dict()))
    code, out, _ = _run(capsys, "run-study", "--config", str(cfg_path),
                        "--formats", "csv", "--out", str(tmp_path / "a"))
    assert code == 0
    first = json.loads(out)["report_sha256"]
    echoed = tmp_path / "a" / "effective_config.json"
    code, out, _ = _run(capsys, "run-study", "--config", str(echoed),
                        "--formats", "csv", "--out", str(tmp_path / "b"))
    assert code == 0
    assert json.loads(out)["report_sha256"] == first
    assert (tmp_path / "a" / "results.csv").read_bytes() == \
        (tmp_path / "b" / "results.csv").read_bytes()


def test_run_study_with_channel_config_override(tmp_path, capsys):
    sets_cfg = tmp_path / "sets.cfg"
    sets_cfg.write_text("probe-3 = C1,C3,C5\n")
    config = StudyConfig(
        seed=1, conditions=("A",), channel_sets=("probe-3",), n_subjects=1,
        synth=SynthConfig(trials_per_set=6), mechanical_delay_s=0.02,
    )
    cfg_path = tmp_path / "study.json"
    cfg_path.write_text(json.dumps(config.to_dict()))
    code, out, _ = _run(
        capsys, "run-study", "--config", str(cfg_path),
        "--channel-config", str(sets_cfg),
        "--formats", "csv", "--out", str(tmp_path / "out"),
    )
    assert code == 0
    text = (tmp_path / "out" / "results.csv").read_text()
    assert "probe-3" in text


def test_missing_path_gives_json_error(tmp_path, capsys):
    code, out, err = _run(
        capsys, "onsets", "--cache", str(tmp_path / "absent.lrpx"),
        "--out", str(tmp_path / "x.csv"),
    )
    assert code == 2
    payload = json.loads(err)
    assert payload["error"] == "FileNotFoundError"
    assert "absent.lrpx" in payload["message"]


def test_unknown_channel_set_gives_json_error(tmp_path, capsys):
    outdir = tmp_path / "sessions"
    _run(capsys, "synth", "--seed", "5", "--subjects", "1", "--sets", "3",
         "--trials", "6", "--out", str(outdir))
    code, out, err = _run(
        capsys, "train", "--data-dir", str(outdir), "--subject", "S00",
        "--condition", "unilateral", "--channel-set", "custom-64",
        "--out", str(tmp_path / "m.lrpx"),
    )
    assert code == 2
    payload = json.loads(err)
    assert payload["error"] == "RegistryError"
