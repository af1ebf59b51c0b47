"""Command-line entry point.

Subcommands wire the pipeline stages into reproducible runs: `ingest`
(acquisition files -> session cache), `onsets` (trial table CSV), `train`,
`evaluate`, `run-study`, and `synth`. Every run echoes its effective
configuration next to its outputs; failures exit nonzero with a
machine-readable JSON error on stderr.
"""

import argparse
import csv
import json
import os
import sys
from dataclasses import replace

from . import __version__
from .brainvision import read_brainvision, write_brainvision
from .channels import load_channel_config, make_channel_set
from .errors import LrpTransferError
from .evaluate import (
    StudyConfig,
    build_dataset,
    evaluate_trialwise,
    export,
    report_hash,
    run_study,
)
from .ingest import TriggerCodes, build_trials, cache_dataset, load_dataset, synchronize
from .model import FitConfig, fit_pipeline, load_model, save_model
from .motioncsv import read_motion_csv, write_motion_csv
from .onset import OnsetConfig, label_session
from .synth import SynthConfig, generate_session
from .types import BILATERAL, UNILATERAL

DATA_DIR_ENV = "LRPTRANSFER_DATA_DIR"


def _echo_config(outdir, payload):
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, "effective_config.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
    return path


def _load_codes(path):
    return TriggerCodes.from_json(path) if path else TriggerCodes()


def cmd_ingest(args):
    eeg = read_brainvision(args.eeg)
    motion = read_motion_csv(args.motion)
    codes = _load_codes(args.codes)
    session = synchronize(
        eeg, motion, codes,
        subject_id=args.subject, task=args.condition, set_index=args.set_index,
    )
    session = build_trials(session, codes, min_rest=args.min_rest)
    extras = {}
    if args.emg:
        with open(args.emg, "rb") as fh:
            extras[f"emg/{os.path.basename(args.emg)}"] = fh.read()
    cache_dataset(session, args.out, extras=extras or None)
    print(json.dumps({
        "out": args.out,
        "n_trials": len(session.trials),
        "n_valid": len(session.trials.valid_trials()),
    }))


def cmd_onsets(args):
    session = load_dataset(args.cache)
    config = OnsetConfig(
        threshold_mm=args.threshold,
        mechanical_delay_s=args.mechanical_delay,
    )
    session = label_session(session, config)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["subject", "set", "trial", "condition",
                         "onset_sample", "valid", "reason"])
        for t in session.trials:
            writer.writerow([session.subject_id, t.set_index, t.trial_id,
                             t.condition, t.onset_sample, int(t.valid), t.reason])
    if args.update_cache:
        cache_dataset(session, args.cache)
    print(json.dumps({"out": args.out, "n_trials": len(session.trials)}))


def _study_config_from_args(args, require_config=False):
    if args.config:
        config = StudyConfig.from_json(args.config)
    elif require_config:
        raise LrpTransferError("--config is required")
    else:
        config = StudyConfig()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
        overrides["synth"] = replace(config.synth, seed=args.seed)
    if getattr(args, "jobs", None) is not None:
        overrides["jobs"] = args.jobs
    if getattr(args, "data_dir", None):
        overrides["data_kind"] = "cache"
        overrides["cache_dir"] = args.data_dir
    return replace(config, **overrides) if overrides else config


def cmd_train(args):
    config = _study_config_from_args(args)
    dataset = build_dataset(config)
    cset = make_channel_set(args.channel_set)
    train_ids = tuple(int(s) for s in args.sets.split(","))
    wsets = dataset.windows(args.subject, args.condition)
    train = [wsets[i].select_channels(cset) for i in train_ids]
    fit_cfg = FitConfig(seed=config.seed, formulation=config.svm_formulation,
                        class_weights=config.class_weights, n_folds=config.n_folds)
    pipeline = fit_pipeline(train, cset, fit_cfg)
    save_model(pipeline, args.out)
    print(json.dumps({
        "out": args.out,
        "C": pipeline.meta["C"],
        "train_sets": list(train_ids),
        "condition": args.condition,
    }))


def cmd_evaluate(args):
    config = _study_config_from_args(args)
    dataset = build_dataset(config)
    pipeline = load_model(args.model)
    wsets = dataset.windows(args.subject, args.test_condition)
    test = wsets[args.test_set].select_channels(pipeline.channel_set)
    tpr, tnr, ba, n_trials = evaluate_trialwise(
        pipeline, test, include_boundary=config.relabel_include_boundary
    )
    row = {
        "subject": args.subject,
        "test_condition": args.test_condition,
        "test_set": args.test_set,
        "channel_set": pipeline.channel_set.name,
        "tpr": tpr, "tnr": tnr, "ba": ba, "n_test_trials": n_trials,
    }
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(list(row))
            writer.writerow([row[k] for k in row])
    print(json.dumps(row))


def cmd_run_study(args):
    config = _study_config_from_args(args)
    if args.channel_config:
        load_channel_config(args.channel_config)
    report = run_study(config)
    os.makedirs(args.out, exist_ok=True)
    _echo_config(args.out, config.to_dict())
    formats = tuple(args.formats.split(","))
    paths = export(report, args.out, formats=formats)
    summary = {
        "out": args.out,
        "n_results": len(report.results),
        "report_sha256": report_hash(report),
        "files": paths,
        "aggregates": report.aggregates(),
    }
    with open(os.path.join(args.out, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    print(json.dumps({k: summary[k] for k in ("out", "n_results", "report_sha256")}))


def cmd_synth(args):
    synth_cfg = SynthConfig(seed=args.seed, trials_per_set=args.trials,
                            sets=args.sets, snr=args.snr)
    os.makedirs(args.out, exist_ok=True)
    _echo_config(args.out, {
        "seed": args.seed, "trials_per_set": args.trials,
        "sets": args.sets, "snr": args.snr, "subjects": args.subjects,
        "version": __version__,
    })
    written = []
    for subject_index in range(args.subjects):
        for task in (UNILATERAL, BILATERAL):
            for set_index in range(args.sets):
                session, truth = generate_session(
                    synth_cfg, subject_index, set_index, task
                )
                stem = f"S{subject_index:02d}_{task}_set{set_index}"
                path = os.path.join(args.out, stem + ".lrpx")
                cache_dataset(session, path)
                written.append(path)
                if args.brainvision:
                    write_brainvision(session.eeg, os.path.join(args.out, stem + ".vhdr"))
                    write_motion_csv(session.motion, os.path.join(args.out, stem + "_motion.csv"))
                if args.ground_truth:
                    gt_path = os.path.join(args.out, stem + "_truth.csv")
                    with open(gt_path, "w", encoding="utf-8", newline="") as fh:
                        writer = csv.writer(fh, lineterminator="\n")
                        writer.writerow(["trial", "onset_sample", "lrp_start_sample",
                                         "release_sample"])
                        for i in range(len(truth.onset_samples)):
                            writer.writerow([i, truth.onset_samples[i],
                                             truth.lrp_start_samples[i],
                                             truth.release_samples[i]])
    print(json.dumps({"out": args.out, "n_files": len(written)}))


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lrptransfer",
        description="EEG movement-intention detection with cross-task classifier transfer",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse acquisition files into a session cache")
    p.add_argument("--eeg", required=True, help="BrainVision header (.vhdr)")
    p.add_argument("--motion", required=True, help="motion CSV")
    p.add_argument("--emg", default="", help="optional EMG file stored opaquely")
    p.add_argument("--codes", default="", help="trigger-code JSON config")
    p.add_argument("--subject", required=True)
    p.add_argument("--condition", required=True, choices=(UNILATERAL, BILATERAL))
    p.add_argument("--set-index", type=int, required=True)
    p.add_argument("--min-rest", type=float, default=5.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("onsets", help="estimate movement onsets into a trial CSV")
    p.add_argument("--cache", required=True)
    p.add_argument("--threshold", type=float, default=0.6)
    p.add_argument("--mechanical-delay", type=float, default=0.0)
    p.add_argument("--update-cache", action="store_true",
                   help="write refined onsets back into the cache file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_onsets)

    p = sub.add_parser("train", help="fit a pipeline model on cached sessions")
    p.add_argument("--config", default="")
    p.add_argument("--data-dir", default=os.environ.get(DATA_DIR_ENV, ""),
                   help=f"session cache dir (default ${DATA_DIR_ENV})")
    p.add_argument("--subject", required=True)
    p.add_argument("--condition", required=True, choices=(UNILATERAL, BILATERAL))
    p.add_argument("--channel-set", required=True)
    p.add_argument("--sets", default="0,1", help="training set indices, comma-separated")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a model on a held-out set")
    p.add_argument("--config", default="")
    p.add_argument("--data-dir", default=os.environ.get(DATA_DIR_ENV, ""))
    p.add_argument("--model", required=True)
    p.add_argument("--subject", required=True)
    p.add_argument("--test-condition", required=True, choices=(UNILATERAL, BILATERAL))
    p.add_argument("--test-set", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("run-study", help="full condition x channel-set evaluation")
    p.add_argument("--config", default="", help="StudyConfig JSON")
    p.add_argument("--channel-config", default="",
                   help="plain-text channel-set overrides")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--formats", default="csv,svg")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_run_study)

    p = sub.add_parser("synth", help="generate synthetic sessions")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--subjects", type=int, default=1)
    p.add_argument("--sets", type=int, default=3)
    p.add_argument("--trials", type=int, default=40)
    p.add_argument("--snr", type=float, default=1.0)
    p.add_argument("--brainvision", action="store_true",
                   help="also write BrainVision triplets and motion CSVs")
    p.add_argument("--ground-truth", action="store_true",
                   help="also write planted ground-truth CSVs")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except LrpTransferError as exc:
        print(json.dumps({
            "error": type(exc).__name__,
            "message": str(exc),
            "command": args.command,
        }), file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(json.dumps({
            "error": "FileNotFoundError",
            "message": str(exc),
            "path": exc.filename,
            "command": args.command,
        }), file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
