"""Continuous-prediction evaluation: relabeling, balanced accuracy, studies.

Every valid test trial is predicted on all 81 windows. Ground truth is
derived per trial with the relabeling rule: a single NoLRP-to-LRP change
point placed inside the window interval [-2.00, -1.00] s .. [-1.00, 0.00] s
where movement planning can plausibly begin, anchored by the fixed labels
outside it (earlier windows are always NoLRP, the final window always LRP).
"""

import csv
import hashlib
import json
import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import model as model_mod
from .channels import make_channel_set
from .errors import EvalError
from .ingest import load_dataset
from .onset import OnsetConfig, label_session
from .preprocess import N_WINDOWS, conditioned_windows
from .sparse_svm import L1_WEIGHTS
from .synth import SynthConfig, generate_session
from .types import LRP, study_condition

RANGE_START = 60  # window [-2.00, -1.00] s
RANGE_END = 80    # window [-1.00, 0.00] s
CONSECUTIVE_NOLRP = 3

DEFAULT_CHANNEL_SETS = (
    "custom-32", "custom-21", "custom-16", "custom-8", "custom-4",
    "standard-32", "standard-21", "standard-16",
)


def _as_bool_predictions(predictions):
    arr = np.asarray(predictions)
    if arr.dtype != bool:
        arr = arr == LRP
    if arr.shape != (N_WINDOWS,):
        raise EvalError(
            f"need a complete {N_WINDOWS}-window prediction vector, got {arr.shape}"
        )
    return arr


def relabel(predictions, include_boundary=True):
    """Derive per-window ground truth from one trial's predictions.

    Scanning backwards from the final window, the first run of three
    consecutive NoLRP predictions inside the search range puts the change
    point right after its latest window: ground truth is NoLRP at and
    before that point, LRP after. Without such a run the whole range is
    LRP. The fixed labels override afterwards. `include_boundary` controls
    whether the final (fixed-LRP) window's prediction takes part in the
    scan.
    """
    pred = _as_bool_predictions(predictions)
    start = RANGE_END if include_boundary else RANGE_END - 1
    run = 0
    change_after = None
    for k in range(start, RANGE_START - 1, -1):
        if not pred[k]:
            run += 1
            if run == CONSECUTIVE_NOLRP:
                change_after = k + CONSECUTIVE_NOLRP - 1
                break
        else:
            run = 0
    truth = np.zeros(N_WINDOWS, dtype=bool)
    if change_after is None:
        truth[RANGE_START:] = True
    else:
        truth[change_after + 1:] = True
    truth[RANGE_END] = True
    return truth


def confusion_counts(pred, truth):
    pred = np.asarray(pred, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if pred.shape != truth.shape:
        raise EvalError("prediction and truth vectors differ in length")
    tp = int(np.sum(pred & truth))
    fn = int(np.sum(~pred & truth))
    tn = int(np.sum(~pred & ~truth))
    fp = int(np.sum(pred & ~truth))
    return tp, fn, tn, fp


def balanced_accuracy(pred, truth):
    """(BA, TPR, TNR) with LRP as the positive class."""
    tp, fn, tn, fp = confusion_counts(pred, truth)
    if tp + fn == 0:
        raise EvalError("ground truth contains no LRP windows; TPR undefined")
    if tn + fp == 0:
        raise EvalError("ground truth contains no NoLRP windows; TNR undefined")
    tpr = tp / (tp + fn)
    tnr = tn / (tn + fp)
    return (tpr + tnr) / 2.0, tpr, tnr


@dataclass(frozen=True)
class SplitResult:
    """Scores of one (subject, condition, channel set, permutation) split."""

    subject: str
    condition: str
    channel_set: str
    train_sets: tuple
    test_set: int
    tpr: float
    tnr: float
    ba: float
    n_test_trials: int = 0

    @property
    def key(self):
        return (self.condition, self.channel_set, self.subject, self.test_set)


@dataclass
class StudyReport:
    """All split results of a study plus per-cell aggregates."""

    results: list
    config: dict = field(default_factory=dict)

    def cell(self, condition, channel_set):
        return [r for r in self.results
                if r.condition == condition and r.channel_set == channel_set]

    def aggregates(self):
        """Per-(condition, channel_set) mean/SD rows, imbalance-flagged."""
        rows = []
        cells = sorted({(r.condition, r.channel_set) for r in self.results})
        for condition, channel_set in cells:
            bas = np.array([r.ba for r in self.cell(condition, channel_set)])
            tprs = np.array([r.tpr for r in self.cell(condition, channel_set)])
            tnrs = np.array([r.tnr for r in self.cell(condition, channel_set)])
            rows.append({
                "condition": condition,
                "channel_set": channel_set,
                "n": len(bas),
                "mean_ba": float(bas.mean()),
                "sd_ba": float(bas.std(ddof=1)) if len(bas) > 1 else 0.0,
                "mean_tpr": float(tprs.mean()),
                "mean_tnr": float(tnrs.mean()),
                "imbalanced": bool(abs(tprs.mean() - tnrs.mean()) > 0.2),
            })
        return rows


# --------------------------------------------------------------------------
# Study configuration and data providers


@dataclass(frozen=True)
class StudyConfig:
    """Effective configuration of a run; fully serializable for replay."""

    seed: int = 0
    conditions: tuple = ("A", "B", "C")
    channel_sets: tuple = DEFAULT_CHANNEL_SETS
    cells: tuple = ()  # optional explicit (condition, channel_set) pairs
    data_kind: str = "synth"  # "synth" | "cache"
    n_subjects: int = 8
    synth: SynthConfig = field(default_factory=SynthConfig)
    cache_dir: str = ""
    threshold_mm: float = 0.6
    mechanical_delay_s: float = 0.0
    band_hz: tuple = (0.1, 4.0)
    target_rate: float = 20.0
    svm_formulation: str = L1_WEIGHTS
    relabel_include_boundary: bool = True
    class_weights: tuple = (1.0, 2.0)
    n_folds: int = 5
    jobs: int = 1

    def onset_config(self):
        return OnsetConfig(
            threshold_mm=self.threshold_mm,
            mechanical_delay_s=self.mechanical_delay_s,
        )

    def to_dict(self):
        d = {
            "seed": self.seed,
            "conditions": list(self.conditions),
            "channel_sets": list(self.channel_sets),
            "cells": [list(c) for c in self.cells],
            "data_kind": self.data_kind,
            "n_subjects": self.n_subjects,
            "synth": {k: (list(v) if isinstance(v, tuple) else v)
                      for k, v in vars(self.synth).items()},
            "cache_dir": self.cache_dir,
            "threshold_mm": self.threshold_mm,
            "mechanical_delay_s": self.mechanical_delay_s,
            "band_hz": list(self.band_hz),
            "target_rate": self.target_rate,
            "svm_formulation": self.svm_formulation,
            "relabel_include_boundary": self.relabel_include_boundary,
            "class_weights": list(self.class_weights),
            "n_folds": self.n_folds,
            "jobs": self.jobs,
        }
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "synth" in d and isinstance(d["synth"], dict):
            synth_args = {
                k: (tuple(v) if isinstance(v, list) else v)
                for k, v in d["synth"].items()
            }
            d["synth"] = SynthConfig(**synth_args)
        for key in ("conditions", "channel_sets", "band_hz", "class_weights"):
            if key in d and isinstance(d[key], list):
                d[key] = tuple(d[key])
        if "cells" in d:
            d["cells"] = tuple(tuple(c) for c in d["cells"])
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


class SynthStudyData:
    """Generates per-subject sessions on demand and windows them."""

    def __init__(self, config):
        self.config = config
        self.synth = replace(config.synth, seed=config.seed)
        self._cache = {}

    def subjects(self):
        return [f"S{i:02d}" for i in range(self.config.n_subjects)]

    def windows(self, subject, task):
        key = (subject, task)
        if key not in self._cache:
            self._cache[key] = self._build(subject, task)
        return self._cache[key]

    def release(self, subject):
        for key in [k for k in self._cache if k[0] == subject]:
            del self._cache[key]

    def _build(self, subject, task):
        index = self.subjects().index(subject)
        onset_cfg = self.config.onset_config()
        out = {}
        for set_index in range(self.synth.sets):
            session, _ = generate_session(self.synth, index, set_index, task)
            session = label_session(session, onset_cfg)
            out[set_index], _ = conditioned_windows(
                session.eeg, session.trials,
                subject_id=subject, task=task, set_index=set_index,
                band=self.config.band_hz, target_rate=self.config.target_rate,
            )
        return out


class CacheStudyData:
    """Loads cached sessions from a directory of container files."""

    def __init__(self, config, recompute_onsets=True):
        self.config = config
        self.recompute_onsets = recompute_onsets
        self._index = {}
        for name in sorted(os.listdir(config.cache_dir)):
            if not name.endswith(".lrpx"):
                continue
            path = os.path.join(config.cache_dir, name)
            session = load_dataset(path)
            self._index.setdefault(
                (session.subject_id, session.task), {}
            )[session.set_index] = path
        self._cache = {}

    def subjects(self):
        return sorted({subject for subject, _ in self._index})

    def windows(self, subject, task):
        key = (subject, task)
        if key not in self._cache:
            if key not in self._index:
                raise EvalError(f"no cached sessions for subject {subject!r} task {task!r}")
            out = {}
            for set_index, path in sorted(self._index[key].items()):
                session = load_dataset(path)
                if self.recompute_onsets:
                    session = label_session(session, self.config.onset_config())
                out[set_index], _ = conditioned_windows(
                    session.eeg, session.trials,
                    subject_id=subject, task=task, set_index=set_index,
                    band=self.config.band_hz, target_rate=self.config.target_rate,
                )
            self._cache[key] = out
        return self._cache[key]

    def release(self, subject):
        for key in [k for k in self._cache if k[0] == subject]:
            del self._cache[key]


def build_dataset(config):
    if config.data_kind == "synth":
        return SynthStudyData(config)
    if config.data_kind == "cache":
        return CacheStudyData(config)
    raise EvalError(f"unknown data_kind {config.data_kind!r}")


# --------------------------------------------------------------------------
# Split execution


def _split_seed(config, subject, condition_id, channel_set, test_set):
    tag = f"{subject}/{condition_id}/{channel_set}/{test_set}"
    return int(np.random.SeedSequence(
        [config.seed, zlib.crc32(tag.encode("utf-8"))]
    ).generate_state(1)[0])


def evaluate_trialwise(pipeline, test_ws, include_boundary=True):
    """Predict all windows of every test trial, relabel, pool the confusion.

    Returns (tpr, tnr, ba, n_trials).
    """
    probs, labels = pipeline.predict(test_ws)
    pred_lrp = labels == LRP
    tp = fn = tn = fp = 0
    trial_ids = np.unique(test_ws.trial_ids)
    for tid in trial_ids:
        mask = test_ws.trial_ids == tid
        order = np.argsort(test_ws.window_index[mask])
        pred = pred_lrp[mask][order]
        truth = relabel(pred, include_boundary=include_boundary)
        dtp, dfn, dtn, dfp = confusion_counts(pred, truth)
        tp, fn, tn, fp = tp + dtp, fn + dfn, tn + dtn, fp + dfp
    if tp + fn == 0 or tn + fp == 0:
        raise EvalError("pooled ground truth lacks one class entirely")
    tpr = tp / (tp + fn)
    tnr = tn / (tn + fp)
    return tpr, tnr, (tpr + tnr) / 2.0, len(trial_ids)


def _run_subject_cell(dataset, subject, condition, cset, config):
    """The three leave-one-set-out splits of one (subject, condition, set)."""
    train_all = dataset.windows(subject, condition.train_condition)
    test_all = dataset.windows(subject, condition.test_condition)
    set_ids = sorted(test_all)
    if sorted(train_all) != [0, 1, 2] or set_ids != [0, 1, 2]:
        raise EvalError(
            f"subject {subject!r} needs exactly sets 0..2 per condition, got "
            f"train {sorted(train_all)} / test {set_ids}"
        )
    results = []
    for test_set in set_ids:
        train_ids = tuple(i for i in set_ids if i != test_set)
        if test_set in train_ids:
            raise EvalError("test set index leaked into the training sets")
        train = []
        for i in train_ids:
            ws = train_all[i].select_channels(cset)
            if ws.task != condition.train_condition or ws.set_index != i:
                raise EvalError(
                    f"training window provenance mismatch: {ws.task}/{ws.set_index}"
                )
            train.append(ws)
        test = test_all[test_set].select_channels(cset)
        if test.task != condition.test_condition or test.set_index != test_set:
            raise EvalError(
                f"test window provenance mismatch: {test.task}/{test.set_index}"
            )
        fit_cfg = model_mod.FitConfig(
            seed=_split_seed(config, subject, condition.id, cset.name, test_set),
            class_weights=config.class_weights,
            formulation=config.svm_formulation,
            n_folds=config.n_folds,
        )
        pipeline = model_mod.fit_pipeline(train, cset, fit_cfg)
        tpr, tnr, ba, n_trials = evaluate_trialwise(
            pipeline, test, include_boundary=config.relabel_include_boundary
        )
        results.append(SplitResult(
            subject=subject,
            condition=condition.id,
            channel_set=cset.name,
            train_sets=train_ids,
            test_set=test_set,
            tpr=tpr,
            tnr=tnr,
            ba=ba,
            n_test_trials=n_trials,
        ))
    return results


def run_condition(dataset, condition, channel_set, config=StudyConfig()):
    """All leave-one-set-out splits of one condition across subjects."""
    if isinstance(condition, str):
        condition = study_condition(condition)
    if isinstance(channel_set, str):
        channel_set = make_channel_set(channel_set)
    results = []
    for subject in dataset.subjects():
        results.extend(_run_subject_cell(dataset, subject, condition, channel_set, config))
    return results


def run_study(config):
    """Evaluate the configured condition x channel-set matrix.

    `cells` restricts the run to explicit (condition, channel_set) pairs;
    otherwise the full conditions x channel_sets product is evaluated.
    """
    dataset = build_dataset(config)
    if config.cells:
        cells = [(study_condition(c), make_channel_set(s)) for c, s in config.cells]
    else:
        cells = [(study_condition(c), make_channel_set(s))
                 for c in config.conditions for s in config.channel_sets]

    def per_subject(subject):
        out = []
        for condition, cset in cells:
            out.extend(_run_subject_cell(dataset, subject, condition, cset, config))
        dataset.release(subject)
        return out

    subjects = dataset.subjects()
    results = []
    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            for chunk in pool.map(per_subject, subjects):
                results.extend(chunk)
    else:
        for subject in subjects:
            results.extend(per_subject(subject))
    results.sort(key=lambda r: r.key)
    return StudyReport(results=results, config=config.to_dict())


# --------------------------------------------------------------------------
# Export

CSV_COLUMNS = ("subject", "condition", "channel_set", "train_sets",
               "test_set", "tpr", "tnr", "ba")


def _fmt(x):
    return f"{x:.17g}"


def export_csv(report, path):
    """One row per SplitResult in a stable column order."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in report.results:
            writer.writerow([
                r.subject, r.condition, r.channel_set,
                "+".join(str(s) for s in r.train_sets), r.test_set,
                _fmt(r.tpr), _fmt(r.tnr), _fmt(r.ba),
            ])
    return path


def read_results_csv(path):
    """Inverse of export_csv; floats round-trip exactly."""
    results = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            results.append(SplitResult(
                subject=row["subject"],
                condition=row["condition"],
                channel_set=row["channel_set"],
                train_sets=tuple(int(s) for s in row["train_sets"].split("+") if s),
                test_set=int(row["test_set"]),
                tpr=float(row["tpr"]),
                tnr=float(row["tnr"]),
                ba=float(row["ba"]),
            ))
    return results


def export_svg(report, outdir):
    """One box-plot SVG per (condition, channel_set) cell."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "lrptransfer"
    paths = []
    for row in report.aggregates():
        condition, channel_set = row["condition"], row["channel_set"]
        bas = [r.ba for r in report.cell(condition, channel_set)]
        fig, ax = plt.subplots(figsize=(3.2, 4.0))
        ax.boxplot([bas], tick_labels=[channel_set])
        ax.set_ylim(0.0, 1.05)
        ax.set_ylabel("balanced accuracy")
        ax.set_title(f"condition {condition}")
        ax.axhline(0.5, color="grey", linewidth=0.8, linestyle="--")
        path = os.path.join(outdir, f"{condition}_{channel_set}.svg")
        fig.savefig(path, format="svg")
        plt.close(fig)
        paths.append(path)
    return paths


def export(report, outdir, formats=("csv", "svg")):
    """Write the configured artifacts; returns the created paths."""
    os.makedirs(outdir, exist_ok=True)
    paths = []
    if "csv" in formats:
        paths.append(export_csv(report, os.path.join(outdir, "results.csv")))
    if "svg" in formats or "svg-summary" in formats:
        paths.extend(export_svg(report, outdir))
    return paths


def report_hash(report):
    """SHA-256 of the CSV serialization; identical configs reproduce it."""
    lines = [",".join(CSV_COLUMNS)]
    for r in report.results:
        lines.append(",".join([
            r.subject, r.condition, r.channel_set,
            "+".join(str(s) for s in r.train_sets), str(r.test_set),
            _fmt(r.tpr), _fmt(r.tnr), _fmt(r.ba),
        ]))
    return hashlib.sha256("\n".join(lines).encode("utf-8")).hexdigest()
