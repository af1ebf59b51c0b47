"""Trainable pipeline: spatial filter, features, normalization, SVM, calibration.

The transferable unit is a PipelineModel fit on the five designated
training windows per trial of one movement condition; every fitted
statistic depends only on those training windows.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import preprocess, sparse_svm, xdawn
from .channels import ChannelSet
from .container import read_container, write_container
from .errors import FitError
from .platt import PlattCalibrator, fit_platt
from .types import LRP, NOLRP

C_GRID = tuple(10.0 ** np.linspace(-6.0, 0.0, 7))
FEATURE_TAIL_SAMPLES = 4


@dataclass(frozen=True)
class FitConfig:
    """Everything the training procedure needs besides the data."""

    seed: int = 0
    grid: tuple = C_GRID
    n_folds: int = 5
    # Threshold multiple on the best candidate's CV standard error; the
    # naive fold SE underestimates selection noise (fold scores share
    # training data), so the multiple compensates before the smallest
    # qualifying C is chosen.
    se_rule: float = 2.0
    class_weights: tuple = sparse_svm.DEFAULT_CLASS_WEIGHTS
    formulation: str = sparse_svm.L1_WEIGHTS
    n_filters: int = xdawn.N_PSEUDO_CHANNELS
    ridge: float = xdawn.DEFAULT_RIDGE
    tail_samples: int = FEATURE_TAIL_SAMPLES
    lrp_windows: tuple = preprocess.LRP_TRAIN_WINDOWS
    nolrp_windows: tuple = preprocess.NOLRP_TRAIN_WINDOWS


def extract_features(pseudo, tail_samples=FEATURE_TAIL_SAMPLES):
    """Concatenate the last samples of each pseudo-channel, channel-major.

    A (..., 4, 20) pseudo-window at 20 Hz yields 16 features covering the
    final 0.2 s before the onset.
    """
    if pseudo.shape[-1] < tail_samples:
        raise ValueError(
            f"window has {pseudo.shape[-1]} samples, need >= {tail_samples}"
        )
    tail = pseudo[..., -tail_samples:]
    return tail.reshape(*tail.shape[:-2], tail.shape[-2] * tail_samples)


@dataclass(frozen=True)
class FeatureNormalizer:
    """Per-feature z-scoring with training statistics."""

    mean: np.ndarray
    sd: np.ndarray
    degenerate: np.ndarray  # flags features whose training SD was zero

    def apply(self, features):
        return (features - self.mean) / self.sd


def fit_normalizer(features):
    """Fit per-feature mean/SD; zero-SD features pass through unscaled."""
    if features.shape[0] < 2:
        raise FitError("need at least 2 feature vectors to fit the normalizer")
    mean = features.mean(axis=0)
    sd = features.std(axis=0)
    degenerate = sd == 0
    sd = np.where(degenerate, 1.0, sd)
    return FeatureNormalizer(mean=mean, sd=sd, degenerate=degenerate)


@dataclass(frozen=True)
class PipelineModel:
    """All fitted stages plus training metadata; immutable after fit."""

    channel_set: ChannelSet
    spatial: xdawn.SpatialFilterModel
    normalizer: FeatureNormalizer
    svm: sparse_svm.LinearSvmModel
    calibrator: PlattCalibrator
    meta: dict = field(default_factory=dict)

    def decision_scores(self, windows):
        """Raw SVM scores for preprocessed windows (n, channels, samples)."""
        if tuple(windows.channel_names) != tuple(self.channel_set.channels):
            raise ValueError(
                "window channel order does not match the fitted channel set"
            )
        pseudo = xdawn.apply_xdawn(self.spatial, windows.data)
        features = self.normalizer.apply(
            extract_features(pseudo, self.meta.get("tail_samples", FEATURE_TAIL_SAMPLES))
        )
        return self.svm.decision_function(features)

    def predict(self, windows):
        """(probabilities, labels) for preprocessed windows.

        A probability strictly greater than 0.5 maps to LRP; the boundary
        itself maps to NoLRP.
        """
        probs = self.calibrator.probability(self.decision_scores(windows))
        labels = np.where(probs > 0.5, LRP, NOLRP)
        return probs, labels


def _grouped_folds(groups, n_folds, rng):
    """Shuffled fold assignment keeping every group (trial) in one fold.

    Windows of one trial overlap in time, so splitting them across folds
    would leak trial-specific noise into the validation side. Each trial
    carries the same class mix, which keeps the folds stratified.
    """
    unique = np.unique(groups)
    order = rng.permutation(len(unique))
    fold_of_group = {g: order[i] % n_folds for i, g in enumerate(unique)}
    return np.array([fold_of_group[g] for g in groups])


def _fit_stage_stack(train_data, train_labels, channel_names, C, config):
    """xDAWN -> features -> normalizer -> SVM on one training split."""
    spatial = xdawn.fit_xdawn(
        train_data, train_labels, channel_names,
        n_filters=config.n_filters, ridge=config.ridge,
    )
    features = extract_features(xdawn.apply_xdawn(spatial, train_data),
                                config.tail_samples)
    normalizer = fit_normalizer(features)
    normalized = normalizer.apply(features)
    svm = sparse_svm.train_svm(
        normalized,
        np.where(train_labels, 1.0, -1.0),
        C,
        class_weights=config.class_weights,
        formulation=config.formulation,
    )
    return spatial, normalizer, svm, normalized


def _plain_balanced_accuracy(pred, truth):
    tpr = np.mean(pred[truth]) if truth.any() else 0.0
    tnr = np.mean(~pred[~truth]) if (~truth).any() else 0.0
    return 0.5 * (tpr + tnr)


def grid_search(train_data, train_labels, channel_names, config, groups=None):
    """Pick the SVM complexity by stratified, trial-grouped cross-validation.

    Candidates are scored with balanced accuracy of the fold-held-out
    predictions (score > 0 means LRP). Selection follows the
    one-standard-error rule: the smallest C whose mean score reaches the
    best mean minus its standard error, so candidates that differ only by
    fold noise resolve toward the stronger regularizer; exact ties break
    toward the smallest C. Returns (best_C, mean_scores).
    """
    if groups is None:
        groups = np.arange(len(train_labels))
    n_folds = config.n_folds
    class_min = min(int(train_labels.sum()), int((~train_labels).sum()))
    limit = min(class_min, len(np.unique(groups)))
    if limit < n_folds:
        warnings.warn(
            f"only {limit} independent instances in the smaller class; "
            f"reducing cross-validation folds from {n_folds} to {limit}",
            stacklevel=2,
        )
        n_folds = limit
    if n_folds < 2:
        raise FitError("cross-validation needs at least 2 instances per class")
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 0x5F0]))
    fold_of = _grouped_folds(groups, n_folds, rng)
    fold_scores = np.zeros((n_folds, len(config.grid)))
    for fold in range(n_folds):
        val = fold_of == fold
        spatial, normalizer, first_svm, normalized = _fit_stage_stack(
            train_data[~val], train_labels[~val], channel_names,
            config.grid[0], config,
        )
        fit_y = np.where(train_labels[~val], 1.0, -1.0)
        val_features = normalizer.apply(
            extract_features(xdawn.apply_xdawn(spatial, train_data[val]),
                             config.tail_samples)
        )
        for ci, C in enumerate(config.grid):
            svm = first_svm if ci == 0 else sparse_svm.train_svm(
                normalized, fit_y, C,
                class_weights=config.class_weights,
                formulation=config.formulation,
            )
            pred = svm.decision_function(val_features) > 0
            fold_scores[fold, ci] = _plain_balanced_accuracy(pred, train_labels[val])
    scores = fold_scores.mean(axis=0)
    if n_folds > 1:
        stderr = fold_scores.std(axis=0, ddof=1) / np.sqrt(n_folds)
    else:
        stderr = np.zeros(len(config.grid))
    best = int(np.argmax(scores))
    threshold = scores[best] - config.se_rule * stderr[best]
    chosen = next(ci for ci in range(len(config.grid)) if scores[ci] >= threshold)
    return float(config.grid[chosen]), scores


def fit_pipeline(train_sets, channel_set, config=FitConfig()):
    """Fit the full pipeline on the designated training windows.

    train_sets is one preprocessed WindowSet or a list of them (all from
    the training condition, already projected onto channel_set). Exactly
    the two late LRP windows and three resting NoLRP windows per valid
    trial form the training instances.
    """
    if isinstance(train_sets, preprocess.WindowSet):
        train_sets = [train_sets]
    blocks = []
    labels = []
    groups = []
    provenance = []
    for si, ws in enumerate(train_sets):
        if tuple(ws.channel_names) != tuple(channel_set.channels):
            raise ValueError(
                f"training windows carry channels {ws.channel_names[:3]}..., "
                f"expected the {channel_set.name!r} order"
            )
        mask, is_lrp = ws.training_labels(config.lrp_windows, config.nolrp_windows)
        blocks.append(ws.data[mask])
        labels.append(is_lrp)
        groups.append(ws.trial_ids[mask].astype(np.int64) + (si + 1) * 1_000_000)
        provenance.append((ws.subject_id, ws.task, ws.set_index))
    train_data = np.concatenate(blocks, axis=0)
    train_labels = np.concatenate(labels)
    train_groups = np.concatenate(groups)
    if train_data.shape[0] == 0:
        raise FitError("no training windows found at the designated offsets")

    best_c, cv_scores = grid_search(train_data, train_labels,
                                    channel_set.channels, config,
                                    groups=train_groups)
    spatial, normalizer, svm, normalized = _fit_stage_stack(
        train_data, train_labels, channel_set.channels, best_c, config
    )
    calibrator = fit_platt(svm.decision_function(normalized), train_labels)
    meta = {
        "C": best_c,
        "cv_scores": [float(s) for s in cv_scores],
        "seed": config.seed,
        "formulation": config.formulation,
        "tail_samples": config.tail_samples,
        "train_sessions": provenance,
        "n_train_windows": int(train_data.shape[0]),
    }
    return PipelineModel(
        channel_set=channel_set,
        spatial=spatial,
        normalizer=normalizer,
        svm=svm,
        calibrator=calibrator,
        meta=meta,
    )


def save_model(model, path):
    """Serialize a PipelineModel to the versioned container format."""
    meta = {
        "channel_set": {
            "name": model.channel_set.name,
            "channels": list(model.channel_set.channels),
            "kind": model.channel_set.kind,
        },
        "svm": {
            "bias": model.svm.bias,
            "C": model.svm.C,
            "class_weights": list(model.svm.class_weights),
            "formulation": model.svm.formulation,
            "objective": model.svm.objective,
        },
        "platt": {"A": model.calibrator.A, "B": model.calibrator.B},
        "meta": _json_safe(model.meta),
    }
    arrays = {
        "xdawn/filters": model.spatial.filters,
        "normalizer/mean": model.normalizer.mean,
        "normalizer/sd": model.normalizer.sd,
        "normalizer/degenerate": model.normalizer.degenerate.astype(np.uint8),
        "svm/weights": model.svm.weights,
    }
    write_container(path, "model", meta, arrays=arrays)


def load_model(path):
    """Load a PipelineModel saved by save_model; round trip is bit-exact."""
    meta, arrays, _ = read_container(path, expect_kind="model")
    cset = ChannelSet(
        name=meta["channel_set"]["name"],
        channels=tuple(meta["channel_set"]["channels"]),
        kind=meta["channel_set"]["kind"],
    )
    spatial = xdawn.SpatialFilterModel(
        filters=arrays["xdawn/filters"], channel_names=tuple(cset.channels)
    )
    normalizer = FeatureNormalizer(
        mean=arrays["normalizer/mean"],
        sd=arrays["normalizer/sd"],
        degenerate=arrays["normalizer/degenerate"].astype(bool),
    )
    svm = sparse_svm.LinearSvmModel(
        weights=arrays["svm/weights"],
        bias=meta["svm"]["bias"],
        C=meta["svm"]["C"],
        class_weights=tuple(meta["svm"]["class_weights"]),
        formulation=meta["svm"]["formulation"],
        objective=meta["svm"]["objective"],
    )
    calibrator = PlattCalibrator(A=meta["platt"]["A"], B=meta["platt"]["B"])
    return PipelineModel(
        channel_set=cset,
        spatial=spatial,
        normalizer=normalizer,
        svm=svm,
        calibrator=calibrator,
        meta=meta["meta"],
    )


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj
