"""Physical movement onset estimation from motion-capture hand positions.

Per trial: re-zero the hand position to its resting baseline, combine the
Euclidean distance from rest with the normalized low-passed velocity by
multiplication, then walk backwards from the hand-switch release until the
combined score drops below a millimetre threshold.
"""

from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import butter, filtfilt

from .errors import DegenerateTrialError, NoOnsetError
from .types import BILATERAL, TrialTable, UNILATERAL

DEFAULT_THRESHOLD_MM = 0.6


@dataclass(frozen=True)
class OnsetConfig:
    """Tunables of the onset estimator.

    mechanical_delay_s models the lag between true movement onset and the
    hand-switch release event; the backward search starts at
    release - delay. The reference hand supplies ground truth: the left
    hand for bilateral trials, the moved right hand for unilateral ones.
    """

    threshold_mm: float = DEFAULT_THRESHOLD_MM
    mechanical_delay_s: float = 0.0
    lowpass_hz: float = 4.0
    filter_order: int = 4
    rest_window_s: float = 1.0
    hand_markers: tuple = ((UNILATERAL, "hand_right"), (BILATERAL, "hand_left"))

    def hand_marker(self, condition):
        table = dict(self.hand_markers)
        return table[condition]


@dataclass(frozen=True)
class OnsetEstimate:
    """Detected onset with its evidence trace (samples on the session clock)."""

    onset_sample: int
    score_trace: np.ndarray
    threshold: float
    switch_release_sample: int


def rezero(positions, rate, rest_window_s=1.0):
    """Subtract the per-axis resting baseline of the first rest_window_s.

    positions is (samples, 3) of a single marker over one trial span.
    """
    n_rest = int(round(rest_window_s * rate))
    if positions.shape[0] < n_rest:
        raise DegenerateTrialError(
            f"trial span of {positions.shape[0]} samples is shorter than the "
            f"{n_rest}-sample resting baseline"
        )
    return positions - positions[:n_rest].mean(axis=0)


def movement_score(positions, rate, lowpass_hz=4.0, filter_order=4):
    """Distance-times-normalized-velocity score, one value per sample.

    positions must already be re-zeroed. The per-sample velocity of the
    Euclidean distance is low-pass filtered (Butterworth, forward-backward
    for zero phase) and normalized to its trial maximum, so the score
    carries millimetres and uniform velocity scaling cancels out.
    """
    distance = np.linalg.norm(positions, axis=1)
    velocity = np.diff(distance, prepend=distance[0])
    b, a = butter(filter_order, lowpass_hz / (rate / 2.0), btype="low")
    smoothed = filtfilt(b, a, velocity)
    peak = smoothed.max()
    if peak <= 0.0:
        raise DegenerateTrialError("no positive hand velocity in trial (stationary trace)")
    return distance * (smoothed / peak)


def detect_onset(score, switch_release_sample, threshold=DEFAULT_THRESHOLD_MM,
                 mechanical_delay_samples=0):
    """Backward search for the first sub-threshold score sample.

    Starts at release minus the configured mechanical delay and walks
    towards the trial start; the first sample with score < threshold is the
    onset.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    start = int(switch_release_sample) - int(mechanical_delay_samples)
    start = min(start, len(score) - 1)
    if start < 0:
        raise NoOnsetError("search start lies before the trial start")
    below = np.flatnonzero(score[: start + 1] < threshold)
    if below.size == 0:
        raise NoOnsetError(
            f"no sample below {threshold:g} mm before the switch release"
        )
    return OnsetEstimate(
        onset_sample=int(below[-1]),
        score_trace=score,
        threshold=float(threshold),
        switch_release_sample=int(switch_release_sample),
    )


def estimate_trial_onset(session, trial, config=OnsetConfig()):
    """Run the full estimator for one trial; samples on the session clock."""
    marker = config.hand_marker(trial.condition)
    span = slice(trial.start_sample, trial.end_sample + 1)
    positions = session.motion.marker(marker)[span]
    rate = session.motion.rate
    rezeroed = rezero(positions, rate, config.rest_window_s)
    score = movement_score(rezeroed, rate, config.lowpass_hz, config.filter_order)
    release_local = trial.release_sample - trial.start_sample
    estimate = detect_onset(
        score,
        release_local,
        threshold=config.threshold_mm,
        mechanical_delay_samples=int(round(config.mechanical_delay_s * rate)),
    )
    return OnsetEstimate(
        onset_sample=estimate.onset_sample + trial.start_sample,
        score_trace=estimate.score_trace,
        threshold=estimate.threshold,
        switch_release_sample=trial.release_sample,
    )


def label_session(session, config=OnsetConfig()):
    """Estimate onsets for every valid trial; failures invalidate the trial."""
    labeled = []
    for trial in session.trials:
        if not trial.valid:
            labeled.append(trial)
            continue
        try:
            estimate = estimate_trial_onset(session, trial, config)
        except (DegenerateTrialError, NoOnsetError) as exc:
            labeled.append(replace(trial, valid=False, reason=f"onset: {exc}"))
            continue
        labeled.append(replace(trial, onset_sample=estimate.onset_sample))
    return replace(session, trials=TrialTable(labeled))
