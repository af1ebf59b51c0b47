"""Seeded synthetic sessions with planted readiness potentials.

Each trial plants a linear negative EEG ramp that ends at the movement
onset, spatially weighted towards the motor cortex contralateral to the
moved arm (both hemispheres for bilateral movements), on top of spatially
correlated white + 1/f background noise. The motion stream holds a
minimum-jerk reach starting exactly at the planted onset, so the generator
doubles as the ground-truth oracle for onset detection and for the
end-to-end transfer experiments.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft

from . import layout
from .ingest import TriggerCodes
from .types import (
    BILATERAL,
    MotionTrace,
    RawRecording,
    SessionData,
    Trial,
    TrialTable,
    UNILATERAL,
    validate_trial,
)

_TASK_INDEX = {UNILATERAL: 0, BILATERAL: 1}


@dataclass(frozen=True)
class SynthConfig:
    """Generator parameters.

    snr is the ratio of the LRP peak amplitude to the per-channel noise SD;
    snr = 0 plants no signal at all (chance-level control).
    """

    seed: int = 0
    trials_per_set: int = 40
    sets: int = 3
    condition: str = UNILATERAL
    snr: float = 1.0
    lrp_onset_lead_s: float = 1.2
    lrp_peak_uv: float = -5.0
    lrp_release_decay_s: float = 0.3
    pink_fraction: float = 0.4
    spatial_corr_neighbor: float = 0.3
    topography_width: float = 2.0
    right_attenuation: float = 0.05
    rest_range_s: tuple = (5.5, 8.0)
    reach_distance_mm: float = 300.0
    reach_duration_s: float = 0.6
    hold_s: float = 0.4
    return_duration_s: float = 0.6
    release_lag_s: float = 0.02
    rest_jitter_mm: float = 0.02
    rate: float = 500.0
    topography_override: tuple = ()

    def __post_init__(self):
        if self.snr < 0:
            raise ValueError("snr must be >= 0")
        if not 0 < self.lrp_onset_lead_s < 2:
            raise ValueError("lrp_onset_lead_s must lie in (0, 2)")
        if self.trials_per_set < 1:
            raise ValueError("trials_per_set must be >= 1")

    @property
    def noise_sd_uv(self):
        if self.snr == 0:
            return abs(self.lrp_peak_uv)
        return abs(self.lrp_peak_uv) / self.snr

    @property
    def signal_peak_uv(self):
        return 0.0 if self.snr == 0 else self.lrp_peak_uv


@dataclass
class GroundTruthRecord:
    """Planted per-trial truth of one generated session."""

    onset_samples: np.ndarray
    lrp_start_samples: np.ndarray
    release_samples: np.ndarray
    topography: np.ndarray
    channel_names: tuple = layout.CAP_64


def minimum_jerk(distance, duration, rate):
    """Closed-form quintic reach profile sampled at `rate`.

    Returns positions for t = 0 .. duration inclusive; velocity and
    acceleration vanish at both ends.
    """
    if distance <= 0 or duration <= 0 or rate <= 0:
        raise ValueError("distance, duration, and rate must be positive")
    n = int(round(duration * rate))
    tau = np.arange(n + 1) / n
    return distance * (10 * tau**3 - 15 * tau**4 + 6 * tau**5)


def topography_weights(condition, width=1.2, right_attenuation=0.05, override=()):
    """Per-channel spatial weights of the planted ramp.

    Unilateral right-arm movements load the left motor area around C1/C3
    with strongly attenuated right-hemisphere leakage; bilateral movements
    use the exactly mirror-symmetric two-hemisphere version.
    """
    if override:
        table = dict(override)
        return np.array([table.get(c, 0.0) for c in layout.CAP_64])
    cx, cy = -1.5, 0.0  # midpoint of C1 and C3
    weights = np.empty(len(layout.CAP_64))
    for i, name in enumerate(layout.CAP_64):
        x, y = layout.POSITIONS[name]
        if condition == BILATERAL:
            x = -abs(x)  # fold onto the left hemisphere: exact mirror symmetry
        w = math.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2 * width**2))
        if condition == UNILATERAL and x > 0:
            w *= right_attenuation
        weights[i] = w
    return weights


def _spatial_mixer(corr_at_neighbor):
    """Cholesky factor of the electrode-distance correlation kernel."""
    names = layout.CAP_64
    n = len(names)
    if corr_at_neighbor <= 0:
        return np.eye(n)
    sigma2 = -1.0 / (2.0 * math.log(corr_at_neighbor))
    xy = np.array([layout.POSITIONS[c] for c in names])
    d2 = ((xy[:, None, :] - xy[None, :, :]) ** 2).sum(axis=2)
    kernel = np.exp(-d2 / (2.0 * sigma2))
    return np.linalg.cholesky(kernel + 1e-9 * np.eye(n))


def _pink_noise(rng, shape, rate):
    """Unit-SD noise with 1/f power above 1 Hz, per row.

    Shaping runs at a padded FFT-friendly length and is truncated back, so
    awkward session lengths stay fast.
    """
    n = shape[-1]
    n_fast = scipy.fft.next_fast_len(n, real=True)
    white = rng.standard_normal(shape[:-1] + (n_fast,))
    spectrum = scipy.fft.rfft(white, axis=-1)
    freqs = scipy.fft.rfftfreq(n_fast, 1.0 / rate)
    shaping = 1.0 / np.sqrt(np.maximum(freqs, 1.0))
    shaping[0] = 0.0
    shaped = scipy.fft.irfft(spectrum * shaping, n=n_fast, axis=-1)[..., :n]
    sd = shaped.std(axis=-1, keepdims=True)
    sd[sd == 0] = 1.0
    return shaped / sd


def _session_rng(config, subject_index, task, set_index):
    seq = np.random.SeedSequence(
        [int(config.seed), int(subject_index), _TASK_INDEX[task], int(set_index)]
    )
    return np.random.default_rng(seq)


def generate_session(config, subject_index=0, set_index=0, task=None,
                     codes=TriggerCodes()):
    """Generate one (subject, task, set) session with its ground truth."""
    task = task or config.condition
    rng = _session_rng(config, subject_index, task, set_index)
    rate = config.rate
    n_trials = config.trials_per_set

    reach_n = int(round(config.reach_duration_s * rate))
    hold_n = int(round(config.hold_s * rate))
    return_n = int(round(config.return_duration_s * rate))
    lag_n = int(round(config.release_lag_s * rate))
    lead_n = int(round(config.lrp_onset_lead_s * rate))
    decay_n = int(round(config.lrp_release_decay_s * rate))
    tail_n = int(round(1.0 * rate))

    rests = rng.uniform(*config.rest_range_s, size=n_trials)
    rest_ns = np.round(rests * rate).astype(int)

    starts = np.empty(n_trials, dtype=int)
    onsets = np.empty(n_trials, dtype=int)
    cursor = 0
    for i in range(n_trials):
        starts[i] = cursor
        onsets[i] = cursor + rest_ns[i]
        cursor = onsets[i] + reach_n + hold_n + return_n
    n_samples = cursor + tail_n
    releases = onsets + lag_n
    presses = onsets + reach_n + hold_n + return_n

    # --- motion -----------------------------------------------------------
    profile = minimum_jerk(config.reach_distance_mm, config.reach_duration_s, rate)
    direction = np.array([0.0, 0.768, 0.640])  # forward and up, unit norm
    bases = {"hand_left": np.array([-180.0, -300.0, 0.0]),
             "hand_right": np.array([180.0, -300.0, 0.0])}
    moved = {UNILATERAL: ("hand_right",), BILATERAL: ("hand_left", "hand_right")}[task]

    displacement = np.zeros(n_samples)
    for i in range(n_trials):
        o = onsets[i]
        displacement[o:o + reach_n + 1] = profile
        displacement[o + reach_n:o + reach_n + hold_n] = config.reach_distance_mm
        ret = o + reach_n + hold_n
        displacement[ret:ret + return_n + 1] = profile[::-1]

    marker_names = ("hand_left", "hand_right")
    positions = np.empty((2, n_samples, 3))
    for mi, name in enumerate(marker_names):
        jitter = rng.normal(0.0, config.rest_jitter_mm, size=(n_samples, 3))
        np.clip(jitter, -0.09, 0.09, out=jitter)
        positions[mi] = bases[name] + jitter
        if name in moved:
            positions[mi] += displacement[:, None] * direction

    motion = MotionTrace(positions=positions, rate=rate, marker_names=marker_names)

    # --- EEG --------------------------------------------------------------
    n_ch = len(layout.CAP_64)
    noise_sd = config.noise_sd_uv
    white = rng.standard_normal((n_ch, n_samples))
    pink = _pink_noise(rng, (n_ch, n_samples), rate)
    w_white = math.sqrt(1.0 - config.pink_fraction)
    w_pink = math.sqrt(config.pink_fraction)
    eeg = _spatial_mixer(config.spatial_corr_neighbor) @ (
        w_white * white + w_pink * pink
    )
    eeg *= noise_sd

    weights = topography_weights(
        task, config.topography_width, config.right_attenuation,
        config.topography_override,
    )
    template = np.zeros(n_samples)
    ramp = np.linspace(0.0, 1.0, lead_n + 1)
    decay = np.linspace(1.0, 0.0, decay_n + 1)
    for o in onsets:
        template[o - lead_n:o + 1] = ramp
        template[o:o + decay_n + 1] = decay[: max(0, min(decay_n + 1, n_samples - o))]
    eeg += config.signal_peak_uv * weights[:, None] * template[None, :]

    markers = [(0, codes.motion_start)]
    for i in range(n_trials):
        markers.append((int(releases[i]), codes.switch_release))
        markers.append((int(presses[i]), codes.switch_press))
    markers.sort()
    recording = RawRecording(
        data=eeg, rate=rate, channel_names=layout.CAP_64, markers=tuple(markers)
    )

    trials = []
    for i in range(n_trials):
        trial = Trial(
            onset_sample=int(onsets[i]),
            condition=task,
            set_index=set_index,
            valid=True,
            rest_duration=float((releases[i] - starts[i]) / rate),
            trial_id=i,
            start_sample=int(starts[i]),
            end_sample=int(presses[i]),
            release_sample=int(releases[i]),
        )
        trials.append(validate_trial(trial))

    session = SessionData(
        eeg=recording,
        motion=motion,
        trials=TrialTable(trials),
        subject_id=f"S{subject_index:02d}",
        task=task,
        set_index=set_index,
    )
    truth = GroundTruthRecord(
        onset_samples=onsets.copy(),
        lrp_start_samples=onsets - lead_n,
        release_samples=releases.copy(),
        topography=weights,
    )
    return session, truth


def generate_task_sessions(config, subject_index, task, codes=TriggerCodes()):
    """All sets of one (subject, task); returns ([SessionData], [GroundTruthRecord])."""
    sessions, truths = [], []
    for set_index in range(config.sets):
        s, t = generate_session(config, subject_index, set_index, task, codes)
        sessions.append(s)
        truths.append(t)
    return sessions, truths
