"""Domain data model: recordings, motion traces, trials, study conditions."""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import RegistryError

LRP = "LRP"
NOLRP = "NoLRP"

UNILATERAL = "unilateral"
BILATERAL = "bilateral"

MIN_REST_S = 5.0


@dataclass(frozen=True)
class RawRecording:
    """Multichannel EEG in microvolts with event markers.

    data is (channels, samples); markers are (sample_index, code) pairs on
    the recording's own sample clock.
    """

    data: np.ndarray
    rate: float
    channel_names: tuple
    markers: tuple = ()

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError(f"rate must be positive, got {self.rate}")
        if self.data.ndim != 2:
            raise ValueError("data must be a (channels, samples) matrix")
        if self.data.shape[0] != len(self.channel_names):
            raise ValueError(
                f"{self.data.shape[0]} data rows but "
                f"{len(self.channel_names)} channel names"
            )
        for sample, code in self.markers:
            if not 0 <= sample < self.data.shape[1]:
                raise ValueError(
                    f"marker {code!r} at sample {sample} outside "
                    f"[0, {self.data.shape[1]})"
                )

    @property
    def n_samples(self):
        return self.data.shape[1]

    def marker_samples(self, code):
        """All sample indices carrying a given marker code."""
        return [s for s, c in self.markers if c == code]


@dataclass(frozen=True)
class MotionTrace:
    """Motion-capture positions in millimetres, (markers, samples, 3).

    bad_spans lists (marker_index, start, stop) sample ranges whose values
    were reconstructed across a long dropout; trials overlapping them are
    invalidated downstream.
    """

    positions: np.ndarray
    rate: float
    marker_names: tuple
    bad_spans: tuple = ()

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError(f"rate must be positive, got {self.rate}")
        if self.positions.ndim != 3 or self.positions.shape[2] != 3:
            raise ValueError("positions must be (markers, samples, 3)")
        if self.positions.shape[0] != len(self.marker_names):
            raise ValueError("marker count does not match marker_names")
        if np.isnan(self.positions).any():
            raise ValueError("positions contain NaN after gap fill")

    @property
    def n_samples(self):
        return self.positions.shape[1]

    def marker(self, name):
        """(samples, 3) position series of one marker."""
        try:
            idx = self.marker_names.index(name)
        except ValueError:
            raise KeyError(f"no motion marker named {name!r}") from None
        return self.positions[idx]


@dataclass
class Trial:
    """One self-paced reaching movement on the shared session clock."""

    onset_sample: int
    condition: str
    set_index: int
    valid: bool
    rest_duration: float
    reason: str = ""
    trial_id: int = 0
    start_sample: int = 0
    end_sample: int = 0
    release_sample: int = 0


def validate_trial(trial, min_rest=MIN_REST_S):
    """Apply the rest-duration rule; returns a new Trial with valid/reason set."""
    if trial.rest_duration >= min_rest:
        return replace(trial, valid=True, reason="")
    return replace(trial, valid=False, reason=f"rest<{min_rest:g}s")


@dataclass
class TrialTable:
    """Ordered trial list of one session; the join point of motion and EEG."""

    trials: list = field(default_factory=list)

    def __len__(self):
        return len(self.trials)

    def __iter__(self):
        return iter(self.trials)

    def __getitem__(self, i):
        return self.trials[i]

    def valid_trials(self):
        return [t for t in self.trials if t.valid]

    def to_rows(self):
        """Plain dict rows for CSV export."""
        return [
            {
                "trial": t.trial_id,
                "condition": t.condition,
                "set": t.set_index,
                "onset_sample": t.onset_sample,
                "valid": int(t.valid),
                "reason": t.reason,
                "rest_duration": t.rest_duration,
            }
            for t in self.trials
        ]


@dataclass
class SessionData:
    """Synchronized EEG + motion + trials of one (subject, task, set)."""

    eeg: RawRecording
    motion: MotionTrace
    trials: TrialTable
    subject_id: str
    task: str
    set_index: int


def validate_session(session, max_length_slack=2):
    """Check cross-stream session invariants; returns a list of issue strings."""
    issues = []
    if session.task not in (UNILATERAL, BILATERAL):
        issues.append(f"unknown task {session.task!r}")
    if session.eeg.rate != session.motion.rate:
        issues.append(
            f"rate mismatch: eeg {session.eeg.rate} vs motion {session.motion.rate}"
        )
    if abs(session.eeg.n_samples - session.motion.n_samples) > max_length_slack:
        issues.append(
            f"stream lengths differ by more than {max_length_slack} samples: "
            f"eeg {session.eeg.n_samples} vs motion {session.motion.n_samples}"
        )
    shared = min(session.eeg.n_samples, session.motion.n_samples)
    for t in session.trials:
        if not 0 <= t.onset_sample < shared:
            issues.append(
                f"trial {t.trial_id} onset {t.onset_sample} outside shared span"
            )
    return issues


@dataclass(frozen=True)
class StudyCondition:
    """A train/test pairing of movement conditions."""

    id: str
    train_condition: str
    test_condition: str

    @property
    def is_transfer(self):
        return self.train_condition != self.test_condition


CONDITIONS = {
    "A": StudyCondition("A", UNILATERAL, UNILATERAL),
    "B": StudyCondition("B", BILATERAL, BILATERAL),
    "C": StudyCondition("C", BILATERAL, UNILATERAL),
}


def study_condition(cid):
    """Look up a train/test condition by id."""
    try:
        return CONDITIONS[cid]
    except KeyError:
        raise RegistryError(
            f"unknown study condition {cid!r}; available: "
            + ", ".join(sorted(CONDITIONS))
        ) from None


def register_condition(condition):
    """Add or override a named condition (used by config loading)."""
    for c in (condition.train_condition, condition.test_condition):
        if c not in (UNILATERAL, BILATERAL):
            raise ValueError(f"unknown movement condition {c!r}")
    CONDITIONS[condition.id] = condition
