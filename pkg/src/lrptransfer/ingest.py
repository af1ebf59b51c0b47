"""Session assembly: stream synchronization, trial building, dataset cache.

The trigger codes used by the acquisition setup (motion start/stop,
hand-switch press/release, error symbol) vary between recordings and are
supplied as a config mapping.
"""

import json
from dataclasses import dataclass, replace

import numpy as np

from .container import read_container, write_container
from .errors import SyncError
from .types import (
    MIN_REST_S,
    MotionTrace,
    RawRecording,
    SessionData,
    Trial,
    TrialTable,
    validate_trial,
)


@dataclass(frozen=True)
class TriggerCodes:
    """Marker codes of the acquisition protocol."""

    motion_start: str = "S  1"
    motion_stop: str = ""
    switch_release: str = "S  8"
    switch_press: str = "S  9"
    error: str = "S 66"

    @classmethod
    def from_json(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            return cls(**json.load(fh))


def synchronize(eeg, motion, codes, subject_id="", task="", set_index=0,
                max_length_slack=2):
    """Align motion onto the EEG clock and crop both to the shared span.

    The motion stream's sample 0 corresponds to the EEG sample carrying the
    configured motion-start code. Rates must match, so alignment is a pure
    offset; both streams are cropped to their overlap and all marker
    positions shift onto the cropped clock.
    """
    if eeg.rate != motion.rate:
        raise SyncError(
            f"rates differ (eeg {eeg.rate}, motion {motion.rate}); "
            "synchronization never resamples"
        )
    starts = eeg.marker_samples(codes.motion_start)
    if not starts:
        raise SyncError(f"motion start code {codes.motion_start!r} absent from EEG markers")
    if len(starts) > 1:
        raise SyncError(
            f"ambiguous motion start code {codes.motion_start!r} at samples {starts}"
        )
    offset = starts[0]
    if codes.motion_stop:
        stops = eeg.marker_samples(codes.motion_stop)
        if len(stops) == 1:
            implied = stops[0] - offset
            if abs(implied - motion.n_samples) > max_length_slack:
                raise SyncError(
                    f"motion length {motion.n_samples} disagrees with trigger span "
                    f"{implied} by more than {max_length_slack} samples"
                )
    shared = min(eeg.n_samples - offset, motion.n_samples)
    if shared <= 0:
        raise SyncError("streams do not overlap after applying the start offset")
    cropped_eeg = RawRecording(
        data=eeg.data[:, offset:offset + shared],
        rate=eeg.rate,
        channel_names=eeg.channel_names,
        markers=tuple(
            (s - offset, c) for s, c in eeg.markers if offset <= s < offset + shared
        ),
    )
    cropped_motion = replace(motion, positions=motion.positions[:, :shared])
    return SessionData(
        eeg=cropped_eeg,
        motion=cropped_motion,
        trials=TrialTable(),
        subject_id=subject_id,
        task=task,
        set_index=set_index,
    )


def build_trials(session, codes, min_rest=MIN_REST_S):
    """Derive the trial table from hand-switch markers.

    Each switch release starts a movement; the rest period is measured from
    the preceding switch press (or recording start). The onset sample is
    provisionally the release sample until motion-based estimation refines
    it. Trials overlapping a motion bad span or carrying an error marker
    are invalid.
    """
    eeg = session.eeg
    releases = eeg.marker_samples(codes.switch_release)
    presses = eeg.marker_samples(codes.switch_press)
    errors = set(eeg.marker_samples(codes.error)) if codes.error else set()
    trials = []
    for i, release in enumerate(releases):
        prev_press = max((p for p in presses if p < release), default=0)
        end = min((p for p in presses if p >= release), default=eeg.n_samples - 1)
        rest = (release - prev_press) / eeg.rate
        trial = Trial(
            onset_sample=release,
            condition=session.task,
            set_index=session.set_index,
            valid=True,
            rest_duration=rest,
            trial_id=i,
            start_sample=prev_press,
            end_sample=end,
            release_sample=release,
        )
        trial = validate_trial(trial, min_rest=min_rest)
        if trial.valid and any(prev_press <= e <= end for e in errors):
            trial = replace(trial, valid=False, reason="error marker")
        if trial.valid:
            for _, lo, hi in session.motion.bad_spans:
                if lo < end and hi > prev_press:
                    trial = replace(trial, valid=False, reason="motion dropout")
                    break
        trials.append(trial)
    return replace(session, trials=TrialTable(trials))


_TRIAL_FIELDS = (
    "onset_sample", "condition", "set_index", "valid", "rest_duration",
    "reason", "trial_id", "start_sample", "end_sample", "release_sample",
)


def _plain(value):
    if isinstance(value, (np.integer, np.bool_)):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def _trials_to_meta(table):
    return [{f: _plain(getattr(t, f)) for f in _TRIAL_FIELDS} for t in table]


def _trials_from_meta(rows):
    return TrialTable([Trial(**row) for row in rows])


def cache_dataset(session, path, extras=None):
    """Persist a SessionData losslessly; extras maps name -> opaque bytes.

    Extra byte blocks (e.g. raw EMG files) round-trip untouched; the
    pipeline never interprets them.
    """
    meta = {
        "subject_id": session.subject_id,
        "task": session.task,
        "set_index": session.set_index,
        "eeg_rate": session.eeg.rate,
        "eeg_channels": list(session.eeg.channel_names),
        "markers": [[int(s), c] for s, c in session.eeg.markers],
        "motion_rate": session.motion.rate,
        "motion_markers": list(session.motion.marker_names),
        "bad_spans": [list(span) for span in session.motion.bad_spans],
        "trials": _trials_to_meta(session.trials),
    }
    arrays = {
        "eeg/data": session.eeg.data,
        "motion/positions": session.motion.positions,
    }
    write_container(path, "session", meta, arrays=arrays, blobs=extras)


def load_dataset(path, with_extras=False):
    """Load a cached SessionData; round trip is bit-exact."""
    meta, arrays, blobs = read_container(path, expect_kind="session")
    eeg = RawRecording(
        data=arrays["eeg/data"],
        rate=meta["eeg_rate"],
        channel_names=tuple(meta["eeg_channels"]),
        markers=tuple((int(s), c) for s, c in meta["markers"]),
    )
    motion = MotionTrace(
        positions=arrays["motion/positions"],
        rate=meta["motion_rate"],
        marker_names=tuple(meta["motion_markers"]),
        bad_spans=tuple(tuple(span) for span in meta["bad_spans"]),
    )
    session = SessionData(
        eeg=eeg,
        motion=motion,
        trials=_trials_from_meta(meta["trials"]),
        subject_id=meta["subject_id"],
        task=meta["task"],
        set_index=meta["set_index"],
    )
    if with_extras:
        return session, blobs
    return session
