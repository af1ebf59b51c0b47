"""Windowing and window-level signal conditioning.

81 overlapping 1 s windows per trial, stepped by 0.05 s, spanning
[-5.00, -4.00] s through [-1.00, 0.00] s relative to the movement onset.
Each window is standardized channel-wise, decimated to 20 Hz by Fourier
truncation, and band-passed to 0.1-4.0 Hz on the DFT bin grid.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import FlatChannelError
from .types import LRP, NOLRP

PRE_ONSET_S = 5.0
WINDOW_S = 1.0
STEP_S = 0.05
N_WINDOWS = 81

# Window indices whose labels the experimental design fixes for training:
# the last two windows carry the late readiness potential, the three
# mid-rest windows are resting-state examples.
LRP_TRAIN_WINDOWS = (78, 80)
NOLRP_TRAIN_WINDOWS = (30, 35, 39)

DEFAULT_BAND_HZ = (0.1, 4.0)
DEFAULT_TARGET_RATE = 20.0


def window_start_offset(k):
    """Start of window k in seconds relative to the onset."""
    return -PRE_ONSET_S + STEP_S * k


@dataclass(frozen=True)
class WindowSet:
    """Onset-aligned windows of one session, stacked as (windows, channels, samples)."""

    data: np.ndarray
    window_index: np.ndarray
    trial_ids: np.ndarray
    channel_names: tuple
    rate: float
    subject_id: str = ""
    task: str = ""
    set_index: int = 0

    def __post_init__(self):
        if self.data.ndim != 3:
            raise ValueError("data must be (windows, channels, samples)")
        if self.data.shape[1] != len(self.channel_names):
            raise ValueError("channel axis does not match channel_names")
        if len(self.window_index) != self.data.shape[0]:
            raise ValueError("window_index length mismatch")
        if len(self.trial_ids) != self.data.shape[0]:
            raise ValueError("trial_ids length mismatch")

    @property
    def n_windows(self):
        return self.data.shape[0]

    @property
    def start_offsets(self):
        return -PRE_ONSET_S + STEP_S * self.window_index

    def take(self, mask):
        """Subset of windows by boolean mask or index array."""
        return replace(
            self,
            data=self.data[mask],
            window_index=self.window_index[mask],
            trial_ids=self.trial_ids[mask],
        )

    def select_channels(self, cset):
        """Project onto a channel set, rows reordered to set order."""
        missing = [c for c in cset.channels if c not in self.channel_names]
        if missing:
            raise KeyError(
                f"window set lacks channels required by {cset.name!r}: {missing}"
            )
        index = [self.channel_names.index(c) for c in cset.channels]
        return replace(self, data=self.data[:, index, :], channel_names=tuple(cset.channels))

    def training_labels(self, lrp_windows=LRP_TRAIN_WINDOWS,
                        nolrp_windows=NOLRP_TRAIN_WINDOWS):
        """(mask, labels) of the designated training windows.

        labels is boolean with True = LRP over the masked windows.
        """
        lrp = np.isin(self.window_index, lrp_windows)
        nolrp = np.isin(self.window_index, nolrp_windows)
        mask = lrp | nolrp
        return mask, lrp[mask]

    def label_names(self, flags):
        return np.where(flags, LRP, NOLRP)


def extract_windows(rec, trials, subject_id="", task="", set_index=0):
    """Cut the 81-window grid around each valid trial's onset.

    Returns (window_set, skipped) where skipped lists (trial_id, reason)
    for trials without the full 5 s of pre-onset history.
    """
    win = int(round(WINDOW_S * rec.rate))
    step = int(round(STEP_S * rec.rate))
    pre = int(round(PRE_ONSET_S * rec.rate))
    blocks = []
    trial_ids = []
    skipped = []
    for trial in trials:
        if not trial.valid:
            continue
        onset = int(trial.onset_sample)
        if onset - pre < 0 or onset > rec.n_samples:
            skipped.append((trial.trial_id, "insufficient history"))
            continue
        span = rec.data[:, onset - pre:onset]
        view = np.lib.stride_tricks.sliding_window_view(span, win, axis=1)
        blocks.append(view[:, ::step, :].transpose(1, 0, 2).copy())
        trial_ids.append(trial.trial_id)
    if blocks:
        data = np.concatenate(blocks, axis=0)
    else:
        data = np.empty((0, len(rec.channel_names), win))
    n_per = N_WINDOWS
    window_index = np.tile(np.arange(n_per), len(blocks))
    ids = np.repeat(np.asarray(trial_ids, dtype=int), n_per) if blocks else np.empty(0, dtype=int)
    ws = WindowSet(
        data=data,
        window_index=window_index,
        trial_ids=ids,
        channel_names=tuple(rec.channel_names),
        rate=rec.rate,
        subject_id=subject_id,
        task=task,
        set_index=set_index,
    )
    return ws, skipped


def standardize(data, channel_names=None):
    """Zero-mean, unit-SD per window and channel (last axis is time)."""
    mean = data.mean(axis=-1, keepdims=True)
    sd = data.std(axis=-1, keepdims=True)
    flat = sd == 0
    if flat.any():
        ch_axis = np.nonzero(flat)[1] if data.ndim == 3 else np.nonzero(flat)[0]
        ch = int(np.atleast_1d(ch_axis)[0])
        name = channel_names[ch] if channel_names else f"#{ch}"
        raise FlatChannelError(name)
    return (data - mean) / sd


def decimate(data, rate, target_rate=DEFAULT_TARGET_RATE):
    """Fourier resampling: truncate the spectrum below the new Nyquist.

    Zero-phase and deterministic; content at and above target_rate/2 is
    removed entirely.
    """
    rate = float(rate)
    target_rate = float(target_rate)
    if rate % target_rate != 0:
        raise ValueError(
            f"rate {rate:g} is not an integer multiple of target {target_rate:g}"
        )
    n_in = data.shape[-1]
    n_out = int(round(n_in * target_rate / rate))
    spectrum = np.fft.rfft(data, axis=-1)
    kept = spectrum[..., : n_out // 2 + 1].copy()
    if n_out % 2 == 0:
        kept[..., -1] = 0.0  # drop the output Nyquist bin
    return np.fft.irfft(kept, n=n_out, axis=-1) * (n_out / n_in)


def fft_bandpass(data, rate, band=DEFAULT_BAND_HZ):
    """Zero all DFT bins whose frequency lies outside [band[0], band[1]]."""
    freqs = np.fft.rfftfreq(data.shape[-1], 1.0 / rate)
    keep = (freqs >= band[0]) & (freqs <= band[1])
    spectrum = np.fft.rfft(data, axis=-1)
    spectrum[..., ~keep] = 0.0
    return np.fft.irfft(spectrum, n=data.shape[-1], axis=-1)


def preprocess_windows(ws, channel_set=None, band=DEFAULT_BAND_HZ,
                       target_rate=DEFAULT_TARGET_RATE):
    """Full conditioning chain: select -> standardize -> decimate -> band-pass.

    Every stage acts channel-wise, so running the chain on all channels and
    selecting afterwards gives identical values; channel_set=None defers the
    selection to the caller.
    """
    out = ws if channel_set is None else ws.select_channels(channel_set)
    data = standardize(out.data, out.channel_names)
    data = decimate(data, out.rate, target_rate)
    data = fft_bandpass(data, target_rate, band)
    return replace(out, data=data, rate=float(target_rate))


def _kept_bins(rate, win, band, target_rate):
    """Window-DFT frequencies that survive decimation plus band-pass.

    Standardization removes the window mean, so the DC bin never
    contributes; decimation drops everything at and above target_rate/2.
    """
    freqs = np.fft.rfftfreq(win, 1.0 / rate)
    keep = (freqs >= band[0]) & (freqs <= band[1])
    keep &= (freqs > 0) & (freqs < target_rate / 2.0)
    return freqs[keep]


def conditioned_windows(rec, trials, subject_id="", task="", set_index=0,
                        band=DEFAULT_BAND_HZ, target_rate=DEFAULT_TARGET_RATE):
    """Fused extract + standardize + decimate + band-pass.

    Numerically equivalent to extract_windows followed by
    preprocess_windows but evaluates only the handful of surviving DFT
    bins per window instead of materializing the raw 500-sample windows.
    Returns (window_set, skipped) like extract_windows.
    """
    rate = rec.rate
    win = int(round(WINDOW_S * rate))
    step = int(round(STEP_S * rate))
    pre = int(round(PRE_ONSET_S * rate))
    if win % step != 0 or rate % target_rate != 0:
        ws, skipped = extract_windows(rec, trials, subject_id, task, set_index)
        return preprocess_windows(ws, None, band, target_rate), skipped
    n_out = int(round(win * target_rate / rate))
    n_blocks_per_win = win // step
    n_blocks = pre // step
    freqs = _kept_bins(rate, win, band, target_rate)

    # Per-block partial DFTs; a window's bin is the phase-aligned sum of
    # its blocks, and the output samples are the inverse transform of the
    # kept bins only.
    r = np.arange(step)
    block_basis = np.exp(-2j * np.pi * freqs[None, :] * r[:, None] / rate)
    j = np.arange(n_blocks_per_win)
    block_phase = np.exp(-2j * np.pi * freqs[None, :] * (j[:, None] * step) / rate)
    m = np.arange(n_out)
    synth_basis = np.exp(2j * np.pi * freqs[:, None] * m[None, :] / target_rate)

    blocks_out = []
    trial_ids = []
    skipped = []
    for trial in trials:
        if not trial.valid:
            continue
        onset = int(trial.onset_sample)
        if onset - pre < 0 or onset > rec.n_samples:
            skipped.append((trial.trial_id, "insufficient history"))
            continue
        span = np.ascontiguousarray(rec.data[:, onset - pre:onset])
        n_ch = span.shape[0]
        block_view = span.reshape(n_ch, n_blocks, step)

        partial = block_view @ block_basis  # (ch, blocks, bins)
        bins = np.zeros((n_ch, N_WINDOWS, len(freqs)), dtype=np.complex128)
        for jj in range(n_blocks_per_win):
            bins += partial[:, jj:jj + N_WINDOWS, :] * block_phase[jj]

        s1 = block_view.sum(axis=2)
        s2 = (block_view ** 2).sum(axis=2)
        cs1 = np.concatenate([np.zeros((n_ch, 1)), np.cumsum(s1, axis=1)], axis=1)
        cs2 = np.concatenate([np.zeros((n_ch, 1)), np.cumsum(s2, axis=1)], axis=1)
        w_sum = cs1[:, n_blocks_per_win:] - cs1[:, :-n_blocks_per_win]
        w_sumsq = cs2[:, n_blocks_per_win:] - cs2[:, :-n_blocks_per_win]
        variance = np.maximum(w_sumsq / win - (w_sum / win) ** 2, 0.0)
        if (variance == 0.0).any():
            ch = int(np.nonzero(variance == 0.0)[0][0])
            raise FlatChannelError(rec.channel_names[ch])
        sd = np.sqrt(variance)

        out = np.einsum("ckf,fm->ckm", bins, synth_basis).real
        out *= 2.0 / win
        out /= sd[:, :, None]
        blocks_out.append(out.transpose(1, 0, 2))
        trial_ids.append(trial.trial_id)

    if blocks_out:
        data = np.concatenate(blocks_out, axis=0)
    else:
        data = np.empty((0, len(rec.channel_names), n_out))
    window_index = np.tile(np.arange(N_WINDOWS), len(blocks_out))
    ids = (np.repeat(np.asarray(trial_ids, dtype=int), N_WINDOWS)
           if blocks_out else np.empty(0, dtype=int))
    ws = WindowSet(
        data=data,
        window_index=window_index,
        trial_ids=ids,
        channel_names=tuple(rec.channel_names),
        rate=float(target_rate),
        subject_id=subject_id,
        task=task,
        set_index=set_index,
    )
    return ws, skipped
