import numpy as np
import pytest

from lrptransfer.channels import make_channel_set
from lrptransfer.errors import FlatChannelError
from lrptransfer.preprocess import (
    LRP_TRAIN_WINDOWS,
    N_WINDOWS,
    NOLRP_TRAIN_WINDOWS,
    conditioned_windows,
    decimate,
    extract_windows,
    fft_bandpass,
    preprocess_windows,
    standardize,
    window_start_offset,
)
from lrptransfer.types import RawRecording, Trial, TrialTable

RATE = 500.0


def _recording(n=12000, n_ch=3, seed=0):
    rng = np.random.default_rng(seed)
    return RawRecording(
        data=rng.standard_normal((n_ch, n)),
        rate=RATE,
        channel_names=tuple(f"C{2 * i + 1}" for i in range(n_ch)),
    )


def _trial(onset, valid=True, trial_id=0):
    return Trial(onset_sample=onset, condition="unilateral", set_index=0,
                 valid=valid, rest_duration=6.0, trial_id=trial_id)


def test_window_count_and_grid():
    rec = _recording()
    ws, skipped = extract_windows(rec, TrialTable([_trial(5000)]))
    assert skipped == []
    assert ws.n_windows == N_WINDOWS == 81
    offsets = ws.start_offsets
    assert offsets[0] == pytest.approx(-5.0)
    assert offsets[-1] == pytest.approx(-1.0)
    steps = np.diff(offsets)
    assert np.allclose(steps, 0.05)


def test_window_sample_alignment():
    rec = _recording()
    ws, _ = extract_windows(rec, TrialTable([_trial(5000)]))
    assert np.array_equal(ws.data[0], rec.data[:, 2500:3000])
    assert np.array_equal(ws.data[80], rec.data[:, 4500:5000])
    k = 17
    start = 5000 - 2500 + 25 * k
    assert np.array_equal(ws.data[k], rec.data[:, start:start + 500])


def test_insufficient_history_skips_with_reason():
    rec = _recording()
    ws, skipped = extract_windows(rec, TrialTable([_trial(2000, trial_id=3)]))
    assert ws.n_windows == 0
    assert skipped == [(3, "insufficient history")]


def test_windowing_translation_equivariance():
    rec = _recording()
    shift = 125
    a, _ = extract_windows(rec, TrialTable([_trial(5000)]))
    b, _ = extract_windows(rec, TrialTable([_trial(5000 + shift)]))
    assert np.array_equal(
        b.data[10], rec.data[:, 2500 + shift + 250:3000 + shift + 250]
    )


def test_training_window_designation():
    rec = _recording()
    ws, _ = extract_windows(rec, TrialTable([_trial(5000)]))
    mask, is_lrp = ws.training_labels()
    assert mask.sum() == 5
    picked = set(ws.window_index[mask])
    assert picked == set(LRP_TRAIN_WINDOWS) | set(NOLRP_TRAIN_WINDOWS)
    assert is_lrp.sum() == 2
    assert window_start_offset(78) == pytest.approx(-1.10)
    assert window_start_offset(80) == pytest.approx(-1.00)
    assert window_start_offset(39) == pytest.approx(-3.05)
    assert window_start_offset(35) == pytest.approx(-3.25)
    assert window_start_offset(30) == pytest.approx(-3.50)


def test_standardize_moments():
    x = np.array([[1.0, 2.0, 3.0]])
    out = standardize(x)
    assert out.mean() == pytest.approx(0.0, abs=1e-15)
    assert out.std() == pytest.approx(1.0, abs=1e-15)


def test_standardize_idempotent():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((4, 2, 100))
    once = standardize(x)
    twice = standardize(once)
    assert np.allclose(once, twice, atol=1e-12)


def test_standardize_flat_channel_named():
    x = np.ones((1, 2, 50))
    x[0, 0] = np.linspace(0, 1, 50)
    with pytest.raises(FlatChannelError) as err:
        standardize(x, ("C1", "C3"))
    assert "C3" in str(err.value)


def test_decimate_preserves_dc():
    x = np.ones((2, 500))
    out = decimate(x, RATE, 20.0)
    assert out.shape == (2, 20)
    assert np.allclose(out, 1.0, atol=1e-12)


def test_decimate_preserves_in_band_sinusoid():
    t = np.arange(500) / RATE
    x = np.sin(2 * np.pi * 2.0 * t)[None, :]
    out = decimate(x, RATE, 20.0)
    t20 = np.arange(20) / 20.0
    expected = np.sin(2 * np.pi * 2.0 * t20)
    assert np.abs(out - expected).max() < 0.02 * np.abs(expected).max()


def test_decimate_suppresses_out_of_band():
    t = np.arange(500) / RATE
    x = np.sin(2 * np.pi * 50.0 * t)[None, :]
    out = decimate(x, RATE, 20.0)
    in_rms = np.sqrt((x**2).mean())
    out_rms = np.sqrt((out**2).mean())
    assert out_rms <= 0.01 * in_rms


def test_decimate_requires_integer_factor():
    with pytest.raises(ValueError):
        decimate(np.ones((1, 500)), RATE, 13.0)


def test_bandpass_removes_dc():
    out = fft_bandpass(np.full((1, 20), 3.0), 20.0)
    assert np.allclose(out, 0.0, atol=1e-12)


def test_bandpass_keeps_in_band_bin():
    t = np.arange(20) / 20.0
    x = np.sin(2 * np.pi * 3.0 * t)[None, :]
    out = fft_bandpass(x, 20.0)
    assert np.allclose(out, x, atol=1e-10)


def test_bandpass_removes_out_of_band_bin():
    t = np.arange(20) / 20.0
    x = np.sin(2 * np.pi * 7.0 * t)[None, :]
    out = fft_bandpass(x, 20.0)
    assert np.allclose(out, 0.0, atol=1e-10)


def test_bandpass_is_idempotent_projector(rng):
    x = rng.standard_normal((3, 2, 20))
    once = fft_bandpass(x, 20.0)
    twice = fft_bandpass(once, 20.0)
    assert np.allclose(once, twice, atol=1e-10)


def test_chain_output_shape_and_rate():
    rec = _recording()
    ws, _ = extract_windows(rec, TrialTable([_trial(5000)]))
    out = preprocess_windows(ws)
    assert out.rate == 20.0
    assert out.data.shape == (81, 3, 20)


def test_chain_zero_mean_after_decimation():
    rec = _recording()
    ws, _ = extract_windows(rec, TrialTable([_trial(5000)]))
    z = standardize(ws.data, ws.channel_names)
    dec = decimate(z, RATE, 20.0)
    assert np.abs(dec.mean(axis=-1)).max() < 1e-6


def test_fused_equals_modular():
    rec = _recording(seed=5)
    trials = TrialTable([_trial(5000, trial_id=0), _trial(9000, trial_id=1)])
    fused, skipped_f = conditioned_windows(rec, trials)
    ws, skipped_m = extract_windows(rec, trials)
    modular = preprocess_windows(ws)
    assert skipped_f == skipped_m
    assert fused.rate == modular.rate
    assert np.array_equal(fused.window_index, modular.window_index)
    assert np.array_equal(fused.trial_ids, modular.trial_ids)
    assert np.abs(fused.data - modular.data).max() < 1e-10


def test_subset_selection_commutes_with_chain():
    rec = _recording(n_ch=5, seed=6)
    cset = make_channel_set("custom-4")
    names = list(rec.channel_names)
    # give the recording the channels the set needs
    rec = RawRecording(data=rec.data, rate=rec.rate,
                       channel_names=("C1", "C3", "FC1", "CP1", "Cz"))
    ws, _ = extract_windows(rec, TrialTable([_trial(5000)]))
    all_then_select = preprocess_windows(ws).select_channels(cset)
    select_then_chain = preprocess_windows(ws, cset)
    assert np.allclose(all_then_select.data, select_then_chain.data, atol=1e-12)
