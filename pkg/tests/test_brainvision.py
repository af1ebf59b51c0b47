import numpy as np
import pytest

from lrptransfer.brainvision import read_brainvision, read_vmrk, write_brainvision
from lrptransfer.errors import ParseError
from lrptransfer.types import RawRecording


def _write_triplet(tmp_path, data, fmt="INT_16", resolution=0.1, markers=(),
                   rate=500.0):
    rec = RawRecording(data=data, rate=rate,
                       channel_names=tuple(f"Ch{i}" for i in range(data.shape[0])),
                       markers=markers)
    header = tmp_path / "rec.vhdr"
    write_brainvision(rec, header, binary_format=fmt, resolution=resolution)
    return header


def test_int16_resolution_scaling(tmp_path):
    raw_counts = np.array([[0, 1, -7, 123], [5, 5, 5, 5]], dtype=float)
    header = _write_triplet(tmp_path, raw_counts * 0.1, fmt="INT_16", resolution=0.1)
    rec = read_brainvision(header)
    assert np.allclose(rec.data, raw_counts * 0.1, atol=1e-12)
    assert rec.rate == 500.0


def test_float32_round_trip(tmp_path, rng):
    data = rng.standard_normal((3, 50)).astype(np.float32).astype(np.float64)
    header = _write_triplet(tmp_path, data, fmt="IEEE_FLOAT_32")
    rec = read_brainvision(header)
    assert np.array_equal(rec.data, data)
    assert rec.channel_names == ("Ch0", "Ch1", "Ch2")


def test_marker_grammar(tmp_path):
    vmrk = tmp_path / "m.vmrk"
    vmrk.write_text(
        "Brain Vision Data Exchange Marker File, Version 1.0\n"
        "[Marker Infos]\n"
        "Mk1=New Segment,,1,1,0,20260101000000000000\n"
        "Mk2=Stimulus,S 16,12345,1,0\n"
    )
    markers = read_vmrk(vmrk, n_samples=20000)
    assert markers[1] == (12345, "S 16")


def test_marker_position_out_of_range(tmp_path):
    vmrk = tmp_path / "m.vmrk"
    vmrk.write_text("[Marker Infos]\nMk1=Stimulus,S  8,999,1,0\n")
    with pytest.raises(ParseError):
        read_vmrk(vmrk, n_samples=100)


def test_markers_survive_round_trip(tmp_path, rng):
    data = rng.standard_normal((2, 100))
    header = _write_triplet(tmp_path, data, fmt="IEEE_FLOAT_32",
                            markers=((3, "S  1"), (42, "S  8")))
    rec = read_brainvision(header)
    assert rec.markers == ((3, "S  1"), (42, "S  8"))


def test_truncated_binary_is_detected(tmp_path, rng):
    data = rng.standard_normal((3, 40))
    header = _write_triplet(tmp_path, data, fmt="IEEE_FLOAT_32")
    eeg = tmp_path / "rec.eeg"
    eeg.write_bytes(eeg.read_bytes()[:-5])
    with pytest.raises(ParseError) as err:
        read_brainvision(header)
    assert "not a multiple" in str(err.value)


def test_unsupported_binary_format(tmp_path, rng):
    data = rng.standard_normal((1, 10))
    header = _write_triplet(tmp_path, data, fmt="IEEE_FLOAT_32")
    text = header.read_text().replace("IEEE_FLOAT_32", "IEEE_FLOAT_64")
    header.write_text(text)
    with pytest.raises(ParseError):
        read_brainvision(header)


def test_malformed_header_line(tmp_path, rng):
    data = rng.standard_normal((1, 10))
    header = _write_triplet(tmp_path, data, fmt="IEEE_FLOAT_32")
    header.write_text(header.read_text() + "not a key value line\n")
    with pytest.raises(ParseError) as err:
        read_brainvision(header)
    assert "rec.vhdr" in str(err.value)


def test_channel_count_mismatch(tmp_path, rng):
    data = rng.standard_normal((2, 10))
    header = _write_triplet(tmp_path, data, fmt="IEEE_FLOAT_32")
    lines = [l for l in header.read_text().splitlines() if not l.startswith("Ch2=")]
    header.write_text("\n".join(lines) + "\n")
    with pytest.raises(ParseError):
        read_brainvision(header)


def test_int16_overflow_rejected_at_write(tmp_path):
    data = np.full((1, 4), 1e6)
    with pytest.raises(ValueError):
        _write_triplet(tmp_path, data, fmt="INT_16", resolution=0.1)
