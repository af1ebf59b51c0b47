"""BrainVision-style triplet reader and writer (.vhdr / .vmrk / .eeg).

Supported subset: binary multiplexed data, INT_16 with per-channel
resolution scaling or IEEE_FLOAT_32, little-endian. Marker lines follow

    Mk<n>=<type>,<description>,<position>,<size>,<channel>[,...]

and are surfaced as (position, description) pairs.
"""

import os

import numpy as np

from .errors import ParseError
from .types import RawRecording

_SAMPLE_BYTES = {"INT_16": 2, "IEEE_FLOAT_32": 4}
_SAMPLE_DTYPE = {"INT_16": "<i2", "IEEE_FLOAT_32": "<f4"}


def _parse_ini(path):
    """Parse the loose INI dialect of .vhdr/.vmrk into {section: [(line, key, value)]}."""
    sections = {}
    current = None
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith(";") or line.startswith("#"):
                continue
            if line.startswith("Brain Vision"):
                continue
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1].strip()
                sections.setdefault(current, [])
                continue
            if "=" not in line:
                raise ParseError(f"expected key=value, got {line!r}", path, lineno)
            if current is None:
                raise ParseError(f"key outside any section: {line!r}", path, lineno)
            key, _, value = line.partition("=")
            sections[current].append((lineno, key.strip(), value.strip()))
    return sections


def _section_dict(sections, name):
    return {key: value for _, key, value in sections.get(name, [])}


def read_vmrk(path, n_samples=None):
    """Parse marker file; returns ((sample, description), ...) tuples."""
    sections = _parse_ini(path)
    markers = []
    for lineno, key, value in sections.get("Marker Infos", []):
        if not key.startswith("Mk"):
            raise ParseError(f"unexpected marker key {key!r}", path, lineno)
        fields = value.split(",")
        if len(fields) < 5:
            raise ParseError(
                f"marker needs type,description,position,size,channel: {value!r}",
                path, lineno,
            )
        description = fields[1]
        try:
            position = int(fields[2])
        except ValueError:
            raise ParseError(f"non-integer marker position {fields[2]!r}", path, lineno)
        if position < 0 or (n_samples is not None and position >= n_samples):
            raise ParseError(
                f"marker position {position} outside [0, {n_samples})", path, lineno
            )
        markers.append((position, description))
    return tuple(markers)


def read_brainvision(header_path):
    """Read a .vhdr triplet into a RawRecording scaled to microvolts."""
    sections = _parse_ini(header_path)
    common = _section_dict(sections, "Common Infos")
    binary = _section_dict(sections, "Binary Infos")
    base = os.path.dirname(os.path.abspath(header_path))

    def require(table, key, section):
        if key not in table:
            raise ParseError(f"missing {key} in [{section}]", header_path)
        return table[key]

    data_file = os.path.join(base, require(common, "DataFile", "Common Infos"))
    marker_file = common.get("MarkerFile")
    data_format = common.get("DataFormat", "BINARY")
    if data_format != "BINARY":
        raise ParseError(f"unsupported DataFormat {data_format!r}", header_path)
    orientation = common.get("DataOrientation", "MULTIPLEXED")
    if orientation != "MULTIPLEXED":
        raise ParseError(f"unsupported DataOrientation {orientation!r}", header_path)
    try:
        n_channels = int(require(common, "NumberOfChannels", "Common Infos"))
        interval_us = float(require(common, "SamplingInterval", "Common Infos"))
    except ValueError as exc:
        raise ParseError(f"malformed header value: {exc}", header_path) from exc
    rate = 1e6 / interval_us

    binary_format = binary.get("BinaryFormat", "INT_16")
    if binary_format not in _SAMPLE_BYTES:
        raise ParseError(f"unsupported BinaryFormat {binary_format!r}", header_path)

    names = []
    resolutions = []
    for lineno, key, value in sections.get("Channel Infos", []):
        if not key.startswith("Ch"):
            raise ParseError(f"unexpected channel key {key!r}", header_path, lineno)
        fields = value.split(",")
        if not fields or not fields[0]:
            raise ParseError(f"channel line without a name: {value!r}", header_path, lineno)
        names.append(fields[0])
        res = fields[2] if len(fields) > 2 and fields[2] else "1"
        try:
            resolutions.append(float(res))
        except ValueError:
            raise ParseError(f"non-numeric resolution {res!r}", header_path, lineno)
    if len(names) != n_channels:
        raise ParseError(
            f"header declares {n_channels} channels but lists {len(names)}",
            header_path,
        )

    sample_bytes = _SAMPLE_BYTES[binary_format]
    size = os.path.getsize(data_file)
    frame = n_channels * sample_bytes
    if size % frame != 0:
        raise ParseError(
            f"binary size {size} is not a multiple of "
            f"{n_channels} channels x {sample_bytes} bytes",
            data_file,
        )
    n_samples = size // frame
    raw = np.fromfile(data_file, dtype=_SAMPLE_DTYPE[binary_format])
    data = raw.reshape(n_samples, n_channels).T.astype(np.float64)
    data *= np.asarray(resolutions, dtype=np.float64)[:, None]

    markers = ()
    if marker_file:
        markers = read_vmrk(os.path.join(base, marker_file), n_samples=n_samples)
    return RawRecording(
        data=data, rate=rate, channel_names=tuple(names), markers=markers
    )


def write_brainvision(rec, header_path, binary_format="IEEE_FLOAT_32", resolution=0.1):
    """Write a RawRecording as a .vhdr/.vmrk/.eeg triplet.

    INT_16 output quantizes to `resolution` microvolts per bit; float output
    stores values verbatim (resolution 1).
    """
    if binary_format not in _SAMPLE_BYTES:
        raise ValueError(f"unsupported BinaryFormat {binary_format!r}")
    base, _ = os.path.splitext(header_path)
    stem = os.path.basename(base)
    data_path, marker_path = base + ".eeg", base + ".vmrk"

    if binary_format == "INT_16":
        res = resolution
        scaled = np.round(rec.data / res)
        if np.abs(scaled).max(initial=0) > np.iinfo(np.int16).max:
            raise ValueError("data exceeds INT_16 range at this resolution")
        payload = scaled.T.astype("<i2")
    else:
        res = 1.0
        payload = rec.data.T.astype("<f4")
    payload.tofile(data_path)

    lines = [
        "Brain Vision Data Exchange Header File Version 1.0",
        "[Common Infos]",
        f"DataFile={stem}.eeg",
        f"MarkerFile={stem}.vmrk",
        "DataFormat=BINARY",
        "DataOrientation=MULTIPLEXED",
        f"NumberOfChannels={len(rec.channel_names)}",
        f"SamplingInterval={1e6 / rec.rate:g}",
        "[Binary Infos]",
        f"BinaryFormat={binary_format}",
        "[Channel Infos]",
    ]
    for i, name in enumerate(rec.channel_names, start=1):
        lines.append(f"Ch{i}={name},,{res:g},µV")
    with open(header_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")

    mlines = ["Brain Vision Data Exchange Marker File, Version 1.0", "[Marker Infos]"]
    for i, (sample, code) in enumerate(rec.markers, start=1):
        mlines.append(f"Mk{i}=Stimulus,{code},{sample},1,0")
    with open(marker_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(mlines) + "\n")
    return data_path, marker_path
