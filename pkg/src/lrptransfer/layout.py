"""Electrode vocabulary and scalp geometry of the 64-channel extended 10-20 cap.

The cap is the standard 64-electrode active-cap montage referenced to FCz.
Positions are schematic grid coordinates (x: left negative, right positive;
y: front positive, back negative) used for neighborhood ranking and for the
synthetic-topography weights, not for physical forward modeling.
"""

import re

# Acquisition order of the 64-channel cap (FCz is the reference and carries
# no data channel).
CAP_64 = (
    "Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8",
    "FC5", "FC1", "FC2", "FC6",
    "T7", "C3", "Cz", "C4", "T8",
    "TP9", "CP5", "CP1", "CP2", "CP6", "TP10",
    "P7", "P3", "Pz", "P4", "P8",
    "PO9", "O1", "Oz", "O2", "PO10",
    "AF7", "AF3", "AF4", "AF8",
    "F5", "F1", "F2", "F6",
    "FT9", "FT7", "FC3", "FC4", "FT8", "FT10",
    "C5", "C1", "C2", "C6",
    "TP7", "CP3", "CPz", "CP4", "TP8",
    "P5", "P1", "P2", "P6",
    "PO7", "PO3", "POz", "PO4", "PO8",
)

REFERENCE = "FCz"

_LABEL_RE = re.compile(r"^([A-Za-z]+?)(z|\d+)$")

# Front-to-back row coordinates. T/FT/TP rows share the height of the
# C/FC/CP rows they extend laterally.
_ROW_Y = {
    "Fp": 4.0, "AF": 3.0, "F": 2.0,
    "FT": 1.0, "FC": 1.0,
    "T": 0.0, "C": 0.0,
    "TP": -1.0, "CP": -1.0,
    "P": -2.0, "PO": -3.0, "O": -4.0,
}


def parse_label(name):
    """Split an extended 10-20 label into (row, index).

    index is None for midline ('z') electrodes, otherwise the 10-20 number.
    Raises ValueError on names outside the convention.
    """
    m = _LABEL_RE.match(name)
    if not m:
        raise ValueError(f"not an extended 10-20 label: {name!r}")
    row, idx = m.group(1), m.group(2)
    if row not in _ROW_Y:
        raise ValueError(f"unknown 10-20 row {row!r} in label {name!r}")
    return row, (None if idx == "z" else int(idx))


def hemisphere(name):
    """Return 'left', 'right', or 'midline' by 10-20 numbering parity."""
    _, idx = parse_label(name)
    if idx is None:
        return "midline"
    return "left" if idx % 2 == 1 else "right"


def position(name):
    """Schematic (x, y) grid position of an electrode."""
    row, idx = parse_label(name)
    y = _ROW_Y[row]
    if idx is None:
        x = 0.0
    elif idx % 2 == 1:
        x = -float((idx + 1) // 2)
    else:
        x = float(idx // 2)
    return x, y


POSITIONS = {name: position(name) for name in CAP_64}


def distance(a, b):
    """Euclidean grid distance between two electrodes."""
    ax, ay = POSITIONS[a]
    bx, by = POSITIONS[b]
    return ((ax - bx) ** 2 + (ay - by) ** 2) ** 0.5
