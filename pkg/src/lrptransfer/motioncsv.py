"""Motion-capture CSV reader and writer.

Schema: one row per sample; columns `<marker>_x,<marker>_y,<marker>_z` in
millimetres; the sample rate is declared in a leading comment line
`# rate_hz=<value>` (or passed explicitly). Empty cells mark tracking
dropouts: gaps of at most `max_gap` samples are linearly interpolated,
longer ones are filled too but reported as bad spans so that overlapping
trials can be invalidated.
"""

import csv

import numpy as np

from .errors import ParseError
from .types import MotionTrace

AXES = ("x", "y", "z")
DEFAULT_MAX_GAP = 10


def _fill_gaps(series, max_gap):
    """Interpolate NaN runs in-place; returns [(start, stop)] of long gaps."""
    n = len(series)
    isnan = np.isnan(series)
    if not isnan.any():
        return []
    if isnan.all():
        raise ParseError("a motion marker has no valid samples at all")
    idx = np.flatnonzero(~isnan)
    filled = np.interp(np.arange(n), idx, series[idx])
    long_spans = []
    start = None
    for i in range(n + 1):
        gap_here = i < n and isnan[i]
        if gap_here and start is None:
            start = i
        elif not gap_here and start is not None:
            if i - start > max_gap:
                long_spans.append((start, i))
            start = None
    series[:] = filled
    return long_spans


def read_motion_csv(path, rate=None, max_gap=DEFAULT_MAX_GAP):
    """Read a motion CSV into a MotionTrace."""
    declared_rate = None
    header = None
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("rate_hz"):
                    _, _, value = body.partition("=")
                    try:
                        declared_rate = float(value)
                    except ValueError:
                        raise ParseError(f"bad rate_hz value {value!r}", path, lineno)
                continue
            fields = next(csv.reader([line]))
            if header is None:
                header = [f.strip() for f in fields]
            else:
                rows.append((lineno, fields))
    if header is None:
        raise ParseError("motion CSV has no header row", path)
    rate = rate if rate is not None else declared_rate
    if rate is None:
        raise ParseError("sample rate neither declared (# rate_hz=...) nor passed", path)

    marker_names = []
    for col in header:
        if col.endswith("_x"):
            marker_names.append(col[:-2])
    if not marker_names:
        raise ParseError("no `<marker>_x` columns found", path)
    col_index = {c: i for i, c in enumerate(header)}
    for m in marker_names:
        for ax in AXES:
            if f"{m}_{ax}" not in col_index:
                raise ParseError(f"missing column {m}_{ax}", path)

    n = len(rows)
    positions = np.empty((len(marker_names), n, 3), dtype=np.float64)
    for r, (lineno, fields) in enumerate(rows):
        if len(fields) < len(header):
            raise ParseError(f"row has {len(fields)} cells, header has {len(header)}", path, lineno)
        for mi, m in enumerate(marker_names):
            for ai, ax in enumerate(AXES):
                cell = fields[col_index[f"{m}_{ax}"]].strip()
                if cell == "" or cell.lower() == "nan":
                    positions[mi, r, ai] = np.nan
                else:
                    try:
                        positions[mi, r, ai] = float(cell)
                    except ValueError:
                        raise ParseError(
                            f"non-numeric cell {cell!r} in column {m}_{ax}", path, lineno
                        )

    bad_spans = []
    for mi in range(len(marker_names)):
        # A sample is missing for a marker if any of its axes is missing.
        missing = np.isnan(positions[mi]).any(axis=1)
        positions[mi][missing] = np.nan
        spans = set()
        for ai in range(3):
            spans.update(_fill_gaps(positions[mi, :, ai], max_gap))
        for start, stop in sorted(spans):
            bad_spans.append((mi, start, stop))
    return MotionTrace(
        positions=positions,
        rate=float(rate),
        marker_names=tuple(marker_names),
        bad_spans=tuple(bad_spans),
    )


def write_motion_csv(trace, path):
    """Write a MotionTrace in the package's CSV schema."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# rate_hz={trace.rate:g}\n")
        writer = csv.writer(fh)
        writer.writerow([f"{m}_{ax}" for m in trace.marker_names for ax in AXES])
        stacked = np.concatenate([trace.positions[i] for i in range(len(trace.marker_names))], axis=1)
        for row in stacked:
            writer.writerow([f"{v:.17g}" for v in row])
