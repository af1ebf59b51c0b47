"""Single-file cache container: JSON header + raw little-endian blocks.

Byte layout (all integers little-endian):

    offset  size  content
    0       4     magic b"LRPX"
    4       4     uint32 header length H
    8       H     UTF-8 JSON header
    8+H     ...   raw block payloads, concatenated in header order

The header carries `{"version", "kind", "meta", "blocks"}` where every
block entry is `{"name", "kind": "array"|"bytes", "dtype", "shape",
"nbytes", "crc32"}`. Arrays are serialized in C order with little-endian
dtypes, so a save/load round trip is bit-exact. Each block payload is
checked against its CRC32 on read.
"""

import json
import zlib

import numpy as np

from .errors import ChecksumError, ContainerFormatError, ContainerVersionError

MAGIC = b"LRPX"
SCHEMA_VERSION = 1


def _le_dtype(dtype):
    dt = np.dtype(dtype)
    if dt.byteorder == ">":
        dt = dt.newbyteorder("<")
    return dt


def write_container(path, kind, meta, arrays=None, blobs=None):
    """Write a container file; arrays maps name -> ndarray, blobs name -> bytes."""
    arrays = arrays or {}
    blobs = blobs or {}
    blocks = []
    payloads = []
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr, dtype=_le_dtype(np.asarray(arr).dtype))
        raw = arr.tobytes()
        blocks.append(
            {
                "name": name,
                "kind": "array",
                "dtype": arr.dtype.str,
                "shape": list(arr.shape),
                "nbytes": len(raw),
                "crc32": zlib.crc32(raw),
            }
        )
        payloads.append(raw)
    for name, raw in blobs.items():
        blocks.append(
            {
                "name": name,
                "kind": "bytes",
                "dtype": None,
                "shape": None,
                "nbytes": len(raw),
                "crc32": zlib.crc32(raw),
            }
        )
        payloads.append(raw)
    header = {
        "version": SCHEMA_VERSION,
        "kind": kind,
        "meta": meta,
        "blocks": blocks,
    }
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(len(head).to_bytes(4, "little"))
        fh.write(head)
        for raw in payloads:
            fh.write(raw)


def read_container(path, expect_kind=None):
    """Read a container file; returns (meta, arrays, blobs)."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise ContainerFormatError(f"{path}: bad magic bytes {magic!r}")
        head_len_raw = fh.read(4)
        if len(head_len_raw) != 4:
            raise ContainerFormatError(f"{path}: truncated header length")
        head_len = int.from_bytes(head_len_raw, "little")
        head_raw = fh.read(head_len)
        if len(head_raw) != head_len:
            raise ContainerFormatError(f"{path}: truncated header")
        try:
            header = json.loads(head_raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ContainerFormatError(f"{path}: malformed header: {exc}") from exc
        version = header.get("version")
        if not isinstance(version, int) or version > SCHEMA_VERSION:
            raise ContainerVersionError(
                f"{path}: schema version {version!r} is not supported "
                f"(this build reads up to {SCHEMA_VERSION})"
            )
        kind = header.get("kind")
        if expect_kind is not None and kind != expect_kind:
            raise ContainerFormatError(
                f"{path}: container holds {kind!r}, expected {expect_kind!r}"
            )
        arrays = {}
        blobs = {}
        for block in header["blocks"]:
            raw = fh.read(block["nbytes"])
            if len(raw) != block["nbytes"]:
                raise ContainerFormatError(
                    f"{path}: truncated block {block['name']!r}"
                )
            if zlib.crc32(raw) != block["crc32"]:
                raise ChecksumError(
                    f"{path}: CRC mismatch in block {block['name']!r}"
                )
            if block["kind"] == "array":
                arr = np.frombuffer(raw, dtype=np.dtype(block["dtype"]))
                arrays[block["name"]] = arr.reshape(block["shape"]).copy()
            else:
                blobs[block["name"]] = raw
        return header["meta"], arrays, blobs
