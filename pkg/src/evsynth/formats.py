"""Bit-exact file I/O for event lists (EVT1, CSV) and frame stacks (FSEQ).

EVT1 (little-endian):
    magic "EVT1" | u16 version=1 | u16 width | u16 height | u32 count
    then count packed records of {u32 t_us, u16 x, u16 y, i8 p}, p in {+1,-1}

CSV:
    header line "t_us,x,y,p", then one decimal-integer record per line

FSEQ (little-endian):
    magic "FSEQ" | u16 version=1 | u16 width | u16 height | u32 frame_count
    | f32 fps | u8 channels=3, then frames as row-major channel-interleaved f32
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .core import EVENT_DTYPE, EventList, FrameSeq
from .errors import FormatError, RangeError

_EVT1_MAGIC = b"EVT1"
_EVT1_HEADER = struct.Struct("<4sHHHI")
_FSEQ_MAGIC = b"FSEQ"
_FSEQ_HEADER = struct.Struct("<4sHHHIfB")
_CSV_HEADER = "t_us,x,y,p"


def write_evt1(e: EventList, path) -> None:
    header = _EVT1_HEADER.pack(_EVT1_MAGIC, 1, e.width, e.height, len(e))
    Path(path).write_bytes(header + e.records.tobytes())


def read_evt1(path) -> EventList:
    buf = Path(path).read_bytes()
    if len(buf) < _EVT1_HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, width, height, count = _EVT1_HEADER.unpack_from(buf)
    if magic != _EVT1_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != 1:
        raise FormatError(f"{path}: unsupported version {version}")
    body = buf[_EVT1_HEADER.size:]
    if len(body) != count * EVENT_DTYPE.itemsize:
        raise FormatError(f"{path}: expected {count} records, "
                          f"got {len(body)} payload bytes")
    rec = np.frombuffer(body, dtype=EVENT_DTYPE, count=count).copy()
    return _build_list(path, width, height, rec)


def write_csv(e: EventList, path) -> None:
    r = e.records
    lines = [_CSV_HEADER]
    lines.extend(f"{t},{x},{y},{p}" for t, x, y, p in
                 zip(r["t"].tolist(), r["x"].tolist(), r["y"].tolist(), r["p"].tolist()))
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path, width: int | None = None, height: int | None = None) -> EventList:
    """Read a CSV event file. Dims are inferred from the data unless given."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != _CSV_HEADER:
        raise FormatError(f"{path}: missing '{_CSV_HEADER}' header")
    rec = np.empty(len(lines) - 1, dtype=EVENT_DTYPE)
    for i, line in enumerate(lines[1:]):
        parts = line.split(",")
        if len(parts) != 4:
            raise FormatError(f"{path}:{i + 2}: expected 4 fields")
        try:
            t, x, y, p = (int(v) for v in parts)
        except ValueError as exc:
            raise FormatError(f"{path}:{i + 2}: {exc}") from None
        rec[i] = (t, x, y, p)
    if width is None:
        width = int(rec["x"].max()) + 1 if rec.size else 1
    if height is None:
        height = int(rec["y"].max()) + 1 if rec.size else 1
    return _build_list(path, width, height, rec)


def _build_list(path, width, height, rec) -> EventList:
    if rec.size and (rec["x"].max() >= width or rec["y"].max() >= height):
        raise RangeError(f"{path}: coordinates exceed header dims {width}x{height}")
    try:
        return EventList(width, height, rec)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None


def write_fseq(f: FrameSeq, path) -> None:
    header = _FSEQ_HEADER.pack(_FSEQ_MAGIC, 1, f.width, f.height,
                               f.n_frames, f.fps, 3)
    data = np.ascontiguousarray(f.frames, dtype="<f4")
    Path(path).write_bytes(header + data.tobytes())


def read_fseq(path) -> FrameSeq:
    buf = Path(path).read_bytes()
    if len(buf) < _FSEQ_HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, width, height, n_frames, fps, channels = _FSEQ_HEADER.unpack_from(buf)
    if magic != _FSEQ_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != 1:
        raise FormatError(f"{path}: unsupported version {version}")
    if channels != 3:
        raise FormatError(f"{path}: expected 3 channels, got {channels}")
    body = buf[_FSEQ_HEADER.size:]
    expect = n_frames * height * width * 3 * 4
    if len(body) != expect:
        raise FormatError(f"{path}: expected {expect} payload bytes, got {len(body)}")
    frames = np.frombuffer(body, dtype="<f4").reshape(n_frames, height, width, 3).copy()
    try:
        return FrameSeq(width, height, fps, frames)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
