import struct

import numpy as np
import pytest

from evsynth.core import EVENT_DTYPE, FrameSeq
from evsynth.errors import FormatError, RangeError
from evsynth.formats import (read_csv, read_evt1, read_fseq, write_csv,
                             write_evt1, write_fseq)

from conftest import random_event_list


def test_evt1_round_trip_bit_exact(rng, tmp_path):
    ev = random_event_list(rng, n=10_000, width=640, height=360, t_max=5_000_000)
    path = tmp_path / "events.evt1"
    write_evt1(ev, path)
    back = read_evt1(path)
    assert back.width == ev.width and back.height == ev.height
    assert np.array_equal(back.records, ev.records)
    # file-level identity: re-writing what we read reproduces the bytes
    path2 = tmp_path / "copy.evt1"
    write_evt1(back, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_evt1_bad_magic(tmp_path):
    path = tmp_path / "bogus.evt1"
    path.write_bytes(b"NOPE" + b"\x00" * 10)
    with pytest.raises(FormatError):
        read_evt1(path)


def test_evt1_truncated(tmp_path, rng):
    ev = random_event_list(rng, n=50)
    path = tmp_path / "events.evt1"
    write_evt1(ev, path)
    path.write_bytes(path.read_bytes()[:-5])
    with pytest.raises(FormatError):
        read_evt1(path)


def test_evt1_coordinates_out_of_header_range(tmp_path):
    rec = np.zeros(1, EVENT_DTYPE)
    rec["x"], rec["p"] = 9, 1
    header = struct.pack("<4sHHHI", b"EVT1", 1, 4, 4, 1)  # width 4 but x=9
    path = tmp_path / "oob.evt1"
    path.write_bytes(header + rec.tobytes())
    with pytest.raises(RangeError):
        read_evt1(path)


def test_csv_round_trip(rng, tmp_path):
    ev = random_event_list(rng, n=300)
    path = tmp_path / "events.csv"
    write_csv(ev, path)
    back = read_csv(path, width=ev.width, height=ev.height)
    assert np.array_equal(back.records, ev.records)
    # byte-level: CSV does not encode dims, so write(read(file)) == file
    path2 = tmp_path / "copy.csv"
    write_csv(read_csv(path), path2)
    assert path.read_text() == path2.read_text()


def test_csv_single_line_example(tmp_path):
    path = tmp_path / "one.csv"
    path.write_text("t_us,x,y,p\n2000,0,0,-1\n")
    ev = read_csv(path)
    assert ev.records.tolist() == [(2000, 0, 0, -1)]


def test_csv_missing_header(tmp_path):
    path = tmp_path / "no_header.csv"
    path.write_text("2000,0,0,-1\n")
    with pytest.raises(FormatError):
        read_csv(path)


def test_fseq_round_trip_bit_exact(rng, tmp_path):
    frames = rng.random((7, 9, 11, 3), dtype=np.float32)
    seq = FrameSeq(11, 9, 240.0, frames)
    path = tmp_path / "clip.fseq"
    write_fseq(seq, path)
    back = read_fseq(path)
    assert (back.width, back.height, back.fps) == (11, 9, 240.0)
    assert np.array_equal(back.frames, seq.frames)
    path2 = tmp_path / "copy.fseq"
    write_fseq(back, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_fseq_bad_version(tmp_path, rng):
    seq = FrameSeq(2, 2, 100.0, rng.random((2, 2, 2, 3), dtype=np.float32))
    path = tmp_path / "clip.fseq"
    write_fseq(seq, path)
    raw = bytearray(path.read_bytes())
    raw[4] = 9  # version field
    path.write_bytes(bytes(raw))
    with pytest.raises(FormatError):
        read_fseq(path)
