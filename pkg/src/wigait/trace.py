"""Core CSI data types and file I/O.

A trace is a time-ordered stream of amplitude frames, one row per
transmit-receive antenna pair and one column per OFDM subcarrier.
Amplitudes are linear magnitudes (not dB). Traces are immutable after
construction and round-trip bit-exactly through the binary format.
"""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"CSIT"
FORMAT_VERSION = 1

# magic, version, fs, n_tx, n_rx, n_subcarriers, n_frames
_HEADER = struct.Struct("<4sHdIIII")

SubjectId = str


class TraceFormatError(ValueError):
    """Malformed trace file. `offset` is the byte position of the defect."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


@dataclass(frozen=True, eq=False)
class CsiTrace:
    """Amplitude time series for all antenna pairs and subcarriers.

    frames has shape (n_frames, n_tx*n_rx, n_subcarriers), float32,
    nonnegative and finite.
    """

    sample_rate_hz: float
    n_tx: int
    n_rx: int
    n_subcarriers: int
    frames: np.ndarray

    def __post_init__(self):
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        for name in ("n_tx", "n_rx", "n_subcarriers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")
        frames = np.array(self.frames, dtype=np.float32, copy=True, order="C")
        expected = (self.n_tx * self.n_rx, self.n_subcarriers)
        if frames.ndim != 3 or frames.shape[1:] != expected:
            raise ValueError(
                f"frames must have shape (n_frames, {expected[0]}, {expected[1]}), "
                f"got {frames.shape}"
            )
        if not np.isfinite(frames).all():
            raise ValueError("amplitudes must be finite")
        if frames.size and frames.min() < 0:
            raise ValueError("amplitudes must be nonnegative")
        frames.flags.writeable = False
        object.__setattr__(self, "frames", frames)

    @property
    def n_pairs(self) -> int:
        return self.n_tx * self.n_rx

    @property
    def n_streams(self) -> int:
        return self.n_pairs * self.n_subcarriers

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    def stream_matrix(self) -> np.ndarray:
        """All streams as a float64 array of shape (n_streams, n_frames)."""
        return (
            self.frames.reshape(self.n_frames, self.n_streams).T.astype(np.float64)
        )

    def pair_matrix(self, pair: int) -> np.ndarray:
        """Subcarrier series of one antenna pair, shape (n_frames, n_subcarriers)."""
        return self.frames[:, pair, :].astype(np.float64)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CsiTrace):
            return NotImplemented
        return (
            self.sample_rate_hz == other.sample_rate_hz
            and self.n_tx == other.n_tx
            and self.n_rx == other.n_rx
            and self.n_subcarriers == other.n_subcarriers
            and self.frames.shape == other.frames.shape
            and np.array_equal(self.frames, other.frames)
        )


@dataclass(frozen=True, order=True)
class Segment:
    """Half-open sample interval [j_begin, j_end) on the trace time axis."""

    j_begin: int
    j_end: int

    def __post_init__(self):
        if self.j_begin < 0 or self.j_end <= self.j_begin:
            raise ValueError(f"need 0 <= j_begin < j_end, got [{self.j_begin}, {self.j_end})")

    @property
    def length(self) -> int:
        return self.j_end - self.j_begin


@dataclass(frozen=True)
class SegmentLabel:
    """Ground-truth crossing interval with the walking subject's identity."""

    segment: Segment
    subject: SubjectId

    def __post_init__(self):
        if not self.subject:
            raise ValueError("subject must be a nonempty string")


def write_trace(trace: CsiTrace) -> bytes:
    """Serialize a trace; equal traces yield identical bytes."""
    header = _HEADER.pack(
        MAGIC,
        FORMAT_VERSION,
        trace.sample_rate_hz,
        trace.n_tx,
        trace.n_rx,
        trace.n_subcarriers,
        trace.n_frames,
    )
    body = np.ascontiguousarray(trace.frames, dtype="<f4").tobytes()
    return header + body


def read_trace(source: bytes) -> CsiTrace:
    """Parse a binary trace, validating header/body consistency.

    Raises TraceFormatError naming the byte offset of the first defect.
    """
    if len(source) < _HEADER.size:
        raise TraceFormatError("truncated header", len(source))
    magic, version, fs, n_tx, n_rx, n_sub, n_frames = _HEADER.unpack_from(source, 0)
    if magic != MAGIC:
        raise TraceFormatError(f"bad magic {magic!r}", 0)
    if version != FORMAT_VERSION:
        raise TraceFormatError(f"unsupported version {version}", 4)
    if not np.isfinite(fs) or fs <= 0:
        raise TraceFormatError(f"sample rate must be positive, got {fs}", 6)
    if min(n_tx, n_rx, n_sub) < 1:
        raise TraceFormatError("antenna/subcarrier counts must be positive", 14)
    n_values = n_frames * n_tx * n_rx * n_sub
    expected_size = _HEADER.size + 4 * n_values
    if len(source) != expected_size:
        offset = min(len(source), expected_size)
        raise TraceFormatError(
            f"body size mismatch: header promises {expected_size - _HEADER.size} bytes, "
            f"got {len(source) - _HEADER.size}",
            offset,
        )
    flat = np.frombuffer(source, dtype="<f4", count=n_values, offset=_HEADER.size)
    bad = ~np.isfinite(flat)
    if bad.any():
        first = int(np.flatnonzero(bad)[0])
        raise TraceFormatError(
            "non-finite amplitude", _HEADER.size + 4 * first
        )
    if flat.size and flat.min() < 0:
        first = int(np.flatnonzero(flat < 0)[0])
        raise TraceFormatError(
            "negative amplitude", _HEADER.size + 4 * first
        )
    frames = flat.reshape(n_frames, n_tx * n_rx, n_sub)
    return CsiTrace(fs, n_tx, n_rx, n_sub, frames)


def write_trace_csv(trace: CsiTrace) -> str:
    """Human-readable alternative: one sample per row, `t` is the frame index."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "pair", "subcarrier", "amplitude"])
    frames = trace.frames
    for t in range(trace.n_frames):
        for pair in range(trace.n_pairs):
            for sc in range(trace.n_subcarriers):
                writer.writerow([t, pair, sc, repr(float(frames[t, pair, sc]))])
    return buf.getvalue()


def read_trace_csv(
    text: str, sample_rate_hz: float, n_tx: int, n_rx: int, n_subcarriers: int
) -> CsiTrace:
    """Parse the CSV alternative. Geometry is not stored in the CSV, so the
    caller supplies it; every (t, pair, subcarrier) cell must be present."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != ["t", "pair", "subcarrier", "amplitude"]:
        raise ValueError(f"bad CSV header: {header}")
    cells: dict[tuple[int, int, int], float] = {}
    n_frames = 0
    for row in reader:
        if not row:
            continue
        t, pair, sc = int(row[0]), int(row[1]), int(row[2])
        cells[(t, pair, sc)] = float(row[3])
        n_frames = max(n_frames, t + 1)
    n_pairs = n_tx * n_rx
    frames = np.zeros((n_frames, n_pairs, n_subcarriers), dtype=np.float32)
    expected = n_frames * n_pairs * n_subcarriers
    if len(cells) != expected:
        raise ValueError(f"CSV has {len(cells)} samples, expected {expected}")
    for (t, pair, sc), amp in cells.items():
        frames[t, pair, sc] = amp
    return CsiTrace(sample_rate_hz, n_tx, n_rx, n_subcarriers, frames)


def write_labels_csv(labels: list[SegmentLabel]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["j_begin", "j_end", "subject"])
    for label in labels:
        writer.writerow([label.segment.j_begin, label.segment.j_end, label.subject])
    return buf.getvalue()


def read_labels_csv(text: str) -> list[SegmentLabel]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != ["j_begin", "j_end", "subject"]:
        raise ValueError(f"bad label header: {header}")
    labels = []
    for row in reader:
        if not row:
            continue
        labels.append(SegmentLabel(Segment(int(row[0]), int(row[1])), row[2]))
    return labels


def write_segments_csv(segments: list[Segment]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["j_begin", "j_end"])
    for seg in segments:
        writer.writerow([seg.j_begin, seg.j_end])
    return buf.getvalue()


def read_segments_csv(text: str) -> list[Segment]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != ["j_begin", "j_end"]:
        raise ValueError(f"bad segment header: {header}")
    return [Segment(int(row[0]), int(row[1])) for row in reader if row]
