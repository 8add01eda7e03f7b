"""Wire codec for the simulated sensor link.

Each sample travels in a fixed six-byte frame:

    offset  field     meaning
    0       sync      0xA5
    1       seq       wrapping 8-bit frame counter
    2-3     sample    ADC value, big-endian, 0..1023 (upper 6 bits zero)
    4       dt        milliseconds since the previous frame, 0..255
    5       checksum  XOR of seq, both sample bytes and dt

The decoder scans for the sync byte, validates candidates, and on a bad
checksum or out-of-range sample advances a single byte and rescans, so it
resynchronizes itself after arbitrary corruption.  Capture files (`.blk`)
are raw concatenated frames.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

from .blinksense import ADC_MAX, SensorSample

__all__ = [
    "SYNC",
    "FRAME_LEN",
    "SampleOutOfRange",
    "Frame",
    "DecodeStats",
    "encode",
    "encode_samples",
    "FrameDecoder",
    "decode_stream",
    "write_capture",
    "read_capture",
]

SYNC = 0xA5
FRAME_LEN = 6
MAX_DT = 255


class SampleOutOfRange(ValueError):
    """Sample value does not fit the 10-bit wire field."""


@dataclass(frozen=True)
class Frame:
    seq: int
    sample: int
    dt: int


@dataclass
class DecodeStats:
    frames_ok: int = 0
    frames_dropped: int = 0
    resyncs: int = 0


def _checksum(seq: int, hi: int, lo: int, dt: int) -> int:
    return seq ^ hi ^ lo ^ dt


def encode(seq: int, sample: int, dt: int) -> bytes:
    """Encode one frame.  decode of the result reproduces the inputs."""
    if not 0 <= sample <= ADC_MAX:
        raise SampleOutOfRange(f"sample {sample} outside 0..{ADC_MAX}")
    if not 0 <= dt <= MAX_DT:
        raise ValueError(f"dt {dt} outside 0..{MAX_DT}")
    seq &= 0xFF
    hi, lo = sample >> 8, sample & 0xFF
    return bytes((SYNC, seq, hi, lo, dt, _checksum(seq, hi, lo, dt)))


def encode_samples(samples: Sequence[SensorSample], seq_start: int = 0) -> bytes:
    """Encode timestamped samples, splitting gaps longer than one dt byte.

    A gap over 255 ms is bridged with filler frames that repeat the held
    (previous) sample value, so the reconstructed stream is a zero-order hold
    of the original.  Timestamps count from 0: the first frame's dt is the
    first sample's t.
    """
    out = bytearray()
    seq = seq_start & 0xFF
    prev_t = 0
    prev_v: Optional[int] = None
    for s in samples:
        gap = s.t - prev_t
        if gap < 0:
            raise ValueError("samples must be time-ordered")
        hold = s.v if prev_v is None else prev_v
        while gap > MAX_DT:
            out += encode(seq, hold, MAX_DT)
            seq = (seq + 1) & 0xFF
            gap -= MAX_DT
        out += encode(seq, s.v, gap)
        seq = (seq + 1) & 0xFF
        prev_t, prev_v = s.t, s.v
    return bytes(out)


class FrameDecoder:
    """Streaming frame decoder with single-byte resynchronization.

    Feed arbitrary byte chunks; complete valid frames come out in order.
    Lossy input is the normal case: a candidate failing validation bumps
    ``stats.resyncs`` and scanning resumes one byte later, and sequence
    gaps between accepted frames bump ``stats.frames_dropped``.
    """

    def __init__(self) -> None:
        self.stats = DecodeStats()
        self._buf = bytearray()
        self._expected_seq: Optional[int] = None
        self._out_of_lock = False

    def _lock_lost(self) -> None:
        # one resync per contiguous lost-lock episode, however many bytes
        # (failed candidates or non-sync garbage) it spans
        if not self._out_of_lock:
            self.stats.resyncs += 1
            self._out_of_lock = True

    def feed(self, data: bytes) -> List[Frame]:
        self._buf.extend(data)
        frames = []
        buf = self._buf
        pos = 0
        while True:
            sync = buf.find(SYNC, pos)
            if sync < 0:
                if len(buf) > pos:
                    self._lock_lost()
                pos = len(buf)
                break
            if sync > pos:
                self._lock_lost()
            if sync + FRAME_LEN > len(buf):
                pos = sync  # partial candidate, wait for more bytes
                break
            seq, hi, lo, dt, ck = buf[sync + 1 : sync + FRAME_LEN]
            sample = (hi << 8) | lo
            if ck != _checksum(seq, hi, lo, dt) or sample > ADC_MAX:
                self._lock_lost()
                pos = sync + 1
                continue
            if self._expected_seq is not None and seq != self._expected_seq:
                self.stats.frames_dropped += (seq - self._expected_seq) & 0xFF
            self._expected_seq = (seq + 1) & 0xFF
            self.stats.frames_ok += 1
            self._out_of_lock = False
            frames.append(Frame(seq=seq, sample=sample, dt=dt))
            pos = sync + FRAME_LEN
        del buf[:pos]
        return frames


def decode_stream(data: bytes) -> Tuple[List[SensorSample], DecodeStats]:
    """Decode a complete byte capture into timestamped samples.

    Absolute time is rebuilt by accumulating dt from t=0; dropped frames
    therefore compress time rather than leaving holes.
    """
    dec = FrameDecoder()
    frames = dec.feed(data)
    t = 0
    samples = []
    for f in frames:
        t += f.dt
        samples.append(SensorSample(t=t, v=f.sample))
    return samples, dec.stats


def write_capture(path, samples: Sequence[SensorSample]) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_samples(samples))


def read_capture(path) -> Tuple[List[SensorSample], DecodeStats]:
    with open(path, "rb") as fh:
        return decode_stream(fh.read())
