"""Voltage-stream classification and voluntary-blink detection.

The (simulated) eye sensor reports 10-bit ADC samples.  Open eyes sit near a
high base level; closing the eye cuts the reflected light and the voltage
drops.  Three bands are distinguished:

* base     - at or above ``base_floor``: eyes open,
* garbage  - between the two thresholds: involuntary blinks and noise,
           discarded,
* blink    - at or below ``blink_threshold``: a deliberate blink candidate.

A voluntary blink event is a maximal run of blink-band samples that lasts at
least ``min_blink_ms``.  Runs that begin too soon after a previous event
(within ``refractory_ms`` of its end) are suppressed so one long closure
cannot fire twice.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from math import ceil
from typing import Iterable, List, Optional, Sequence

__all__ = [
    "ADC_MAX",
    "SensorSample",
    "SignalThresholds",
    "BlinkEvent",
    "SampleClass",
    "NonMonotonicTimestamps",
    "InseparableDistributions",
    "classify_sample",
    "detect_blinks",
    "calibrate_threshold",
    "StreamingBlinkDetector",
]

ADC_MAX = 1023  # 10-bit converter


class NonMonotonicTimestamps(ValueError):
    """Sample timestamps must strictly increase within a stream."""


class InseparableDistributions(ValueError):
    """Calibration input where idle and blink voltages overlap."""


@dataclass(frozen=True)
class SensorSample:
    """One timestamped ADC reading; t in milliseconds, v in [0, 1023]."""

    t: int
    v: int

    def __post_init__(self) -> None:
        if self.t < 0:
            raise ValueError(f"negative timestamp {self.t}")
        if not 0 <= self.v <= ADC_MAX:
            raise ValueError(f"sample {self.v} outside ADC range 0..{ADC_MAX}")


@dataclass(frozen=True)
class SignalThresholds:
    blink_threshold: int
    base_floor: int
    min_blink_ms: int = 60
    refractory_ms: int = 200

    def __post_init__(self) -> None:
        if not 0 <= self.blink_threshold < self.base_floor <= ADC_MAX:
            raise ValueError(
                "need 0 <= blink_threshold < base_floor <= "
                f"{ADC_MAX}, got {self.blink_threshold}/{self.base_floor}"
            )
        if self.min_blink_ms <= 0:
            raise ValueError("min_blink_ms must be positive")
        if self.refractory_ms < 0:
            raise ValueError("refractory_ms must be non-negative")


@dataclass(frozen=True)
class BlinkEvent:
    """A detected voluntary blink: onset time and duration, both ms."""

    onset_t: int
    duration_ms: int


class SampleClass(Enum):
    BASE = "base"
    GARBAGE = "garbage"
    BLINK_CANDIDATE = "blink_candidate"


def classify_sample(s: SensorSample, th: SignalThresholds) -> SampleClass:
    """Map one sample to its voltage band.  Total on valid inputs."""
    if s.v >= th.base_floor:
        return SampleClass.BASE
    if s.v <= th.blink_threshold:
        return SampleClass.BLINK_CANDIDATE
    return SampleClass.GARBAGE


class StreamingBlinkDetector:
    """Incremental blink detector; feed samples, collect events.

    Single-owner: not safe for concurrent mutation.  ``detect_blinks`` is the
    batch wrapper and the reference for its semantics.
    """

    def __init__(self, thresholds: SignalThresholds):
        self.thresholds = thresholds
        self._last_t: Optional[int] = None
        self._run_start: Optional[int] = None
        self._run_last: Optional[int] = None
        self._last_event_end: Optional[int] = None

    def feed(self, sample: SensorSample) -> Optional[BlinkEvent]:
        """Process one sample; returns an event when a blink run just ended."""
        if self._last_t is not None and sample.t <= self._last_t:
            raise NonMonotonicTimestamps(
                f"timestamp {sample.t} not after {self._last_t}"
            )
        self._last_t = sample.t

        cls = classify_sample(sample, self.thresholds)
        if cls is SampleClass.BLINK_CANDIDATE:
            if self._run_start is None:
                self._run_start = sample.t
            self._run_last = sample.t
            return None
        # run ends on the first sample back above the blink band
        return self._close_run(end_t=sample.t)

    def flush(self) -> Optional[BlinkEvent]:
        """Close a trailing run at the last seen sample (end of stream)."""
        if self._run_start is None:
            return None
        return self._close_run(end_t=self._run_last)

    def _close_run(self, end_t: Optional[int]) -> Optional[BlinkEvent]:
        if self._run_start is None:
            return None
        onset, self._run_start, self._run_last = self._run_start, None, None
        assert end_t is not None
        duration = end_t - onset
        if duration < self.thresholds.min_blink_ms:
            return None
        if (
            self._last_event_end is not None
            and onset - self._last_event_end < self.thresholds.refractory_ms
        ):
            return None
        self._last_event_end = onset + duration
        return BlinkEvent(onset_t=onset, duration_ms=duration)


def detect_blinks(
    stream: Iterable[SensorSample], th: SignalThresholds
) -> List[BlinkEvent]:
    """Detect voluntary blinks in a timestamp-ordered sample stream.

    One event per maximal blink-band run spanning at least ``min_blink_ms``;
    a run's duration reaches to the sample that ended it (or, for a run cut
    off by the end of the stream, to its last sample).  Runs starting within
    ``refractory_ms`` after a previous event's end are suppressed.  Garbage
    runs never produce events.
    """
    det = StreamingBlinkDetector(th)
    events = []
    for s in stream:
        ev = det.feed(s)
        if ev is not None:
            events.append(ev)
    ev = det.flush()
    if ev is not None:
        events.append(ev)
    return events


def _nearest_rank(sorted_values: Sequence[int], pct: float) -> int:
    """Nearest-rank percentile: value at rank ceil(pct/100 * n)."""
    rank = max(1, ceil(pct / 100.0 * len(sorted_values)))
    return sorted_values[rank - 1]


def calibrate_threshold(
    idle_samples: Sequence[SensorSample],
    blink_samples: Sequence[SensorSample],
    min_blink_ms: int = 60,
    refractory_ms: int = 200,
) -> SignalThresholds:
    """Derive per-user thresholds from an idle recording and a blink recording.

    blink_threshold is the midpoint between the highest blink voltage and the
    lowest idle voltage; base_floor is the 10th percentile (nearest rank) of
    the idle voltages.  Raises InseparableDistributions when the two voltage
    populations overlap.
    """
    if not idle_samples or not blink_samples:
        raise ValueError("both calibration recordings must be non-empty")
    idle_v = sorted(s.v for s in idle_samples)
    max_blink = max(s.v for s in blink_samples)
    min_idle = idle_v[0]
    if min_idle <= max_blink:
        raise InseparableDistributions(
            f"idle minimum {min_idle} does not clear blink maximum {max_blink}"
        )
    return SignalThresholds(
        blink_threshold=(max_blink + min_idle) // 2,
        base_floor=_nearest_rank(idle_v, 10.0),
        min_blink_ms=min_blink_ms,
        refractory_ms=refractory_ms,
    )
