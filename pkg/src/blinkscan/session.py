"""Session engine: wires codec, detector and automaton into a live service.

A session walks an ordered task script (one target region per task), feeding
every inbound event through the scanning automaton in a single total order
and emitting self-contained ``StateUpdate`` messages a client can render
without any scanning logic of its own.  Sessions run on a virtual clock for
headless replay (time advances only with input timestamps) or on the wall
clock for interactive use.

Message framing is one JSON object per line.  Engine to client kinds:
``StateUpdate``, ``TargetSet``, ``MetricsReport``.  Client to engine kinds:
``BlinkIn``, ``SampleIn``, ``SessionControl``.
"""
from __future__ import annotations

import json
import queue
import time
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .blinksense import SensorSample, SignalThresholds, StreamingBlinkDetector
from .blockscan import (
    ConfigInvalid,
    Phase,
    Region,
    ScanConfig,
    ScanState,
    blink,
    initial_state,
    quadrants,
    tick,
)
from .linkframe import FrameDecoder
from .scanmetrics import MetricsSummary, TrialOutcome
from .simharness import DEFAULT_RETRY_CYCLES, TrialSpec

__all__ = [
    "SessionConfig",
    "TaskLogRow",
    "SessionEngine",
    "QueueTransport",
    "TransportClosed",
    "run_session",
    "encode_message",
    "parse_message",
]

ENGINE_KINDS = ("StateUpdate", "TargetSet", "MetricsReport")
CLIENT_KINDS = ("BlinkIn", "SampleIn", "SessionControl")


class TransportClosed(ConnectionError):
    """The client side went away; the session finalizes with partial data."""


def encode_message(msg: Dict) -> str:
    return json.dumps(msg, separators=(",", ":"))


def parse_message(line: str) -> Dict:
    msg = json.loads(line)
    if not isinstance(msg, dict) or "kind" not in msg:
        raise ValueError("message must be an object with a 'kind' field")
    return msg


@dataclass(frozen=True)
class SessionConfig:
    scan: ScanConfig
    thresholds: Optional[SignalThresholds] = None
    source: str = "client"  # client | capture | frames
    targets: Tuple[Region, ...] = ()
    capture_path: Optional[str] = None
    retry_cycles: int = DEFAULT_RETRY_CYCLES
    virtual_time: bool = True

    def __post_init__(self) -> None:
        if self.source not in ("client", "capture", "frames"):
            raise ConfigInvalid(f"unknown input source {self.source!r}")
        if self.source == "capture" and not self.capture_path:
            raise ConfigInvalid("capture source needs capture_path")
        if self.source != "capture" and self.capture_path:
            raise ConfigInvalid("capture_path given but source is not capture")
        if self.source in ("capture", "frames") and self.thresholds is None:
            raise ConfigInvalid(f"{self.source} source needs signal thresholds")
        if not self.targets:
            raise ConfigInvalid("task script must contain at least one target")
        for tgt in self.targets:
            if not self.scan.screen.contains_region(tgt) or tgt.area == 0:
                raise ConfigInvalid(f"target {tgt} outside screen")

    @property
    def tasks(self) -> Tuple[TrialSpec, ...]:
        return tuple(
            TrialSpec(target=t, cfg=self.scan, task_id=i + 1)
            for i, t in enumerate(self.targets)
        )


@dataclass(frozen=True)
class TaskLogRow:
    task_id: int
    completed: bool
    time_s: float
    wrong_selection: bool


def _region_json(r: Optional[Region]) -> Optional[List[int]]:
    return [r.x, r.y, r.w, r.h] if r is not None else None


class SessionEngine:
    """Owns one automaton and one task script; all events arrive in order.

    Not thread-safe by itself: the session loop is the single owner and
    serializes transport input into it.
    """

    def __init__(self, cfg: SessionConfig, emit: Callable[[Dict], None]):
        self.cfg = cfg
        self._emit = emit
        self._seq = 0
        self.t_ms = 0
        self.task_index = 0
        self.task_start_ms = 0
        self.task_log: List[TaskLogRow] = []
        self.outcome = TrialOutcome()
        self.restarts = 0
        self.dwells_in_phase = 0
        self.finished = False
        self.state: ScanState = initial_state(cfg.scan)
        self._announce_task()
        self._send_state()

    # -- message plumbing ---------------------------------------------------

    def _send(self, kind: str, **payload) -> None:
        self._seq += 1
        self._emit({"kind": kind, "seq": self._seq, "t_ms": self.t_ms, **payload})

    def _announce_task(self) -> None:
        spec = self.cfg.tasks[self.task_index]
        self._send("TargetSet", task_id=spec.task_id, target=_region_json(spec.target))

    def _send_state(self) -> None:
        s, cfg = self.state, self.cfg.scan
        spec = self.cfg.tasks[self.task_index]
        highlight_region = None
        direction = None
        if s.phase is Phase.BLOCK:
            highlight_region = _region_json(quadrants(s.active)[s.highlight])
        elif s.phase is Phase.DIRECTION:
            direction = list(cfg.directions[s.highlight])
        elif s.phase is Phase.CURSOR:
            assert s.direction is not None
            direction = list(cfg.directions[s.direction])
        self._send(
            "StateUpdate",
            task_id=spec.task_id,
            target=_region_json(spec.target),
            phase=s.phase.value,
            depth=s.depth,
            highlight=s.highlight,
            active=_region_json(s.active),
            highlight_region=highlight_region,
            direction=direction,
            cursor=list(s.cursor) if s.cursor else None,
            action=s.action,
            actions=list(cfg.actions),
            interval_ms=cfg.scan_interval_ms,
        )

    def _send_metrics(self, final: bool) -> None:
        o = self.outcome
        sa = 100.0 * o.tp / (o.tp + o.fn) if o.tp + o.fn else None
        far = 100.0 * o.fp / (o.tp + o.fp) if o.tp + o.fp else None
        sr = None
        if sa is not None and far is not None and sa + far > 0:
            sr = 100.0 if far == 0 else 100.0 * sa / (sa + far)
        self._send(
            "MetricsReport",
            final=final,
            tp=o.tp,
            fp=o.fp,
            fn=o.fn,
            sa=sa,
            far=far,
            sr=sr,
            avg_time_s=(o.selection_time_s / o.scored) if o.scored else None,
            task_log=[
                {
                    "task_id": r.task_id,
                    "completed": r.completed,
                    "time_s": r.time_s,
                    "wrong_selection": r.wrong_selection,
                }
                for r in self.task_log
            ],
        )

    # -- task flow ----------------------------------------------------------

    def _phase_budget(self) -> int:
        n = {
            Phase.BLOCK: 4,
            Phase.DIRECTION: 8,
            Phase.ACTION: len(self.cfg.scan.actions),
            Phase.CURSOR: 8,  # after pinning, a cursor can only wait
        }[self.state.phase]
        return self.cfg.retry_cycles * n

    def _finish_task(self, verdict: str) -> None:
        spec = self.cfg.tasks[self.task_index]
        elapsed_s = (self.t_ms - self.task_start_ms) / 1000.0
        self.outcome = self.outcome.merged(
            TrialOutcome(
                tp=1 if verdict == "tp" else 0,
                fp=1 if verdict == "fp" else 0,
                fn=1 if verdict == "fn" else 0,
                selection_time_s=elapsed_s,
            )
        )
        self.task_log.append(
            TaskLogRow(
                task_id=spec.task_id,
                completed=verdict == "tp",
                time_s=elapsed_s,
                wrong_selection=verdict == "fp",
            )
        )
        self._send_metrics(final=False)
        if self.task_index + 1 < len(self.cfg.tasks):
            self.task_index += 1
            self.task_start_ms = self.t_ms
            self.restarts = 0
            self._restart_automaton()
        else:
            self.finished = True
            self._send_metrics(final=True)

    def _restart_automaton(self) -> None:
        self.state = initial_state(self.cfg.scan)
        self.dwells_in_phase = 0
        self._announce_task()
        self._send_state()

    # -- event application ----------------------------------------------------

    def advance_to(self, t_ms: int) -> None:
        """Run the highlight clock forward, one dwell boundary at a time."""
        if t_ms < self.t_ms:
            raise ValueError(f"time went backwards: {t_ms} < {self.t_ms}")
        interval = self.cfg.scan.scan_interval_ms
        while not self.finished and self.t_ms < t_ms:
            boundary = self.t_ms + (interval - self.state.elapsed_in_item_ms)
            if boundary > t_ms:
                self.state = tick(self.state, self.cfg.scan, t_ms - self.t_ms)
                self.t_ms = t_ms
                return
            before = self.state
            self.state = tick(self.state, self.cfg.scan, boundary - self.t_ms)
            self.t_ms = boundary
            self.dwells_in_phase += 1
            if self.state != replace(before, elapsed_in_item_ms=self.state.elapsed_in_item_ms):
                self._send_state()
            if self.dwells_in_phase >= self._phase_budget():
                self._finish_task("fn")

    def on_blink(self, t_ms: int) -> None:
        if self.finished:
            return
        self.advance_to(t_ms)
        if self.finished:
            return
        self.state = blink(self.state, self.cfg.scan)
        self.dwells_in_phase = 0
        self._send_state()
        if not self.state.done:
            return
        target = self.cfg.tasks[self.task_index].target
        assert self.state.cursor is not None
        if self.state.action == "cancel":
            self.restarts += 1
            if self.restarts > self.cfg.retry_cycles:
                self._finish_task("fn")
            else:
                self._restart_automaton()
        elif self.state.action == "click" and target.contains_point(*self.state.cursor):
            self._finish_task("tp")
        else:
            self._finish_task("fp")

    def finalize(self) -> MetricsSummary:
        """Close the session; an open task stays unscored."""
        if not self.finished:
            self.finished = True
            self._send_metrics(final=True)
        o = self.outcome
        sa = 100.0 * o.tp / (o.tp + o.fn) if o.tp + o.fn else 0.0
        far = 100.0 * o.fp / (o.tp + o.fp) if o.tp + o.fp else 0.0
        if far == 0 and sa > 0:
            sr = 100.0
        elif sa + far > 0:
            sr = 100.0 * sa / (sa + far)
        else:
            sr = 0.0
        return MetricsSummary(
            sa_pct=sa,
            far_pct=far,
            sr_pct=sr,
            avg_selection_time_s=(o.selection_time_s / o.scored) if o.scored else None,
        )


class QueueTransport:
    """In-process transport: feed client messages in, collect engine output."""

    def __init__(self, inbound: Optional[Sequence[Dict]] = None):
        self._in: "queue.Queue[Optional[Dict]]" = queue.Queue()
        self.sent: List[Dict] = []
        for msg in inbound or ():
            self._in.put(msg)
        if inbound is not None:
            self._in.put(None)  # pre-scripted transports end their stream

    def push(self, msg: Optional[Dict]) -> None:
        self._in.put(msg)

    def send(self, msg: Dict) -> None:
        self.sent.append(msg)

    def recv(self, timeout: Optional[float] = None) -> Optional[Dict]:
        try:
            return self._in.get(timeout=timeout)
        except queue.Empty:
            raise TimeoutError from None


def _capture_events(cfg: SessionConfig) -> Tuple[List[int], int]:
    """Blink onsets and end-of-input time from a .blk capture file."""
    from .linkframe import read_capture
    from .blinksense import detect_blinks

    samples, _ = read_capture(cfg.capture_path)
    assert cfg.thresholds is not None
    events = detect_blinks(samples, cfg.thresholds)
    end = samples[-1].t if samples else 0
    return [e.onset_t for e in events], end


def run_session(cfg: SessionConfig, transport) -> MetricsSummary:
    """Drive a full session over a transport and return the final summary.

    In virtual-time mode every event must carry ``t_ms``; the engine clock
    advances only with inputs.  With ``cfg.source == "capture"`` the capture
    file is decoded up front and the transport is only used for output.
    """
    engine = SessionEngine(cfg, emit=lambda m: transport.send(m))

    if cfg.source == "capture":
        onsets, end = _capture_events(cfg)
        for t in onsets:
            if engine.finished:
                break
            engine.on_blink(t)
        if not engine.finished:
            engine.advance_to(end)
        return engine.finalize()

    decoder = FrameDecoder()
    detector = (
        StreamingBlinkDetector(cfg.thresholds) if cfg.thresholds is not None else None
    )
    frame_t = 0

    start_wall = time.monotonic()

    def wall_ms() -> int:
        return int((time.monotonic() - start_wall) * 1000)

    while not engine.finished:
        if cfg.virtual_time:
            try:
                msg = transport.recv(timeout=None)
            except TimeoutError:  # pragma: no cover - blocking recv
                continue
        else:
            interval = cfg.scan.scan_interval_ms
            now = wall_ms()
            boundary = engine.t_ms + (interval - engine.state.elapsed_in_item_ms)
            wait_s = max(0.0, (boundary - now) / 1000.0)
            try:
                msg = transport.recv(timeout=wait_s)
            except TimeoutError:
                engine.advance_to(max(boundary, wall_ms()))
                continue
        if msg is None:
            engine.finalize()
            break
        kind = msg.get("kind")
        if kind == "BlinkIn":
            t = int(msg["t_ms"]) if cfg.virtual_time else wall_ms()
            if t < engine.t_ms:
                t = engine.t_ms  # stale client stamp: apply now
            engine.on_blink(t)
        elif kind == "SampleIn":
            if detector is None:
                raise ConfigInvalid("SampleIn without signal thresholds")
            for frame in decoder.feed(bytes.fromhex(msg["data"])):
                frame_t += frame.dt
                ev = detector.feed(SensorSample(t=frame_t, v=frame.sample))
                if ev is not None and not engine.finished:
                    engine.on_blink(ev.onset_t)
        elif kind == "SessionControl":
            op = msg.get("op")
            if op == "end_of_input":
                if not engine.finished:
                    engine.advance_to(int(msg["t_ms"]))
                engine.finalize()
                break
            if op == "finish":
                engine.finalize()
                break
        else:
            raise ValueError(f"unknown client message kind {kind!r}")

    return engine.finalize()
