"""Monte-Carlo user simulation, scan-interval sweeps and trace replay.

A synthetic user steers the block-scanning automaton toward a target region.
The model has a gaussian reaction time (slow reactions spill into the next
highlight and select the wrong item), a per-dwell miss probability, and a
premature-blink probability on wrong highlights.  All time is virtual
milliseconds; a fixed seed reproduces every trial, trace and sweep exactly.

Trace files are line-delimited: a header line carrying a config hash plus
the full replay configuration, then one ``t_ms<TAB>kind`` record per event,
closed by an ``end`` record (so truncation is detectable).
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from random import Random
from typing import List, Optional, Sequence, Tuple

from .blinksense import ADC_MAX, SensorSample
from .blockscan import (
    Phase,
    Region,
    ScanConfig,
    ScanState,
    blink,
    initial_state,
    quadrants,
    region_center,
    tick,
)
from .scanmetrics import TrialOutcome, summarize

__all__ = [
    "UserModel",
    "TrialSpec",
    "TraceRecord",
    "BlinkTrace",
    "MalformedTrace",
    "run_trial",
    "drive_automaton",
    "replay_trial",
    "record_trace",
    "read_trace",
    "replay_trace",
    "SweepRow",
    "sweep",
    "sweep_csv_lines",
    "random_target",
    "synthesize_waveform",
]

DEFAULT_RETRY_CYCLES = 3
MAX_DWELLS = 10_000  # hard stop against runaway simulations


class MalformedTrace(ValueError):
    """Trace file cannot be parsed; message carries the line number."""


@dataclass(frozen=True)
class UserModel:
    """Parametric stand-in for a human operator."""

    reaction_mean_ms: float = 300.0
    reaction_sd_ms: float = 100.0
    miss_prob: float = 0.0
    premature_prob: float = 0.0
    involuntary_rate_hz: float = 0.0
    rng_seed: int = 0
    cancel_on_wrong_chain: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.miss_prob <= 1.0:
            raise ValueError("miss_prob must be in [0, 1]")
        if not 0.0 <= self.premature_prob <= 1.0:
            raise ValueError("premature_prob must be in [0, 1]")
        if self.reaction_mean_ms < 0 or self.reaction_sd_ms < 0:
            raise ValueError("reaction distribution must be non-negative")
        if self.involuntary_rate_hz < 0:
            raise ValueError("involuntary_rate_hz must be non-negative")


@dataclass(frozen=True)
class TrialSpec:
    target: Region
    cfg: ScanConfig
    task_id: int = 1

    def __post_init__(self) -> None:
        if not self.cfg.screen.contains_region(self.target) or self.target.area == 0:
            raise ValueError("target must be a non-empty region inside the screen")
        if self.task_id < 1:
            raise ValueError("task_id must be >= 1")


@dataclass(frozen=True)
class TraceRecord:
    t_ms: int
    kind: str  # "blink", "tick" (annotation) or "end"


@dataclass(frozen=True)
class BlinkTrace:
    records: Tuple[TraceRecord, ...]

    def __post_init__(self) -> None:
        last = -1
        for rec in self.records:
            if rec.t_ms < last:
                raise ValueError("trace times must not decrease")
            last = rec.t_ms
        prev_blink = None
        for rec in self.records:
            if rec.kind == "blink":
                if prev_blink is not None and rec.t_ms <= prev_blink:
                    raise ValueError("blink times must strictly increase")
                prev_blink = rec.t_ms

    @property
    def blink_times(self) -> List[int]:
        return [r.t_ms for r in self.records if r.kind == "blink"]

    @property
    def end_ms(self) -> int:
        return self.records[-1].t_ms if self.records else 0


# ---------------------------------------------------------------------------
# Synthetic user policy

def _quadrant_aim(active: Region, target: Region) -> int:
    """Quadrant to pick in the block phase.

    The quadrant containing the target center when the chain is still
    correct, else the quadrant whose center lies nearest the target center.
    """
    quads = quadrants(active)
    tc = region_center(target)
    for idx, q in enumerate(quads):
        if q.contains_point(*tc):
            return idx
    dist = [
        (region_center(q)[0] - tc[0]) ** 2 + (region_center(q)[1] - tc[1]) ** 2
        if q.area
        else math.inf
        for q in quads
    ]
    return dist.index(min(dist))


def _cursor_positions(cursor: Tuple[int, int], d: Tuple[int, int],
                      active: Region, step: int) -> List[Tuple[int, int]]:
    out = [cursor]
    cx, cy = cursor
    while True:
        nx = min(max(cx + d[0] * step, active.x), active.x + active.w - 1)
        ny = min(max(cy + d[1] * step, active.y), active.y + active.h - 1)
        if (nx, ny) == (cx, cy):
            return out
        cx, cy = nx, ny
        out.append((cx, cy))


def _region_d2(p: Tuple[int, int], target: Region) -> int:
    """Squared pixel distance from a point to the nearest target pixel."""
    dx = max(target.x - p[0], 0, p[0] - (target.x + target.w - 1))
    dy = max(target.y - p[1], 0, p[1] - (target.y + target.h - 1))
    return dx * dx + dy * dy


def _direction_aim(cfg: ScanConfig, active: Region, cursor: Tuple[int, int],
                   target: Region) -> int:
    """Direction whose path enters the target soonest; nearest miss otherwise."""
    if target.contains_point(*cursor):
        return 0
    best_idx, best_steps = None, None
    fallback_idx, fallback_d2 = 0, math.inf
    for idx, d in enumerate(cfg.directions):
        path = _cursor_positions(cursor, d, active, cfg.step_px)
        for steps, p in enumerate(path):
            if steps and target.contains_point(*p):
                if best_steps is None or steps < best_steps:
                    best_idx, best_steps = idx, steps
                break
        d2 = min(_region_d2(p, target) for p in path)
        if d2 < fallback_d2:
            fallback_idx, fallback_d2 = idx, d2
    return best_idx if best_idx is not None else fallback_idx


def _cursor_stop_step(cfg: ScanConfig, active: Region, cursor: Tuple[int, int],
                      direction: Tuple[int, int], target: Region) -> int:
    """Moves to let the cursor make before stopping it: first step inside the
    target, or the closest approach when the path never enters it."""
    path = _cursor_positions(cursor, direction, active, cfg.step_px)
    for steps, p in enumerate(path):
        if target.contains_point(*p):
            return steps
    d2 = [_region_d2(p, target) for p in path]
    return d2.index(min(d2))


def _wanted_index(state: ScanState, cfg: ScanConfig, target: Region,
                  user: UserModel) -> int:
    wrong_chain = not state.active.contains_point(*region_center(target))
    if state.phase is Phase.BLOCK:
        return _quadrant_aim(state.active, target)
    if state.phase is Phase.DIRECTION:
        assert state.cursor is not None
        return _direction_aim(cfg, state.active, state.cursor, target)
    assert state.phase is Phase.ACTION
    if wrong_chain and user.cancel_on_wrong_chain and "cancel" in cfg.actions:
        return cfg.actions.index("cancel")
    return cfg.actions.index("click") if "click" in cfg.actions else 0


def _score_done(state: ScanState, target: Region) -> str:
    assert state.phase is Phase.DONE and state.cursor is not None
    if state.action == "cancel":
        return "cancel"
    if state.action == "click" and target.contains_point(*state.cursor):
        return "tp"
    return "fp"


def run_trial(
    spec: TrialSpec,
    user: UserModel,
    rng: Optional[Random] = None,
    retry_cycles: int = DEFAULT_RETRY_CYCLES,
) -> Tuple[TrialOutcome, BlinkTrace]:
    """Simulate one target acquisition.

    Returns the scored outcome (exactly one of tp/fp/fn is 1) and a trace
    that replays to the identical outcome.
    """
    cfg, target = spec.cfg, spec.target
    rng = rng if rng is not None else Random(user.rng_seed)
    interval = cfg.scan_interval_ms

    def reaction() -> int:
        return max(1, round(rng.gauss(user.reaction_mean_ms, user.reaction_sd_ms)))

    state = initial_state(cfg)
    t = 0
    pending: Optional[int] = None
    records: List[TraceRecord] = []
    dwells_in_phase = 0
    restarts = 0
    cursor_stop: Optional[int] = None  # planned moves before the stop blink
    moves_done = 0
    result: Optional[str] = None

    for _ in range(MAX_DWELLS):
        if state.phase is Phase.CURSOR:
            assert state.cursor is not None and state.direction is not None
            if cursor_stop is None:
                cursor_stop = _cursor_stop_step(
                    cfg, state.active, state.cursor,
                    cfg.directions[state.direction], target,
                )
                moves_done = 0
            if pending is None and moves_done >= cursor_stop:
                pending = t + reaction()
        else:
            n_items = 4 if state.phase is Phase.BLOCK else (
                8 if state.phase is Phase.DIRECTION else len(cfg.actions)
            )
            if pending is None:
                if dwells_in_phase >= retry_cycles * n_items:
                    result = "fn"
                    break
                want = _wanted_index(state, cfg, target, user)
                if state.highlight == want:
                    if rng.random() >= user.miss_prob:
                        pending = t + reaction()
                elif rng.random() < user.premature_prob:
                    pending = t + reaction()

        dwell_end = t + (interval - state.elapsed_in_item_ms)
        if pending is not None and pending <= dwell_end:
            state = tick(state, cfg, pending - t)
            t = pending
            pending = None
            state = blink(state, cfg)
            records.append(TraceRecord(t_ms=t, kind="blink"))
            dwells_in_phase = 0
            cursor_stop = None
            if state.done:
                result = _score_done(state, target)
                if result == "cancel":
                    restarts += 1
                    if restarts > retry_cycles:
                        result = "fn"
                        break
                    state = initial_state(cfg)
                    result = None
                else:
                    break
        else:
            state = tick(state, cfg, dwell_end - t)
            t = dwell_end
            if state.phase is Phase.CURSOR:
                moves_done += 1
            else:
                dwells_in_phase += 1
    else:
        result = "fn"

    if result is None:  # budget break out of cursor wait; defensive
        result = "fn"
    records.append(TraceRecord(t_ms=t, kind="end"))
    outcome = TrialOutcome(
        tp=1 if result == "tp" else 0,
        fp=1 if result == "fp" else 0,
        fn=1 if result == "fn" else 0,
        selection_time_s=t / 1000.0,
    )
    return outcome, BlinkTrace(records=tuple(records))


def drive_automaton(
    cfg: ScanConfig,
    target: Region,
    blink_times: Sequence[int],
    end_ms: Optional[int] = None,
    retry_cycles: int = DEFAULT_RETRY_CYCLES,
) -> TrialOutcome:
    """Feed a blink schedule through the automaton and score the result.

    Shared by trace replay and sensor-capture replay so both input paths
    agree bit-for-bit.  Cancel selections restart the scan (bounded by
    retry_cycles); blinks after completion are ignored.
    """
    state = initial_state(cfg)
    now = 0
    restarts = 0
    result: Optional[str] = None
    for t in blink_times:
        if t < now:
            raise ValueError("blink times must not decrease")
        if result is not None:
            break
        state = tick(state, cfg, t - now)
        now = t
        state = blink(state, cfg)
        if state.done:
            verdict = _score_done(state, target)
            if verdict == "cancel":
                restarts += 1
                if restarts > retry_cycles:
                    result = "fn"
                else:
                    state = initial_state(cfg)
            else:
                result = verdict
    if result is None:
        result = "fn"
    if result == "fn" and end_ms is not None:
        now = max(now, end_ms)
    return TrialOutcome(
        tp=1 if result == "tp" else 0,
        fp=1 if result == "fp" else 0,
        fn=1 if result == "fn" else 0,
        selection_time_s=now / 1000.0,
    )


def replay_trial(spec: TrialSpec, trace: BlinkTrace,
                 retry_cycles: int = DEFAULT_RETRY_CYCLES) -> TrialOutcome:
    """Replay a recorded trace; reproduces run_trial's outcome exactly."""
    return drive_automaton(
        spec.cfg,
        spec.target,
        trace.blink_times,
        end_ms=trace.end_ms,
        retry_cycles=retry_cycles,
    )


# ---------------------------------------------------------------------------
# Trace files

_TRACE_MAGIC = "#scantrace"
_TRACE_VERSION = "v1"


def _spec_payload(spec: TrialSpec) -> dict:
    cfg = spec.cfg
    return {
        "screen": [cfg.screen.x, cfg.screen.y, cfg.screen.w, cfg.screen.h],
        "interval_ms": cfg.scan_interval_ms,
        "max_depth": cfg.max_depth,
        "step_px": cfg.step_px,
        "directions": [list(d) for d in cfg.directions],
        "actions": list(cfg.actions),
        "target": [spec.target.x, spec.target.y, spec.target.w, spec.target.h],
        "task_id": spec.task_id,
    }


def _payload_spec(payload: dict) -> TrialSpec:
    cfg = ScanConfig(
        screen=Region(*payload["screen"]),
        scan_interval_ms=payload["interval_ms"],
        max_depth=payload["max_depth"],
        step_px=payload["step_px"],
        directions=tuple(tuple(d) for d in payload["directions"]),
        actions=tuple(payload["actions"]),
    )
    return TrialSpec(
        target=Region(*payload["target"]), cfg=cfg, task_id=payload["task_id"]
    )


def _config_hash(payload: dict) -> str:
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def record_trace(path, spec: TrialSpec, trace: BlinkTrace) -> None:
    payload = _spec_payload(spec)
    lines = [
        "\t".join(
            (_TRACE_MAGIC, _TRACE_VERSION, _config_hash(payload), json.dumps(payload))
        )
    ]
    lines += [f"{r.t_ms}\t{r.kind}" for r in trace.records]
    if not trace.records or trace.records[-1].kind != "end":
        raise ValueError("trace must close with an end record")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_trace(path) -> Tuple[TrialSpec, BlinkTrace]:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MalformedTrace("line 1: empty trace file")
    head = lines[0].split("\t")
    if len(head) != 4 or head[0] != _TRACE_MAGIC or head[1] != _TRACE_VERSION:
        raise MalformedTrace("line 1: bad trace header")
    try:
        payload = json.loads(head[3])
        spec = _payload_spec(payload)
    except (ValueError, KeyError, TypeError) as exc:
        raise MalformedTrace(f"line 1: bad config payload ({exc})") from exc
    if _config_hash(payload) != head[2]:
        raise MalformedTrace("line 1: config hash mismatch")

    records: List[TraceRecord] = []
    closed = False
    for no, line in enumerate(lines[1:], start=2):
        if closed:
            raise MalformedTrace(f"line {no}: record after end")
        parts = line.split("\t")
        if len(parts) != 2:
            raise MalformedTrace(f"line {no}: expected 't_ms<TAB>kind'")
        t_str, kind = parts
        if kind not in ("blink", "tick", "end"):
            raise MalformedTrace(f"line {no}: unknown record kind {kind!r}")
        try:
            t_ms = int(t_str)
        except ValueError:
            raise MalformedTrace(f"line {no}: bad timestamp {t_str!r}") from None
        if t_ms < 0:
            raise MalformedTrace(f"line {no}: negative timestamp")
        records.append(TraceRecord(t_ms=t_ms, kind=kind))
        closed = kind == "end"
    if not closed:
        raise MalformedTrace(f"line {len(lines) + 1}: missing end record (truncated?)")
    try:
        trace = BlinkTrace(records=tuple(records))
    except ValueError as exc:
        raise MalformedTrace(f"line 2: {exc}") from exc
    return spec, trace


def replay_trace(path, retry_cycles: int = DEFAULT_RETRY_CYCLES) -> TrialOutcome:
    spec, trace = read_trace(path)
    return replay_trial(spec, trace, retry_cycles=retry_cycles)


# ---------------------------------------------------------------------------
# Sweeps

@dataclass(frozen=True)
class SweepRow:
    interval_ms: int
    n: int
    sa_pct: float
    far_pct: float
    sr_pct: float
    avg_time_s: float


def random_target(rng: Random, screen: Region, min_w: int, min_h: int,
                  max_frac: float = 0.25) -> Region:
    """Random target at least (min_w, min_h), at most a screen fraction."""
    max_w = max(min_w, int(screen.w * max_frac))
    max_h = max(min_h, int(screen.h * max_frac))
    w = rng.randint(min_w, max_w)
    h = rng.randint(min_h, max_h)
    x = screen.x + rng.randint(0, screen.w - w)
    y = screen.y + rng.randint(0, screen.h - h)
    return Region(x, y, w, h)


def sweep(
    intervals_ms: Sequence[int],
    user: UserModel,
    n_trials: int,
    screen: Region = Region(0, 0, 1024, 1024),
    max_depth: int = 4,
    step_px: int = 4,
    retry_cycles: int = DEFAULT_RETRY_CYCLES,
) -> List[SweepRow]:
    """Run n_trials per scan interval and aggregate SA/FAR/SR per interval.

    Trial i draws its own rng stream from (rng_seed, i), so intervals see
    paired trials and a fixed seed reproduces the whole table.  The seed is
    shifted before mixing in the index: a plain xor would only permute the
    trial set between small seeds, leaving aggregates identical.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    block_w = -(-screen.w // (2 ** max_depth))  # ceil
    block_h = -(-screen.h // (2 ** max_depth))
    rows = []
    for interval in intervals_ms:
        cfg = ScanConfig(
            screen=screen,
            scan_interval_ms=interval,
            max_depth=max_depth,
            step_px=step_px,
        )
        total = TrialOutcome()
        for i in range(n_trials):
            rng = Random((user.rng_seed << 32) ^ i)
            target = random_target(rng, screen, block_w, block_h)
            spec = TrialSpec(target=target, cfg=cfg, task_id=(i % 10) + 1)
            outcome, _ = run_trial(spec, user, rng=rng, retry_cycles=retry_cycles)
            total = total.merged(outcome)
        summary = summarize(total)
        rows.append(
            SweepRow(
                interval_ms=interval,
                n=n_trials,
                sa_pct=summary.sa_pct,
                far_pct=summary.far_pct,
                sr_pct=summary.sr_pct,
                avg_time_s=summary.avg_selection_time_s or 0.0,
            )
        )
    return rows


def sweep_csv_lines(rows: Sequence[SweepRow]) -> List[str]:
    lines = ["interval_ms,n,sa,far,sr,avg_time_s"]
    for r in rows:
        lines.append(
            f"{r.interval_ms},{r.n},{r.sa_pct:.4f},{r.far_pct:.4f},"
            f"{r.sr_pct:.4f},{r.avg_time_s:.4f}"
        )
    return lines


# ---------------------------------------------------------------------------
# Sensor-waveform synthesis (scripted blinks -> raw ADC samples)

def synthesize_waveform(
    blink_times: Sequence[int],
    end_ms: int,
    sample_period_ms: int = 10,
    blink_duration_ms: int = 120,
    base_level: int = 700,
    low_level: int = 180,
    garbage_level: int = 500,
    noise: int = 4,
    involuntary_times: Sequence[int] = (),
    involuntary_duration_ms: int = 30,
    garbage_times: Sequence[int] = (),
    garbage_duration_ms: int = 150,
    rng: Optional[Random] = None,
) -> List[SensorSample]:
    """Render a blink schedule as a raw ADC sample stream.

    Blink onsets must be aligned to the sample grid so detection recovers
    them exactly.  Involuntary dips drop to the blink band but stay shorter
    than a voluntary blink; garbage dips sit in the mid band at any length.
    """
    rng = rng if rng is not None else Random(0)
    for t in blink_times:
        if t % sample_period_ms:
            raise ValueError(f"blink time {t} not aligned to {sample_period_ms} ms grid")

    def spans(times: Sequence[int], dur: int) -> List[Tuple[int, int]]:
        return [(t, t + dur) for t in times]

    blink_spans = spans(blink_times, blink_duration_ms)
    invol_spans = spans(involuntary_times, involuntary_duration_ms)
    garbage_spans = spans(garbage_times, garbage_duration_ms)

    samples = []
    for t in range(0, end_ms + sample_period_ms, sample_period_ms):
        if any(a <= t < b for a, b in blink_spans):
            level = low_level
        elif any(a <= t < b for a, b in invol_spans):
            level = low_level
        elif any(a <= t < b for a, b in garbage_spans):
            level = garbage_level
        else:
            level = base_level
        v = min(ADC_MAX, max(0, level + rng.randint(-noise, noise)))
        samples.append(SensorSample(t=t, v=v))
    return samples
