"""Block-scanning automaton.

The automaton sequentially highlights items on a virtual screen; the user
triggers a switch (a blink) while the wanted item is lit.  Selection walks
through four phases:

1. block scanning   - the active area is repeatedly quartered; each blink
                      picks the highlighted quadrant (depth levels),
2. direction scan   - the eight movement directions are cycled,
3. cursor movement  - the cursor steps along the chosen direction until the
                      next blink freezes it,
4. action menu      - the configured actions cycle; the final blink selects
                      one and the automaton is done.

All regions use half-open pixel rectangles: a Region covers pixel columns
``x .. x+w-1`` and rows ``y .. y+h-1``.  State transitions are pure: ``tick``
and ``blink`` return new ``ScanState`` values and never mutate.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence, Tuple

__all__ = [
    "Region",
    "ScanConfig",
    "ScanState",
    "Phase",
    "DIRECTIONS",
    "DIRECTION_NAMES",
    "DEFAULT_ACTIONS",
    "BlinkAfterDone",
    "TargetUnreachable",
    "ConfigInvalid",
    "quadrants",
    "region_center",
    "initial_state",
    "tick",
    "blink",
    "ideal_blink_times",
    "blinks_to_acquire",
]

# Direction cycle order: up, up-left, left, left-down, down, down-right,
# right, right-up.  Screen coordinates, origin top-left, y grows downward.
DIRECTIONS: Tuple[Tuple[int, int], ...] = (
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
)

DIRECTION_NAMES: Tuple[str, ...] = (
    "up",
    "up-left",
    "left",
    "down-left",
    "down",
    "down-right",
    "right",
    "up-right",
)

DEFAULT_ACTIONS: Tuple[str, ...] = ("click", "copy", "cut", "paste", "cancel")


class ConfigInvalid(ValueError):
    """Raised when a ScanConfig violates its invariants."""


class BlinkAfterDone(RuntimeError):
    """Raised when a blink arrives after the automaton has completed."""


class TargetUnreachable(ValueError):
    """Raised when the ideal planner cannot steer the cursor into a target."""


@dataclass(frozen=True)
class Region:
    """Axis-aligned pixel rectangle, half-open on the right and bottom."""

    x: int
    y: int
    w: int
    h: int

    def contains_point(self, px: int, py: int) -> bool:
        return self.x <= px < self.x + self.w and self.y <= py < self.y + self.h

    def contains_region(self, other: "Region") -> bool:
        if other.w == 0 or other.h == 0:
            return True  # empty rectangle is a subset of anything
        return (
            other.x >= self.x
            and other.y >= self.y
            and other.x + other.w <= self.x + self.w
            and other.y + other.h <= self.y + self.h
        )

    @property
    def area(self) -> int:
        return self.w * self.h


def quadrants(r: Region) -> Tuple[Region, Region, Region, Region]:
    """Split a region into its four scan quadrants: TL, TR, BL, BR.

    Odd sizes split floor/ceil (first half smaller) on both axes, so the four
    children always tile the parent exactly, gap- and overlap-free.  Children
    of a 1-pixel-wide or -tall parent can be degenerate (zero area).
    """
    wl = r.w // 2
    wr = r.w - wl
    ht = r.h // 2
    hb = r.h - ht
    return (
        Region(r.x, r.y, wl, ht),
        Region(r.x + wl, r.y, wr, ht),
        Region(r.x, r.y + ht, wl, hb),
        Region(r.x + wl, r.y + ht, wr, hb),
    )


def region_center(r: Region) -> Tuple[int, int]:
    """Integer center pixel; lies inside the region for any w, h >= 1."""
    return (r.x + r.w // 2, r.y + r.h // 2)


@dataclass(frozen=True)
class ScanConfig:
    screen: Region
    scan_interval_ms: int = 1000
    max_depth: int = 4
    directions: Tuple[Tuple[int, int], ...] = DIRECTIONS
    step_px: int = 4
    actions: Tuple[str, ...] = DEFAULT_ACTIONS

    def __post_init__(self) -> None:
        if self.screen.w < 1 or self.screen.h < 1:
            raise ConfigInvalid("screen must be at least 1x1")
        if self.scan_interval_ms <= 0:
            raise ConfigInvalid("scan_interval_ms must be positive")
        if self.max_depth < 1:
            raise ConfigInvalid("max_depth must be >= 1")
        if len(self.directions) != 8 or len(set(self.directions)) != 8:
            raise ConfigInvalid("directions must be 8 distinct offsets")
        if self.step_px < 1:
            raise ConfigInvalid("step_px must be >= 1")
        if not self.actions:
            raise ConfigInvalid("actions must not be empty")


class Phase(Enum):
    BLOCK = "block"
    DIRECTION = "direction"
    CURSOR = "cursor"
    ACTION = "action"
    DONE = "done"


@dataclass(frozen=True)
class ScanState:
    phase: Phase
    active: Region
    depth: int = 1
    highlight: int = 0
    direction: Optional[int] = None
    cursor: Optional[Tuple[int, int]] = None
    action: Optional[str] = None
    elapsed_in_item_ms: int = 0

    @property
    def done(self) -> bool:
        return self.phase is Phase.DONE


def initial_state(cfg: ScanConfig) -> ScanState:
    """Fresh automaton: block phase, depth 1, top-left quadrant highlighted."""
    return ScanState(phase=Phase.BLOCK, active=cfg.screen)


def _highlight_count(state: ScanState, cfg: ScanConfig) -> int:
    if state.phase is Phase.BLOCK:
        return 4
    if state.phase is Phase.DIRECTION:
        return 8
    if state.phase is Phase.ACTION:
        return len(cfg.actions)
    raise AssertionError(f"no highlight cycle in phase {state.phase}")


def _clamp_cursor(p: Tuple[int, int], active: Region) -> Tuple[int, int]:
    x = min(max(p[0], active.x), active.x + active.w - 1)
    y = min(max(p[1], active.y), active.y + active.h - 1)
    return (x, y)


def tick(state: ScanState, cfg: ScanConfig, dt_ms: int) -> ScanState:
    """Advance virtual time by dt_ms.

    Every full scan interval advances the highlight (block/direction/action
    phases) or moves the cursor one step (cursor phase).  Done is absorbing.
    Splitting a dt across several calls is equivalent to one big call.
    """
    if dt_ms < 0:
        raise ValueError("dt_ms must be non-negative")
    if state.done or dt_ms == 0:
        return state

    total = state.elapsed_in_item_ms + dt_ms
    advances, remainder = divmod(total, cfg.scan_interval_ms)

    if state.phase is Phase.CURSOR:
        assert state.cursor is not None and state.direction is not None
        dx, dy = cfg.directions[state.direction]
        cx, cy = state.cursor
        for _ in range(advances):
            nx, ny = _clamp_cursor((cx + dx * cfg.step_px, cy + dy * cfg.step_px), state.active)
            if (nx, ny) == (cx, cy):
                break  # pinned at the boundary; further steps are no-ops
            cx, cy = nx, ny
        return replace(state, cursor=(cx, cy), elapsed_in_item_ms=remainder)

    if advances == 0:
        return replace(state, elapsed_in_item_ms=remainder)
    n = _highlight_count(state, cfg)
    return replace(
        state,
        highlight=(state.highlight + advances) % n,
        elapsed_in_item_ms=remainder,
    )


def blink(state: ScanState, cfg: ScanConfig) -> ScanState:
    """Select the currently highlighted item and move to the next phase."""
    if state.done:
        raise BlinkAfterDone("automaton already completed a selection")

    if state.phase is Phase.BLOCK:
        chosen = quadrants(state.active)[state.highlight]
        if state.depth < cfg.max_depth:
            return ScanState(phase=Phase.BLOCK, active=chosen, depth=state.depth + 1)
        return ScanState(
            phase=Phase.DIRECTION,
            active=chosen,
            depth=state.depth,
            cursor=region_center(chosen),
        )

    if state.phase is Phase.DIRECTION:
        return replace(
            state,
            phase=Phase.CURSOR,
            direction=state.highlight,
            highlight=0,
            elapsed_in_item_ms=0,
        )

    if state.phase is Phase.CURSOR:
        return replace(state, phase=Phase.ACTION, highlight=0, elapsed_in_item_ms=0)

    assert state.phase is Phase.ACTION
    return replace(
        state,
        phase=Phase.DONE,
        action=cfg.actions[state.highlight],
        highlight=0,
        elapsed_in_item_ms=0,
    )


# ---------------------------------------------------------------------------
# Ideal-user planning

def _descend_chain(cfg: ScanConfig, point: Tuple[int, int]) -> list[int]:
    """Quadrant indices that keep `point` inside the active region, per depth."""
    active = cfg.screen
    chain = []
    for _ in range(cfg.max_depth):
        quads = quadrants(active)
        for idx, q in enumerate(quads):
            if q.contains_point(*point):
                chain.append(idx)
                active = q
                break
        else:  # pragma: no cover - tiling guarantees containment
            raise AssertionError("point not covered by any quadrant")
    return chain


def _cursor_path(start: Tuple[int, int], direction: Tuple[int, int], active: Region,
                 step_px: int) -> list[Tuple[int, int]]:
    """All cursor positions along a direction until pinned at the boundary."""
    path = [start]
    cx, cy = start
    dx, dy = direction
    while True:
        nx, ny = _clamp_cursor((cx + dx * step_px, cy + dy * step_px), active)
        if (nx, ny) == (cx, cy):
            return path
        cx, cy = nx, ny
        path.append((cx, cy))


def _plan_direction(cfg: ScanConfig, active: Region, cursor: Tuple[int, int],
                    target: Region) -> Tuple[int, int]:
    """Pick (direction index, steps) so the cursor ends inside the target.

    Prefers zero movement when the cursor already starts inside.
    """
    if target.contains_point(*cursor):
        return 0, 0
    best = None
    for idx, d in enumerate(cfg.directions):
        path = _cursor_path(cursor, d, active, cfg.step_px)
        for steps, p in enumerate(path):
            if steps and target.contains_point(*p):
                if best is None or steps < best[1]:
                    best = (idx, steps)
                break
    if best is None:
        raise TargetUnreachable(
            f"no direction reaches target {target} from {cursor} within {active}"
        )
    return best


def ideal_blink_times(cfg: ScanConfig, target: Region,
                      reaction_ms: int = 0) -> list[int]:
    """Blink schedule of a perfectly timed user acquiring `target` with click.

    Each blink fires `reaction_ms` after the wanted item's dwell begins
    (reaction_ms must stay below the scan interval).  The returned times drive
    tick/blink replay to Done("click", p) with p inside the target.
    """
    if not (0 <= reaction_ms < cfg.scan_interval_ms):
        raise ValueError("reaction_ms must be within one scan interval")
    if not cfg.screen.contains_region(target) or target.area == 0:
        raise ValueError("target must be a non-empty region inside the screen")

    interval = cfg.scan_interval_ms
    chain = _descend_chain(cfg, region_center(target))
    times: list[int] = []
    t = 0

    # Each blink resets the cycle, so the next wanted index costs
    # index * interval of waiting from the previous blink instant.
    for want in chain:
        t += want * interval + reaction_ms
        times.append(t)

    # direction phase: cursor sits at the center of the final block
    final_block = cfg.screen
    for idx in chain:
        final_block = quadrants(final_block)[idx]
    cursor = region_center(final_block)
    dir_idx, steps = _plan_direction(cfg, final_block, cursor, target)

    t += dir_idx * interval + reaction_ms
    times.append(t)

    # cursor phase: wait `steps` moves, then stop
    t += steps * interval + reaction_ms
    times.append(t)

    # action menu: "click" is index 0
    click_idx = cfg.actions.index("click") if "click" in cfg.actions else 0
    t += click_idx * interval + reaction_ms
    times.append(t)
    return times


def blinks_to_acquire(target: Region, cfg: ScanConfig) -> int:
    """Minimum blinks for an ideal user to click inside `target`.

    Simulates the automaton against the ideal schedule and verifies the run
    lands a click inside the target; the count is max_depth (descend) + 1
    (direction) + 1 (stop) + 1 (action).
    """
    times = ideal_blink_times(cfg, target)
    state = initial_state(cfg)
    now = 0
    for t in times:
        state = tick(state, cfg, t - now)
        state = blink(state, cfg)
        now = t
    if not state.done or state.action != "click":
        raise TargetUnreachable("ideal schedule did not produce a click")
    assert state.cursor is not None
    if not target.contains_point(*state.cursor):
        raise TargetUnreachable(f"ideal click at {state.cursor} missed {target}")
    return len(times)
