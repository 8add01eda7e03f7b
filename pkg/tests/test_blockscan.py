"""Scanning-automaton tests: geometry oracles, phase flow, acquisition."""
from __future__ import annotations

from random import Random

import pytest

from blinkscan.blockscan import (
    DIRECTIONS,
    BlinkAfterDone,
    Phase,
    Region,
    ScanConfig,
    TargetUnreachable,
    blink,
    blinks_to_acquire,
    ideal_blink_times,
    initial_state,
    quadrants,
    region_center,
    tick,
)


def covered_pixels(r: Region) -> set:
    return {(x, y) for x in range(r.x, r.x + r.w) for y in range(r.y, r.y + r.h)}


def assert_exact_tiling(parent: Region) -> None:
    """Brute-force oracle: children cover every parent pixel exactly once."""
    quads = quadrants(parent)
    seen: dict = {}
    for q in quads:
        for px in covered_pixels(q):
            assert px not in seen, f"overlap at {px} in {parent}"
            seen[px] = True
    assert set(seen) == covered_pixels(parent), f"gap in {parent}"


class TestGeometry:
    def test_tiling_exhaustive_small_sizes(self):
        for w in range(1, 51):
            for h in range(1, 51):
                assert_exact_tiling(Region(3, 7, w, h))

    def test_even_split(self):
        tl, tr, bl, br = quadrants(Region(0, 0, 1024, 1024))
        assert tl == Region(0, 0, 512, 512)
        assert tr == Region(512, 0, 512, 512)
        assert bl == Region(0, 512, 512, 512)
        assert br == Region(512, 512, 512, 512)

    def test_odd_split_floor_then_ceil(self):
        tl, tr, bl, br = quadrants(Region(0, 0, 1023, 1023))
        assert {tl.w, tr.w} == {511, 512}
        assert tl.w == 511  # first half takes the floor
        assert tr.w == 512
        assert tl.w + tr.w == 1023 and tl.h + bl.h == 1023

    def test_center_inside_for_all_small_regions(self):
        for w in range(1, 30):
            for h in range(1, 30):
                r = Region(5, 9, w, h)
                assert r.contains_point(*region_center(r))


class TestTick:
    CFG = ScanConfig(screen=Region(0, 0, 1024, 1024), scan_interval_ms=700)

    def test_initial_state(self):
        s = initial_state(self.CFG)
        assert s.phase is Phase.BLOCK
        assert s.depth == 1 and s.highlight == 0
        assert s.active == self.CFG.screen
        assert s.elapsed_in_item_ms == 0

    def test_highlight_wraps_mod_four(self):
        s = initial_state(self.CFG)
        for _ in range(3):
            s = tick(s, self.CFG, 700)
        assert s.highlight == 3
        s = tick(s, self.CFG, 700)
        assert s.highlight == 0

    def test_partial_dt_accumulates(self):
        s = initial_state(self.CFG)
        s = tick(s, self.CFG, 350)
        assert s.highlight == 0 and s.elapsed_in_item_ms == 350
        s = tick(s, self.CFG, 350)
        assert s.highlight == 1 and s.elapsed_in_item_ms == 0

    def test_chunked_equals_single_tick(self):
        rng = Random(7)
        for _ in range(200):
            total = rng.randint(0, 5000)
            s1 = initial_state(self.CFG)
            s1 = tick(s1, self.CFG, total)
            s2 = initial_state(self.CFG)
            left = total
            while left > 0:
                step = rng.randint(1, max(1, left))
                s2 = tick(s2, self.CFG, min(step, left))
                left -= step
            assert s1 == s2

    def test_cursor_moves_with_step(self):
        cfg = ScanConfig(screen=Region(0, 0, 1024, 1024), scan_interval_ms=500, step_px=10)
        s = initial_state(cfg)
        for _ in range(cfg.max_depth):  # descend anywhere
            s = blink(s, cfg)
        # pick "right" (index 6) and force a known cursor
        s = tick(s, cfg, 6 * 500)
        assert s.highlight == 6
        s = blink(s, cfg)
        assert s.phase is Phase.CURSOR
        start = s.cursor
        s = tick(s, cfg, 3 * 500)
        assert s.cursor == (start[0] + 30, start[1])

    def test_cursor_clamps_at_edge(self):
        cfg = ScanConfig(screen=Region(0, 0, 64, 64), max_depth=1,
                         scan_interval_ms=100, step_px=10)
        s = initial_state(cfg)
        s = blink(s, cfg)  # select TL block -> direction phase
        s = tick(s, cfg, 6 * 100)
        s = blink(s, cfg)  # move right
        edge_x = s.active.x + s.active.w - 1
        s = tick(s, cfg, 100 * 100)
        assert s.cursor[0] == edge_x
        before = s.cursor
        s = tick(s, cfg, 10 * 100)
        assert s.cursor == before

    def test_done_absorbing(self):
        cfg = self.CFG
        s = initial_state(cfg)
        for _ in range(cfg.max_depth + 3):
            s = blink(s, cfg)
        assert s.done and s.action == "click"
        assert tick(s, cfg, 10_000) == s
        with pytest.raises(BlinkAfterDone):
            blink(s, cfg)


class TestBlinkFlow:
    def test_top_left_descent_example(self):
        cfg = ScanConfig(screen=Region(0, 0, 1024, 1024))
        s = initial_state(cfg)
        for depth in range(1, 5):
            assert s.phase is Phase.BLOCK and s.depth == depth
            s = blink(s, cfg)  # highlight 0 == top-left
        assert s.phase is Phase.DIRECTION
        assert s.active == Region(0, 0, 64, 64)
        assert s.cursor == (32, 32)

    def test_direction_index_two_is_left(self):
        cfg = ScanConfig(screen=Region(0, 0, 256, 256))
        s = initial_state(cfg)
        for _ in range(cfg.max_depth):
            s = blink(s, cfg)
        s = tick(s, cfg, 2 * cfg.scan_interval_ms)
        s = blink(s, cfg)
        assert s.phase is Phase.CURSOR
        assert cfg.directions[s.direction] == (-1, 0)
        assert DIRECTIONS[2] == (-1, 0)

    def test_action_menu_selects_labels(self):
        cfg = ScanConfig(screen=Region(0, 0, 256, 256))
        s = initial_state(cfg)
        for _ in range(cfg.max_depth + 2):
            s = blink(s, cfg)
        assert s.phase is Phase.ACTION
        s = tick(s, cfg, cfg.scan_interval_ms)  # advance to "copy"
        s = blink(s, cfg)
        assert s.done and s.action == "copy"
        assert s.cursor is not None

    def test_containment_and_area_decay_random_descents(self):
        rng = Random(42)
        for _ in range(1000):
            w = rng.randint(16, 2000)
            h = rng.randint(16, 2000)
            depth = rng.randint(1, 4)
            cfg = ScanConfig(screen=Region(0, 0, w, h), max_depth=depth)
            s = initial_state(cfg)
            prev = cfg.screen
            for d in range(1, depth + 1):
                s = tick(s, cfg, rng.randint(0, 3) * cfg.scan_interval_ms)
                s = blink(s, cfg)
                assert prev.contains_region(s.active)
                bound_w = -(-w // (2 ** d))
                bound_h = -(-h // (2 ** d))
                assert s.active.area <= bound_w * bound_h
                prev = s.active
            assert s.phase is Phase.DIRECTION
            assert s.active.contains_point(*s.cursor)

    def test_determinism_same_trace_same_state(self):
        cfg = ScanConfig(screen=Region(0, 0, 777, 555))
        rng = Random(3)
        events = [("tick", rng.randint(1, 900)) if rng.random() < 0.7 else ("blink", 0)
                  for _ in range(30)]

        def apply(events):
            s = initial_state(cfg)
            for kind, dt in events:
                if kind == "tick":
                    s = tick(s, cfg, dt)
                elif not s.done:
                    s = blink(s, cfg)
            return s

        assert apply(events) == apply(events)


class TestAcquisition:
    def test_default_depth_needs_seven_blinks(self):
        cfg = ScanConfig(screen=Region(0, 0, 1024, 1024))
        assert blinks_to_acquire(Region(100, 200, 300, 120), cfg) == 7

    def test_depth_one_needs_four_blinks(self):
        cfg = ScanConfig(screen=Region(0, 0, 1024, 1024), max_depth=1)
        assert blinks_to_acquire(Region(600, 600, 100, 100), cfg) == 4

    def test_random_targets_at_least_block_sized_always_acquirable(self):
        cfg = ScanConfig(screen=Region(0, 0, 1024, 1024))
        rng = Random(11)
        for _ in range(1000):
            w = rng.randint(64, 512)
            h = rng.randint(64, 512)
            x = rng.randint(0, 1024 - w)
            y = rng.randint(0, 1024 - h)
            assert blinks_to_acquire(Region(x, y, w, h), cfg) == 7

    def test_ideal_schedule_replays_to_click_inside_target(self):
        cfg = ScanConfig(screen=Region(0, 0, 640, 480), scan_interval_ms=600)
        target = Region(500, 30, 60, 60)
        times = ideal_blink_times(cfg, target, reaction_ms=150)
        s = initial_state(cfg)
        now = 0
        for t in times:
            s = tick(s, cfg, t - now)
            s = blink(s, cfg)
            now = t
        assert s.done and s.action == "click"
        assert target.contains_point(*s.cursor)

    def test_unreachable_tiny_target_raises(self):
        # 1-px target off the cursor's rays in a 64-px final block
        cfg = ScanConfig(screen=Region(0, 0, 1024, 1024), step_px=4)
        with pytest.raises(TargetUnreachable):
            blinks_to_acquire(Region(33, 38, 1, 1), cfg)
