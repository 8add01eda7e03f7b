"""Command line: simulate sweeps, replay traces/captures, serve the UI
endpoint, and recompute the bundled study table.
"""
from __future__ import annotations

import argparse
import json
import sys
from random import Random
from typing import List, Optional

from .blinksense import SignalThresholds, detect_blinks
from .blockscan import Region, ScanConfig, ideal_blink_times
from .linkframe import read_capture, write_capture
from .scanmetrics import (
    bundled_counts_path,
    check_published_rows,
    display_rate,
    display_sa,
    load_counts_csv,
    published_aggregate,
)
from .session import SessionConfig
from .simharness import (
    BlinkTrace,
    MalformedTrace,
    TraceRecord,
    TrialSpec,
    UserModel,
    drive_automaton,
    read_trace,
    record_trace,
    replay_trial,
    sweep,
    sweep_csv_lines,
    synthesize_waveform,
)

DEFAULT_THRESHOLDS = SignalThresholds(blink_threshold=400, base_floor=600)


def _parse_screen(text: str) -> Region:
    try:
        w, h = (int(p) for p in text.lower().split("x"))
        return Region(0, 0, w, h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"screen must look like 1024x768, got {text!r}")


def _parse_region(text: str) -> Region:
    try:
        x, y, w, h = (int(p) for p in text.split(","))
        return Region(x, y, w, h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"region must be x,y,w,h, got {text!r}")


def _scan_config(args) -> ScanConfig:
    return ScanConfig(
        screen=args.screen,
        scan_interval_ms=args.scan_interval_ms,
        max_depth=args.depth,
        step_px=args.step_px,
    )


def _add_scan_args(p: argparse.ArgumentParser, interval_default: int = 1000) -> None:
    p.add_argument("--scan-interval-ms", type=int, default=interval_default,
                   help="dwell per highlighted item")
    p.add_argument("--depth", type=int, default=4, help="block subdivision iterations")
    p.add_argument("--screen", type=_parse_screen, default=Region(0, 0, 1024, 1024),
                   metavar="WxH")
    p.add_argument("--step-px", type=int, default=4, help="cursor step per interval")


def cmd_simulate(args) -> int:
    user = UserModel(
        reaction_mean_ms=args.reaction_mean_ms,
        reaction_sd_ms=args.reaction_sd_ms,
        miss_prob=args.miss_prob,
        premature_prob=args.premature_prob,
        rng_seed=args.seed,
    )
    intervals = [int(s) for s in args.intervals.split(",")]
    rows = sweep(intervals, user, n_trials=args.trials, screen=args.screen,
                 max_depth=args.depth, step_px=args.step_px)
    lines = sweep_csv_lines(rows)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    else:
        print("\n".join(lines))
    return 0


def cmd_replay(args) -> int:
    path = args.path
    if path.endswith(".blk"):
        if args.target is None:
            print("replay of a .blk capture needs --target", file=sys.stderr)
            return 2
        cfg = _scan_config(args)
        samples, stats = read_capture(path)
        events = detect_blinks(samples, DEFAULT_THRESHOLDS)
        end = samples[-1].t if samples else 0
        outcome = drive_automaton(cfg, args.target, [e.onset_t for e in events],
                                  end_ms=end)
        print(json.dumps({
            "tp": outcome.tp, "fp": outcome.fp, "fn": outcome.fn,
            "time_s": outcome.selection_time_s,
            "frames_ok": stats.frames_ok, "resyncs": stats.resyncs,
            "frames_dropped": stats.frames_dropped,
            "blinks": len(events),
        }))
        return 0
    try:
        spec, trace = read_trace(path)
    except MalformedTrace as exc:
        print(f"malformed trace: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"cannot read trace: {exc}", file=sys.stderr)
        return 1
    outcome = replay_trial(spec, trace)
    print(json.dumps({
        "tp": outcome.tp, "fp": outcome.fp, "fn": outcome.fn,
        "time_s": outcome.selection_time_s,
        "task_id": spec.task_id,
        "blinks": len(trace.blink_times),
    }))
    return 0


BLINK_DIP_MS = 120  # rendered closure length in synthesized captures


def cmd_trace(args) -> int:
    cfg = _scan_config(args)
    times = ideal_blink_times(cfg, args.target, reaction_ms=args.reaction_ms)
    records = [TraceRecord(t_ms=t, kind="blink") for t in times]
    records.append(TraceRecord(t_ms=times[-1], kind="end"))
    spec = TrialSpec(target=args.target, cfg=cfg, task_id=args.task_id)
    record_trace(args.out, spec, BlinkTrace(records=tuple(records)))
    print(f"wrote {len(times)}-blink trace to {args.out}")
    if args.capture_out:
        # dips must not merge or fall into the refractory window, or the
        # detected schedule would diverge from the scripted one
        min_gap = BLINK_DIP_MS + DEFAULT_THRESHOLDS.refractory_ms
        gaps = [b - a for a, b in zip(times, times[1:])]
        if gaps and min(gaps) <= min_gap:
            print(
                f"blink gap {min(gaps)} ms too small for a faithful capture; "
                f"use --reaction-ms > {min_gap} (and below the scan interval)",
                file=sys.stderr,
            )
            return 2
        if args.reaction_ms % 10:
            print("capture output needs --reaction-ms on the 10 ms sample grid",
                  file=sys.stderr)
            return 2
        samples = synthesize_waveform(
            times,
            end_ms=times[-1] + 500,
            blink_duration_ms=BLINK_DIP_MS,
            rng=Random(args.seed),
        )
        write_capture(args.capture_out, samples)
        print(f"wrote matching capture to {args.capture_out}")
    return 0


def cmd_serve(args) -> int:
    from .server import SessionServer

    if args.targets_file:
        with open(args.targets_file) as fh:
            targets = tuple(Region(*t) for t in json.load(fh))
    elif args.target is not None:
        targets = (args.target,)
    else:
        rng = Random(args.seed)
        from .simharness import random_target

        block_w = -(-args.screen.w // (2 ** args.depth))
        block_h = -(-args.screen.h // (2 ** args.depth))
        targets = tuple(
            random_target(rng, args.screen, block_w, block_h)
            for _ in range(args.tasks)
        )
    cfg = SessionConfig(
        scan=_scan_config(args),
        thresholds=DEFAULT_THRESHOLDS,
        source="client",
        targets=targets,
        virtual_time=args.virtual,
    )
    server = SessionServer(cfg, host=args.host, port=args.port)
    host, port = server.address
    print(f"listening on {host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


def cmd_metrics(args) -> int:
    path = args.counts or bundled_counts_path()
    try:
        rows = load_counts_csv(path)
    except OSError as exc:
        print(f"cannot read counts table: {exc}", file=sys.stderr)
        return 1
    except (KeyError, ValueError) as exc:
        print(f"bad counts table: {exc}", file=sys.stderr)
        return 1
    checks = check_published_rows(rows)
    print("user  tp fp fn    sa     far      sr   flags")
    for c in checks:
        r = c.row
        flags = ",".join(c.mismatches) if c.mismatches else "-"
        print(
            f"{r.user:>4} {r.tp:>3} {r.fp:>2} {r.fn:>2} "
            f"{r.sa_printed:>5} {r.far_printed:>7} {r.sr_printed:>7}   {flags}"
        )
    agg = published_aggregate(rows)
    time_part = (
        f"  avg time/task {agg.avg_selection_time_s:.1f} s"
        if agg.avg_selection_time_s is not None
        else ""
    )
    print(
        f"aggregate: SA {display_sa(agg.sa_pct)}  FAR {display_rate(agg.far_pct)}"
        f"  SR {display_rate(agg.sr_pct)}{time_part}"
    )
    flagged = [c.row.user for c in checks if not c.consistent]
    if flagged:
        print("flagged users: " + ", ".join(str(u) for u in flagged))
    else:
        print("flagged users: none")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blinkscan",
        description="Blink-driven block-scanning input engine",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Monte-Carlo scan-interval sweep -> CSV")
    _add_scan_args(p)
    p.add_argument("--intervals", default="500,600,700,800,900,1000",
                   help="comma-separated scan intervals (ms)")
    p.add_argument("--trials", type=int, default=200, help="trials per interval")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reaction-mean-ms", type=float, default=300.0)
    p.add_argument("--reaction-sd-ms", type=float, default=100.0)
    p.add_argument("--miss-prob", type=float, default=0.05)
    p.add_argument("--premature-prob", type=float, default=0.01)
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("replay", help="replay a .trace or .blk file -> outcome")
    p.add_argument("path")
    _add_scan_args(p)
    p.add_argument("--target", type=_parse_region, metavar="X,Y,W,H",
                   help="target region (required for .blk captures)")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("trace", help="write an ideal-user blink trace")
    _add_scan_args(p, interval_default=600)
    p.add_argument("--target", type=_parse_region, required=True, metavar="X,Y,W,H")
    p.add_argument("--task-id", type=int, default=1)
    p.add_argument("--reaction-ms", type=int, default=350)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--capture-out", help="also write the equivalent .blk capture")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("serve", help="open the session message-stream endpoint")
    _add_scan_args(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8377)
    p.add_argument("--virtual", action="store_true",
                   help="virtual time: clock advances only with input timestamps")
    p.add_argument("--tasks", type=int, default=10, help="number of random targets")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--target", type=_parse_region, metavar="X,Y,W,H",
                   help="single fixed target instead of random tasks")
    p.add_argument("--targets-file", help="JSON list of [x,y,w,h] targets")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("metrics", help="recompute a study counts table")
    p.add_argument("counts", nargs="?", help="counts CSV (default: bundled table)")
    p.set_defaults(func=cmd_metrics)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
