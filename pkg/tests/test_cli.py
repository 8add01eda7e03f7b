"""CLI behaviour and the HTTP message-stream endpoint."""
from __future__ import annotations

import json
import threading
import urllib.request

import pytest

from blinkscan.blockscan import Region, ScanConfig, ideal_blink_times
from blinkscan.cli import main
from blinkscan.server import SessionServer
from blinkscan.session import SessionConfig


class TestSimulate:
    def test_csv_deterministic_for_fixed_seed(self, tmp_path, capsys):
        args = ["simulate", "--intervals", "600,800", "--trials", "25", "--seed", "3"]
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()
        header = out1.read_text().splitlines()[0]
        assert header == "interval_ms,n,sa,far,sr,avg_time_s"


class TestReplay:
    def test_trace_roundtrip_via_cli(self, tmp_path, capsys):
        trace = tmp_path / "run.trace"
        assert main([
            "trace", "--target", "300,300,100,100", "--out", str(trace),
        ]) == 0
        capsys.readouterr()
        assert main(["replay", str(trace)]) == 0
        result = json.loads(capsys.readouterr().out)
        assert result["tp"] == 1 and result["blinks"] == 7

    def test_capture_replay_matches_trace(self, tmp_path, capsys):
        trace = tmp_path / "run.trace"
        capture = tmp_path / "run.blk"
        assert main([
            "trace", "--target", "520,140,150,90",
            "--out", str(trace), "--capture-out", str(capture),
        ]) == 0
        capsys.readouterr()
        main(["replay", str(trace)])
        from_trace = json.loads(capsys.readouterr().out)
        main(["replay", str(capture), "--target", "520,140,150,90",
              "--scan-interval-ms", "600"])
        from_capture = json.loads(capsys.readouterr().out)
        for key in ("tp", "fp", "fn", "time_s", "blinks"):
            assert from_trace[key] == from_capture[key]

    def test_corrupt_trace_nonzero_exit(self, tmp_path, capsys):
        bad = tmp_path / "bad.trace"
        bad.write_text("#scantrace\tv1\tdeadbeef\t{}\n100\tblink\n")
        rc = main(["replay", str(bad)])
        assert rc != 0
        assert "malformed trace" in capsys.readouterr().err

    def test_truncated_trace_nonzero_exit(self, tmp_path, capsys):
        trace = tmp_path / "run.trace"
        main(["trace", "--target", "300,300,100,100", "--out", str(trace)])
        lines = trace.read_text().splitlines()
        trace.write_text("\n".join(lines[:-1]) + "\n")
        capsys.readouterr()
        assert main(["replay", str(trace)]) == 1
        assert "malformed trace" in capsys.readouterr().err


class TestMetricsCommand:
    def test_bundled_table_output(self, capsys):
        assert main(["metrics"]) == 0
        out = capsys.readouterr().out
        assert "SA 87" in out and "FAR 2.7" in out and "SR 98.1" in out
        assert "flagged users: 1, 8, 10" in out

    def test_missing_file_is_usage_error(self, capsys):
        assert main(["metrics", "/nonexistent/counts.csv"]) != 0
        assert "cannot read" in capsys.readouterr().err


class TestHttpEndpoint:
    def make_server(self):
        cfg = SessionConfig(
            scan=ScanConfig(screen=Region(0, 0, 1024, 1024), scan_interval_ms=600),
            source="client",
            targets=(Region(300, 300, 100, 100),),
            virtual_time=True,
        )
        server = SessionServer(cfg, port=0)
        server.start_background()
        host, port = server.address
        return server, f"http://{host}:{port}"

    def test_stream_and_input_roundtrip(self):
        server, base = self.make_server()
        try:
            cfg = json.loads(urllib.request.urlopen(f"{base}/session/config").read())
            assert cfg["screen"] == [0, 0, 1024, 1024]

            target = Region(300, 300, 100, 100)
            scan = ScanConfig(screen=Region(0, 0, 1024, 1024), scan_interval_ms=600)
            times = ideal_blink_times(scan, target, reaction_ms=350)
            lines = [json.dumps({"kind": "BlinkIn", "t_ms": t}) for t in times]
            lines.append(json.dumps(
                {"kind": "SessionControl", "op": "end_of_input", "t_ms": times[-1]}
            ))
            body = ("\n".join(lines) + "\n").encode()

            messages = []

            def read_stream():
                with urllib.request.urlopen(f"{base}/session/stream") as resp:
                    for raw in resp:
                        raw = raw.strip()
                        if raw:
                            messages.append(json.loads(raw))

            reader = threading.Thread(target=read_stream)
            reader.start()

            req = urllib.request.Request(
                f"{base}/session/input", data=body,
                headers={"Content-Type": "application/x-ndjson"},
            )
            reply = json.loads(urllib.request.urlopen(req).read())
            assert reply["accepted"] == len(times) + 1

            reader.join(timeout=10)
            assert not reader.is_alive(), "stream did not close after session end"
            kinds = [m["kind"] for m in messages]
            assert kinds[0] == "TargetSet"
            finals = [m for m in messages if m["kind"] == "MetricsReport" and m["final"]]
            assert len(finals) == 1 and finals[0]["tp"] == 1
            seqs = [m["seq"] for m in messages]
            assert seqs == sorted(seqs)
        finally:
            server.shutdown()
