"""Local HTTP endpoint exposing a session's message stream.

Endpoints:

* ``GET  /session/stream``  - newline-delimited JSON, one engine message per
  line, streamed as they happen; the server closes the stream after the
  final MetricsReport.
* ``POST /session/input``   - newline-delimited JSON client messages
  (BlinkIn, SampleIn, SessionControl); responds ``{"accepted": n}``.
* ``GET  /session/config``  - static session configuration snapshot.

One server owns one session.  The session loop runs on its own thread; the
stream handler fans engine messages out to every connected reader.
"""
from __future__ import annotations

import json
import queue
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Dict, List, Optional

from .session import SessionConfig, encode_message, parse_message, run_session

__all__ = ["SessionServer"]

_END = object()


class _Broadcast:
    """Fan-out of engine messages to any number of stream readers."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._subscribers: List["queue.Queue"] = []
        self._history: List[Dict] = []
        self._closed = False

    def publish(self, msg: Dict) -> None:
        with self._lock:
            self._history.append(msg)
            for q in self._subscribers:
                q.put(msg)

    def close(self) -> None:
        with self._lock:
            self._closed = True
            for q in self._subscribers:
                q.put(_END)

    def subscribe(self) -> "queue.Queue":
        q: "queue.Queue" = queue.Queue()
        with self._lock:
            for msg in self._history:  # late joiners replay the session so far
                q.put(msg)
            if self._closed:
                q.put(_END)
            else:
                self._subscribers.append(q)
        return q


class SessionServer:
    """HTTP wrapper around one session engine."""

    def __init__(self, cfg: SessionConfig, host: str = "127.0.0.1", port: int = 0):
        self.cfg = cfg
        self.broadcast = _Broadcast()
        self.inbound: "queue.Queue[Optional[Dict]]" = queue.Queue()
        self.summary = None
        self._session_thread = threading.Thread(target=self._run, daemon=True)
        self._httpd = ThreadingHTTPServer((host, port), self._handler_class())
        self._httpd.daemon_threads = True

    @property
    def address(self):
        return self._httpd.server_address

    def _run(self) -> None:
        transport = _ServerTransport(self)
        try:
            self.summary = run_session(self.cfg, transport)
        finally:
            self.broadcast.close()

    def serve_forever(self) -> None:
        self._session_thread.start()
        try:
            self._httpd.serve_forever(poll_interval=0.1)
        finally:
            self._httpd.server_close()

    def start_background(self) -> None:
        self._session_thread.start()
        threading.Thread(target=self._httpd.serve_forever, daemon=True).start()

    def shutdown(self) -> None:
        self.inbound.put(None)
        self._httpd.shutdown()

    def _config_snapshot(self) -> Dict:
        scan = self.cfg.scan
        return {
            "screen": [scan.screen.x, scan.screen.y, scan.screen.w, scan.screen.h],
            "interval_ms": scan.scan_interval_ms,
            "max_depth": scan.max_depth,
            "step_px": scan.step_px,
            "actions": list(scan.actions),
            "directions": [list(d) for d in scan.directions],
            "targets": [[t.x, t.y, t.w, t.h] for t in self.cfg.targets],
            "virtual_time": self.cfg.virtual_time,
            "source": self.cfg.source,
        }

    def _handler_class(self):
        server = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def log_message(self, *args) -> None:
                pass  # quiet; the CLI prints the address once

            def do_GET(self) -> None:
                if self.path == "/session/config":
                    body = json.dumps(server._config_snapshot()).encode()
                    self.send_response(200)
                    self.send_header("Content-Type", "application/json")
                    self.send_header("Access-Control-Allow-Origin", "*")
                    self.send_header("Content-Length", str(len(body)))
                    self.end_headers()
                    self.wfile.write(body)
                    return
                if self.path != "/session/stream":
                    self.send_error(404)
                    return
                self.send_response(200)
                self.send_header("Content-Type", "application/x-ndjson")
                self.send_header("Access-Control-Allow-Origin", "*")
                self.send_header("Cache-Control", "no-store")
                self.send_header("Transfer-Encoding", "chunked")
                self.end_headers()
                sub = server.broadcast.subscribe()
                try:
                    while True:
                        msg = sub.get()
                        if msg is _END:
                            break
                        self._chunk(encode_message(msg).encode() + b"\n")
                    self.wfile.write(b"0\r\n\r\n")
                except (BrokenPipeError, ConnectionResetError):
                    server.inbound.put(None)  # reader went away: close session

            def _chunk(self, data: bytes) -> None:
                self.wfile.write(f"{len(data):x}\r\n".encode() + data + b"\r\n")
                self.wfile.flush()

            def do_POST(self) -> None:
                if self.path != "/session/input":
                    self.send_error(404)
                    return
                length = int(self.headers.get("Content-Length", "0"))
                body = self.rfile.read(length).decode()
                accepted = 0
                try:
                    for line in body.splitlines():
                        if not line.strip():
                            continue
                        server.inbound.put(parse_message(line))
                        accepted += 1
                except ValueError as exc:
                    self.send_error(400, str(exc))
                    return
                reply = json.dumps({"accepted": accepted}).encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Access-Control-Allow-Origin", "*")
                self.send_header("Content-Length", str(len(reply)))
                self.end_headers()
                self.wfile.write(reply)

            def do_OPTIONS(self) -> None:
                self.send_response(204)
                self.send_header("Access-Control-Allow-Origin", "*")
                self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
                self.send_header("Access-Control-Allow-Headers", "Content-Type")
                self.send_header("Content-Length", "0")
                self.end_headers()

        return Handler


class _ServerTransport:
    """Adapter between run_session and the HTTP plumbing."""

    def __init__(self, server: SessionServer):
        self._server = server

    def send(self, msg: Dict) -> None:
        self._server.broadcast.publish(msg)

    def recv(self, timeout: Optional[float] = None) -> Optional[Dict]:
        try:
            return self._server.inbound.get(timeout=timeout)
        except queue.Empty:
            raise TimeoutError from None
