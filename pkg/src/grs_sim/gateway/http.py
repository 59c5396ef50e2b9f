"""HTTP/JSON surface of the gateway, including the server-push stream.

Endpoints (token in `Authorization: Bearer <token>`):

    POST /login                        {"username", "password"}
    GET  /panels
    GET  /panels/{id}/state
    POST /panels/{id}/button           {"signal"}
    POST /panels/{id}/selector         {"signal", "position"}
    POST /panels/{id}/auto             {"on", "setpoint"}
    POST /panels/{id}/general-reset    {}
    GET  /panels/{id}/stream           server-sent events

Request/response schemas are documented in docs/http-api.md. The stream
emits `snapshot`, `delta`, `heartbeat`, `mode` and `offline` events with
strictly increasing per-panel sequence numbers; a gap means the client
must resubscribe.
"""

from __future__ import annotations

import json
import logging
import mimetypes
import os
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from ..plant import SetpointRangeError
from ..sim import Simulation, drive
from .auth import BadCredentialsError, LockedOutError, UnauthorizedError
from .core import (
    ModeLockedError,
    PanelOfflineError,
    SetpointOutOfRange,
    UnknownButtonError,
    UnknownPanelError,
    UnknownSelectorError,
)

log = logging.getLogger(__name__)

_PANEL_RE = re.compile(
    r"^/panels/([^/]+)/(state|button|selector|auto|general-reset|stream)$")

_ERROR_STATUS = [
    (UnauthorizedError, 401, "unauthorized"),
    (BadCredentialsError, 401, "bad-credentials"),
    (LockedOutError, 423, "locked-out"),
    (UnknownPanelError, 404, "unknown-panel"),
    (UnknownButtonError, 404, "unknown-button"),
    (UnknownSelectorError, 404, "unknown-selector"),
    (ModeLockedError, 409, "mode-locked"),
    (PanelOfflineError, 503, "panel-offline"),
    (SetpointOutOfRange, 400, "range-error"),
    (SetpointRangeError, 400, "range-error"),
]


class GatewayHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server: "GatewayServer"

    # -- plumbing ------------------------------------------------------------

    def log_message(self, fmt: str, *args) -> None:
        log.debug("%s %s", self.address_string(), fmt % args)

    def _cors(self) -> None:
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Headers", "Authorization, Content-Type")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")

    def _json(self, status: int, payload: dict | list) -> None:
        body = json.dumps(payload).encode()
        self.send_response(status)
        self._cors()
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _error(self, exc: Exception) -> None:
        for cls, status, code in _ERROR_STATUS:
            if isinstance(exc, cls):
                self._json(status, {"error": code, "detail": str(exc)})
                return
        log.exception("unhandled gateway error")
        self._json(500, {"error": "internal", "detail": str(exc)})

    def _token(self) -> str | None:
        header = self.headers.get("Authorization", "")
        if header.lower().startswith("bearer "):
            return header[7:].strip()
        return None

    def _body(self) -> dict:
        length = int(self.headers.get("Content-Length", 0) or 0)
        if length == 0:
            return {}
        raw = self.rfile.read(length)
        try:
            data = json.loads(raw)
        except json.JSONDecodeError:
            raise ValueError("request body is not valid JSON") from None
        if not isinstance(data, dict):
            raise ValueError("request body must be a JSON object")
        return data

    @property
    def sim(self) -> Simulation:
        return self.server.sim

    # -- methods ----------------------------------------------------------------

    def do_OPTIONS(self) -> None:  # noqa: N802 (stdlib naming)
        self.send_response(204)
        self._cors()
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self) -> None:  # noqa: N802
        try:
            if self.path == "/panels":
                with self.sim.lock:
                    panels = self.sim.core.list_panels(self._token())
                self._json(200, panels)
                return
            m = _PANEL_RE.match(self.path)
            if m and m.group(2) == "state":
                with self.sim.lock:
                    state = self.sim.core.get_state(self._token(), m.group(1))
                self._json(200, state)
                return
            if m and m.group(2) == "stream":
                self._stream(m.group(1))
                return
            if self.path == "/" or self.path.startswith("/ui"):
                self._static()
                return
            self._json(404, {"error": "not-found"})
        except Exception as exc:  # noqa: BLE001 - mapped to HTTP statuses
            self._error(exc)

    def do_POST(self) -> None:  # noqa: N802
        try:
            if self.path == "/login":
                body = self._body()
                with self.sim.lock:
                    session = self.sim.core.authenticate(
                        str(body.get("username", "")), str(body.get("password", "")))
                self._json(200, {"token": session.token, "user": session.user,
                                 "expiry": session.expiry})
                return
            m = _PANEL_RE.match(self.path)
            if not m:
                self._json(404, {"error": "not-found"})
                return
            panel_id, action = m.group(1), m.group(2)
            token = self._token()
            body = self._body()
            core = self.sim.core
            with self.sim.lock:
                if action == "button":
                    result = core.press_button(token, panel_id,
                                               str(body.get("signal", "")))
                elif action == "selector":
                    result = core.set_selector(token, panel_id,
                                               str(body.get("signal", "")),
                                               body.get("position", "on"))
                elif action == "auto":
                    setpoint = body.get("setpoint")
                    result = core.set_auto_mode(
                        token, panel_id, bool(body.get("on", False)),
                        float(setpoint) if setpoint is not None else None)
                elif action == "general-reset":
                    result = core.general_reset(token, panel_id)
                else:
                    self._json(405, {"error": "method-not-allowed"})
                    return
            self._json(200, result)
        except ValueError as exc:
            self._json(400, {"error": "bad-request", "detail": str(exc)})
        except Exception as exc:  # noqa: BLE001
            self._error(exc)

    # -- server push ---------------------------------------------------------------

    def _stream(self, panel_id: str) -> None:
        with self.sim.lock:
            sub = self.sim.core.subscribe(self._token(), panel_id)
        try:
            self.send_response(200)
            self._cors()
            self.send_header("Content-Type", "text/event-stream")
            self.send_header("Cache-Control", "no-cache")
            self.send_header("Connection", "close")
            self.end_headers()
            while not self.server.stopping.is_set():
                event = sub.get(timeout=0.25)
                if event is None:
                    self.wfile.write(b": ping\n\n")
                    self.wfile.flush()
                    continue
                kind = event.get("type", "message")
                data = json.dumps(event)
                self.wfile.write(f"event: {kind}\ndata: {data}\n\n".encode())
                self.wfile.flush()
                if kind == "offline":
                    break
        except (BrokenPipeError, ConnectionResetError):
            pass
        finally:
            with self.sim.lock:
                self.sim.core.unsubscribe(sub)

    # -- optional static hosting of the operator UI ----------------------------------

    def _static(self) -> None:
        root = self.sim.cfg.ui_dir
        if not root:
            self._json(404, {"error": "no-ui"})
            return
        rel = self.path[len("/ui"):] if self.path.startswith("/ui") else ""
        rel = rel.split("?", 1)[0].lstrip("/") or "index.html"
        path = os.path.realpath(os.path.join(root, rel))
        if not path.startswith(os.path.realpath(root)) or not os.path.isfile(path):
            self._json(404, {"error": "not-found"})
            return
        ctype = mimetypes.guess_type(path)[0] or "application/octet-stream"
        with open(path, "rb") as fh:
            body = fh.read()
        self.send_response(200)
        self._cors()
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


class GatewayServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, sim: Simulation, listen: str | None = None):
        self.sim = sim
        self.stopping = threading.Event()
        host, port = _parse_listen(listen or sim.cfg.listen)
        super().__init__((host, port), GatewayHandler)

    @property
    def port(self) -> int:
        return self.server_address[1]

    @property
    def url(self) -> str:
        return f"http://{self.server_address[0]}:{self.port}"


def _parse_listen(listen: str) -> tuple[str, int]:
    host, _, port = listen.rpartition(":")
    if not host:
        host, port = listen, "0"
    try:
        return host, int(port)
    except ValueError:
        raise ValueError(f"bad listen address {listen!r}") from None


class RunningGateway:
    """Gateway server plus the thread advancing the simulation."""

    def __init__(self, sim: Simulation, listen: str | None = None,
                 realtime: bool = False):
        self.sim = sim
        self.server = GatewayServer(sim, listen)
        self.realtime = realtime
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []

    def start(self) -> "RunningGateway":
        serve = threading.Thread(target=self.server.serve_forever, daemon=True)
        tick = threading.Thread(
            target=drive, args=(self.sim, self._stop, self.realtime), daemon=True)
        self._threads = [serve, tick]
        for t in self._threads:
            t.start()
        return self

    def stop(self) -> None:
        self._stop.set()
        self.server.stopping.set()
        self.server.shutdown()
        self.server.server_close()
        for t in self._threads:
            t.join(timeout=2.0)

    @property
    def url(self) -> str:
        return self.server.url
