"""Reference server: one gate session per connection.

Login connections send NAME then PASSWORD. The server answers each with a
RESULT frame and, once the server authentication point passes, a TOKEN frame.
Any deny or protocol violation answers ``access denied`` and ends the
connection. A connection may instead open with a single REGISTER frame.
"""
from __future__ import annotations

import logging
import signal
import socketserver
import threading

from ..errors import FrameError, TridentError
from ..gatekeeper import Device, Gatekeeper, GateSession
from ..identity import is_valid_login_text, validate_imei, validate_imsi
from . import framing
from .framing import DENIED, PROCEED

log = logging.getLogger(__name__)

DEFAULT_PORT = 4117


def field_filter(text: str) -> bool:
    """Login fields accept lowercase letters and digits only."""
    return is_valid_login_text(text)


class ServerConnection:
    """Protocol state for one connection, fed one raw frame at a time."""

    def __init__(self, gatekeeper: Gatekeeper, strict_luhn: bool = True):
        self.gatekeeper = gatekeeper
        self.strict_luhn = strict_luhn
        self.session: GateSession | None = None
        self.closed = False
        self.gate_calls = 0

    def feed(self, frame: bytes) -> list[bytes]:
        if self.closed:
            return []
        try:
            msg = framing.decode_frame(frame)
        except FrameError as exc:
            log.debug("bad frame: %s", exc.code)
            return self._close_denied()
        return [framing.encode_frame(m) for m in self.handle(msg)]

    def _close_denied(self) -> list[bytes]:
        self.closed = True
        return [framing.encode_frame(framing.result(DENIED))]

    def _deny(self) -> list[dict]:
        self.closed = True
        return [framing.result(DENIED)]

    def _device(self, msg: dict) -> Device | None:
        try:
            return Device(validate_imei(msg["imei"], self.strict_luhn), validate_imsi(msg["imsi"]))
        except TridentError:
            return None

    def handle(self, msg: dict) -> list[dict]:
        kind = msg["t"]
        if kind == "REGISTER" and self.session is None:
            return self._register(msg)
        if kind == "NAME" and self.session is None:
            return self._name(msg)
        if kind == "PASSWORD" and self.session is not None:
            return self._password(msg)
        return self._deny()

    def _register(self, msg: dict) -> list[dict]:
        self.closed = True
        try:
            self.gatekeeper.register(
                msg["account"], msg["credential"], msg["imei"], msg["imsi"],
                phone_raw=msg.get("phone"), strict_luhn=self.strict_luhn,
            )
        except TridentError as exc:
            log.info("registration refused: %s", exc.code)
            return [framing.result(DENIED)]
        return [framing.result(PROCEED)]

    def _name(self, msg: dict) -> list[dict]:
        device = self._device(msg)
        if device is None or not field_filter(msg["credential"]):
            return self._deny()
        self.session = self.gatekeeper.open_session(device)
        self.gate_calls += 1
        if not self.gatekeeper.gate_login_name(self.session, msg["credential"], device).proceed:
            return self._deny()
        return [framing.result(PROCEED)]

    def _password(self, msg: dict) -> list[dict]:
        device = self._device(msg)
        if device is None or not field_filter(msg["credential"]):
            return self._deny()
        self.gate_calls += 1
        if not self.gatekeeper.gate_login_password(self.session, msg["credential"], device).proceed:
            return self._deny()
        self.gate_calls += 1
        auth = self.gatekeeper.gate_server_authentication(self.session)
        self.closed = True
        if not auth.proceed:
            return [framing.result(DENIED)]
        return [framing.result(PROCEED), {"t": "TOKEN", "token_hex": auth.token.hex()}]


class _Handler(socketserver.BaseRequestHandler):
    def handle(self):
        conn = ServerConnection(self.server.gatekeeper, self.server.strict_luhn)
        sock = self.request
        while not conn.closed:
            try:
                frame = framing.recv_frame(sock)
            except FrameError:
                sock.sendall(b"".join(conn._close_denied()))
                break
            if frame is None:
                break
            for reply in conn.feed(frame):
                sock.sendall(reply)


class TridentServer(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, address, gatekeeper: Gatekeeper, strict_luhn: bool = True):
        self.gatekeeper = gatekeeper
        self.strict_luhn = strict_luhn
        super().__init__(address, _Handler)


def start_server(gatekeeper: Gatekeeper, host: str = "127.0.0.1", port: int = 0,
                 strict_luhn: bool = True) -> TridentServer:
    """Serve in a background thread; ``server.server_address`` has the bound port."""
    server = TridentServer((host, port), gatekeeper, strict_luhn)
    threading.Thread(target=server.serve_forever, name="trident-server", daemon=True).start()
    return server


def run_server(gatekeeper: Gatekeeper, host: str = "127.0.0.1", port: int = DEFAULT_PORT,
               strict_luhn: bool = True) -> None:
    """Serve until SIGINT or SIGTERM."""
    server = TridentServer((host, port), gatekeeper, strict_luhn)
    stop = threading.Event()

    def _shutdown(signum, frame):
        stop.set()

    signal.signal(signal.SIGINT, _shutdown)
    signal.signal(signal.SIGTERM, _shutdown)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    log.info("listening on %s:%d", *server.server_address[:2])
    try:
        stop.wait()
    finally:
        server.shutdown()
        server.server_close()
