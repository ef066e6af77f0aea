"""Simulated handset: login fields, device attestation, and a recorded
transcript of every frame it sends or receives."""
from __future__ import annotations

import enum
import socket
import time
from collections import deque
from dataclasses import dataclass, field

from ..entropy import Entropy, SystemEntropy
from ..errors import FrameError, ValidationError
from ..identity import Imei, Imsi, normalize_login_name
from . import framing
from .framing import PROCEED
from .server import ServerConnection, field_filter


@dataclass(frozen=True)
class SimDevice:
    imei: Imei
    imsi: Imsi
    label: str = ""


@dataclass(frozen=True)
class TranscriptEntry:
    direction: str
    raw: bytes
    timestamp: float


@dataclass
class Transcript:
    """Append-only log of raw frames. ``C>S`` is client to server."""

    entries: list[TranscriptEntry] = field(default_factory=list)

    def record(self, direction: str, raw: bytes) -> None:
        self.entries.append(TranscriptEntry(direction, bytes(raw), time.time()))

    def raw_bytes(self) -> bytes:
        return b"".join(e.raw for e in self.entries)

    def to_text(self) -> str:
        return "".join(f"{e.direction} {len(e.raw)} {e.raw.hex()}\n" for e in self.entries)

    def messages(self) -> list[tuple[str, dict]]:
        return [(e.direction, framing.decode_frame(e.raw)) for e in self.entries]


class LocalChannel:
    """In-process transport straight into a :class:`ServerConnection`."""

    def __init__(self, connection: ServerConnection):
        self.connection = connection
        self._inbox: deque[bytes] = deque()

    def send(self, frame: bytes) -> None:
        self._inbox.extend(self.connection.feed(frame))

    def recv(self) -> bytes | None:
        return self._inbox.popleft() if self._inbox else None

    def close(self) -> None:
        pass


class TcpChannel:
    def __init__(self, host: str, port: int, timeout: float = 10.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)

    def send(self, frame: bytes) -> None:
        self.sock.sendall(frame)

    def recv(self) -> bytes | None:
        return framing.recv_frame(self.sock)

    def close(self) -> None:
        self.sock.close()


class Verdict(str, enum.Enum):
    AUTHENTICATED = "AUTHENTICATED"
    DENIED_AT_NAME_GATE = "DENIED_AT_NAME_GATE"
    DENIED_AT_PASSWORD_GATE = "DENIED_AT_PASSWORD_GATE"
    DENIED_AT_SERVER_AUTH = "DENIED_AT_SERVER_AUTH"
    DENIED_BY_FIELD_FILTER = "DENIED_BY_FIELD_FILTER"
    REGISTERED = "REGISTERED"
    REGISTRATION_REFUSED = "REGISTRATION_REFUSED"


@dataclass
class LoginOutcome:
    verdict: Verdict
    token: bytes | None = None


class FieldRejected(Exception):
    pass


class Handset:
    """A :class:`SimDevice` with its login screen.

    The name field reduces input to its hashed form; the password field
    refuses anything outside a-z0-9, so nothing it rejects reaches the wire.
    """

    def __init__(self, device: SimDevice, channel, entropy: Entropy | None = None,
                 transcript: Transcript | None = None):
        self.device = device
        self.channel = channel
        self.entropy = entropy or SystemEntropy()
        self.transcript = transcript if transcript is not None else Transcript()

    @staticmethod
    def name_field(raw: str) -> str:
        try:
            return normalize_login_name(raw).normalized
        except ValidationError as exc:
            raise FieldRejected(raw) from exc

    @staticmethod
    def password_field(raw: str) -> str:
        if not field_filter(raw):
            raise FieldRejected("password field accepts a-z and 0-9 only")
        return raw

    def _send(self, msg: dict) -> None:
        frame = framing.encode_frame(msg)
        self.transcript.record("C>S", frame)
        self.channel.send(frame)

    def _recv(self) -> dict | None:
        try:
            frame = self.channel.recv()
        except FrameError:
            return None
        if frame is None:
            return None
        self.transcript.record("S>C", frame)
        return framing.decode_frame(frame)

    def _attested(self, kind: str, session: str, credential: str) -> dict:
        return {"t": kind, "session": session, "credential": credential,
                "imei": self.device.imei.digits, "imsi": self.device.imsi.digits}

    def login(self, name: str, password: str) -> LoginOutcome:
        session = self.entropy.token_bytes(8).hex()
        try:
            try:
                name_text = self.name_field(name)
            except FieldRejected:
                return LoginOutcome(Verdict.DENIED_BY_FIELD_FILTER)
            self._send(self._attested("NAME", session, name_text))
            reply = self._recv()
            if reply is None or reply.get("outcome") != PROCEED:
                return LoginOutcome(Verdict.DENIED_AT_NAME_GATE)

            try:
                password_text = self.password_field(password)
            except FieldRejected:
                return LoginOutcome(Verdict.DENIED_BY_FIELD_FILTER)
            self._send(self._attested("PASSWORD", session, password_text))
            reply = self._recv()
            if reply is None or reply.get("outcome") != PROCEED:
                return LoginOutcome(Verdict.DENIED_AT_PASSWORD_GATE)
            reply = self._recv()
            if reply is None or reply["t"] != "TOKEN":
                return LoginOutcome(Verdict.DENIED_AT_SERVER_AUTH)
            return LoginOutcome(Verdict.AUTHENTICATED, bytes.fromhex(reply["token_hex"]))
        finally:
            self.channel.close()

    def register(self, name: str, password: str, phone: str | None = None) -> LoginOutcome:
        msg = {"t": "REGISTER", "session": self.entropy.token_bytes(8).hex(),
               "account": name, "credential": password,
               "imei": self.device.imei.digits, "imsi": self.device.imsi.digits}
        if phone is not None:
            msg["phone"] = phone
        try:
            self._send(msg)
            reply = self._recv()
        finally:
            self.channel.close()
        if reply is not None and reply.get("outcome") == PROCEED:
            return LoginOutcome(Verdict.REGISTERED)
        return LoginOutcome(Verdict.REGISTRATION_REFUSED)
