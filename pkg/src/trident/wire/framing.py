"""Length-prefixed JSON frames.

A frame is a 4-byte big-endian payload length followed by that many bytes of
UTF-8 JSON. Messages are dicts with a ``t`` type tag.
"""
from __future__ import annotations

import json
import string
import struct

from ..errors import FrameError

HEADER = struct.Struct("!I")
MAX_PAYLOAD = 65536
DENIED = "access denied"
PROCEED = "proceed"

_DEVICE_FIELDS = ("session", "credential", "imei", "imsi")
REQUIRED_FIELDS = {
    "REGISTER": ("session", "account", "credential", "imei", "imsi"),
    "NAME": _DEVICE_FIELDS,
    "PASSWORD": _DEVICE_FIELDS,
    "RESULT": ("outcome",),
    "TOKEN": ("token_hex",),
}
OPTIONAL_FIELDS = {"REGISTER": ("phone",)}


def pack_frame(payload: bytes) -> bytes:
    if len(payload) > MAX_PAYLOAD:
        raise FrameError("OVERSIZE", f"{len(payload)} > {MAX_PAYLOAD}")
    return HEADER.pack(len(payload)) + payload


def split_frame(data: bytes) -> tuple[bytes, bytes]:
    """Return ``(payload, remainder)`` for the first frame in ``data``."""
    if len(data) < HEADER.size:
        raise FrameError("SHORT_READ", "incomplete length header")
    (n,) = HEADER.unpack_from(data)
    if n > MAX_PAYLOAD:
        raise FrameError("OVERSIZE", f"{n} > {MAX_PAYLOAD}")
    end = HEADER.size + n
    if len(data) < end:
        raise FrameError("SHORT_READ", f"need {n} payload bytes, have {len(data) - HEADER.size}")
    return data[HEADER.size:end], data[end:]


def validate_message(msg) -> dict:
    if not isinstance(msg, dict) or not isinstance(msg.get("t"), str):
        raise FrameError("MALFORMED_JSON", "message must be an object with a string 't'")
    kind = msg["t"]
    if kind not in REQUIRED_FIELDS:
        raise FrameError("UNKNOWN_TYPE", repr(kind))
    required = REQUIRED_FIELDS[kind]
    allowed = {"t", *required, *OPTIONAL_FIELDS.get(kind, ())}
    missing = [k for k in required if k not in msg]
    extra = [k for k in msg if k not in allowed]
    if missing or extra:
        raise FrameError("MALFORMED_JSON", f"{kind}: missing {missing}, unexpected {extra}")
    if not all(isinstance(v, str) for v in msg.values()):
        raise FrameError("MALFORMED_JSON", f"{kind}: all fields must be strings")
    if kind == "RESULT" and msg["outcome"] not in (PROCEED, DENIED):
        raise FrameError("MALFORMED_JSON", f"bad outcome {msg['outcome']!r}")
    if kind == "TOKEN" and not all(c in string.hexdigits for c in msg["token_hex"]):
        raise FrameError("MALFORMED_JSON", "token_hex is not hex")
    return msg


def encode_payload(msg: dict) -> bytes:
    validate_message(msg)
    return json.dumps(msg, ensure_ascii=False, separators=(",", ":")).encode("utf-8")


def decode_payload(payload: bytes) -> dict:
    try:
        obj = json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FrameError("MALFORMED_JSON", str(exc)) from exc
    return validate_message(obj)


def encode_frame(msg: dict) -> bytes:
    return pack_frame(encode_payload(msg))


def decode_frame(data: bytes) -> dict:
    payload, rest = split_frame(data)
    if rest:
        raise FrameError("MALFORMED_JSON", f"{len(rest)} trailing bytes after frame")
    return decode_payload(payload)


def recv_exact(sock, n: int) -> bytes | None:
    """Read exactly ``n`` bytes; None on clean EOF before the first byte."""
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            if not buf:
                return None
            raise FrameError("SHORT_READ", f"connection closed after {len(buf)} of {n} bytes")
        buf += chunk
    return bytes(buf)


def recv_frame(sock) -> bytes | None:
    """Read one raw frame (header included) from a socket; None on EOF."""
    header = recv_exact(sock, HEADER.size)
    if header is None:
        return None
    (n,) = HEADER.unpack(header)
    if n > MAX_PAYLOAD:
        raise FrameError("OVERSIZE", f"{n} > {MAX_PAYLOAD}")
    payload = recv_exact(sock, n) if n else b""
    if payload is None:
        raise FrameError("SHORT_READ", "connection closed before payload")
    return header + payload


def result(outcome: str) -> dict:
    return {"t": "RESULT", "outcome": outcome}
