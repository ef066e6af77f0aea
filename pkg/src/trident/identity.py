"""Identity elements: login name, login password, IMEI, IMSI, and the salted
combined identity ``credential+IMEI+IMSI``."""
from __future__ import annotations

import enum
import hashlib
import string
from dataclasses import dataclass

from .errors import ValidationError
from .matrix_hash import VALID_CHARS

IMEI_LENGTH = 15
IMSI_LENGTH = 15
MAX_LOGIN_NAME = 32
MIN_LOGIN_PASSWORD, MAX_LOGIN_PASSWORD = 5, 15
MIN_AP_LENGTH = 20
SALT_BYTES = 16
SEPARATOR = b"\x1f"

_VALID = frozenset(VALID_CHARS)


def is_valid_login_text(text: str) -> bool:
    """True iff ``text`` is non-empty and consists solely of a-z0-9."""
    return bool(text) and all(c in _VALID for c in text)


def luhn_check_digit(body: str) -> int:
    """Check digit that makes ``body + digit`` Luhn-valid."""
    total = 0
    # The rightmost body digit sits next to the check digit and is doubled.
    for i, ch in enumerate(reversed(body)):
        d = int(ch)
        if i % 2 == 0:
            d *= 2
            if d > 9:
                d -= 9
        total += d
    return (10 - total % 10) % 10


def luhn_valid(number: str) -> bool:
    return number.isdigit() and luhn_check_digit(number[:-1]) == int(number[-1])


def _check_digits(text: str, length: int) -> None:
    if len(text) != length:
        raise ValidationError("BAD_LENGTH", f"expected {length} digits, got {len(text)}")
    if not all(c in string.digits for c in text):
        raise ValidationError("BAD_CHAR", "only decimal digits are allowed")


@dataclass(frozen=True)
class Imei:
    digits: str

    def __str__(self) -> str:
        return self.digits


@dataclass(frozen=True)
class Imsi:
    digits: str

    def __str__(self) -> str:
        return self.digits


def validate_imei(text: str, strict_luhn: bool = True) -> Imei:
    _check_digits(text, IMEI_LENGTH)
    if strict_luhn and not luhn_valid(text):
        raise ValidationError("BAD_CHECKSUM", "IMEI fails the Luhn check")
    return Imei(text)


def validate_imsi(text: str) -> Imsi:
    _check_digits(text, IMSI_LENGTH)
    return Imsi(text)


class NameKind(str, enum.Enum):
    USERNAME = "USERNAME"
    PHONE_NUMBER = "PHONE_NUMBER"


@dataclass(frozen=True)
class LoginName:
    normalized: str
    kind: NameKind


def normalize_login_name(raw: str) -> LoginName:
    """Reduce a typed login name to the a-z0-9 form that gets hashed.

    For e-mail addresses only the local part is kept. A result made only of
    digits, typed without any letters, is a phone number.
    """
    local = raw.split("@", 1)[0]
    lowered = local.lower()
    normalized = "".join(c for c in lowered if c in _VALID)
    if not normalized:
        raise ValidationError("EMPTY_AFTER_NORMALIZATION", repr(raw))
    if len(normalized) > MAX_LOGIN_NAME:
        raise ValidationError("TOO_LONG", f"login name exceeds {MAX_LOGIN_NAME} characters")
    has_letters = any(c.isalpha() for c in raw)
    kind = NameKind.PHONE_NUMBER if normalized.isdigit() and not has_letters else NameKind.USERNAME
    return LoginName(normalized, kind)


@dataclass(frozen=True)
class LoginPassword:
    value: str


def check_login_password_policy(value: str) -> LoginPassword:
    if len(value) < MIN_LOGIN_PASSWORD:
        raise ValidationError("TOO_SHORT", f"minimum {MIN_LOGIN_PASSWORD} characters")
    if len(value) > MAX_LOGIN_PASSWORD:
        raise ValidationError("TOO_LONG", f"maximum {MAX_LOGIN_PASSWORD} characters")
    if not is_valid_login_text(value):
        raise ValidationError("INVALID_CHARACTER", "only a-z and 0-9 are allowed")
    return LoginPassword(value)


@dataclass(frozen=True)
class PolicyVerdict:
    ok: bool
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def check_authentication_password_policy(value: str) -> PolicyVerdict:
    """At least 20 characters covering upper, lower, digit and symbol."""
    if len(value) < MIN_AP_LENGTH:
        return PolicyVerdict(False, f"length {len(value)} < {MIN_AP_LENGTH}")
    missing = [
        name
        for name, members in (
            ("uppercase", string.ascii_uppercase),
            ("lowercase", string.ascii_lowercase),
            ("digit", string.digits),
            ("symbol", string.punctuation),
        )
        if not any(c in members for c in value)
    ]
    if missing:
        return PolicyVerdict(False, "missing " + ", ".join(missing))
    return PolicyVerdict(True)


@dataclass(frozen=True)
class CombinedIdentity:
    canonical: bytes
    salt: bytes
    digest: bytes


def canonical_identity(credential: str, imei: Imei, imsi: Imsi) -> bytes:
    return SEPARATOR.join(
        (credential.encode("utf-8"), imei.digits.encode("ascii"), imsi.digits.encode("ascii"))
    )


def combine_identity(credential: str, imei: Imei, imsi: Imsi, salt: bytes) -> CombinedIdentity:
    """``SHA-256(salt || credential 0x1F IMEI 0x1F IMSI)``."""
    if len(salt) != SALT_BYTES:
        raise ValidationError("BAD_SALT", f"salt must be {SALT_BYTES} bytes")
    canonical = canonical_identity(credential, imei, imsi)
    return CombinedIdentity(canonical, salt, hashlib.sha256(salt + canonical).digest())
