"""Registration and the three verification gates.

Every gate pairs a combined identity (credential+IMEI+IMSI, salted digest)
with an identifier extracted from the credential's matrix. IDENTIFY compares
the digest; VERIFY rebuilds the matrix from the stored codebook and labels
and compares the extracted identifier. Both must pass.

Registration draws its randomness in a fixed order, which is what makes a
recorded entropy stream replay to the same account:

1. username: codebook, labels, selection plan
2. phone number (if any): codebook, labels, selection plan
3. login password: codebook, labels, selection plan, AP selection plan
4. login-password codebook entries redrawn until the AP meets policy
5. 16-byte salt
"""
from __future__ import annotations

import enum
import logging
import threading
import time
from dataclasses import dataclass, field
from typing import Callable

from .entropy import Entropy, SystemEntropy
from .errors import MatrixError, RegistrationError, ValidationError
from .identity import (
    SALT_BYTES,
    Imei,
    Imsi,
    NameKind,
    check_authentication_password_policy,
    check_login_password_policy,
    combine_identity,
    normalize_login_name,
    validate_imei,
    validate_imsi,
)
from .matrix_hash import (
    Matrix,
    build_matrix,
    compose_authentication_password,
    draw_selection_plan,
    extract_identifier,
    generate_codebook,
    matrix_labels,
    redraw_entries,
)
from .records import AccountRecord, ApData, FieldData
from .store import AccountStore, constant_time_equal, ct_equal_str

log = logging.getLogger(__name__)

MAX_POLICY_ATTEMPTS = 64
TOKEN_BYTES = 32
TOKEN_TTL = 600.0
DENIED_MESSAGE = "access denied"
PROCEED_MESSAGE = "proceed"


@dataclass(frozen=True)
class Device:
    imei: Imei
    imsi: Imsi


class Stage(str, enum.Enum):
    START = "START"
    NAME_VERIFIED = "NAME_VERIFIED"
    PASSWORD_VERIFIED = "PASSWORD_VERIFIED"
    AUTHENTICATED = "AUTHENTICATED"
    DENIED = "DENIED"


class DenyReason(str, enum.Enum):
    WRONG_NAME = "WRONG_NAME"
    WRONG_PASSWORD = "WRONG_PASSWORD"
    WRONG_DEVICE = "WRONG_DEVICE"
    WRONG_SERVICE = "WRONG_SERVICE"
    LENGTH_MISMATCH = "LENGTH_MISMATCH"
    IDENTIFIER_MISMATCH = "IDENTIFIER_MISMATCH"
    POLICY_VIOLATION = "POLICY_VIOLATION"
    OUT_OF_ORDER = "OUT_OF_ORDER"
    AP_MISMATCH = "AP_MISMATCH"


class Outcome(str, enum.Enum):
    PROCEED = "PROCEED"
    DENY = "DENY"


@dataclass(frozen=True)
class GateResult:
    outcome: Outcome
    external_message: str

    @property
    def proceed(self) -> bool:
        return self.outcome is Outcome.PROCEED


@dataclass(frozen=True)
class AuthResult(GateResult):
    token: bytes | None = None


_PROCEED = GateResult(Outcome.PROCEED, PROCEED_MESSAGE)
_DENY = GateResult(Outcome.DENY, DENIED_MESSAGE)


@dataclass
class GateSession:
    session_id: str
    device: Device
    account_id: str | None = None
    stage: Stage = Stage.START
    deny_reason: DenyReason | None = None
    # Live only between gate 2 and gate 3.
    _lp_matrix: Matrix | None = field(default=None, repr=False)
    _ap: str | None = field(default=None, repr=False)

    def __setattr__(self, name, value):
        if name == "device" and "device" in self.__dict__:
            raise AttributeError("session device is fixed at creation")
        super().__setattr__(name, value)


# -- registration ------------------------------------------------------------

@dataclass(frozen=True)
class Enrollment:
    record: AccountRecord
    ap_attempts: int


def _as_imei(value: Imei | str, strict_luhn: bool) -> Imei:
    return value if isinstance(value, Imei) else validate_imei(value, strict_luhn)


def _as_imsi(value: Imsi | str) -> Imsi:
    return value if isinstance(value, Imsi) else validate_imsi(value)


def _draw_field(credential: str, entropy: Entropy):
    codebook = generate_codebook(entropy)
    matrix = build_matrix(credential, codebook, entropy=entropy)
    plan = draw_selection_plan(entropy, len(matrix))
    return codebook, matrix, plan


def _field(credential, codebook, matrix, plan, device: Device, salt: bytes) -> FieldData:
    return FieldData(
        credential=credential,
        codebook=codebook,
        labels=tuple(matrix_labels(matrix)),
        plan=plan,
        identifier=extract_identifier(matrix, plan),
        digest=combine_identity(credential, device.imei, device.imsi, salt).digest,
    )


def enroll(
    login_name_raw: str,
    login_password: str,
    imei: Imei | str,
    imsi: Imsi | str,
    phone_raw: str | None = None,
    entropy: Entropy | None = None,
    account_id: str | None = None,
    strict_luhn: bool = True,
    max_attempts: int = MAX_POLICY_ATTEMPTS,
) -> Enrollment:
    """Build a complete account record; also reports how many codebook draws
    the AP policy needed."""
    entropy = entropy or SystemEntropy()
    name = normalize_login_name(login_name_raw)
    phone = None
    if phone_raw is not None:
        phone = normalize_login_name(phone_raw)
        if phone.kind is not NameKind.PHONE_NUMBER:
            raise ValidationError("BAD_PHONE", "phone number must contain digits only")
        if phone.normalized == name.normalized:
            raise ValidationError("BAD_PHONE", "phone number equals the login name")
    lp = check_login_password_policy(login_password).value
    device = Device(_as_imei(imei, strict_luhn), _as_imsi(imsi))

    un_parts = _draw_field(name.normalized, entropy)
    pn_parts = _draw_field(phone.normalized, entropy) if phone else None
    lp_codebook, lp_matrix, lp_plan = _draw_field(lp, entropy)
    while True:
        ap_plan = draw_selection_plan(entropy, len(lp_matrix))
        if set(ap_plan) != set(lp_plan):
            break

    attempts = 1
    ap = compose_authentication_password(lp_matrix)
    while not check_authentication_password_policy(ap):
        if attempts >= max_attempts:
            raise RegistrationError("POLICY_EXHAUSTED", f"no compliant AP after {attempts} draws")
        lp_codebook = redraw_entries(lp_codebook, lp, entropy)
        lp_matrix = build_matrix(lp, lp_codebook, matrix_labels(lp_matrix))
        ap = compose_authentication_password(lp_matrix)
        attempts += 1

    salt = entropy.token_bytes(SALT_BYTES)
    record = AccountRecord(
        account_id=account_id or name.normalized,
        login_name=name,
        imei=device.imei,
        imsi=device.imsi,
        salt=salt,
        un=_field(name.normalized, *un_parts, device, salt),
        pn=_field(phone.normalized, *pn_parts, device, salt) if phone else None,
        lp=_field(lp, lp_codebook, lp_matrix, lp_plan, device, salt),
        ap=ApData(
            plan=ap_plan,
            identifier=extract_identifier(lp_matrix, ap_plan),
            digest=combine_identity(ap, device.imei, device.imsi, salt).digest,
        ),
    )
    return Enrollment(record, attempts)


def register_account(*args, **kwargs) -> AccountRecord:
    """Same arguments as :func:`enroll`; returns only the record."""
    return enroll(*args, **kwargs).record


# -- gates ---------------------------------------------------------------------

class Gatekeeper:
    """Drives sessions through name gate, password gate and server
    authentication point against an :class:`AccountStore`."""

    def __init__(
        self,
        store: AccountStore,
        entropy: Entropy | None = None,
        clock: Callable[[], float] = time.monotonic,
        token_ttl: float = TOKEN_TTL,
    ):
        self.store = store
        self.entropy = entropy or SystemEntropy()
        self.clock = clock
        self.token_ttl = token_ttl
        self._tokens: dict[bytes, tuple[str, float]] = {}
        self._token_lock = threading.Lock()

    def register(self, login_name_raw, login_password, imei, imsi, phone_raw=None,
                 account_id=None, strict_luhn=True) -> AccountRecord:
        record = register_account(
            login_name_raw, login_password, imei, imsi, phone_raw=phone_raw,
            entropy=self.entropy, account_id=account_id, strict_luhn=strict_luhn,
        )
        self.store.save_account(record)
        log.info("registered account %s", record.account_id)
        return record

    def open_session(self, device: Device) -> GateSession:
        return GateSession(self.entropy.token_bytes(16).hex(), device)

    @staticmethod
    def _deny(session: GateSession, reason: DenyReason) -> GateResult:
        session.stage = Stage.DENIED
        session.deny_reason = reason
        session._lp_matrix = session._ap = None
        log.debug("session %s denied: %s", session.session_id, reason.value)
        return _DENY

    @staticmethod
    def _identity_reason(record: AccountRecord, device: Device, wrong_credential: DenyReason):
        imei_ok = ct_equal_str(device.imei.digits, record.imei.digits)
        imsi_ok = ct_equal_str(device.imsi.digits, record.imsi.digits)
        if not imei_ok:
            return DenyReason.WRONG_DEVICE
        if not imsi_ok:
            return DenyReason.WRONG_SERVICE
        return wrong_credential

    def gate_login_name(self, session: GateSession, entered_name_raw: str,
                        device: Device) -> GateResult:
        if session.stage is not Stage.START:
            return self._deny(session, DenyReason.OUT_OF_ORDER)
        if device != session.device:
            return self._deny(session, DenyReason.WRONG_DEVICE)
        try:
            name = normalize_login_name(entered_name_raw).normalized
        except ValidationError:
            return self._deny(session, DenyReason.WRONG_NAME)
        record = self.store.find_by_login_name(name)
        if record is None:
            return self._deny(session, DenyReason.WRONG_NAME)
        stored = record.pn if record.pn is not None and record.pn.credential == name else record.un

        digest = combine_identity(name, device.imei, device.imsi, record.salt).digest
        if not constant_time_equal(digest, stored.digest):
            return self._deny(session, self._identity_reason(record, device, DenyReason.WRONG_NAME))

        if len(name) != stored.length:
            return self._deny(session, DenyReason.LENGTH_MISMATCH)
        matrix = build_matrix(name, stored.codebook, stored.labels)
        if not ct_equal_str(extract_identifier(matrix, stored.plan), stored.identifier):
            return self._deny(session, DenyReason.IDENTIFIER_MISMATCH)

        session.account_id = record.account_id
        session.stage = Stage.NAME_VERIFIED
        return _PROCEED

    def gate_login_password(self, session: GateSession, entered_lp: str,
                            device: Device) -> GateResult:
        if session.stage is not Stage.NAME_VERIFIED:
            return self._deny(session, DenyReason.OUT_OF_ORDER)
        if device != session.device:
            return self._deny(session, DenyReason.WRONG_DEVICE)
        try:
            lp = check_login_password_policy(entered_lp).value
        except ValidationError:
            return self._deny(session, DenyReason.POLICY_VIOLATION)
        record = self.store.get(session.account_id)
        if record is None:
            return self._deny(session, DenyReason.WRONG_NAME)
        stored = record.lp

        digest = combine_identity(lp, device.imei, device.imsi, record.salt).digest
        if not constant_time_equal(digest, stored.digest):
            return self._deny(session, self._identity_reason(record, device, DenyReason.WRONG_PASSWORD))

        if len(lp) != stored.length:
            return self._deny(session, DenyReason.LENGTH_MISMATCH)
        try:
            matrix = build_matrix(lp, stored.codebook, stored.labels)
        except MatrixError:
            return self._deny(session, DenyReason.LENGTH_MISMATCH)
        if not ct_equal_str(extract_identifier(matrix, stored.plan), stored.identifier):
            return self._deny(session, DenyReason.IDENTIFIER_MISMATCH)

        session._lp_matrix = matrix
        session._ap = compose_authentication_password(matrix)
        session.stage = Stage.PASSWORD_VERIFIED
        return _PROCEED

    def gate_server_authentication(self, session: GateSession) -> AuthResult:
        if session.stage is not Stage.PASSWORD_VERIFIED:
            self._deny(session, DenyReason.OUT_OF_ORDER)
            return AuthResult(Outcome.DENY, DENIED_MESSAGE)
        record = self.store.get(session.account_id)
        device = session.device
        ok = record is not None
        if ok:
            digest = combine_identity(session._ap, device.imei, device.imsi, record.salt).digest
            ok = constant_time_equal(digest, record.ap.digest)
            try:
                identifier = extract_identifier(session._lp_matrix, record.ap.plan)
            except MatrixError:
                ok = False
            else:
                ok = ct_equal_str(identifier, record.ap.identifier) and ok
        if not ok:
            self._deny(session, DenyReason.AP_MISMATCH)
            return AuthResult(Outcome.DENY, DENIED_MESSAGE)

        session._lp_matrix = session._ap = None
        session.stage = Stage.AUTHENTICATED
        with self._token_lock:
            token = self.entropy.token_bytes(TOKEN_BYTES)
            self._tokens[token] = (session.account_id, self.clock() + self.token_ttl)
        return AuthResult(Outcome.PROCEED, PROCEED_MESSAGE, token)

    def check_token(self, token: bytes) -> str | None:
        """Account id for a live token, else None. Expired tokens are dropped."""
        with self._token_lock:
            entry = self._tokens.get(token)
            if entry is None:
                return None
            account_id, expires = entry
            if self.clock() >= expires:
                del self._tokens[token]
                return None
            return account_id
