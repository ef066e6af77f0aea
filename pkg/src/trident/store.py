"""Account store: newline-delimited JSON, one account per line, replaced
atomically (temp file, fsync, rename, directory fsync) on every write."""
from __future__ import annotations

import json
import os
import threading
from pathlib import Path
from typing import Callable, Iterable, Iterator

from filelock import FileLock

from .errors import MatrixError, StoreError
from .identity import (
    LoginName,
    NameKind,
    check_authentication_password_policy,
    combine_identity,
    validate_imei,
    validate_imsi,
)
from .matrix_hash import (
    Codebook,
    SelectionPlan,
    ShuffleLabel,
    build_matrix,
    compose_authentication_password,
    extract_identifier,
)
from .records import AccountRecord, ApData, FieldData

STORE_ENV = "TRIDENT_STORE_PATH"

# Fault points, in write order. A hook raising at any of them simulates a crash.
FAULT_POINTS = (
    "after_temp_open",
    "after_temp_write",
    "after_temp_fsync",
    "before_rename",
    "after_rename",
)


def constant_time_equal(a: bytes, b: bytes) -> bool:
    """Byte equality whose running time does not depend on where ``a`` and
    ``b`` first differ: every byte of the shorter input is inspected."""
    diff = len(a) ^ len(b)
    for x, y in zip(a, b):
        diff |= x ^ y
    return diff == 0


def ct_equal_str(a: str, b: str) -> bool:
    return constant_time_equal(a.encode("utf-8"), b.encode("utf-8"))


# -- serialization -----------------------------------------------------------

def _field_to_json(f: FieldData) -> dict:
    return {
        "credential": f.credential,
        "length": f.length,
        "codebook": {ch: [digit, text] for ch, (digit, text) in f.codebook.entries.items()},
        "labels": [str(label) for label in f.labels],
        "plan": [[row, col.value] for row, col in f.plan],
        "identifier": f.identifier,
        "digest_hex": f.digest.hex(),
    }


def _field_from_json(d: dict) -> FieldData:
    f = FieldData(
        credential=d["credential"],
        codebook=Codebook({ch: (int(v[0]), v[1]) for ch, v in d["codebook"].items()}),
        labels=tuple(ShuffleLabel.parse(t) for t in d["labels"]),
        plan=SelectionPlan((row, col) for row, col in d["plan"]),
        identifier=d["identifier"],
        digest=bytes.fromhex(d["digest_hex"]),
    )
    if d["length"] != f.length:
        raise ValueError("stored length disagrees with credential")
    return f


def record_to_json(record: AccountRecord) -> dict:
    return {
        "account_id": record.account_id,
        "login_name": {"normalized": record.login_name.normalized, "kind": record.login_name.kind.value},
        "imei": record.imei.digits,
        "imsi": record.imsi.digits,
        "salt_hex": record.salt.hex(),
        "un": _field_to_json(record.un),
        "pn": None if record.pn is None else _field_to_json(record.pn),
        "lp": _field_to_json(record.lp),
        "ap": {
            "plan": [[row, col.value] for row, col in record.ap.plan],
            "identifier": record.ap.identifier,
            "digest_hex": record.ap.digest.hex(),
        },
    }


def record_from_json(d: dict) -> AccountRecord:
    return AccountRecord(
        account_id=d["account_id"],
        login_name=LoginName(d["login_name"]["normalized"], NameKind(d["login_name"]["kind"])),
        imei=validate_imei(d["imei"], strict_luhn=False),
        imsi=validate_imsi(d["imsi"]),
        salt=bytes.fromhex(d["salt_hex"]),
        un=_field_from_json(d["un"]),
        pn=None if d["pn"] is None else _field_from_json(d["pn"]),
        lp=_field_from_json(d["lp"]),
        ap=ApData(
            plan=SelectionPlan((row, col) for row, col in d["ap"]["plan"]),
            identifier=d["ap"]["identifier"],
            digest=bytes.fromhex(d["ap"]["digest_hex"]),
        ),
    )


def dumps_record(record: AccountRecord) -> str:
    return json.dumps(record_to_json(record), ensure_ascii=False, separators=(",", ":"))


def loads_record(line: str) -> AccountRecord:
    try:
        return record_from_json(json.loads(line))
    except (ValueError, KeyError, TypeError, MatrixError) as exc:
        raise StoreError("CORRUPT_RECORD", f"unparseable record: {exc}") from exc


# -- integrity ---------------------------------------------------------------

def record_problems(record: AccountRecord) -> list[str]:
    """Recompute every derived value of ``record``; return what disagrees."""
    problems = []
    named = [("un", record.un), ("lp", record.lp)]
    if record.pn is not None:
        named.insert(1, ("pn", record.pn))
    lp_matrix = None
    for name, f in named:
        try:
            matrix = build_matrix(f.credential, f.codebook, f.labels)
            identifier = extract_identifier(matrix, f.plan)
        except MatrixError as exc:
            problems.append(f"{name}: {exc.code}")
            continue
        if name == "lp":
            lp_matrix = matrix
        if not ct_equal_str(identifier, f.identifier):
            problems.append(f"{name}: identifier mismatch")
        digest = combine_identity(f.credential, record.imei, record.imsi, record.salt).digest
        if not constant_time_equal(digest, f.digest):
            problems.append(f"{name}: combined identity digest mismatch")
    if lp_matrix is not None:
        try:
            ap_identifier = extract_identifier(lp_matrix, record.ap.plan)
        except MatrixError as exc:
            problems.append(f"ap: {exc.code}")
        else:
            if not ct_equal_str(ap_identifier, record.ap.identifier):
                problems.append("ap: identifier mismatch")
        ap = compose_authentication_password(lp_matrix)
        digest = combine_identity(ap, record.imei, record.imsi, record.salt).digest
        if not constant_time_equal(digest, record.ap.digest):
            problems.append("ap: combined identity digest mismatch")
        if not check_authentication_password_policy(ap):
            problems.append("ap: policy violation")
        if set(record.ap.plan) == set(record.lp.plan):
            problems.append("ap: plan equals lp plan")
    return problems


def check_record(record: AccountRecord) -> AccountRecord:
    problems = record_problems(record)
    if problems:
        raise StoreError("CORRUPT_RECORD", f"{record.account_id}: " + "; ".join(problems))
    return record


# -- the store ---------------------------------------------------------------

class AccountStore:
    """Accounts keyed by id, with a login-name index (username and phone).

    ``path=None`` keeps everything in memory. Otherwise the file is read once
    at open, and each save rewrites it atomically under an exclusive lock.
    """

    def __init__(self, path: str | os.PathLike | None = None,
                 fault_hook: Callable[[str], None] | None = None):
        self.path = Path(path) if path is not None else None
        self._fault = fault_hook or (lambda point: None)
        self._mutex = threading.RLock()
        self._records: dict[str, AccountRecord] = {}
        self._lines: dict[str, str] = {}
        self._by_name: dict[str, str] = {}
        self._stamp = None
        if self.path is not None:
            self._lock = FileLock(str(self.path) + ".lock")
            self._load()

    @classmethod
    def from_env(cls, override: str | None = None) -> "AccountStore":
        path = override or os.environ.get(STORE_ENV)
        if not path:
            raise StoreError("NO_STORE", f"pass --store or set {STORE_ENV}")
        return cls(path)

    def _file_stamp(self):
        try:
            st = os.stat(self.path)
        except FileNotFoundError:
            return None
        return (st.st_ino, st.st_size, st.st_mtime_ns)

    def _load(self) -> None:
        self._stamp = self._file_stamp()
        if self._stamp is None:
            return
        with self.path.open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                record = loads_record(line)
                self._index(record, line)

    def _index(self, record: AccountRecord, line: str) -> None:
        self._records[record.account_id] = record
        self._lines[record.account_id] = line
        for f in record.name_fields():
            self._by_name[f.credential] = record.account_id

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[AccountRecord]:
        return iter(list(self._records.values()))

    def _duplicate(self, record: AccountRecord) -> bool:
        if record.account_id in self._records:
            return True
        return any(f.credential in self._by_name for f in record.name_fields())

    def save_account(self, record: AccountRecord) -> None:
        line = dumps_record(record)
        with self._mutex:
            if self.path is None:
                if self._duplicate(record):
                    raise StoreError("DUPLICATE_ACCOUNT", record.account_id)
                self._index(record, line)
                return
            with self._lock:
                # Another process may have committed since we last read.
                self._reload()
                if self._duplicate(record):
                    raise StoreError("DUPLICATE_ACCOUNT", record.account_id)
                self._write(list(self._lines.values()) + [line])
                self._index(record, line)

    def _reload(self) -> None:
        if self._file_stamp() == self._stamp:
            return
        self._records.clear()
        self._lines.clear()
        self._by_name.clear()
        self._load()

    def _write(self, lines: Iterable[str]) -> None:
        tmp = self.path.with_name(self.path.name + ".tmp")
        try:
            with open(tmp, "w", encoding="utf-8") as fh:
                self._fault("after_temp_open")
                fh.write("".join(line + "\n" for line in lines))
                fh.flush()
                self._fault("after_temp_write")
                os.fsync(fh.fileno())
                self._fault("after_temp_fsync")
            self._fault("before_rename")
            os.replace(tmp, self.path)
            self._fault("after_rename")
            self._fsync_dir()
            self._stamp = self._file_stamp()
        except OSError as exc:
            raise StoreError("IO_ERROR", str(exc)) from exc

    def _fsync_dir(self) -> None:
        fd = os.open(self.path.parent, os.O_RDONLY)
        try:
            os.fsync(fd)
        finally:
            os.close(fd)

    def get(self, account_id: str) -> AccountRecord | None:
        return self._records.get(account_id)

    def find_by_login_name(self, normalized: str) -> AccountRecord | None:
        account_id = self._by_name.get(normalized)
        return None if account_id is None else self._records[account_id]

    def load_account(self, key: str) -> AccountRecord:
        """Look up by account id, then by normalized login name; the record
        is integrity-checked before it is returned."""
        record = self.get(key) or self.find_by_login_name(key)
        if record is None:
            raise StoreError("NOT_FOUND", key)
        return check_record(record)

    def audit(self) -> dict[str, list[str]]:
        """Integrity problems per account id; empty when the store is sound."""
        return {r.account_id: p for r in self for p in [record_problems(r)] if p}
