"""Persistent account data shared by the gatekeeper and the store."""
from __future__ import annotations

from dataclasses import dataclass

from .identity import Imei, Imsi, LoginName
from .matrix_hash import Codebook, SelectionPlan, ShuffleLabel


@dataclass(frozen=True)
class FieldData:
    """Everything needed to re-derive one login field's identifier.

    ``credential`` is the registered (normalized) text for that field. It is
    kept so the whole record stays recomputable at rest.
    """

    credential: str
    codebook: Codebook
    labels: tuple[ShuffleLabel, ...]
    plan: SelectionPlan
    identifier: str
    digest: bytes

    @property
    def length(self) -> int:
        return len(self.credential)


@dataclass(frozen=True)
class ApData:
    plan: SelectionPlan
    identifier: str
    digest: bytes


@dataclass(frozen=True)
class AccountRecord:
    account_id: str
    login_name: LoginName
    imei: Imei
    imsi: Imsi
    salt: bytes
    un: FieldData
    pn: FieldData | None
    lp: FieldData
    ap: ApData

    def name_fields(self) -> list[FieldData]:
        return [self.un] if self.pn is None else [self.un, self.pn]
