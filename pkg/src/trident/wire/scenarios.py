"""Attack scenarios against a registered victim account.

Each scenario runs a full login over the wire (in-process or TCP loopback)
and reports the verdict the handset observed together with the transcript.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

from .. import fixtures
from ..entropy import Entropy, StreamEntropy
from ..errors import ScenarioError
from ..gatekeeper import Gatekeeper
from ..identity import luhn_check_digit, validate_imei, validate_imsi
from ..matrix_hash import build_matrix, compose_authentication_password
from ..records import AccountRecord
from ..store import AccountStore
from .client import Handset, LocalChannel, SimDevice, TcpChannel, Transcript, Verdict
from .server import ServerConnection, start_server


class Scenario(str, enum.Enum):
    HAPPY_PATH = "HAPPY_PATH"
    SIM_SWAP = "SIM_SWAP"
    STOLEN_CREDENTIALS = "STOLEN_CREDENTIALS"
    REPLAY_AP = "REPLAY_AP"
    WRONG_DEVICE = "WRONG_DEVICE"

    @classmethod
    def parse(cls, name: str) -> "Scenario":
        try:
            return cls(name.upper().replace("-", "_"))
        except ValueError:
            raise ScenarioError(detail=name) from None

    @property
    def cli_name(self) -> str:
        return self.value.lower().replace("_", "-")


EXPECTED_VERDICTS = {
    Scenario.HAPPY_PATH: Verdict.AUTHENTICATED,
    Scenario.SIM_SWAP: Verdict.DENIED_AT_NAME_GATE,
    Scenario.STOLEN_CREDENTIALS: Verdict.DENIED_AT_NAME_GATE,
    Scenario.WRONG_DEVICE: Verdict.DENIED_AT_NAME_GATE,
    Scenario.REPLAY_AP: Verdict.DENIED_BY_FIELD_FILTER,
}


def neighbour_imei(imei: str, position: int = 13) -> str:
    """A Luhn-valid IMEI whose body differs from ``imei`` in one digit."""
    body = list(imei[:14])
    body[position] = str((int(body[position]) + 1) % 10)
    body = "".join(body)
    return body + str(luhn_check_digit(body))


@dataclass
class ScenarioFixture:
    gatekeeper: Gatekeeper
    record: AccountRecord
    victim: SimDevice
    attacker: SimDevice
    victim_neighbour: SimDevice

    @classmethod
    def build(cls, entropy: Entropy | None = None) -> "ScenarioFixture":
        """Victim registered from the recorded fixture stream; the server's
        own randomness (session ids, tokens) comes from ``entropy``."""
        gatekeeper = Gatekeeper(AccountStore(), entropy=entropy or StreamEntropy.derived("server"))
        record = fixtures.register_fixture(gatekeeper)
        victim = SimDevice(validate_imei(fixtures.VICTIM_IMEI), validate_imsi(fixtures.VICTIM_IMSI), "victim")
        attacker = SimDevice(validate_imei(fixtures.ATTACKER_IMEI), validate_imsi(fixtures.ATTACKER_IMSI), "attacker")
        neighbour = SimDevice(
            validate_imei(neighbour_imei(fixtures.VICTIM_IMEI)),
            validate_imsi(fixtures.VICTIM_IMSI),
            "victim-neighbour",
        )
        return cls(gatekeeper, record, victim, attacker, neighbour)


@dataclass
class ScenarioReport:
    scenario: Scenario
    verdict: Verdict
    transcript: Transcript
    gate_calls: int | None = None

    @property
    def expected(self) -> Verdict:
        return EXPECTED_VERDICTS[self.scenario]

    @property
    def passed(self) -> bool:
        return self.verdict is self.expected


def _plan(scenario: Scenario, fx: ScenarioFixture):
    """(device, login name, login password) the handset will type."""
    name, lp = fixtures.FIG2_NAME_RAW, fixtures.FIG1_PASSWORD
    if scenario is Scenario.HAPPY_PATH:
        return fx.victim, name, lp
    if scenario is Scenario.SIM_SWAP:
        # The carrier moved the victim's number and subscription onto a SIM
        # now sitting in the attacker's handset.
        swapped = SimDevice(fx.attacker.imei, fx.victim.imsi, "attacker+swapped-sim")
        return swapped, fixtures.VICTIM_PHONE, lp
    if scenario is Scenario.STOLEN_CREDENTIALS:
        return fx.attacker, name, lp
    if scenario is Scenario.WRONG_DEVICE:
        return fx.victim_neighbour, name, lp
    if scenario is Scenario.REPLAY_AP:
        return fx.victim, name, fixtures.FIG1_AP
    raise ScenarioError(detail=str(scenario))  # pragma: no cover


def run_scenario(
    scenario: Scenario | str,
    fixture: ScenarioFixture | None = None,
    transport: str = "local",
    client_entropy: Entropy | None = None,
) -> ScenarioReport:
    if not isinstance(scenario, Scenario):
        scenario = Scenario.parse(scenario)
    fx = fixture or ScenarioFixture.build()
    device, name, lp = _plan(scenario, fx)
    client_entropy = client_entropy or StreamEntropy.derived("client-" + scenario.value)

    if transport == "local":
        connection = ServerConnection(fx.gatekeeper)
        handset = Handset(device, LocalChannel(connection), client_entropy)
        outcome = handset.login(name, lp)
        return ScenarioReport(scenario, outcome.verdict, handset.transcript, connection.gate_calls)
    if transport == "tcp":
        server = start_server(fx.gatekeeper)
        try:
            host, port = server.server_address[:2]
            handset = Handset(device, TcpChannel(host, port), client_entropy)
            outcome = handset.login(name, lp)
        finally:
            server.shutdown()
            server.server_close()
        return ScenarioReport(scenario, outcome.verdict, handset.transcript)
    raise ValueError(f"unknown transport {transport!r}")


def secret_strings(record: AccountRecord) -> set[str]:
    """Values that must never cross the wire: identifiers, converted strings
    of length 3 or more, and the AP."""
    secrets = {record.un.identifier, record.lp.identifier, record.ap.identifier}
    for f in record.name_fields() + [record.lp]:
        secrets.update(s for s in f.codebook.strings() if len(s) >= 3)
    if record.pn is not None:
        secrets.add(record.pn.identifier)
    lp = record.lp
    secrets.add(compose_authentication_password(build_matrix(lp.credential, lp.codebook, lp.labels)))
    return secrets


def scan_transcript(transcript: Transcript, secrets) -> list[str]:
    raw = transcript.raw_bytes()
    return sorted(s for s in secrets if s.encode("utf-8") in raw)
