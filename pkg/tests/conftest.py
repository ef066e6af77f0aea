import pytest

from trident import fixtures
from trident.gatekeeper import Device, Gatekeeper
from trident.entropy import StreamEntropy
from trident.identity import validate_imei, validate_imsi
from trident.store import AccountStore

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def report():
    """Record one PASS/FAIL line for an acceptance criterion."""

    def _report(criterion, ok, detail=""):
        ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")
        return ok

    return _report


@pytest.fixture
def victim_device():
    return Device(validate_imei(fixtures.VICTIM_IMEI), validate_imsi(fixtures.VICTIM_IMSI))


@pytest.fixture
def attacker_device():
    return Device(validate_imei(fixtures.ATTACKER_IMEI), validate_imsi(fixtures.ATTACKER_IMSI))


@pytest.fixture
def gatekeeper():
    return Gatekeeper(AccountStore(), entropy=StreamEntropy.derived("test-server"))


@pytest.fixture
def fixture_record(gatekeeper):
    return fixtures.register_fixture(gatekeeper)
