"""Command-line entry point: ``trident <command>``."""
from __future__ import annotations

import argparse
import getpass
import logging
import os
import sys

from . import fixtures
from .entropy import StreamEntropy, SystemEntropy
from .errors import StoreError, TridentError
from .gatekeeper import Gatekeeper, enroll
from .identity import validate_imei, validate_imsi
from .matrix_hash import apply_shuffle_step, compose_authentication_password, build_matrix, extract_identifier
from .store import AccountStore
from .wire.client import Handset, LocalChannel, SimDevice, TcpChannel, Verdict
from .wire.scenarios import EXPECTED_VERDICTS, Scenario, run_scenario
from .wire.server import DEFAULT_PORT, ServerConnection, run_server

PRODUCTION_ENV = "TRIDENT_PRODUCTION"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _entropy(args):
    if args.seed is None:
        return SystemEntropy()
    if os.environ.get(PRODUCTION_ENV):
        raise UsageError(f"--seed is refused when {PRODUCTION_ENV} is set")
    try:
        return StreamEntropy.from_seed(args.seed)
    except ValueError:
        raise UsageError("--seed must be hex") from None


def _store(args) -> AccountStore:
    try:
        return AccountStore.from_env(args.store)
    except StoreError as exc:
        if exc.code == "NO_STORE":
            raise UsageError(exc.detail) from None
        raise


def _ask(value, prompt, secret=False):
    if value is not None:
        return value
    return getpass.getpass(prompt) if secret else input(prompt)


def cmd_register(args) -> int:
    store = _store(args)
    enrollment = enroll(
        args.name, args.password, args.imei, args.imsi,
        phone_raw=args.phone, entropy=_entropy(args), account_id=args.account_id,
        strict_luhn=not args.no_luhn,
    )
    store.save_account(enrollment.record)
    print(f"registered {enrollment.record.account_id}")
    print(f"ap_policy_attempts={enrollment.ap_attempts}")
    return EXIT_OK


def cmd_login(args) -> int:
    name = _ask(args.name, "login name: ")
    password = _ask(args.password, "login password: ", secret=True)
    device = SimDevice(validate_imei(_ask(args.imei, "IMEI: "), not args.no_luhn),
                       validate_imsi(_ask(args.imsi, "IMSI: ")))
    entropy = _entropy(args)
    if args.connect:
        channel = TcpChannel(args.host, args.port or DEFAULT_PORT)
    else:
        gatekeeper = Gatekeeper(_store(args), entropy=entropy)
        channel = LocalChannel(ServerConnection(gatekeeper, strict_luhn=not args.no_luhn))
    outcome = Handset(device, channel, entropy).login(name, password)
    print(outcome.verdict.value)
    if outcome.token is not None:
        print(f"token={outcome.token.hex()}")
    return EXIT_OK if outcome.verdict is Verdict.AUTHENTICATED else EXIT_FAIL


def cmd_serve(args) -> int:
    gatekeeper = Gatekeeper(_store(args), entropy=_entropy(args))
    run_server(gatekeeper, args.host, args.port or DEFAULT_PORT, strict_luhn=not args.no_luhn)
    return EXIT_OK


def cmd_demo_fig1(args) -> int:
    matrix = fixtures.fig1_matrix()
    print(matrix.render())
    rows = matrix.rows
    text = rows[0].string
    for row in rows[1:]:
        text = apply_shuffle_step(text, row.string, row.label)
        print(f"{row.label}: {text}")
    ap = compose_authentication_password(matrix)
    print(f"AP={ap}")
    return EXIT_OK if ap == fixtures.FIG1_AP else EXIT_FAIL


def cmd_demo_fig2(args) -> int:
    matrix = fixtures.fig2_matrix()
    print(matrix.render())
    print("plan=" + " ".join(f"{row}:{col.value}" for row, col in fixtures.FIG2_PLAN))
    identifier = extract_identifier(matrix, fixtures.FIG2_PLAN)
    print(f"IDENTIFIER={identifier}")
    return EXIT_OK if identifier == fixtures.FIG2_IDENTIFIER else EXIT_FAIL


def cmd_attack(args) -> int:
    try:
        scenario = Scenario.parse(args.scenario)
    except TridentError:
        raise UsageError(f"unknown scenario {args.scenario!r}; choose from "
                         + ", ".join(s.cli_name for s in Scenario)) from None
    report = run_scenario(scenario, transport="tcp" if args.tcp else "local")
    if args.transcript:
        with open(args.transcript, "w", encoding="utf-8") as fh:
            fh.write(report.transcript.to_text())
    print(f"expected={EXPECTED_VERDICTS[scenario].value}")
    print(report.verdict.value)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_audit(args) -> int:
    store = _store(args)
    problems = store.audit()
    for account_id, issues in problems.items():
        for issue in issues:
            print(f"{account_id}: {issue}")
    print(f"audited {len(store)} accounts, {len(problems)} with problems")
    return EXIT_FAIL if problems else EXIT_OK


def cmd_inspect(args) -> int:
    record = _store(args).load_account(args.account)
    data = getattr(record, args.field)
    if data is None:
        print(f"{args.account} has no {args.field} field", file=sys.stderr)
        return EXIT_FAIL
    print(build_matrix(data.credential, data.codebook, data.labels).render())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trident", description=__doc__)
    parser.add_argument("--store", help="account store file (default: $TRIDENT_STORE_PATH)")
    parser.add_argument("--port", type=int, help=f"server port (default {DEFAULT_PORT})")
    parser.add_argument("--seed", help="hex entropy to replay for reproducible runs")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    def device_args(p, required):
        p.add_argument("--imei", required=required)
        p.add_argument("--imsi", required=required)
        p.add_argument("--no-luhn", action="store_true", help="skip the IMEI check digit")

    p = sub.add_parser("register", help="register an account")
    p.add_argument("--name", required=True)
    p.add_argument("--password", required=True)
    p.add_argument("--phone")
    p.add_argument("--account-id")
    device_args(p, True)
    p.set_defaults(func=cmd_register)

    p = sub.add_parser("login", help="log in from a simulated handset")
    p.add_argument("--name")
    p.add_argument("--password")
    p.add_argument("--connect", action="store_true", help="log in to a running server over TCP")
    p.add_argument("--host", default="127.0.0.1")
    device_args(p, False)
    p.set_defaults(func=cmd_login)

    p = sub.add_parser("serve", help="run the reference server")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--no-luhn", action="store_true")
    p.set_defaults(func=cmd_serve)

    sub.add_parser("demo-fig1", help="login password dp7a3k -> AP").set_defaults(func=cmd_demo_fig1)
    sub.add_parser("demo-fig2", help="username benz428 -> identifier").set_defaults(func=cmd_demo_fig2)

    p = sub.add_parser("attack", help="run an attack scenario")
    p.add_argument("scenario", help=", ".join(s.cli_name for s in Scenario))
    p.add_argument("--tcp", action="store_true", help="run over TCP loopback")
    p.add_argument("--transcript", help="write the frame hex dump here")
    p.set_defaults(func=cmd_attack)

    sub.add_parser("audit", help="check at-rest integrity").set_defaults(func=cmd_audit)

    p = sub.add_parser("inspect", help="print an account's matrix")
    p.add_argument("account")
    p.add_argument("field", choices=["un", "pn", "lp"])
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"trident: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TridentError as exc:
        print(f"trident: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
