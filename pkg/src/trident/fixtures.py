"""Golden vectors and reproducible fixture accounts.

The ``*_draws`` helpers are exact inverses of the random generators in
:mod:`trident.matrix_hash`: they produce the byte stream that, replayed
through :class:`~trident.entropy.StreamEntropy`, makes the generator return
the given value. Chaining them in registration draw order yields a recorded
entropy stream for a whole account.
"""
from __future__ import annotations

from .entropy import StreamEntropy
from .matrix_hash import (
    MAX_PLAN_CELLS,
    MIN_PLAN_CELLS,
    PRINTABLE,
    VALID_CHARS,
    Codebook,
    Column,
    Matrix,
    SelectionPlan,
    ShuffleLabel,
    build_matrix,
    generate_codebook,
    parse_labels,
    selectable_cells,
)

# Login password "dp7a3k" and its conversion table.
FIG1_PASSWORD = "dp7a3k"
FIG1_ENTRIES = {
    "d": (6, "3Mo&(E"),
    "p": (3, "vX#"),
    "7": (5, "z%9CP"),
    "a": (2, "?G"),
    "3": (3, "d$L"),
    "k": (1, "Q"),
}
# 4F and 16R are printed; 13F, 13R, 5F were recovered by exhaustive search.
FIG1_LABELS = parse_labels("4F", "16R", "13F", "13R", "5F")
FIG1_AFTER_4F = "3MovX#&(E"
FIG1_AFTER_16R = "3MovX#&(EPC9%z"
FIG1_AP = "3MovQX#&(EPC9L$d?G%z"

# Username "Benz428" (hashed as "benz428").
FIG2_NAME_RAW = "Benz428@woxinet.com"
FIG2_NAME = "benz428"
FIG2_ENTRIES = {
    "b": (3, "y]Q"),
    "e": (5, "#ws%8"),
    "n": (3, "O^&"),
    "z": (2, "$d"),
    "4": (3, ")Lh"),
    "2": (3, "zF="),
    "8": (1, "m"),
}
FIG2_LABELS = parse_labels("5F", "9R", "17R", "13F", "8F", "11F")
FIG2_PLAN = SelectionPlan(
    [(5, Column.LOGIN_CHAR), (3, Column.STRING), (4, Column.LABEL),
     (6, Column.LOGIN_CHAR), (6, Column.STRING)]
)
FIG2_IDENTIFIER = "4O^&17R2zF="

# Luhn-valid handsets and 15-digit subscriber ids for scenarios.
VICTIM_IMEI = "490154203237518"
VICTIM_IMSI = "310150123456789"
VICTIM_PHONE = "+1 415 555 0133"
ATTACKER_IMEI = "356938035643809"
ATTACKER_IMSI = "310260987654321"

FILLER_SEED = b"trident-fixture-filler"


def filled_codebook(entries: dict, seed: bytes = FILLER_SEED) -> Codebook:
    """A full codebook: the given entries, everything else from ``seed``."""
    return generate_codebook(StreamEntropy.derived(seed)).with_entries(entries)


def fig1_codebook() -> Codebook:
    return filled_codebook(FIG1_ENTRIES)


def fig2_codebook() -> Codebook:
    return filled_codebook(FIG2_ENTRIES, seed=FILLER_SEED + b"-un")


def fig1_matrix() -> Matrix:
    return build_matrix(FIG1_PASSWORD, fig1_codebook(), FIG1_LABELS)


def fig2_matrix() -> Matrix:
    return build_matrix(FIG2_NAME, fig2_codebook(), FIG2_LABELS)


# -- recorded-stream builders ----------------------------------------------

def codebook_draws(codebook: Codebook) -> bytes:
    out = bytearray()
    for ch in VALID_CHARS:
        digit, text = codebook[ch]
        out.append(digit - 1)
        out.extend(PRINTABLE.index(c) for c in text)
    return bytes(out)


def label_draws(labels) -> bytes:
    out = bytearray()
    for label in labels:
        out.append(label.point - 1)
        out.append("FR".index(label.direction))
    return bytes(out)


def plan_draws(plan, matrix_rows: int) -> bytes:
    pool = selectable_cells(matrix_rows)
    low = min(MIN_PLAN_CELLS, len(pool))
    high = min(MAX_PLAN_CELLS, len(pool))
    if not low <= len(plan) <= high:
        raise ValueError(f"plan size {len(plan)} outside {low}..{high}")
    out = bytearray([len(plan) - low])
    remaining = list(pool)
    for cell in plan:
        i = remaining.index((cell[0], Column(cell[1])))
        out.append(i)
        remaining.pop(i)
    return bytes(out)


def field_draws(codebook: Codebook, labels, plan, matrix_rows: int) -> bytes:
    return codebook_draws(codebook) + label_draws(labels) + plan_draws(plan, matrix_rows)


# LP and AP plans for the fixture account. Their cells are arbitrary but fixed.
FIXTURE_LP_PLAN = SelectionPlan(
    [(2, Column.STRING), (4, Column.LABEL), (1, Column.DIGIT), (6, Column.STRING), (3, Column.LOGIN_CHAR)]
)
FIXTURE_AP_PLAN = SelectionPlan(
    [(3, Column.STRING), (5, Column.DIGIT), (6, Column.LABEL), (1, Column.STRING)]
)
FIXTURE_SALT = bytes(range(16))


def fixture_stream(with_phone: bool = True) -> bytes:
    """Recorded entropy that registers ``Benz428`` / ``dp7a3k`` with the
    figure codebooks, labels and the username selection plan."""
    stream = field_draws(fig2_codebook(), FIG2_LABELS, FIG2_PLAN, len(FIG2_NAME))
    if with_phone:
        phone = "14155550133"
        pn_codebook = filled_codebook({}, seed=FILLER_SEED + b"-pn")
        pn_labels = [ShuffleLabel(1 + (i * 7) % 24, "FR"[i % 2]) for i in range(len(phone) - 1)]
        pn_plan = SelectionPlan(
            [(1, Column.STRING), (11, Column.LOGIN_CHAR), (7, Column.LABEL), (4, Column.DIGIT)]
        )
        stream += field_draws(pn_codebook, pn_labels, pn_plan, len(phone))
    stream += field_draws(fig1_codebook(), FIG1_LABELS, FIXTURE_LP_PLAN, len(FIG1_PASSWORD))
    stream += plan_draws(FIXTURE_AP_PLAN, len(FIG1_PASSWORD))
    return stream + FIXTURE_SALT


def fixture_entropy(with_phone: bool = True, extend: bool = True) -> StreamEntropy:
    """Entropy replaying :func:`fixture_stream`; later draws (session ids,
    tokens) continue deterministically when ``extend`` is set."""
    return StreamEntropy(fixture_stream(with_phone), extend=extend)


def register_fixture(gatekeeper, with_phone: bool = True):
    """Register the victim account through ``gatekeeper`` using the fixture
    stream, leaving the gatekeeper's own entropy untouched."""
    from .gatekeeper import register_account

    record = register_account(
        FIG2_NAME_RAW, FIG1_PASSWORD, VICTIM_IMEI, VICTIM_IMSI,
        phone_raw=VICTIM_PHONE if with_phone else None,
        entropy=StreamEntropy(fixture_stream(with_phone)),
    )
    gatekeeper.store.save_account(record)
    return record
