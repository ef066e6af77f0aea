import hashlib
import random
import string

import pytest
from hypothesis import given, strategies as st

from trident.errors import ValidationError
from trident.identity import (
    Imei,
    Imsi,
    NameKind,
    check_authentication_password_policy,
    check_login_password_policy,
    combine_identity,
    is_valid_login_text,
    luhn_check_digit,
    luhn_valid,
    normalize_login_name,
    validate_imei,
    validate_imsi,
)

from oracles import luhn_completion, luhn_weighted_sum

ZERO_SALT = bytes(16)


# -- IMEI / IMSI ----------------------------------------------------------------

def test_all_zero_imei_is_valid():
    assert validate_imei("000000000000000").digits == "000000000000000"


def test_imei_check_digit_from_oracle():
    # Computed by trying every candidate digit against the weighted sum.
    assert luhn_completion("49015420323751") == 8
    assert validate_imei("490154203237518").digits == "490154203237518"
    with pytest.raises(ValidationError) as exc:
        validate_imei("490154203237517")
    assert exc.value.code == "BAD_CHECKSUM"
    assert validate_imei("490154203237517", strict_luhn=False)


@given(st.text(alphabet=string.digits, min_size=14, max_size=14))
def test_luhn_matches_oracle(prefix):
    assert luhn_check_digit(prefix) == luhn_completion(prefix)
    for d in range(10):
        assert luhn_valid(prefix + str(d)) == (luhn_weighted_sum(prefix + str(d)) % 10 == 0)


@pytest.mark.parametrize(
    "text, code",
    [("12345", "BAD_LENGTH"), ("4901542032375180", "BAD_LENGTH"), ("49015420323751X", "BAD_CHAR")],
)
def test_imei_errors(text, code):
    with pytest.raises(ValidationError) as exc:
        validate_imei(text)
    assert exc.value.code == code


def test_imsi():
    assert validate_imsi("310150123456789") == Imsi("310150123456789")
    with pytest.raises(ValidationError) as exc:
        validate_imsi("31015012345678")
    assert exc.value.code == "BAD_LENGTH"
    with pytest.raises(ValidationError) as exc:
        validate_imsi("31015012345678X")
    assert exc.value.code == "BAD_CHAR"


# -- login names --------------------------------------------------------------------

@pytest.mark.parametrize(
    "raw, normalized, kind",
    [
        ("Benz428@woxinet.com", "benz428", NameKind.USERNAME),
        ("a.b_c", "abc", NameKind.USERNAME),
        ("+1 415 555 0133", "14155550133", NameKind.PHONE_NUMBER),
        ("user2024", "user2024", NameKind.USERNAME),
    ],
)
def test_normalize_login_name(raw, normalized, kind):
    name = normalize_login_name(raw)
    assert (name.normalized, name.kind) == (normalized, kind)


@pytest.mark.parametrize("raw", ["", "@example.com", "...", "ÄÖÜ"])
def test_normalize_empty(raw):
    with pytest.raises(ValidationError) as exc:
        normalize_login_name(raw)
    assert exc.value.code == "EMPTY_AFTER_NORMALIZATION"


def test_normalize_length_cap():
    assert normalize_login_name("a" * 32).normalized == "a" * 32
    with pytest.raises(ValidationError):
        normalize_login_name("a" * 33)


@given(st.text(min_size=1, max_size=40))
def test_normalize_is_idempotent(raw):
    try:
        once = normalize_login_name(raw).normalized
    except ValidationError:
        return
    assert normalize_login_name(once).normalized == once
    assert is_valid_login_text(once)


# -- password policies ---------------------------------------------------------------

def test_login_password_policy():
    assert check_login_password_policy("dp7a3k").value == "dp7a3k"
    for value, code in [("dP7a3k", "INVALID_CHARACTER"), ("ab1", "TOO_SHORT"),
                        ("a" * 16, "TOO_LONG"), ("dp7a-k", "INVALID_CHARACTER")]:
        with pytest.raises(ValidationError) as exc:
            check_login_password_policy(value)
        assert exc.value.code == code


@given(st.text(alphabet=string.printable, min_size=5, max_size=15))
def test_login_policy_agrees_with_field_filter(value):
    try:
        check_login_password_policy(value)
        accepted = True
    except ValidationError:
        accepted = False
    assert accepted == is_valid_login_text(value)


@pytest.mark.parametrize(
    "value, ok",
    [
        ("3MovQX#&(EPC9L$d?G%z", True),
        ("3MovQX#&(EPC9L$d?G%", False),
        ("abcdefghijklmnopqrstuvwxy", False),
        ("ABCDEFGHIJKLMNOPQRST1!", False),
        ("Abcdefghijklmnopqrs1!", True),
    ],
)
def test_authentication_password_policy(value, ok):
    assert check_authentication_password_policy(value).ok is ok


# -- combined identity ------------------------------------------------------------------

def test_canonical_form():
    ci = combine_identity("dp7a3k", Imei("000000000000000"), Imsi("310150123456789"), ZERO_SALT)
    assert ci.canonical == b"dp7a3k\x1f000000000000000\x1f310150123456789"
    assert ci.canonical.count(b"\x1f") == 2
    assert ci.digest == hashlib.sha256(ZERO_SALT + ci.canonical).digest()


def test_combined_identity_deterministic_and_sensitive():
    args = ("dp7a3k", Imei("000000000000000"), Imsi("310150123456789"), ZERO_SALT)
    assert combine_identity(*args).digest == combine_identity(*args).digest
    flipped = combine_identity("dp7a3k", Imei("000000000000000"), Imsi("310150123456788"), ZERO_SALT)
    assert flipped.digest != combine_identity(*args).digest


def test_combined_identity_rejects_bad_salt():
    with pytest.raises(ValidationError):
        combine_identity("x", Imei("0" * 15), Imsi("0" * 15), b"short")


def test_combined_identity_no_collisions():
    rng = random.Random(11)
    salt = bytes(16)
    digests = set()
    triples = set()
    while len(triples) < 100_000:
        cred = "".join(rng.choice(string.ascii_lowercase + string.digits) for _ in range(rng.randint(5, 15)))
        triples.add((cred, "%015d" % rng.randrange(10**15), "%015d" % rng.randrange(10**15)))
    for cred, imei, imsi in triples:
        digests.add(combine_identity(cred, Imei(imei), Imsi(imsi), salt).digest)
    assert len(digests) == len(triples)
