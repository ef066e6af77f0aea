import random
from collections import Counter

import pytest
from hypothesis import given, strategies as st

from trident import fixtures
from trident.entropy import StreamEntropy, SystemEntropy
from trident.errors import EntropyError, MatrixError
from trident.matrix_hash import (
    PRINTABLE,
    VALID_CHARS,
    Codebook,
    Column,
    SelectionPlan,
    ShuffleLabel,
    apply_shuffle_step,
    build_matrix,
    compose_authentication_password,
    draw_selection_plan,
    extract_identifier,
    generate_codebook,
    parse_labels,
)

from oracles import splice_compose

labels_st = st.builds(ShuffleLabel, st.integers(1, 40), st.sampled_from("FR"))
text_st = st.text(alphabet=PRINTABLE, max_size=30)
insert_st = st.text(alphabet=PRINTABLE, min_size=1, max_size=9)


# -- labels ---------------------------------------------------------------------

@given(labels_st)
def test_label_render_parse_roundtrip(label):
    assert ShuffleLabel.parse(str(label)) == label


@pytest.mark.parametrize("text", ["4F", "16R", "1F", "24R"])
def test_label_text_form(text):
    assert str(ShuffleLabel.parse(text)) == text


@pytest.mark.parametrize("bad", ["0F", "F", "4", "4X", "04F", "-1R", "4f"])
def test_label_parse_rejects(bad):
    with pytest.raises(MatrixError):
        ShuffleLabel.parse(bad)


# -- codebook -------------------------------------------------------------------

def test_codebook_shape():
    cb = generate_codebook()
    assert list(cb.entries) == list(VALID_CHARS)
    for digit, text in cb.entries.values():
        assert 1 <= digit <= 9
        assert digit == len(text)
        assert all(0x21 <= ord(c) <= 0x7E for c in text)


def test_independent_codebooks_differ():
    books = [generate_codebook(SystemEntropy()) for _ in range(100)]
    assert len({tuple(b.entries.items()) for b in books}) == 100


def test_codebook_replay_is_deterministic():
    stream = bytes(random.Random(7).randrange(256) for _ in range(4000))
    a = generate_codebook(StreamEntropy(stream))
    b = generate_codebook(StreamEntropy(stream))
    assert a == b


def test_codebook_entropy_exhaustion_is_fatal():
    with pytest.raises(EntropyError):
        generate_codebook(StreamEntropy(b"\x00" * 10))


def test_codebook_rejects_digit_length_mismatch():
    entries = dict(fixtures.fig1_codebook().entries)
    entries["d"] = (5, "3Mo&(E")
    with pytest.raises(MatrixError):
        Codebook(entries)


def test_codebook_draws_inverts_generator():
    cb = fixtures.fig1_codebook()
    assert generate_codebook(StreamEntropy(fixtures.codebook_draws(cb))) == cb


def test_digit_and_character_distribution_roughly_uniform():
    entropy = StreamEntropy.derived("uniformity")
    digits, chars = Counter(), Counter()
    for _ in range(300):
        for digit, text in generate_codebook(entropy).entries.values():
            digits[digit] += 1
            chars.update(text)
    # 10800 digit draws over 9 values: expect 1200 each.
    assert set(digits) == set(range(1, 10))
    assert all(1000 < n < 1400 for n in digits.values())
    assert set(chars) == set(PRINTABLE)


# -- shuffle step -----------------------------------------------------------------

@pytest.mark.parametrize(
    "text, insert, label, expected",
    [
        ("3Mo&(E", "vX#", "4F", "3MovX#&(E"),
        ("3MovX#&(E", "z%9CP", "16R", "3MovX#&(EPC9%z"),
        ("abc", "XY", "1R", "YXabc"),
        ("", "Q", "7F", "Q"),
        ("abc", "XY", "4F", "abcXY"),
    ],
)
def test_shuffle_step_examples(text, insert, label, expected):
    assert apply_shuffle_step(text, insert, ShuffleLabel.parse(label)) == expected


def test_shuffle_step_rejects_empty_insert():
    with pytest.raises(MatrixError):
        apply_shuffle_step("abc", "", ShuffleLabel(1, "F"))


@given(text_st, insert_st, labels_st)
def test_shuffle_step_grows_by_insert_length(text, insert, label):
    assert len(apply_shuffle_step(text, insert, label)) == len(text) + len(insert)


@given(text_st, insert_st, st.integers(1, 40))
def test_reverse_equals_forward_of_reversed(text, insert, point):
    r = apply_shuffle_step(text, insert, ShuffleLabel(point, "R"))
    f = apply_shuffle_step(text, insert[::-1], ShuffleLabel(point, "F"))
    assert r == f


@given(text_st, insert_st, st.integers(1, 40), st.sampled_from("FR"))
def test_over_range_points_clamp_to_append(text, insert, extra, direction):
    at_end = apply_shuffle_step(text, insert, ShuffleLabel(len(text) + 1, direction))
    beyond = apply_shuffle_step(text, insert, ShuffleLabel(len(text) + 1 + extra, direction))
    assert beyond == at_end


# -- matrices -----------------------------------------------------------------------

def test_fig1_matrix_matches_figure():
    m = fixtures.fig1_matrix()
    assert [(r.char, r.digit, r.string) for r in m.rows] == [
        ("d", 6, "3Mo&(E"), ("p", 3, "vX#"), ("7", 5, "z%9CP"),
        ("a", 2, "?G"), ("3", 3, "d$L"), ("k", 1, "Q"),
    ]
    assert [None if r.label is None else str(r.label) for r in m.rows] == [
        None, "4F", "16R", "13F", "13R", "5F"
    ]


def test_single_character_matrix():
    m = build_matrix("k", fixtures.fig1_codebook(), [])
    assert len(m) == 1 and m.rows[0].label is None
    assert compose_authentication_password(m) == "Q"


def test_build_matrix_rejects_uppercase():
    with pytest.raises(MatrixError) as exc:
        build_matrix("dp7A3k", fixtures.fig1_codebook(), fixtures.FIG1_LABELS)
    assert exc.value.code == "INVALID_CHARACTER"


def test_build_matrix_label_count():
    with pytest.raises(MatrixError) as exc:
        build_matrix("dp7a3k", fixtures.fig1_codebook(), parse_labels("4F"))
    assert exc.value.code == "LABEL_COUNT_MISMATCH"


def test_registration_labels_are_drawn_in_range():
    entropy = StreamEntropy.derived("labels")
    points = Counter()
    for _ in range(200):
        m = build_matrix("abcdefgh", generate_codebook(entropy), entropy=entropy)
        for r in m.rows[1:]:
            assert 1 <= r.label.point <= 24
            points[r.label.point] += 1
    assert set(points) == set(range(1, 25))


def test_repeated_characters_share_a_row_template():
    m = build_matrix("aaa", fixtures.fig1_codebook(), parse_labels("1F", "9R"))
    assert {(r.digit, r.string) for r in m.rows} == {(2, "?G")}


def test_matrix_render_is_tab_separated():
    lines = fixtures.fig1_matrix().render().splitlines()
    assert lines[0] == "d\t6\t3Mo&(E\t"
    assert lines[2] == "7\t5\tz%9CP\t16R"


# -- composition --------------------------------------------------------------------

def test_fig1_authentication_password():
    assert compose_authentication_password(fixtures.fig1_matrix()) == fixtures.FIG1_AP


def _random_matrix(rng, rows, max_digit=4):
    cb = {}
    for ch in VALID_CHARS:
        d = rng.randint(1, max_digit)
        cb[ch] = (d, "".join(rng.choice(PRINTABLE) for _ in range(d)))
    cred = "".join(rng.choice(VALID_CHARS) for _ in range(rows))
    labels = [ShuffleLabel(rng.randint(1, 24), rng.choice("FR")) for _ in range(rows - 1)]
    return build_matrix(cred, Codebook(cb), labels)


def test_random_three_row_matrix_matches_splice_oracle():
    rng = random.Random(3)
    for _ in range(200):
        m = _random_matrix(rng, 3)
        rows = [(r.string, None if r.label is None else str(r.label)) for r in m.rows]
        assert compose_authentication_password(m) == splice_compose(rows)


@given(st.randoms(use_true_random=False), st.integers(1, 6))
def test_composition_preserves_length_and_characters(rng, n):
    m = _random_matrix(rng, n, max_digit=9)
    ap = compose_authentication_password(m)
    assert len(ap) == sum(r.digit for r in m.rows)
    assert Counter(ap) == sum((Counter(r.string) for r in m.rows), Counter())


# -- selection plans and identifiers ---------------------------------------------------

def test_selection_plan_bounds_and_string_cell():
    entropy = StreamEntropy.derived("plans")
    seen = set()
    for _ in range(1000):
        plan = draw_selection_plan(entropy, 7)
        assert 4 <= len(plan) <= 8
        assert len(set(plan)) == len(plan)
        assert all(1 <= row <= 7 for row, _ in plan)
        assert (1, Column.LABEL) not in plan
        assert any(col is Column.STRING for _, col in plan)
        seen.add(plan)
    assert len(seen) >= 2


def test_selection_plan_single_row_matrix_uses_available_cells():
    plan = draw_selection_plan(StreamEntropy.derived("one-row"), 1)
    assert set(plan) == {(1, Column.LOGIN_CHAR), (1, Column.DIGIT), (1, Column.STRING)}


def test_plan_draws_inverts_generator():
    stream = fixtures.plan_draws(fixtures.FIG2_PLAN, 7)
    assert draw_selection_plan(StreamEntropy(stream), 7) == fixtures.FIG2_PLAN


def test_fig2_identifier():
    assert extract_identifier(fixtures.fig2_matrix(), fixtures.FIG2_PLAN) == "4O^&17R2zF="


def test_single_cell_identifier():
    assert extract_identifier(fixtures.fig1_matrix(), [(1, Column.LOGIN_CHAR)]) == "d"


def test_identifier_is_deterministic():
    m, plan = fixtures.fig2_matrix(), fixtures.FIG2_PLAN
    first = extract_identifier(m, plan)
    assert all(extract_identifier(m, plan) == first for _ in range(1000))


@pytest.mark.parametrize("plan", [[(8, "STRING")], [(1, "LABEL")], [(0, "DIGIT")], []])
def test_identifier_out_of_bounds(plan):
    with pytest.raises(MatrixError) as exc:
        extract_identifier(fixtures.fig2_matrix(), SelectionPlan(plan))
    assert exc.value.code == "PLAN_OUT_OF_BOUNDS"
