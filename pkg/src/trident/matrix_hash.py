"""Matrix-like open hash.

Each login character is converted through a per-account codebook into a
(digit, converted string) pair. The converted strings are then shuffled into
one another under a column of shuffle labels to give the authentication
password (AP). Because the whole matrix stays inside the server, any set of
its cells can be concatenated into an identifier.
"""
from __future__ import annotations

import enum
import re
import string
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence

from .entropy import Entropy, SystemEntropy
from .errors import MatrixError

VALID_CHARS = string.ascii_lowercase + string.digits
PRINTABLE = "".join(chr(c) for c in range(0x21, 0x7F))

MIN_DIGIT, MAX_DIGIT = 1, 9
MAX_LABEL_POINT = 24
MIN_PLAN_CELLS, MAX_PLAN_CELLS = 4, 8

_LABEL_RE = re.compile(r"([1-9][0-9]*)([FR])")


@dataclass(frozen=True)
class ShuffleLabel:
    point: int
    direction: str

    def __post_init__(self):
        if self.point < 1:
            raise MatrixError("BAD_LABEL", f"point must be >= 1, got {self.point}")
        if self.direction not in ("F", "R"):
            raise MatrixError("BAD_LABEL", f"direction must be F or R, got {self.direction!r}")

    def __str__(self) -> str:
        return f"{self.point}{self.direction}"

    @classmethod
    def parse(cls, text: str) -> "ShuffleLabel":
        m = _LABEL_RE.fullmatch(text)
        if not m:
            raise MatrixError("BAD_LABEL", repr(text))
        return cls(int(m.group(1)), m.group(2))


def parse_labels(*texts: str) -> list[ShuffleLabel]:
    """``parse_labels("4F", "16R")`` -> list of parsed labels."""
    return [ShuffleLabel.parse(t) for t in texts]


@dataclass(frozen=True)
class Codebook:
    entries: Mapping[str, tuple[int, str]]

    def __post_init__(self):
        if set(self.entries) != set(VALID_CHARS):
            raise MatrixError("BAD_CODEBOOK", "codebook must cover a-z0-9 exactly")
        for ch, (digit, text) in self.entries.items():
            if not MIN_DIGIT <= digit <= MAX_DIGIT or digit != len(text):
                raise MatrixError("BAD_CODEBOOK", f"entry {ch!r}: digit {digit} vs {text!r}")
            if any(c not in PRINTABLE for c in text):
                raise MatrixError("BAD_CODEBOOK", f"entry {ch!r} has non-printable characters")
        # Canonical ordering keeps serialization and equality stable.
        object.__setattr__(self, "entries", {c: tuple(self.entries[c]) for c in VALID_CHARS})

    def __getitem__(self, ch: str) -> tuple[int, str]:
        return self.entries[ch]

    def with_entries(self, updates: Mapping[str, tuple[int, str]]) -> "Codebook":
        merged = dict(self.entries)
        merged.update(updates)
        return Codebook(merged)

    def strings(self) -> list[str]:
        return [text for _, text in self.entries.values()]


class Column(str, enum.Enum):
    LOGIN_CHAR = "LOGIN_CHAR"
    DIGIT = "DIGIT"
    STRING = "STRING"
    LABEL = "LABEL"


class MatrixRow(NamedTuple):
    char: str
    digit: int
    string: str
    label: ShuffleLabel | None


@dataclass(frozen=True)
class Matrix:
    rows: tuple[MatrixRow, ...]

    def __len__(self) -> int:
        return len(self.rows)

    def cell(self, row: int, column: Column) -> str:
        """Render the cell at 1-based ``row``."""
        if not 1 <= row <= len(self.rows):
            raise MatrixError("PLAN_OUT_OF_BOUNDS", f"row {row} of {len(self.rows)}")
        r = self.rows[row - 1]
        if column is Column.LOGIN_CHAR:
            return r.char
        if column is Column.DIGIT:
            return str(r.digit)
        if column is Column.STRING:
            return r.string
        if r.label is None:
            raise MatrixError("PLAN_OUT_OF_BOUNDS", "row 1 carries no label")
        return str(r.label)

    def render(self) -> str:
        """Tab-separated debug dump, one row per line."""
        return "\n".join(
            f"{r.char}\t{r.digit}\t{r.string}\t{'' if r.label is None else r.label}"
            for r in self.rows
        )


class SelectionPlan(tuple):
    """Ordered, distinct ``(row, Column)`` cells; rows are 1-based."""

    def __new__(cls, cells: Iterable[tuple[int, Column | str]]):
        return super().__new__(cls, ((int(r), Column(c)) for r, c in cells))


def _draw_entry(entropy: Entropy) -> tuple[int, str]:
    digit = MIN_DIGIT + entropy.randbelow(MAX_DIGIT - MIN_DIGIT + 1)
    text = "".join(PRINTABLE[entropy.randbelow(len(PRINTABLE))] for _ in range(digit))
    return digit, text


def generate_codebook(entropy: Entropy | None = None) -> Codebook:
    """Fresh codebook: per character, a digit in 1..9 then that many printable
    ASCII characters, all drawn independently in a-z0-9 order."""
    entropy = entropy or SystemEntropy()
    return Codebook({ch: _draw_entry(entropy) for ch in VALID_CHARS})


def redraw_entries(codebook: Codebook, chars: Iterable[str], entropy: Entropy) -> Codebook:
    """Replace the entries for ``chars`` (deduplicated, in first-seen order)."""
    updates: dict[str, tuple[int, str]] = {}
    for ch in chars:
        if ch not in updates:
            updates[ch] = _draw_entry(entropy)
    return codebook.with_entries(updates)


def draw_label(entropy: Entropy) -> ShuffleLabel:
    point = 1 + entropy.randbelow(MAX_LABEL_POINT)
    return ShuffleLabel(point, "FR"[entropy.randbelow(2)])


def apply_shuffle_step(text: str, insert: str, label: ShuffleLabel) -> str:
    """Insert ``insert`` before the ``label.point``-th character of ``text``.

    Points past the end clamp to an append. Direction R inserts the string
    reversed.
    """
    if not insert:
        raise MatrixError("EMPTY_INSERT", "shuffle payload must be non-empty")
    p = min(label.point, len(text) + 1)
    payload = insert if label.direction == "F" else insert[::-1]
    return text[:p - 1] + payload + text[p - 1:]


def build_matrix(
    credential: str,
    codebook: Codebook,
    labels: Sequence[ShuffleLabel] | None = None,
    entropy: Entropy | None = None,
) -> Matrix:
    """Convert ``credential`` row by row.

    With ``labels=None`` a fresh label column is drawn (registration);
    otherwise the stored labels are replayed verbatim (login).
    """
    if not credential:
        raise MatrixError("INVALID_CHARACTER", "empty credential")
    bad = [c for c in credential if c not in VALID_CHARS]
    if bad:
        raise MatrixError("INVALID_CHARACTER", f"{bad[0]!r} not in a-z0-9")
    if labels is None:
        entropy = entropy or SystemEntropy()
        labels = [draw_label(entropy) for _ in range(len(credential) - 1)]
    elif len(labels) != len(credential) - 1:
        raise MatrixError(
            "LABEL_COUNT_MISMATCH", f"{len(labels)} labels for {len(credential)} characters"
        )
    rows = []
    for i, ch in enumerate(credential):
        digit, text = codebook[ch]
        rows.append(MatrixRow(ch, digit, text, None if i == 0 else labels[i - 1]))
    return Matrix(tuple(rows))


def matrix_labels(matrix: Matrix) -> list[ShuffleLabel]:
    return [r.label for r in matrix.rows[1:]]


def compose_authentication_password(matrix: Matrix) -> str:
    text = matrix.rows[0].string
    for row in matrix.rows[1:]:
        text = apply_shuffle_step(text, row.string, row.label)
    return text


def selectable_cells(matrix_rows: int) -> list[tuple[int, Column]]:
    cells = []
    for row in range(1, matrix_rows + 1):
        for col in Column:
            if col is Column.LABEL and row == 1:
                continue
            cells.append((row, col))
    return cells


def draw_selection_plan(entropy: Entropy, matrix_rows: int) -> SelectionPlan:
    """Draw 4..8 distinct cells (fewer only when the matrix has fewer),
    redrawing until at least one converted-string cell is included."""
    if matrix_rows < 1:
        raise MatrixError("BAD_PLAN", "matrix_rows must be >= 1")
    pool = selectable_cells(matrix_rows)
    low = min(MIN_PLAN_CELLS, len(pool))
    high = min(MAX_PLAN_CELLS, len(pool))
    while True:
        size = low + entropy.randbelow(high - low + 1)
        remaining = list(pool)
        cells = [remaining.pop(entropy.randbelow(len(remaining))) for _ in range(size)]
        if any(col is Column.STRING for _, col in cells):
            return SelectionPlan(cells)


def extract_identifier(matrix: Matrix, plan: Sequence[tuple[int, Column]]) -> str:
    if not plan:
        raise MatrixError("PLAN_OUT_OF_BOUNDS", "empty plan")
    return "".join(matrix.cell(row, Column(col)) for row, col in plan)
