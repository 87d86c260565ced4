"""A1-style cell addresses: `Sheet1!B2`. Columns span A..ZZ; ordering is
(sheet, row, column) so blocks enumerate top-to-bottom, left-to-right."""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import total_ordering

MAX_COLUMN = 26 + 26 * 26  # ZZ

_ADDRESS_RE = re.compile(r"^(?P<sheet>[^!]+)!(?P<col>[A-Z]{1,2})(?P<row>[1-9][0-9]*)$")


def column_letters(index: int) -> str:
    if not 1 <= index <= MAX_COLUMN:
        raise ValueError(f"column index out of range: {index}")
    if index <= 26:
        return chr(ord("A") + index - 1)
    index -= 27
    return chr(ord("A") + index // 26) + chr(ord("A") + index % 26)


def letters_to_index(letters: str) -> int:
    value = 0
    for ch in letters:
        value = value * 26 + (ord(ch) - ord("A") + 1)
    return value


@total_ordering
@dataclass(frozen=True)
class CellAddress:
    sheet: str
    column: int  # 1-based
    row: int

    def __post_init__(self):
        if not self.sheet:
            raise ValueError("sheet name must be nonempty")
        if not 1 <= self.column <= MAX_COLUMN:
            raise ValueError(f"column out of range A..ZZ: {self.column}")
        if self.row < 1:
            raise ValueError(f"row must be >= 1: {self.row}")

    @staticmethod
    def parse(text: str) -> "CellAddress":
        m = _ADDRESS_RE.match(text)
        if m is None:
            raise ValueError(f"not a cell address: {text!r}")
        return CellAddress(m["sheet"], letters_to_index(m["col"]), int(m["row"]))

    def offset(self, rows: int, columns: int) -> "CellAddress":
        return CellAddress(self.sheet, self.column + columns, self.row + rows)

    def sort_key(self):
        return (self.sheet, self.row, self.column)

    def __lt__(self, other: "CellAddress") -> bool:
        return self.sort_key() < other.sort_key()

    def __str__(self) -> str:
        return f"{self.sheet}!{column_letters(self.column)}{self.row}"
