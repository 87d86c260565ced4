"""Tagged scalar values and the Table payload exchanged between layers.

Numbers are exact decimals capped at 15 significant digits; timestamps are
UTC instants at second precision. Every value has a canonical text encoding
that round-trips exactly, which the wire protocol and the CSV connector rely
on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from decimal import Context, Decimal, InvalidOperation

from infoflow.errors import DecodeError

VALUE_TAGS = ("text", "number", "boolean", "timestamp", "null")
COLUMN_TYPES = ("text", "number", "boolean", "timestamp")

_NUMBER_CONTEXT = Context(prec=15)
_TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%SZ"


def canonical_decimal(raw: Decimal | int | str) -> Decimal:
    """Round to 15 significant digits and strip trailing fractional zeros."""
    try:
        d = _NUMBER_CONTEXT.plus(Decimal(raw))
    except (InvalidOperation, ValueError) as exc:
        raise DecodeError(f"not a decimal number: {raw!r}") from exc
    if not d.is_finite():
        raise DecodeError(f"non-finite number: {raw!r}")
    if d == 0:
        return Decimal(0)
    return d.normalize(_NUMBER_CONTEXT)


@dataclass(frozen=True)
class Value:
    tag: str
    payload: object = None

    def __post_init__(self):
        if self.tag not in VALUE_TAGS:
            raise ValueError(f"unknown value tag: {self.tag!r}")

    @staticmethod
    def text(s: str) -> "Value":
        return Value("text", s)

    @staticmethod
    def number(x: Decimal | int | str) -> "Value":
        return Value("number", canonical_decimal(x))

    @staticmethod
    def boolean(b: bool) -> "Value":
        return Value("boolean", bool(b))

    @staticmethod
    def timestamp(dt: datetime) -> "Value":
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        return Value("timestamp", dt.astimezone(timezone.utc).replace(microsecond=0))

    @staticmethod
    def null() -> "Value":
        return Value("null", None)

    @property
    def is_null(self) -> bool:
        return self.tag == "null"


NULL = Value.null()


def encode_value(v: Value) -> str:
    """Canonical text form of a value. decode_value(v.tag, encode_value(v)) == v."""
    if v.tag == "text":
        return v.payload
    if v.tag == "number":
        d = v.payload
        return format(d, "f")
    if v.tag == "boolean":
        return "true" if v.payload else "false"
    if v.tag == "timestamp":
        return v.payload.strftime(_TIMESTAMP_FORMAT)
    return ""


def decode_value(tag: str, text: str) -> Value:
    """Parse canonical (or reasonably lenient) text into a tagged value."""
    if tag == "text":
        return Value.text(text)
    if tag == "number":
        return Value.number(text)
    if tag == "boolean":
        if text == "true":
            return Value.boolean(True)
        if text == "false":
            return Value.boolean(False)
        raise DecodeError(f"not a boolean: {text!r}")
    if tag == "timestamp":
        try:
            dt = datetime.strptime(text, _TIMESTAMP_FORMAT)
        except ValueError as exc:
            raise DecodeError(f"not a timestamp: {text!r}") from exc
        return Value.timestamp(dt.replace(tzinfo=timezone.utc))
    if tag == "null":
        if text != "":
            raise DecodeError(f"null value carries text: {text!r}")
        return NULL
    raise DecodeError(f"unknown value tag: {tag!r}")


@dataclass(frozen=True)
class Column:
    name: str
    type: str

    def __post_init__(self):
        if not self.name:
            raise ValueError("column name must be nonempty")
        if self.type not in COLUMN_TYPES:
            raise ValueError(f"illegal column type: {self.type!r}")


@dataclass(frozen=True)
class Table:
    """Ordered typed columns plus rows of tagged values.

    Invariants enforced at construction: row lengths match the column count,
    column names are unique and nonempty, and each cell carries its column's
    declared tag or null.
    """

    columns: tuple[Column, ...]
    rows: tuple[tuple[Value, ...], ...] = field(default=())

    def __post_init__(self):
        columns = tuple(self.columns)
        rows = tuple(tuple(r) for r in self.rows)
        object.__setattr__(self, "columns", columns)
        object.__setattr__(self, "rows", rows)
        names = [c.name for c in columns]
        if len(set(names)) != len(names):
            raise ValueError("duplicate column names")
        for row in rows:
            if len(row) != len(columns):
                raise ValueError(f"row length {len(row)} != column count {len(columns)}")
            for cell, col in zip(row, columns):
                if cell.tag not in (col.type, "null"):
                    raise ValueError(
                        f"cell tag {cell.tag!r} does not match column {col.name!r} of type {col.type!r}"
                    )

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column_index(self, name: str) -> int:
        for i, c in enumerate(self.columns):
            if c.name == name:
                return i
        raise KeyError(name)
