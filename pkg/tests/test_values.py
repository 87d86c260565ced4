from datetime import datetime, timezone

import pytest
from hypothesis import given, strategies as st

from infoflow.errors import DecodeError
from infoflow.model.values import (
    NULL,
    Column,
    Table,
    Value,
    decode_value,
    encode_value,
)

# XML-transportable text: no control chars besides tab/newline/CR, no surrogates
xml_text = st.text(
    alphabet=st.characters(
        blacklist_categories=("Cs",), blacklist_characters="".join(chr(c) for c in range(0x20))
    ).map(lambda c: c)
    | st.sampled_from("\t\n\r"),
    max_size=40,
)

decimals = st.decimals(
    allow_nan=False, allow_infinity=False, places=6, min_value=-10**9, max_value=10**9
)

timestamps = st.datetimes(
    min_value=datetime(1970, 1, 1), max_value=datetime(2100, 1, 1)
).map(lambda dt: dt.replace(microsecond=0, tzinfo=timezone.utc))


def values_of(tag):
    if tag == "text":
        return xml_text.map(Value.text)
    if tag == "number":
        return decimals.map(Value.number)
    if tag == "boolean":
        return st.booleans().map(Value.boolean)
    if tag == "timestamp":
        return timestamps.map(Value.timestamp)
    return st.just(NULL)


any_value = st.one_of(*(values_of(tag) for tag in ("text", "number", "boolean", "timestamp", "null")))


@pytest.mark.parametrize(
    "raw,canonical",
    [
        ("3.0", "3"),
        ("+5", "5"),
        ("0.500", "0.5"),
        ("-0", "0"),
        ("300", "300"),
        ("1E+2", "100"),
        ("0.001", "0.001"),
        ("-12.5", "-12.5"),
    ],
)
def test_number_canonical_form(raw, canonical):
    assert encode_value(Value.number(raw)) == canonical


def test_number_significant_digit_cap():
    v = Value.number("1.23456789012345678901")
    assert len(encode_value(v).replace(".", "").lstrip("0")) <= 15


def test_timestamp_second_precision_utc():
    v = Value.timestamp(datetime(2026, 3, 1, 9, 30, 15, 999999, tzinfo=timezone.utc))
    assert encode_value(v) == "2026-03-01T09:30:15Z"


@pytest.mark.parametrize("tag,text", [("boolean", "yes"), ("number", "abc"), ("timestamp", "2020")])
def test_decode_rejects_garbage(tag, text):
    with pytest.raises(DecodeError):
        decode_value(tag, text)


@given(any_value)
def test_codec_round_trip(v):
    assert decode_value(v.tag, encode_value(v)) == v


class TestTable:
    COLUMNS = (Column("id", "text"), Column("score", "number"))

    def test_accepts_nulls_in_typed_columns(self):
        Table(self.COLUMNS, ((Value.text("a"), NULL),))

    def test_rejects_ragged_rows(self):
        with pytest.raises(ValueError):
            Table(self.COLUMNS, ((Value.text("a"),),))

    def test_rejects_duplicate_columns(self):
        with pytest.raises(ValueError):
            Table((Column("id", "text"), Column("id", "number")))

    def test_rejects_wrong_cell_tag(self):
        with pytest.raises(ValueError):
            Table(self.COLUMNS, ((Value.text("a"), Value.text("not-a-number")),))

    def test_rejects_null_column_type(self):
        with pytest.raises(ValueError):
            Column("x", "null")
