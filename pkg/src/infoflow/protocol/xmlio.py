"""Canonical XML rendering and strict parsing helpers.

The wire grammar is enforced by hand rather than by a schema language: the
encoder emits one canonical byte form (fixed attribute order, no
insignificant whitespace, UTF-8, self-closing empty elements) and the decoder
rejects unknown elements and attributes. Carriage returns are written as
numeric references so parsers cannot normalize them away.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from infoflow.errors import DecodeError


def escape_text(s: str) -> str:
    return (
        s.replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace("\r", "&#13;")
    )


def escape_attr(s: str) -> str:
    return (
        escape_text(s)
        .replace('"', "&quot;")
        .replace("\n", "&#10;")
        .replace("\t", "&#9;")
    )


@dataclass
class El:
    """Build-side element: ordered attributes, then either children or text."""

    tag: str
    attrs: list[tuple[str, str]] = field(default_factory=list)
    children: list["El"] = field(default_factory=list)
    text: str = ""

    def attr(self, name: str, value: str) -> "El":
        self.attrs.append((name, value))
        return self

    def child(self, el: "El") -> "El":
        self.children.append(el)
        return self


def render(el: El) -> str:
    attrs = "".join(f' {k}="{escape_attr(v)}"' for k, v in el.attrs)
    if el.children:
        inner = "".join(render(c) for c in el.children)
        return f"<{el.tag}{attrs}>{inner}</{el.tag}>"
    if el.text:
        return f"<{el.tag}{attrs}>{escape_text(el.text)}</{el.tag}>"
    return f"<{el.tag}{attrs}/>"


def render_bytes(el: El) -> bytes:
    return render(el).encode("utf-8")


def parse(data: bytes | str) -> ET.Element:
    try:
        return ET.fromstring(data)
    except ET.ParseError as exc:
        raise DecodeError(f"malformed XML: {exc}") from exc


def expect_tag(el: ET.Element, tag: str) -> None:
    if el.tag != tag:
        raise DecodeError(f"unknown element <{el.tag}>, expected <{tag}>")


def take_attrs(el: ET.Element, required: tuple[str, ...], optional: tuple[str, ...] = ()) -> dict:
    """All required attributes, rejecting any attribute outside the grammar."""
    for key in el.attrib:
        if key not in required and key not in optional:
            raise DecodeError(f"unknown attribute {key!r} on <{el.tag}>")
    out = {}
    for key in required:
        if key not in el.attrib:
            raise DecodeError(f"missing required attribute {key!r} on <{el.tag}>")
        out[key] = el.attrib[key]
    for key in optional:
        if key in el.attrib:
            out[key] = el.attrib[key]
    return out


def text_of(el: ET.Element) -> str:
    if len(el):
        raise DecodeError(f"unexpected child elements inside <{el.tag}>")
    return el.text or ""


def int_attr(el: ET.Element, name: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError as exc:
        raise DecodeError(f"attribute {name!r} on <{el.tag}> is not an integer: {raw!r}") from exc
