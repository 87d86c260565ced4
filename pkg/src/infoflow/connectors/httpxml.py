"""HTTP/XML connector: GET an XML document and extract repeated row elements.

Fetch-only; the update path never targets http-xml resources.
"""

from __future__ import annotations

import urllib.parse
import xml.etree.ElementTree as ET

import httpx

from infoflow.connectors.rules import HttpXmlRule
from infoflow.errors import DecodeError, MissingParam, SourceUnavailable
from infoflow.model.definitions import ResourceDescriptor
from infoflow.model.values import NULL, Column, Table, Value, decode_value, encode_value

_HEADERS = {"Accept": "application/xml", "User-Agent": "infoflow-connector/1"}


def substitute_url(template: str, params: dict[str, Value]) -> str:
    def replace(match):
        name = match.group(1)
        if name not in params:
            raise MissingParam(name)
        return urllib.parse.quote(encode_value(params[name]), safe="")

    import re

    return re.sub(r"\{([A-Za-z_][A-Za-z0-9_]*)\}", replace, template)


def fetch_http(
    res: ResourceDescriptor,
    rule: HttpXmlRule,
    params: dict[str, Value],
    client: httpx.Client | None = None,
) -> Table:
    if res.kind != "http-xml":
        raise ValueError(f"resource {res.id} is not http-xml")
    url = substitute_url(rule.url_template, params)
    own_client = client is None
    client = client or httpx.Client()
    try:
        try:
            response = client.get(url, headers=_HEADERS)
        except httpx.HTTPError as exc:
            raise SourceUnavailable(f"cannot reach {url}: {exc}", resource_id=res.id) from exc
        if response.status_code >= 400:
            raise SourceUnavailable(
                f"{url} returned HTTP {response.status_code}",
                resource_id=res.id,
                status=response.status_code,
            )
        try:
            root = ET.fromstring(response.content)
        except ET.ParseError as exc:
            raise DecodeError(f"resource {res.id}: malformed XML: {exc}") from exc
    finally:
        if own_client:
            client.close()
    segments = [s for s in rule.row_path.split("/") if s]
    if not segments:
        raise DecodeError(f"resource {res.id}: empty row-path")
    if root.tag != segments[0]:
        raise DecodeError(
            f"resource {res.id}: row-path root {segments[0]!r} absent (document root is {root.tag!r})"
        )
    row_elements = root.findall("/".join(segments[1:])) if len(segments) > 1 else [root]
    columns = tuple(Column(name, col_type) for name, _path, col_type in rule.fields)
    rows = []
    for el in row_elements:
        cells = []
        for _name, path, col_type in rule.fields:
            child = el.find(path)
            if child is None or child.text is None or child.text == "":
                cells.append(NULL)
            else:
                cells.append(decode_value(col_type, child.text))
        rows.append(tuple(cells))
    return Table(columns=columns, rows=tuple(rows))
