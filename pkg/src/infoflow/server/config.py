"""Server configuration: listen address, registry path, bearer-token table,
and audit log location. Stored as one XML document; relative paths resolve
against the config file's directory.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path

from infoflow.errors import DecodeError, ParseError
from infoflow.model.definitions import Principal
from infoflow.protocol import xmlio


@dataclass(frozen=True)
class ServerConfig:
    listen: str
    registry_path: str
    audit_log_path: str
    tokens: dict[str, Principal] = field(default_factory=dict)


def load_config(path: str | Path) -> ServerConfig:
    path = Path(path)
    try:
        root = ET.parse(path).getroot()
    except (OSError, ET.ParseError) as exc:
        raise ParseError(f"cannot load config: {exc}", source=str(path)) from exc
    try:
        xmlio.expect_tag(root, "server")
        attrs = xmlio.take_attrs(root, ("listen", "registry", "audit-log"))
        tokens: dict[str, Principal] = {}
        for child in root:
            xmlio.expect_tag(child, "token")
            tattrs = xmlio.take_attrs(child, ("value", "user"))
            if tattrs["value"] in tokens:
                raise DecodeError(f"duplicate token for user {tattrs['user']}")
            groups = set()
            for g in child:
                xmlio.expect_tag(g, "group")
                groups.add(xmlio.text_of(g))
            tokens[tattrs["value"]] = Principal(tattrs["user"], frozenset(groups))
    except DecodeError as exc:
        raise ParseError(str(exc), source=str(path)) from exc
    base = path.parent

    def resolve(p: str) -> str:
        return p if Path(p).is_absolute() else str((base / p).resolve())

    return ServerConfig(
        listen=attrs["listen"],
        registry_path=resolve(attrs["registry"]),
        audit_log_path=resolve(attrs["audit-log"]),
        tokens=tokens,
    )
