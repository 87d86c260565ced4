"""Registry of resources and services loaded from a directory of XML documents.

Each `*.xml` file holds either one `<resource>` or one `<service>` document
(grammar in docs/registry-format.md). The load is all-or-nothing: any parse
failure or definition violation rejects the whole directory, so a previously
loaded registry stays live. Relative resource locations resolve against the
registry directory.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path

from infoflow.errors import DecodeError, ParseError, ValidationError
from infoflow.model.definitions import (
    AccessControlList,
    ElementMapping,
    HttpXmlRuleDecl,
    KeyParam,
    PresentationColumn,
    RelationalRuleDecl,
    ResourceDescriptor,
    ServiceDefinition,
    Transform,
    UpdateSpec,
    Violation,
    validate_service_definition,
)
from infoflow.protocol import xmlio


@dataclass(frozen=True)
class Registry:
    resources: dict[str, ResourceDescriptor]
    services: dict[str, ServiceDefinition]

    def service_names(self) -> list[str]:
        return sorted(self.services)


def _resolve_location(kind: str, location: str, base: Path) -> str:
    if kind == "http-xml":
        return location
    path, _, fragment = location.partition("#")
    resolved = str((base / path).resolve()) if not Path(path).is_absolute() else path
    return f"{resolved}#{fragment}" if fragment else resolved


def _bool_attr(raw: str, context: str) -> bool:
    if raw == "true":
        return True
    if raw == "false":
        return False
    raise DecodeError(f"{context}: boolean attribute must be 'true' or 'false', got {raw!r}")


def parse_resource(root: ET.Element, base: Path) -> ResourceDescriptor:
    xmlio.expect_tag(root, "resource")
    attrs = xmlio.take_attrs(root, ("id", "kind", "location"), ("credentials-ref", "writable"))
    if len(root):
        raise DecodeError("<resource> carries no child elements")
    if attrs["kind"] not in ("tabular-file", "relational", "http-xml"):
        raise DecodeError(f"unknown resource kind: {attrs['kind']!r}")
    writable = _bool_attr(attrs.get("writable", "false"), "resource")
    return ResourceDescriptor(
        id=attrs["id"],
        kind=attrs["kind"],
        location=_resolve_location(attrs["kind"], attrs["location"], base),
        credentials_ref=attrs.get("credentials-ref"),
        writable=writable,
    )


_STAGES = {
    "key": 0,
    "element": 1,
    "rule": 2,
    "transform": 3,
    "presentation": 4,
    "update": 5,
    "acl": 6,
}


def parse_service(root: ET.Element) -> ServiceDefinition:
    xmlio.expect_tag(root, "service")
    attrs = xmlio.take_attrs(
        root, ("name", "version", "refresh-seconds", "anchor"), ("description",)
    )
    keys: list[KeyParam] = []
    mappings: list[ElementMapping] = []
    rules = []
    transforms: list[Transform] = []
    presentation: list[PresentationColumn] = []
    update_spec: UpdateSpec | None = None
    acl = AccessControlList()
    stage = -1
    for child in root:
        if child.tag not in _STAGES:
            raise DecodeError(f"unknown element <{child.tag}> inside <service>")
        if _STAGES[child.tag] < stage:
            raise DecodeError(f"<{child.tag}> appears out of order inside <service>")
        stage = _STAGES[child.tag]
        if child.tag == "key":
            kattrs = xmlio.take_attrs(child, ("name", "type"), ("required",))
            keys.append(
                KeyParam(
                    name=kattrs["name"],
                    type=kattrs["type"],
                    required=_bool_attr(kattrs.get("required", "true"), "key"),
                )
            )
        elif child.tag == "element":
            eattrs = xmlio.take_attrs(child, ("name", "resource", "source-column"), ("type",))
            binding = []
            for kb in child:
                xmlio.expect_tag(kb, "key-binding")
                battrs = xmlio.take_attrs(kb, ("param", "column"))
                binding.append((battrs["param"], battrs["column"]))
            mappings.append(
                ElementMapping(
                    element=eattrs["name"],
                    resource_id=eattrs["resource"],
                    source_column=eattrs["source-column"],
                    key_binding=tuple(binding),
                    type=eattrs.get("type", "text"),
                )
            )
        elif child.tag == "rule":
            rules.append(_parse_rule(child))
        elif child.tag == "transform":
            tattrs = xmlio.take_attrs(child, ("name",))
            transforms.append(Transform(name=tattrs["name"], expression=xmlio.text_of(child).strip()))
        elif child.tag == "presentation":
            xmlio.take_attrs(child, ())
            for col in child:
                xmlio.expect_tag(col, "column")
                cattrs = xmlio.take_attrs(col, ("name",), ("format",))
                presentation.append(PresentationColumn(cattrs["name"], cattrs.get("format")))
        elif child.tag == "update":
            uattrs = xmlio.take_attrs(child, ("resource",))
            key_columns = []
            writable_columns = []
            for uc in child:
                if uc.tag == "key":
                    key_columns.append(xmlio.take_attrs(uc, ("column",))["column"])
                elif uc.tag == "writable":
                    writable_columns.append(xmlio.take_attrs(uc, ("column",))["column"])
                else:
                    raise DecodeError(f"unknown element <{uc.tag}> inside <update>")
            update_spec = UpdateSpec(
                target_resource=uattrs["resource"],
                key_columns=tuple(key_columns),
                writable_columns=tuple(writable_columns),
            )
        elif child.tag == "acl":
            xmlio.take_attrs(child, ())
            users, groups = set(), set()
            for entry in child:
                if entry.tag == "user":
                    users.add(xmlio.text_of(entry))
                elif entry.tag == "group":
                    groups.add(xmlio.text_of(entry))
                else:
                    raise DecodeError(f"unknown element <{entry.tag}> inside <acl>")
            acl = AccessControlList(allowed_users=frozenset(users), allowed_groups=frozenset(groups))
    return ServiceDefinition(
        name=attrs["name"],
        version=xmlio.int_attr(root, "version", attrs["version"]),
        description=attrs.get("description", ""),
        key_params=tuple(keys),
        anchor_resource=attrs["anchor"],
        mappings=tuple(mappings),
        rules=tuple(rules),
        transforms=tuple(transforms),
        presentation=tuple(presentation),
        refresh_seconds=xmlio.int_attr(root, "refresh-seconds", attrs["refresh-seconds"]),
        update_spec=update_spec,
        acl=acl,
    )


def _parse_rule(child: ET.Element):
    rattrs = xmlio.take_attrs(child, ("resource", "kind"), ("url-template", "row-path"))
    if rattrs["kind"] == "relational":
        template = None
        output_columns = []
        for rc in child:
            if rc.tag == "template":
                template = xmlio.text_of(rc).strip()
            elif rc.tag == "output-column":
                output_columns.append(xmlio.take_attrs(rc, ("name",))["name"])
            else:
                raise DecodeError(f"unknown element <{rc.tag}> inside relational <rule>")
        if template is None:
            raise DecodeError("relational <rule> needs a <template> child")
        return RelationalRuleDecl(
            resource_id=rattrs["resource"], template=template, output_columns=tuple(output_columns)
        )
    if rattrs["kind"] == "http-xml":
        if "url-template" not in rattrs or "row-path" not in rattrs:
            raise DecodeError("http-xml <rule> needs url-template and row-path attributes")
        fields = []
        for rc in child:
            xmlio.expect_tag(rc, "field")
            fattrs = xmlio.take_attrs(rc, ("column", "path"))
            fields.append((fattrs["column"], fattrs["path"]))
        return HttpXmlRuleDecl(
            resource_id=rattrs["resource"],
            url_template=rattrs["url-template"],
            row_path=rattrs["row-path"],
            field_paths=tuple(fields),
        )
    raise DecodeError(f"unknown rule kind: {rattrs['kind']!r}")


def load_registry(directory: str | Path) -> Registry:
    base = Path(directory)
    if not base.is_dir():
        raise ParseError("registry directory does not exist", source=str(base))
    resources: dict[str, ResourceDescriptor] = {}
    pending: list[tuple[str, ServiceDefinition]] = []
    violations: list[Violation] = []
    for path in sorted(base.glob("*.xml")):
        try:
            root = ET.parse(path).getroot()
        except ET.ParseError as exc:
            raise ParseError(f"malformed XML: {exc}", source=str(path)) from exc
        try:
            if root.tag == "resource":
                descriptor = parse_resource(root, base)
                if descriptor.id in resources:
                    violations.append(Violation(str(path), f"duplicate resource id: {descriptor.id}"))
                resources[descriptor.id] = descriptor
            elif root.tag == "service":
                pending.append((str(path), parse_service(root)))
            else:
                raise DecodeError(f"unknown document root <{root.tag}>")
        except DecodeError as exc:
            raise ParseError(str(exc), source=str(path)) from exc
    services: dict[str, ServiceDefinition] = {}
    for source, definition in pending:
        if definition.name in services:
            violations.append(Violation(source, f"duplicate service name: {definition.name}"))
        for v in validate_service_definition(definition, resources):
            violations.append(Violation(f"{source}: {v.field}", v.rule))
        services[definition.name] = definition
    if violations:
        raise ValidationError(violations)
    return Registry(resources=resources, services=services)
