"""Service definitions, resources, principals, and access control.

A ServiceDefinition is the full recipe for one information service: key
parameters, element mappings onto back-end resources, transform expressions,
presentation layout, refresh metadata, an optional update spec, and an ACL.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from infoflow.assembly import expr as exprmod
from infoflow.model.values import COLUMN_TYPES

RESOURCE_KINDS = ("tabular-file", "relational", "http-xml")

_TEMPLATE_PLACEHOLDER_RE = re.compile(r":([A-Za-z_][A-Za-z0-9_]*)")
_URL_PLACEHOLDER_RE = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")


@dataclass(frozen=True)
class ResourceDescriptor:
    id: str
    kind: str
    location: str
    credentials_ref: str | None = None
    writable: bool = False


@dataclass(frozen=True)
class KeyParam:
    name: str
    type: str
    required: bool = True


@dataclass(frozen=True)
class ElementMapping:
    element: str
    resource_id: str
    source_column: str
    key_binding: tuple[tuple[str, str], ...]  # (param name, source key column)
    type: str = "text"


@dataclass(frozen=True)
class RelationalRuleDecl:
    """Query template with :param placeholders plus expected output columns."""

    resource_id: str
    template: str
    output_columns: tuple[str, ...]

    def placeholders(self) -> set[str]:
        return set(_TEMPLATE_PLACEHOLDER_RE.findall(self.template))


@dataclass(frozen=True)
class HttpXmlRuleDecl:
    """URL template with {param} substitutions and an element-path extractor."""

    resource_id: str
    url_template: str
    row_path: str
    field_paths: tuple[tuple[str, str], ...]  # (output column, child element name)

    def placeholders(self) -> set[str]:
        return set(_URL_PLACEHOLDER_RE.findall(self.url_template))


RuleDecl = RelationalRuleDecl | HttpXmlRuleDecl


@dataclass(frozen=True)
class Transform:
    name: str
    expression: str


@dataclass(frozen=True)
class PresentationColumn:
    name: str
    format_hint: str | None = None


@dataclass(frozen=True)
class UpdateSpec:
    target_resource: str
    key_columns: tuple[str, ...]
    writable_columns: tuple[str, ...]


@dataclass(frozen=True)
class AccessControlList:
    allowed_users: frozenset[str] = frozenset()
    allowed_groups: frozenset[str] = frozenset()


@dataclass(frozen=True)
class Principal:
    user_id: str
    groups: frozenset[str] = frozenset()

    def __post_init__(self):
        if not self.user_id:
            raise ValueError("user id must be nonempty")
        object.__setattr__(self, "groups", frozenset(self.groups))


def check_access(acl: AccessControlList, principal: Principal) -> bool:
    """True iff the user is granted directly or via a group. Empty ACL denies."""
    return principal.user_id in acl.allowed_users or bool(principal.groups & acl.allowed_groups)


@dataclass(frozen=True)
class ServiceDefinition:
    name: str
    version: int
    description: str
    key_params: tuple[KeyParam, ...]
    anchor_resource: str
    mappings: tuple[ElementMapping, ...]
    rules: tuple[RuleDecl, ...] = ()
    transforms: tuple[Transform, ...] = ()
    presentation: tuple[PresentationColumn, ...] = ()
    refresh_seconds: int = 300
    update_spec: UpdateSpec | None = None
    acl: AccessControlList = field(default_factory=AccessControlList)

    def rule_for(self, resource_id: str) -> RuleDecl | None:
        for r in self.rules:
            if r.resource_id == resource_id:
                return r
        return None

    def element_types(self) -> dict[str, str]:
        """Output tag of every mapped element and transform, in declaration order."""
        types = {m.element: m.type for m in self.mappings}
        for t in self.transforms:
            types[t.name] = exprmod.static_type(exprmod.parse_expr(t.expression), types)
        return types


@dataclass(frozen=True)
class Violation:
    field: str
    rule: str

    def __str__(self) -> str:
        return f"{self.field}: {self.rule}"


def validate_service_definition(
    definition: ServiceDefinition, resources: dict[str, ResourceDescriptor]
) -> list[Violation]:
    """Every invariant of the definition checked against the known resources.

    Violations are data, not failures: an empty list means the definition is
    acceptable for the registry.
    """
    out: list[Violation] = []

    def bad(field_name: str, rule: str):
        out.append(Violation(field_name, rule))

    if not definition.name:
        bad("name", "service name must be nonempty")
    if definition.version < 1:
        bad("version", "version must be a positive integer")
    if definition.refresh_seconds < 1:
        bad("refresh-seconds", "refresh period must be a positive integer")

    param_names = [k.name for k in definition.key_params]
    if len(set(param_names)) != len(param_names):
        bad("key-params", "duplicate key parameter names")
    for k in definition.key_params:
        if k.type not in COLUMN_TYPES:
            bad("key-params", f"illegal key parameter type: {k.type}")

    if definition.anchor_resource not in resources:
        bad("anchor-resource", f"unknown resource: {definition.anchor_resource}")

    seen_elements: set[str] = set()
    mapped_resources: set[str] = set()
    for m in definition.mappings:
        if m.element in seen_elements:
            bad("mappings", f"duplicate element: {m.element}")
        seen_elements.add(m.element)
        if m.resource_id not in resources:
            bad("mappings", f"unknown resource: {m.resource_id}")
        mapped_resources.add(m.resource_id)
        if m.type not in COLUMN_TYPES:
            bad("mappings", f"element {m.element}: illegal type {m.type}")
        for param, _column in m.key_binding:
            if param not in param_names:
                bad("mappings", f"element {m.element}: key-binding names unknown param {param}")

    # mappings against one resource share a single fetch rule, so their key
    # bindings must agree
    by_resource: dict[str, set[tuple[tuple[str, str], ...]]] = {}
    for m in definition.mappings:
        by_resource.setdefault(m.resource_id, set()).add(m.key_binding)
    for rid, bindings in by_resource.items():
        if len(bindings) > 1:
            bad("mappings", f"resource {rid}: mappings disagree on key-binding")

    if definition.anchor_resource in resources and definition.anchor_resource not in mapped_resources:
        bad("anchor-resource", f"no mapping uses anchor resource {definition.anchor_resource}")

    rule_resources: set[str] = set()
    for rule in definition.rules:
        if rule.resource_id in rule_resources:
            bad("rules", f"duplicate rule for resource {rule.resource_id}")
        rule_resources.add(rule.resource_id)
        res = resources.get(rule.resource_id)
        if res is None:
            bad("rules", f"unknown resource: {rule.resource_id}")
            continue
        expected_kind = "relational" if isinstance(rule, RelationalRuleDecl) else "http-xml"
        if res.kind != expected_kind:
            bad("rules", f"resource {rule.resource_id} is {res.kind}, rule grammar requires {expected_kind}")
        for placeholder in rule.placeholders():
            if placeholder not in param_names:
                bad("rules", f"resource {rule.resource_id}: placeholder {placeholder} is not a key param")
        if isinstance(rule, HttpXmlRuleDecl) and not rule.row_path:
            bad("rules", f"resource {rule.resource_id}: row-path must be nonempty")
    for rid in mapped_resources:
        res = resources.get(rid)
        if res is not None and res.kind in ("relational", "http-xml") and rid not in rule_resources:
            bad("rules", f"resource {rid} is {res.kind} but the service declares no rule for it")

    known = dict.fromkeys(seen_elements)
    for t in definition.transforms:
        if t.name in known:
            bad("transforms", f"duplicate element: {t.name}")
        try:
            tree = exprmod.parse_expr(t.expression)
        except Exception as exc:
            bad("transforms", f"{t.name}: unparsable expression ({exc})")
            known[t.name] = None
            continue
        for ref in sorted(exprmod.referenced_names(tree)):
            if ref not in known:
                bad("transforms", f"{t.name}: references undeclared element {ref}")
        known[t.name] = None

    if not definition.presentation:
        bad("presentation", "presentation must list at least one column")
    seen_pres: set[str] = set()
    for col in definition.presentation:
        if col.name not in known:
            bad("presentation", f"column {col.name} names no mapping element or transform")
        if col.name in seen_pres:
            bad("presentation", f"duplicate column: {col.name}")
        seen_pres.add(col.name)

    spec = definition.update_spec
    if spec is not None:
        res = resources.get(spec.target_resource)
        if res is None:
            bad("update-spec", f"unknown resource: {spec.target_resource}")
        else:
            if not res.writable:
                bad("update-spec", f"target resource {spec.target_resource} is not writable")
            if res.kind == "http-xml":
                bad("update-spec", "http-xml resources do not support updates")
        if set(spec.key_columns) & set(spec.writable_columns):
            bad("update-spec", "key and writable column sets must be disjoint")
        if not spec.key_columns:
            bad("update-spec", "at least one key column is required")
        if not spec.writable_columns:
            bad("update-spec", "at least one writable column is required")

    return out
