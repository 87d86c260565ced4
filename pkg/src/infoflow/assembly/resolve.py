"""Service invocation: fetch the anchor rows, enrich them by key, evaluate
transforms, and project to the presentation layout.

Enrichment sources are functional lookups: at most one row per key, otherwise
the resolve fails loudly with AmbiguousEnrichment. Any unreachable source
fails the whole resolve; no partial tables are ever returned.
"""

from __future__ import annotations

from dataclasses import dataclass

import httpx

from infoflow.assembly import expr as exprmod
from infoflow.connectors import fetch_http, fetch_relational, fetch_tabular
from infoflow.connectors.rules import HttpXmlRule, RelationalRule, TabularRule
from infoflow.errors import AmbiguousEnrichment, MissingParam
from infoflow.model.definitions import (
    ElementMapping,
    HttpXmlRuleDecl,
    RelationalRuleDecl,
    ResourceDescriptor,
    ServiceDefinition,
)
from infoflow.model.values import NULL, Column, Table, Value, decode_value, encode_value


@dataclass(frozen=True)
class ResolvedResult:
    table: Table
    provenance: dict[str, str]  # mapped element -> resource id


class ConnectorSet:
    """Dispatches fetches by resource kind; carries the shared HTTP client."""

    def __init__(self, http_client: httpx.Client | None = None):
        self.http_client = http_client

    def fetch(self, res: ResourceDescriptor, rule, params: dict[str, Value]) -> Table:
        if isinstance(rule, TabularRule):
            return fetch_tabular(res, rule, params)
        if isinstance(rule, RelationalRule):
            return fetch_relational(res, rule, params)
        return fetch_http(res, rule, params, client=self.http_client)


def coerce_params(definition: ServiceDefinition, raw: dict[str, str]) -> dict[str, Value]:
    """Decode canonical-text params against the declared key types."""
    declared = {k.name: k for k in definition.key_params}
    for name in raw:
        if name not in declared:
            raise ValueError(f"unknown parameter: {name}")
    out = {}
    for key in definition.key_params:
        if key.name in raw:
            out[key.name] = decode_value(key.type, raw[key.name])
        elif key.required:
            raise MissingParam(key.name)
    return out


def check_params(definition: ServiceDefinition, params: dict[str, Value]) -> None:
    declared = {k.name: k for k in definition.key_params}
    for name, value in params.items():
        key = declared.get(name)
        if key is None:
            raise ValueError(f"unknown parameter: {name}")
        if value.tag not in (key.type, "null"):
            raise ValueError(f"parameter {name} must be {key.type}, got {value.tag}")
    for key in definition.key_params:
        if key.required and key.name not in params:
            raise MissingParam(key.name)


def _column_type(definition: ServiceDefinition, resource_id: str, source_column: str) -> str:
    for m in definition.mappings:
        if m.resource_id == resource_id and m.source_column == source_column:
            return m.type
    binding = _key_binding(definition, resource_id)
    declared = {k.name: k.type for k in definition.key_params}
    for param, column in binding:
        if column == source_column:
            return declared[param]
    return "text"


def _key_binding(definition: ServiceDefinition, resource_id: str) -> tuple[tuple[str, str], ...]:
    for m in definition.mappings:
        if m.resource_id == resource_id:
            return m.key_binding
    return ()


def build_rule(
    definition: ServiceDefinition,
    resource: ResourceDescriptor,
    mappings: list[ElementMapping],
    include_key_columns: bool,
):
    """Shared fetch rule for all of a service's mappings against one resource."""
    decl = definition.rule_for(resource.id)
    binding = mappings[0].key_binding if mappings else ()
    if resource.kind == "tabular-file":
        seen: dict[str, str] = {}
        for m in mappings:
            seen.setdefault(m.source_column, m.type)
        if include_key_columns:
            for param, column in binding:
                seen.setdefault(column, _column_type(definition, resource.id, column))
        projection = tuple(Column(name, t) for name, t in seen.items())
        return TabularRule(projection=projection, filter=tuple((c, p) for p, c in binding))
    if isinstance(decl, RelationalRuleDecl):
        columns = tuple(
            Column(name, _column_type(definition, resource.id, name)) for name in decl.output_columns
        )
        return RelationalRule(template=decl.template, columns=columns)
    if isinstance(decl, HttpXmlRuleDecl):
        fields = tuple(
            (name, path, _column_type(definition, resource.id, name)) for name, path in decl.field_paths
        )
        return HttpXmlRule(url_template=decl.url_template, row_path=decl.row_path, fields=fields)
    raise ValueError(f"no extraction rule for resource {resource.id}")


def resolve(
    definition: ServiceDefinition,
    resources: dict[str, ResourceDescriptor],
    params: dict[str, Value],
    connectors: ConnectorSet | None = None,
) -> ResolvedResult:
    connectors = connectors or ConnectorSet()
    check_params(definition, params)

    anchor_id = definition.anchor_resource
    anchor_mappings = [m for m in definition.mappings if m.resource_id == anchor_id]
    enrichment_order: list[str] = []
    enrichment_mappings: dict[str, list[ElementMapping]] = {}
    for m in definition.mappings:
        if m.resource_id != anchor_id:
            if m.resource_id not in enrichment_mappings:
                enrichment_order.append(m.resource_id)
                enrichment_mappings[m.resource_id] = []
            enrichment_mappings[m.resource_id].append(m)

    anchor_rule = build_rule(definition, resources[anchor_id], anchor_mappings, include_key_columns=True)
    anchor_table = connectors.fetch(resources[anchor_id], anchor_rule, params)
    anchor_binding = dict((p, c) for p, c in _key_binding(definition, anchor_id))

    def anchor_key(row: tuple[Value, ...], param: str) -> Value:
        column = anchor_binding.get(param)
        if column is None:
            return params[param]
        return row[anchor_table.column_index(column)]

    def rule_column_index(rule) -> dict[str, int]:
        if isinstance(rule, TabularRule):
            return {c.name: i for i, c in enumerate(rule.projection)}
        if isinstance(rule, RelationalRule):
            return {c.name: i for i, c in enumerate(rule.columns)}
        return {name: i for i, (name, _path, _t) in enumerate(rule.fields)}

    # enrichment fetches are cached per distinct key tuple
    enrichment_lookups: dict[str, tuple[dict[str, int], dict[tuple, tuple[Value, ...] | None]]] = {}
    for rid in enrichment_order:
        res = resources[rid]
        rule = build_rule(definition, res, enrichment_mappings[rid], include_key_columns=False)
        binding_params = [p for p, _c in enrichment_mappings[rid][0].key_binding]
        cache: dict[tuple, tuple[Value, ...] | None] = {}
        for row in anchor_table.rows:
            key_values = {p: anchor_key(row, p) for p in binding_params}
            cache_key = tuple(encode_value(key_values[p]) for p in binding_params)
            if cache_key in cache:
                continue
            fetched = connectors.fetch(res, rule, key_values)
            if len(fetched.rows) > 1:
                raise AmbiguousEnrichment(rid, ",".join(cache_key))
            cache[cache_key] = fetched.rows[0] if fetched.rows else None
        enrichment_lookups[rid] = (rule_column_index(rule), cache)

    element_types = definition.element_types()
    transform_trees = [(t.name, exprmod.parse_expr(t.expression)) for t in definition.transforms]

    out_rows: list[tuple[Value, ...]] = []
    for row in anchor_table.rows:
        values: dict[str, Value] = {}
        for m in anchor_mappings:
            values[m.element] = row[anchor_table.column_index(m.source_column)]
        for rid in enrichment_order:
            binding_params = [p for p, _c in enrichment_mappings[rid][0].key_binding]
            cache_key = tuple(encode_value(anchor_key(row, p)) for p in binding_params)
            col_index, cache = enrichment_lookups[rid]
            hit = cache.get(cache_key)
            for m in enrichment_mappings[rid]:
                values[m.element] = NULL if hit is None else hit[col_index[m.source_column]]
        for name, tree in transform_trees:
            values[name] = exprmod.eval_expr(tree, values)
        out_rows.append(tuple(values[col.name] for col in definition.presentation))

    columns = tuple(Column(col.name, element_types[col.name]) for col in definition.presentation)
    provenance = {m.element: m.resource_id for m in definition.mappings}
    return ResolvedResult(table=Table(columns=columns, rows=tuple(out_rows)), provenance=provenance)
