"""Information delivery server.

Hosts the registry behind authenticated XML endpoints: ACL-filtered service
directory, per-service schema, invoke, write-back updates, atomic registry
reload, and the invocation audit trail. Handlers pin the registry reference
they start with, so a concurrent reload is observed all-or-nothing.
"""

from __future__ import annotations

import threading

import httpx
from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from starlette.concurrency import run_in_threadpool

from infoflow.assembly.resolve import ConnectorSet, coerce_params, resolve
from infoflow.connectors import apply_update
from infoflow.errors import (
    AmbiguousEnrichment,
    DecodeError,
    EvalError,
    InfoflowError,
    MissingParam,
    NoSuchKey,
    ParseError,
    SchemaMismatch,
    SourceUnavailable,
    UpdateUnsupported,
    ValidationError,
)
from infoflow.model.definitions import Principal, check_access
from infoflow.model.registry import Registry, load_registry
from infoflow.protocol import codec, documents
from infoflow.server.audit import AuditLog
from infoflow.server.config import ServerConfig

ADMIN_GROUP = "admin"
XML = "application/xml"


class ServerState:
    def __init__(self, config: ServerConfig, http_client: httpx.Client | None = None, clock=None):
        self.config = config
        self.registry: Registry = load_registry(config.registry_path)
        self.audit = AuditLog(config.audit_log_path, clock=clock)
        self.connectors = ConnectorSet(http_client=http_client)
        self._resource_locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def resource_lock(self, resource_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._resource_locks.setdefault(resource_id, threading.Lock())

    def principal_for(self, authorization: str | None) -> Principal | None:
        if not authorization or not authorization.startswith("Bearer "):
            return None
        return self.config.tokens.get(authorization[len("Bearer ") :])


def _xml(status_code: int, body: bytes) -> Response:
    return Response(content=body, status_code=status_code, media_type=XML)


def _error(status_code: int, code: str, message: str) -> Response:
    return _xml(status_code, documents.encode_error(code, message))


def _invoke_error(status_code: int, code: str, message: str) -> Response:
    return _xml(status_code, codec.encode_response(codec.ServiceResponse.error(code, message)))


def create_app(
    config: ServerConfig, http_client: httpx.Client | None = None, clock=None
) -> FastAPI:
    state = ServerState(config, http_client=http_client, clock=clock)
    app = FastAPI(title="infoflow", openapi_url=None, docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.infoflow = state

    def authenticate(request: Request, action: str) -> Principal | None:
        principal = state.principal_for(request.headers.get("Authorization"))
        if principal is None:
            state.audit.append("anonymous", action, "unauthorized")
        return principal

    @app.get("/directory")
    def directory(request: Request) -> Response:
        registry = state.registry
        principal = authenticate(request, "directory")
        if principal is None:
            return _error(401, "unauthorized", "missing or unknown bearer token")
        entries = [
            documents.DirectoryEntry(
                name=svc.name,
                version=svc.version,
                description=svc.description,
                key_params=svc.key_params,
            )
            for name in registry.service_names()
            for svc in [registry.services[name]]
            if check_access(svc.acl, principal)
        ]
        state.audit.append(principal.user_id, "directory", "ok")
        return _xml(200, documents.encode_directory(entries))

    @app.get("/services/{name}/schema")
    def schema(name: str, request: Request) -> Response:
        registry = state.registry
        principal = authenticate(request, "schema")
        if principal is None:
            return _error(401, "unauthorized", "missing or unknown bearer token")
        svc = registry.services.get(name)
        if svc is None:
            state.audit.append(principal.user_id, "schema", "not-found", service=name)
            return _error(404, "not-found", f"no such service: {name}")
        if not check_access(svc.acl, principal):
            state.audit.append(principal.user_id, "schema", "forbidden", service=name)
            return _error(403, "forbidden", f"not authorized for service {name}")
        state.audit.append(principal.user_id, "schema", "ok", service=name)
        return _xml(200, documents.encode_schema(documents.schema_of(svc)))

    @app.post("/services/{name}/invoke")
    async def invoke(name: str, request: Request) -> Response:
        registry = state.registry
        principal = authenticate(request, "invoke")
        if principal is None:
            return _invoke_error(401, "unauthorized", "missing or unknown bearer token")
        body = await request.body()

        def run() -> Response:
            try:
                wire_request = codec.decode_request(body)
            except DecodeError as exc:
                state.audit.append(principal.user_id, "invoke", "bad-request", service=name)
                return _invoke_error(400, "bad-request", str(exc))
            params = tuple(wire_request.params)
            if wire_request.service != name:
                state.audit.append(principal.user_id, "invoke", "bad-request", service=name, params=params)
                return _invoke_error(
                    400, "bad-request", f"request names service {wire_request.service}, path names {name}"
                )
            if wire_request.version != codec.PROTOCOL_VERSION:
                state.audit.append(principal.user_id, "invoke", "bad-request", service=name, params=params)
                return _invoke_error(400, "bad-request", f"unsupported protocol version {wire_request.version}")
            svc = registry.services.get(name)
            if svc is None:
                state.audit.append(principal.user_id, "invoke", "not-found", service=name, params=params)
                return _invoke_error(404, "not-found", f"no such service: {name}")
            if not check_access(svc.acl, principal):
                state.audit.append(principal.user_id, "invoke", "forbidden", service=name, params=params)
                return _invoke_error(403, "forbidden", f"not authorized for service {name}")
            try:
                typed = coerce_params(svc, dict(params))
                result = resolve(svc, registry.resources, typed, state.connectors)
            except MissingParam as exc:
                state.audit.append(principal.user_id, "invoke", "missing-param", service=name, params=params)
                return _invoke_error(400, "missing-param", f"missing parameter: {exc}")
            except (DecodeError, ValueError) as exc:
                state.audit.append(principal.user_id, "invoke", "bad-request", service=name, params=params)
                return _invoke_error(400, "bad-request", str(exc))
            except SourceUnavailable as exc:
                state.audit.append(principal.user_id, "invoke", "source-unavailable", service=name, params=params)
                return _invoke_error(502, "source-unavailable", f"resource {exc.resource_id}: {exc}")
            except AmbiguousEnrichment as exc:
                state.audit.append(principal.user_id, "invoke", "ambiguous-enrichment", service=name, params=params)
                return _invoke_error(502, "ambiguous-enrichment", str(exc))
            except (EvalError, SchemaMismatch, InfoflowError) as exc:
                state.audit.append(principal.user_id, "invoke", "internal", service=name, params=params)
                return _invoke_error(500, "internal", str(exc))
            meta = codec.ResponseMeta(
                refresh_seconds=svc.refresh_seconds,
                update_service=svc.name if svc.update_spec is not None else None,
                format_hints=tuple(
                    (c.name, c.format_hint) for c in svc.presentation if c.format_hint is not None
                ),
            )
            state.audit.append(principal.user_id, "invoke", "ok", service=name, params=params)
            return _xml(200, codec.encode_response(codec.ServiceResponse.ok(meta, result.table)))

        return await run_in_threadpool(run)

    @app.post("/services/{name}/update")
    async def update(name: str, request: Request) -> Response:
        registry = state.registry
        principal = authenticate(request, "update")
        if principal is None:
            return _error(401, "unauthorized", "missing or unknown bearer token")
        body = await request.body()

        def run() -> Response:
            try:
                wire_service, rows = documents.decode_update_request(body)
            except DecodeError as exc:
                state.audit.append(principal.user_id, "update", "bad-request", service=name)
                return _error(400, "bad-request", str(exc))
            count_params = (("rows", str(len(rows))),)
            if wire_service != name:
                state.audit.append(principal.user_id, "update", "bad-request", service=name, params=count_params)
                return _error(400, "bad-request", f"request names service {wire_service}, path names {name}")
            svc = registry.services.get(name)
            if svc is None:
                state.audit.append(principal.user_id, "update", "not-found", service=name, params=count_params)
                return _error(404, "not-found", f"no such service: {name}")
            if not check_access(svc.acl, principal):
                state.audit.append(principal.user_id, "update", "forbidden", service=name, params=count_params)
                return _error(403, "forbidden", f"not authorized for service {name}")
            spec = svc.update_spec
            if spec is None:
                state.audit.append(principal.user_id, "update", "update-unsupported", service=name, params=count_params)
                return _error(405, "update-unsupported", f"service {name} has no update spec")
            for row in rows:
                bad_cols = set(row.new_values) - set(spec.writable_columns)
                if bad_cols:
                    state.audit.append(principal.user_id, "update", "bad-request", service=name, params=count_params)
                    return _error(400, "bad-request", f"columns not writable: {sorted(bad_cols)}")
                if set(row.key_values) != set(spec.key_columns):
                    state.audit.append(principal.user_id, "update", "bad-request", service=name, params=count_params)
                    return _error(
                        400, "bad-request", f"update rows must key on exactly {list(spec.key_columns)}"
                    )
                if not row.new_values:
                    state.audit.append(principal.user_id, "update", "bad-request", service=name, params=count_params)
                    return _error(400, "bad-request", "update row sets no values")
            resource = registry.resources[spec.target_resource]
            try:
                with state.resource_lock(resource.id):
                    applied = apply_update(resource, spec, rows)
            except NoSuchKey as exc:
                state.audit.append(principal.user_id, "update", "no-such-key", service=name, params=count_params)
                return _error(409, "no-such-key", str(exc))
            except UpdateUnsupported as exc:
                state.audit.append(principal.user_id, "update", "update-unsupported", service=name, params=count_params)
                return _error(405, "update-unsupported", str(exc))
            except SourceUnavailable as exc:
                state.audit.append(principal.user_id, "update", "source-unavailable", service=name, params=count_params)
                return _error(502, "source-unavailable", str(exc))
            except (SchemaMismatch, ValueError) as exc:
                state.audit.append(principal.user_id, "update", "bad-request", service=name, params=count_params)
                return _error(400, "bad-request", str(exc))
            state.audit.append(
                principal.user_id,
                "update",
                "ok",
                service=name,
                params=(("rows", str(len(rows))), ("applied", str(applied))),
            )
            return _xml(200, documents.encode_update_response(applied))

        return await run_in_threadpool(run)

    @app.post("/admin/reload")
    def reload(request: Request) -> Response:
        principal = authenticate(request, "reload")
        if principal is None:
            return _error(401, "unauthorized", "missing or unknown bearer token")
        if ADMIN_GROUP not in principal.groups:
            state.audit.append(principal.user_id, "reload", "forbidden")
            return _error(403, "forbidden", "registry reload requires the admin group")
        try:
            fresh = load_registry(state.config.registry_path)
        except (ParseError, ValidationError) as exc:
            state.audit.append(principal.user_id, "reload", "validation-failed")
            return _error(409, "validation-failed", str(exc))
        state.registry = fresh  # atomic reference swap; in-flight handlers keep their pin
        state.audit.append(principal.user_id, "reload", "ok")
        return _xml(200, documents.encode_reload_response(len(fresh.services), len(fresh.resources)))

    @app.get("/admin/audit")
    def read_audit(request: Request, since: int = 0) -> Response:
        principal = authenticate(request, "audit")
        if principal is None:
            return _error(401, "unauthorized", "missing or unknown bearer token")
        if ADMIN_GROUP not in principal.groups:
            state.audit.append(principal.user_id, "audit", "forbidden")
            return _error(403, "forbidden", "audit access requires the admin group")
        # read before appending so the response reflects prior operations only
        records = state.audit.read_since(since)
        state.audit.append(principal.user_id, "audit", "ok")
        return _xml(200, documents.encode_audit(records))

    return app
