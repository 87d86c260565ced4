"""Thin HTTP client for the delivery server's XML endpoints.

Accepts any httpx.Client (including test clients bound to an in-process app),
decodes wire documents, and raises ServerError with the wire error code on
any non-2xx outcome.
"""

from __future__ import annotations

import httpx

from infoflow.connectors.rules import UpdateRow
from infoflow.errors import DecodeError, InfoflowError
from infoflow.protocol import codec, documents


class ServerError(InfoflowError):
    def __init__(self, message: str, *, status: int | None = None, code: str | None = None):
        self.status = status
        self.code = code
        super().__init__(message)


class ServerClient:
    def __init__(self, base_url: str = "", token: str = "", http: httpx.Client | None = None):
        self._http = http or httpx.Client(base_url=base_url)
        self.token = token

    def close(self) -> None:
        self._http.close()

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/xml"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        return headers

    def _request(self, method: str, path: str, content: bytes | None = None, **kwargs) -> httpx.Response:
        try:
            return self._http.request(method, path, content=content, headers=self._headers(), **kwargs)
        except httpx.HTTPError as exc:
            raise ServerError(f"cannot reach server: {exc}") from exc

    def _raise_error_doc(self, response: httpx.Response) -> None:
        try:
            code, message = documents.decode_error(response.content)
        except DecodeError:
            code, message = "http-error", response.text
        raise ServerError(message, status=response.status_code, code=code)

    def directory(self) -> list[documents.DirectoryEntry]:
        response = self._request("GET", "/directory")
        if response.status_code != 200:
            self._raise_error_doc(response)
        return documents.decode_directory(response.content)

    def schema(self, service: str) -> documents.SchemaDoc:
        response = self._request("GET", f"/services/{service}/schema")
        if response.status_code != 200:
            self._raise_error_doc(response)
        return documents.decode_schema(response.content)

    def invoke_raw(self, service: str, params: list[tuple[str, str]]) -> tuple[int, bytes]:
        body = codec.encode_request(codec.ServiceRequest(service=service, params=tuple(params)))
        response = self._request("POST", f"/services/{service}/invoke", content=body)
        return response.status_code, response.content

    def invoke(self, service: str, params: list[tuple[str, str]]) -> codec.ServiceResponse:
        status, content = self.invoke_raw(service, params)
        decoded = codec.decode_response(content)
        if decoded.status == "error":
            raise ServerError(decoded.error_message or "", status=status, code=decoded.error_code)
        return decoded

    def update(self, service: str, rows: list[UpdateRow]) -> int:
        body = documents.encode_update_request(service, rows)
        response = self._request("POST", f"/services/{service}/update", content=body)
        if response.status_code != 200:
            self._raise_error_doc(response)
        return documents.decode_update_response(response.content)

    def reload(self) -> bytes:
        response = self._request("POST", "/admin/reload")
        if response.status_code != 200:
            self._raise_error_doc(response)
        return response.content

    def audit(self, since: int = 0) -> list[documents.AuditRecordDoc]:
        response = self._request("GET", "/admin/audit", params={"since": since})
        if response.status_code != 200:
            self._raise_error_doc(response)
        return documents.decode_audit(response.content)
