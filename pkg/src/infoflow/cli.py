"""Operator command line: run the server, validate registries, invoke
services headlessly, and drive workbook files (including hosting the session
facade for the browser grid).

Exit codes: 0 success, 1 usage, 2 validation, 3 network/server, 4 data error.
"""

from __future__ import annotations

import sys

import click

from infoflow.client import ServerClient, ServerError
from infoflow.errors import (
    DecodeError,
    InfoflowError,
    ParseError,
    SourceUnavailable,
    ValidationError,
)
from infoflow.model.registry import load_registry
from infoflow.model.values import Value, decode_value, encode_value
from infoflow.protocol import codec
from infoflow.workbook import store
from infoflow.workbook.address import CellAddress
from infoflow.workbook.engine import ParamSource, Workbook, WorkbookError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_NETWORK = 3
EXIT_DATA = 4

DEFAULT_SERVER = "http://127.0.0.1:8040"


def _client(server: str | None, token: str | None) -> ServerClient:
    import os

    base = server or os.environ.get("INFOFLOW_SERVER", DEFAULT_SERVER)
    tok = token or os.environ.get("INFOFLOW_TOKEN", "")
    return ServerClient(base_url=base, token=tok)


def format_table(columns: list[str], rows: list[list[str]]) -> str:
    widths = [len(c) for c in columns]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = [
        "  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip(),
        "  ".join("-" * w for w in widths),
    ]
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    return "\n".join(lines)


def _print_response_table(response: codec.ServiceResponse) -> None:
    table = response.table
    rows = [["" if v.is_null else encode_value(v) for v in row] for row in table.rows]
    click.echo(format_table(table.column_names, rows))


server_option = click.option("--server", default=None, help="Server base URL (or INFOFLOW_SERVER).")
token_option = click.option("--token", default=None, help="Bearer token (or INFOFLOW_TOKEN).")


@click.group()
def cli():
    """Information delivery server, registry tools, and workbook client."""


@cli.command()
@click.option("--config", envvar="INFOFLOW_CONFIG", required=True, help="Server config XML file.")
def serve(config):
    """Run the information delivery server."""
    import uvicorn

    from infoflow.server import create_app, load_config

    cfg = load_config(config)
    host, _, port = cfg.listen.partition(":")
    uvicorn.run(create_app(cfg), host=host or "127.0.0.1", port=int(port or 8040))


@cli.group()
def registry():
    """Registry management."""


@registry.command("validate")
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
def registry_validate(directory):
    """Validate every resource and service document in DIRECTORY."""
    reg = load_registry(directory)
    click.echo(f"{len(reg.services)} services ok")


@cli.command()
@server_option
@token_option
def directory(server, token):
    """List the services you are authorized to invoke."""
    entries = _client(server, token).directory()
    rows = [
        [e.name, str(e.version), ", ".join(k.name for k in e.key_params), e.description]
        for e in entries
    ]
    click.echo(format_table(["service", "version", "keys", "description"], rows))


@cli.command()
@click.argument("service")
@click.option("--param", "params", multiple=True, help="Key parameter, k=v; repeatable.")
@click.option("--xml", "as_xml", is_flag=True, help="Print the raw response XML.")
@server_option
@token_option
def invoke(service, params, as_xml, server, token):
    """Invoke SERVICE and print the result table."""
    pairs = []
    for raw in params:
        if "=" not in raw:
            raise click.UsageError(f"--param must be k=v, got {raw!r}")
        name, _, value = raw.partition("=")
        pairs.append((name, value))
    client = _client(server, token)
    if as_xml:
        status, content = client.invoke_raw(service, pairs)
        click.echo(content.decode("utf-8"))
        decoded = codec.decode_response(content)
        if decoded.status == "error":
            raise ServerError(decoded.error_message or "", status=status, code=decoded.error_code)
        return
    _print_response_table(client.invoke(service, pairs))


def _load_wb(path, server, token) -> Workbook:
    return store.load(path, client=_client(server, token))


def _parse_wb_params(raw_params) -> list[tuple[str, ParamSource]]:
    out = []
    for raw in raw_params:
        if "=" not in raw:
            raise click.UsageError(f"--param must be k=v or k=@CellRef, got {raw!r}")
        name, _, value = raw.partition("=")
        if value.startswith("@"):
            out.append((name, ParamSource.of_ref(CellAddress.parse(value[1:]))))
        else:
            out.append((name, ParamSource.of_literal(Value.text(value))))
    return out


@cli.group()
def wb():
    """Workbook commands."""


@wb.command("new")
@click.argument("file", type=click.Path())
@click.option("--audit-depth", default=10, show_default=True, help="Per-cell audit ring size.")
def wb_new(file, audit_depth):
    """Create an empty workbook file."""
    store.save(Workbook(audit_depth=audit_depth), file)
    click.echo(f"created {file}")


@wb.command("bind")
@click.argument("file", type=click.Path(exists=True))
@click.option("--origin", required=True, help="Top-left cell of the block, e.g. Sheet1!B2.")
@click.option("--service", required=True)
@click.option("--param", "params", multiple=True, help="k=v literal or k=@Sheet1!A2 cell reference.")
@click.option("--mode", type=click.Choice(["read-only", "writable"]), default="read-only")
@server_option
@token_option
def wb_bind(file, origin, service, params, mode, server, token):
    """Bind a service result block to a cell range."""
    workbook = _load_wb(file, server, token)
    binding_id = workbook.bind(CellAddress.parse(origin), service, _parse_wb_params(params), mode)
    store.save(workbook, file)
    click.echo(f"binding {binding_id}")


@wb.command("refresh")
@click.argument("file", type=click.Path(exists=True))
@click.argument("binding_id", type=int)
@click.option("--user", default="local")
@server_option
@token_option
def wb_refresh(file, binding_id, user, server, token):
    """Refresh a binding from the server."""
    workbook = _load_wb(file, server, token)
    outcome = workbook.refresh(binding_id, user=user)
    store.save(workbook, file)
    if outcome.state == "error":
        click.echo(f"error: {outcome.message}", err=True)
        raise SystemExit(EXIT_NETWORK)
    click.echo(f"refreshed: {outcome.changed_cells} cells changed")


@wb.command("edit")
@click.argument("file", type=click.Path(exists=True))
@click.argument("address")
@click.argument("value")
@click.option("--type", "value_type", default="text", help="Value tag of VALUE.")
@click.option("--user", default="local")
def wb_edit(file, address, value, value_type, user):
    """Edit one cell (subject to cell protection)."""
    workbook = store.load(file)
    workbook.edit_cell(CellAddress.parse(address), decode_value(value_type, value), user=user)
    store.save(workbook, file)
    click.echo("ok")


@wb.command("push")
@click.argument("file", type=click.Path(exists=True))
@click.argument("binding_id", type=int)
@click.option("--user", default="local")
@server_option
@token_option
def wb_push(file, binding_id, user, server, token):
    """Push dirty writable cells back to the owning source."""
    workbook = _load_wb(file, server, token)
    applied = workbook.push_updates(binding_id, user=user)
    store.save(workbook, file)
    click.echo(f"pushed {applied}")


@wb.command("audit")
@click.argument("file", type=click.Path(exists=True))
@click.argument("address")
def wb_audit(file, address):
    """Show a cell's audit ring, newest first."""
    workbook = store.load(file)
    records = workbook.audit_of(CellAddress.parse(address))
    if not records:
        click.echo("no history")
        return
    rows = [
        [
            encode_value(Value.timestamp(r.timestamp)),
            r.user,
            r.origin,
            "" if r.previous.is_null else encode_value(r.previous),
            "" if r.new.is_null else encode_value(r.new),
        ]
        for r in records
    ]
    click.echo(format_table(["timestamp", "user", "origin", "previous", "new"], rows))


@wb.command("checkpoint")
@click.argument("file", type=click.Path(exists=True))
@click.argument("label")
def wb_checkpoint(file, label):
    """Snapshot the grid and bindings."""
    workbook = store.load(file)
    checkpoint_id = workbook.checkpoint(label)
    store.save(workbook, file)
    click.echo(f"checkpoint {checkpoint_id}")


@wb.command("restore")
@click.argument("file", type=click.Path(exists=True))
@click.argument("checkpoint_id", type=int)
@click.option("--user", default="local")
def wb_restore(file, checkpoint_id, user):
    """Restore the grid and bindings from a checkpoint."""
    workbook = store.load(file)
    workbook.restore(checkpoint_id, user=user)
    store.save(workbook, file)
    click.echo(f"restored {checkpoint_id}")


@wb.command("serve-session")
@click.argument("file", type=click.Path(exists=True))
@click.option("--listen", default="127.0.0.1:8041", show_default=True)
@click.option("--user", default="local")
@server_option
@token_option
def wb_serve_session(file, listen, user, server, token):
    """Host the JSON session facade for the browser grid."""
    import uvicorn

    from infoflow.workbook.session import create_session_app

    workbook = _load_wb(file, server, token)
    app = create_session_app(workbook, path=file, user=user)
    host, _, port = listen.partition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8041))


def run(argv: list[str] | None = None) -> int:
    """Dispatch argv and map failures onto the exit-code contract."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return EXIT_OK
    except SystemExit as exc:
        code = exc.code or 0
        return code if isinstance(code, int) else EXIT_USAGE
    except click.UsageError as exc:
        click.echo(f"error: usage: {exc.format_message()}", err=True)
        return EXIT_USAGE
    except click.ClickException as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return EXIT_USAGE
    except (ParseError, ValidationError) as exc:
        click.echo(f"error: validation: {exc}", err=True)
        return EXIT_VALIDATION
    except (ServerError, SourceUnavailable) as exc:
        click.echo(f"error: server: {exc}", err=True)
        return EXIT_NETWORK
    except (WorkbookError, DecodeError, InfoflowError, ValueError) as exc:
        click.echo(f"error: data: {exc}", err=True)
        return EXIT_DATA


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
