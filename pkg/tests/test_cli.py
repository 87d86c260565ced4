import threading
import time

import pytest
import uvicorn

from infoflow.cli import run
from infoflow.server import create_app, load_config


@pytest.fixture
def live_server(workspace, free_tcp_port, monkeypatch):
    """The real server on a loopback port, plus CLI env pointing at it."""
    app = create_app(load_config(workspace / "server.xml"))
    config = uvicorn.Config(app, host="127.0.0.1", port=free_tcp_port, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("server did not start")
        time.sleep(0.01)
    monkeypatch.setenv("INFOFLOW_SERVER", f"http://127.0.0.1:{free_tcp_port}")
    monkeypatch.setenv("INFOFLOW_TOKEN", "alice-token")
    yield workspace
    server.should_exit = True
    thread.join(timeout=5)


class TestRegistryValidate:
    def test_valid_registry(self, workspace, capsys):
        assert run(["registry", "validate", str(workspace / "fixtures" / "registry")]) == 0
        assert capsys.readouterr().out.strip() == "2 services ok"

    def test_broken_registry_exits_2(self, workspace, capsys):
        registry = workspace / "fixtures" / "registry"
        (registry / "broken.xml").write_text("<service oops")
        assert run(["registry", "validate", str(registry)]) == 2
        assert "broken.xml" in capsys.readouterr().err

    def test_missing_directory_is_usage_error(self):
        assert run(["registry", "validate", "/nonexistent-dir"]) == 1


class TestDirectory:
    def test_lists_services(self, live_server, capsys):
        assert run(["directory"]) == 0
        out = capsys.readouterr().out
        assert "customer-info" in out
        assert "customerID" in out

    def test_bad_token_exits_3(self, live_server, capsys, monkeypatch):
        monkeypatch.setenv("INFOFLOW_TOKEN", "wrong")
        assert run(["directory"]) == 3

    def test_unreachable_server_exits_3(self, capsys, monkeypatch):
        monkeypatch.setenv("INFOFLOW_SERVER", "http://127.0.0.1:1")
        monkeypatch.setenv("INFOFLOW_TOKEN", "alice-token")
        assert run(["directory"]) == 3


class TestInvoke:
    def test_table_output(self, live_server, capsys):
        assert run(["invoke", "customer-info", "--param", "customerID=C001"]) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0].split() == ["name", "address", "phone", "credit_rating"]
        assert "Acme Corp" in out[2]
        assert "AA" in out[2]

    def test_null_cells_render_empty(self, live_server, capsys):
        assert run(["invoke", "customer-info", "--param", "customerID=C002"]) == 0
        data_line = capsys.readouterr().out.splitlines()[2]
        assert "Globex" in data_line
        assert data_line.rstrip().endswith("555-0199")  # null rating prints as nothing

    def test_xml_output_is_wire_bytes(self, live_server, capsys):
        assert run(["invoke", "customer-info", "--param", "customerID=C001", "--xml"]) == 0
        out = capsys.readouterr().out.strip()
        assert out.startswith('<service-response status="ok">')
        assert "<cell>Acme Corp</cell>" in out

    def test_malformed_param_is_usage_error(self, live_server):
        assert run(["invoke", "customer-info", "--param", "customerID"]) == 1

    def test_missing_param_exits_3(self, live_server):
        assert run(["invoke", "customer-info"]) == 3

    def test_forbidden_service_exits_3(self, live_server, monkeypatch):
        monkeypatch.setenv("INFOFLOW_TOKEN", "carol-token")
        assert run(["invoke", "customer-info", "--param", "customerID=C001"]) == 3


class TestWorkbookCommands:
    def test_full_cycle(self, live_server, workspace, capsys):
        wb = str(workspace / "book.xml")
        assert run(["wb", "new", wb]) == 0
        assert run([
            "wb", "bind", wb,
            "--origin", "Sheet1!B2",
            "--service", "customer-info",
            "--param", "customerID=C001",
            "--mode", "writable",
        ]) == 0
        assert "binding 1" in capsys.readouterr().out
        assert run(["wb", "refresh", wb, "1"]) == 0
        assert "8 cells changed" in capsys.readouterr().out
        assert run(["wb", "checkpoint", wb, "before"]) == 0
        capsys.readouterr()
        assert run(["wb", "edit", wb, "Sheet1!D3", "555-0042"]) == 0
        capsys.readouterr()
        assert run(["wb", "push", wb, "1"]) == 0
        assert "pushed 1" in capsys.readouterr().out
        assert "555-0042" in (workspace / "fixtures" / "crm.csv").read_text()
        assert run(["wb", "audit", wb, "Sheet1!D3"]) == 0
        audit_out = capsys.readouterr().out
        assert "push-confirm" in audit_out
        assert "manual-edit" in audit_out
        assert run(["wb", "restore", wb, "1"]) == 0
        capsys.readouterr()
        assert run(["wb", "audit", wb, "Sheet1!D3"]) == 0
        assert "restore" in capsys.readouterr().out

    def test_protected_edit_exits_4(self, live_server, workspace, capsys):
        wb = str(workspace / "book.xml")
        run(["wb", "new", wb])
        run(["wb", "bind", wb, "--origin", "Sheet1!B2", "--service", "customer-info",
             "--param", "customerID=C001"])
        run(["wb", "refresh", wb, "1"])
        assert run(["wb", "edit", wb, "Sheet1!C3", "tampered"]) == 4

    def test_refresh_against_dead_server_exits_3(self, live_server, workspace, monkeypatch):
        wb = str(workspace / "book.xml")
        run(["wb", "new", wb])
        run(["wb", "bind", wb, "--origin", "Sheet1!B2", "--service", "customer-info",
             "--param", "customerID=C001"])
        monkeypatch.setenv("INFOFLOW_SERVER", "http://127.0.0.1:1")
        assert run(["wb", "refresh", wb, "1"]) == 3

    def test_cell_reference_param(self, live_server, workspace, capsys):
        wb = str(workspace / "book.xml")
        run(["wb", "new", wb])
        run(["wb", "edit", wb, "Sheet1!A1", "C002"])
        run(["wb", "bind", wb, "--origin", "Sheet1!B2", "--service", "customer-info",
             "--param", "customerID=@Sheet1!A1"])
        capsys.readouterr()
        assert run(["wb", "refresh", wb, "1"]) == 0
        assert run(["wb", "audit", wb, "Sheet1!B3"]) == 0
        assert "Globex" in capsys.readouterr().out


class TestUsage:
    def test_unknown_command(self):
        assert run(["frobnicate"]) == 1

    def test_no_args_shows_help(self, capsys):
        code = run([])
        assert code in (0, 1)
