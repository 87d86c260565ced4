import shutil
from datetime import datetime, timezone
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from infoflow.client import ServerClient
from infoflow.server import create_app, load_config

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

# filled by tests/test_acceptance.py; echoed after the run so the verdict per
# criterion is visible in the terminal output
ACCEPTANCE_RESULTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)

TOKENS = {
    "alice": ("alice-token", {"finance"}),
    "bob": ("bob-token", {"sales"}),
    "carol": ("carol-token", set()),
    "root": ("admin-token", {"admin"}),
}


@pytest.fixture
def workspace(tmp_path):
    """Copy of the shipped fixtures plus a server config, all under tmp_path."""
    shutil.copytree(FIXTURES, tmp_path / "fixtures")
    tokens = "\n".join(
        f'  <token value="{token}" user="{user}">'
        + "".join(f"<group>{g}</group>" for g in sorted(groups))
        + "</token>"
        for user, (token, groups) in TOKENS.items()
    )
    (tmp_path / "server.xml").write_text(
        '<server listen="127.0.0.1:8040" registry="fixtures/registry" audit-log="audit.log">\n'
        f"{tokens}\n</server>"
    )
    return tmp_path


@pytest.fixture
def server_app(workspace):
    return create_app(load_config(workspace / "server.xml"))


@pytest.fixture
def http(server_app):
    with TestClient(server_app) as test_client:
        yield test_client


def client_for(http, user: str) -> ServerClient:
    return ServerClient(token=TOKENS[user][0], http=http)


@pytest.fixture
def alice(http):
    return client_for(http, "alice")


@pytest.fixture
def admin(http):
    return client_for(http, "root")


@pytest.fixture
def fixed_clock():
    """Mutable fake clock; advance with clock.advance(seconds)."""

    class Clock:
        def __init__(self):
            self.now = datetime(2026, 1, 1, 12, 0, 0, tzinfo=timezone.utc)

        def __call__(self):
            return self.now

        def advance(self, seconds):
            from datetime import timedelta

            self.now += timedelta(seconds=seconds)

    return Clock()
