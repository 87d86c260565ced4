"""Acceptance gate: one test per release criterion.

Each test prints (and records for the terminal summary) a single pass/fail
line, so the verdict per criterion is readable at a glance.
"""

import functools
import random
import re
import threading
from datetime import datetime, timezone
from decimal import Decimal
from pathlib import Path

import pytest

import conftest
from conftest import client_for
from infoflow.assembly.resolve import resolve
from infoflow.client import ServerClient, ServerError
from infoflow.connectors.rules import UpdateRow
from infoflow.model.definitions import (
    AccessControlList,
    ElementMapping,
    KeyParam,
    PresentationColumn,
    Principal,
    ResourceDescriptor,
    ServiceDefinition,
    check_access,
    validate_service_definition,
)
from infoflow.model.values import NULL, Value, encode_value
from infoflow.protocol import codec
from infoflow.workbook import store
from infoflow.workbook.address import CellAddress
from infoflow.workbook.engine import ParamSource, Workbook


def criterion(number, name):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            line = f"criterion {number} ({name})"
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"{line}: FAIL")
                conftest.ACCEPTANCE_RESULTS.append(f"{line}: FAIL")
                raise
            print(f"{line}: PASS")
            conftest.ACCEPTANCE_RESULTS.append(f"{line}: PASS")

        return wrapper

    return decorate


# --- 1: join-oracle equivalence -----------------------------------------------


def random_cell(rng, col_type):
    if rng.random() < 0.12:
        return None  # null
    if col_type == "number":
        return encode_value(Value.number(Decimal(rng.randint(-99999, 99999)) / 100))
    return "v" + str(rng.randint(0, 999))


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join("" if c is None else c for c in row))
    path.write_text("\n".join(lines) + "\n")


@criterion(1, "join-oracle equivalence")
def test_resolve_equals_nested_loop_left_join(tmp_path):
    rng = random.Random(104729)
    binding = (("id", "k"),)
    for case in range(500):
        base = tmp_path / f"case{case}"
        base.mkdir()
        keys = [f"k{n}" for n in range(rng.randint(1, 12))]
        wanted = rng.choice(keys + ["absent"])

        anchor_types = [rng.choice(["text", "number"]) for _ in range(rng.randint(1, 3))]
        anchor_header = ["k"] + [f"a{i}" for i in range(len(anchor_types))]
        anchor_rows = [
            [rng.choice(keys)] + [random_cell(rng, t) for t in anchor_types]
            for _ in range(rng.randint(0, 100))
        ]
        write_csv(base / "anchor.csv", anchor_header, anchor_rows)

        resources = {
            "anchor": ResourceDescriptor("anchor", "tabular-file", str(base / "anchor.csv"))
        }
        mappings = [
            ElementMapping(f"a{i}", "anchor", f"a{i}", binding, anchor_types[i])
            for i in range(len(anchor_types))
        ]
        enrich_data = {}
        for e in range(rng.randint(0, 2)):
            rid = f"e{e}"
            e_types = [rng.choice(["text", "number"]) for _ in range(rng.randint(1, 2))]
            header = ["k"] + [f"{rid}c{i}" for i in range(len(e_types))]
            # functional: at most one row per key
            e_keys = rng.sample(keys, rng.randint(0, len(keys)))
            e_rows = [[k] + [random_cell(rng, t) for t in e_types] for k in e_keys]
            write_csv(base / f"{rid}.csv", header, e_rows)
            resources[rid] = ResourceDescriptor(rid, "tabular-file", str(base / f"{rid}.csv"))
            mappings.extend(
                ElementMapping(f"{rid}c{i}", rid, f"{rid}c{i}", binding, e_types[i])
                for i in range(len(e_types))
            )
            enrich_data[rid] = {row[0]: row[1:] for row in e_rows}

        elements = [m.element for m in mappings]
        shown = rng.sample(elements, rng.randint(1, len(elements)))
        definition = ServiceDefinition(
            name="generated",
            version=1,
            description="",
            key_params=(KeyParam("id", "text"),),
            anchor_resource="anchor",
            mappings=tuple(mappings),
            presentation=tuple(PresentationColumn(n) for n in shown),
            refresh_seconds=60,
            acl=AccessControlList(allowed_groups=frozenset({"g"})),
        )
        assert validate_service_definition(definition, resources) == []

        result = resolve(definition, resources, {"id": Value.text(wanted)})

        # independent oracle: nested-loop left join over the raw python rows
        expected = []
        for row in anchor_rows:
            if row[0] != wanted:
                continue
            joined = {f"a{i}": row[1 + i] for i in range(len(anchor_types))}
            for rid, lookup in enrich_data.items():
                match = lookup.get(wanted)
                width = len(next(iter(lookup.values()))) if lookup else 2
                for i in range(width):
                    joined[f"{rid}c{i}"] = match[i] if match is not None else None
            expected.append([joined.get(n) for n in shown])

        got = [
            [None if v.is_null else encode_value(v) for v in table_row]
            for table_row in result.table.rows
        ]
        assert got == expected, f"case {case} diverged from the oracle"


# --- 2: end-to-end customer-info ----------------------------------------------

GOLDEN_OK = (
    b'<service-response status="ok">'
    b'<meta refresh-seconds="300" update-service="customer-info"/>'
    b'<columns><column name="name" type="text"/><column name="address" type="text"/>'
    b'<column name="phone" type="text"/><column name="credit_rating" type="text"/></columns>'
    b'<rows><row><cell>Acme Corp</cell><cell>1 Main St</cell><cell>555-0100</cell>'
    b'<cell>AA</cell></row></rows></service-response>'
)


@criterion(2, "end-to-end customer-info")
def test_customer_info_end_to_end(alice):
    status, content = alice.invoke_raw("customer-info", [("customerID", "C001")])
    assert status == 200
    assert content == GOLDEN_OK
    decoded = codec.decode_response(content)
    assert [v.payload for v in decoded.table.rows[0]] == [
        "Acme Corp", "1 Main St", "555-0100", "AA",
    ]
    c002 = alice.invoke("customer-info", [("customerID", "C002")])
    assert c002.table.rows[0][3] == NULL
    assert [v.payload for v in c002.table.rows[0][:3]] == ["Globex", "9 Elm Ave", "555-0199"]


# --- 3: protocol round-trip -----------------------------------------------------

WORDS = ["alpha", "beta", "x y", "<&>", 'quo"te', "tab\there", "line\nbreak", "naïve", "42"]


def random_name(rng):
    return rng.choice("abcdefgh") + str(rng.randint(0, 99))


def random_value(rng, col_type):
    if rng.random() < 0.2:
        return NULL
    if col_type == "text":
        return Value.text(rng.choice(WORDS))
    if col_type == "number":
        return Value.number(Decimal(rng.randint(-10**6, 10**6)) / 1000)
    if col_type == "boolean":
        return Value.boolean(rng.random() < 0.5)
    return Value.timestamp(
        datetime.fromtimestamp(rng.randint(0, 2**31), tz=timezone.utc).replace(microsecond=0)
    )


def random_response(rng):
    if rng.random() < 0.25:
        return codec.ServiceResponse.error(rng.choice(["forbidden", "not-found"]), rng.choice(WORDS))
    from infoflow.model.values import Column, Table

    col_types = [rng.choice(["text", "number", "boolean", "timestamp"]) for _ in range(rng.randint(1, 4))]
    columns = tuple(Column(f"c{i}", t) for i, t in enumerate(col_types))
    rows = tuple(
        tuple(random_value(rng, t) for t in col_types) for _ in range(rng.randint(0, 6))
    )
    meta = codec.ResponseMeta(
        refresh_seconds=rng.randint(0, 86400),
        update_service=random_name(rng) if rng.random() < 0.5 else None,
        format_hints=tuple(
            (f"c{i}", rng.choice(["currency", "percent"]))
            for i in range(len(col_types))
            if rng.random() < 0.3
        ),
    )
    return codec.ServiceResponse.ok(meta, Table(columns=columns, rows=rows))


@criterion(3, "protocol round-trip")
def test_protocol_round_trips():
    rng = random.Random(7919)
    for _ in range(500):
        request = codec.ServiceRequest(
            service=random_name(rng),
            version=rng.randint(1, 3),
            params=tuple((random_name(rng), rng.choice(WORDS)) for _ in range(rng.randint(0, 4))),
        )
        encoded = codec.encode_request(request)
        assert codec.decode_request(encoded) == request
        assert codec.encode_request(codec.decode_request(encoded)) == encoded
    for _ in range(500):
        response = random_response(rng)
        encoded = codec.encode_response(response)
        assert codec.decode_response(encoded) == response
        assert codec.encode_response(codec.decode_response(encoded)) == encoded


# --- 4: authorization fuzz ------------------------------------------------------


@criterion(4, "authorization agrees with check_access")
def test_authorization_fuzz(tmp_path):
    rng = random.Random(6151)
    fixtures = Path(__file__).resolve().parent.parent / "fixtures"
    import shutil

    shutil.copytree(fixtures, tmp_path / "fixtures")
    registry_dir = tmp_path / "fixtures" / "registry"
    contact = (registry_dir / "customer-contact.xml").read_text()

    groups_pool = [f"g{i}" for i in range(5)]
    users = [f"u{i}" for i in range(20)]
    principals = {u: Principal(u, frozenset(rng.sample(groups_pool, rng.randint(0, 3)))) for u in users}

    acls = {}
    for s in range(10):
        name = f"svc{s}"
        if s == 0:
            acl = AccessControlList()  # deliberately empty: nobody may see it
        else:
            acl = AccessControlList(
                allowed_users=frozenset(rng.sample(users, rng.randint(0, 2))),
                allowed_groups=frozenset(rng.sample(groups_pool, rng.randint(0, 2))),
            )
        acls[name] = acl
        entries = "".join(f"<user>{u}</user>" for u in sorted(acl.allowed_users)) + "".join(
            f"<group>{g}</group>" for g in sorted(acl.allowed_groups)
        )
        body = contact.replace('name="customer-contact"', f'name="{name}"')
        body = re.sub(r"<acl>.*</acl>", f"<acl>{entries}</acl>", body, flags=re.S)
        (registry_dir / f"{name}.xml").write_text(body)
    for stale in ("customer-contact.xml", "customer-info.xml"):
        (registry_dir / stale).unlink()

    tokens = "\n".join(
        f'<token value="{u}-token" user="{u}">'
        + "".join(f"<group>{g}</group>" for g in sorted(principals[u].groups))
        + "</token>"
        for u in users
    )
    (tmp_path / "server.xml").write_text(
        '<server listen="127.0.0.1:0" registry="fixtures/registry" audit-log="audit.log">\n'
        f'<token value="admin-token" user="root"><group>admin</group></token>\n'
        f"{tokens}\n</server>"
    )

    from fastapi.testclient import TestClient

    from infoflow.server import create_app, load_config

    denied_pairs = []
    with TestClient(create_app(load_config(tmp_path / "server.xml"))) as http:
        for user in users:
            client = ServerClient(token=f"{user}-token", http=http)
            listed = {e.name for e in client.directory()}
            predicted = {name for name, acl in acls.items() if check_access(acl, principals[user])}
            assert listed == predicted, f"directory for {user} disagrees with check_access"
            assert "svc0" not in listed  # the empty ACL is invisible to everyone
            for name, acl in acls.items():
                allowed = check_access(acl, principals[user])
                status, content = client.invoke_raw(name, [("customerID", "C001")])
                if allowed:
                    assert status == 200, f"{user} should reach {name}"
                else:
                    assert status == 403, f"{user} should be denied {name}"
                    assert codec.decode_response(content).error_code == "forbidden"
                    denied_pairs.append((user, name))
        records = ServerClient(token="admin-token", http=http).audit()

    denials = [(r.user, r.service) for r in records if r.action == "invoke" and r.outcome == "forbidden"]
    assert sorted(denials) == sorted(denied_pairs)  # exactly one audit record per denial


# --- helpers shared by the workbook criteria ------------------------------------


def set_phone(workspace, cid, phone):
    crm = workspace / "fixtures" / "crm.csv"
    rows = crm.read_text().splitlines()
    out = []
    for line in rows:
        if line.startswith(cid + ","):
            parts = line.split(",")
            parts[3] = phone
            line = ",".join(parts)
        out.append(line)
    crm.write_text("\n".join(out) + "\n")


def bind_customer(workbook, mode="writable", cid="C001"):
    return workbook.bind(
        CellAddress.parse("Sheet1!B2"),
        "customer-info",
        [("customerID", ParamSource.of_literal(Value.text(cid)))],
        mode,
    )


def total_audit_records(workbook):
    return sum(len(ring) for ring in workbook.audit.values())


PHONE = CellAddress.parse("Sheet1!D3")


# --- 5: one version of truth -----------------------------------------------------


@criterion(5, "one version of truth")
def test_one_version_of_truth(workspace, http, alice, fixed_clock):
    workbook = Workbook(client=client_for(http, "alice"), clock=fixed_clock)
    binding_id = bind_customer(workbook)
    workbook.refresh(binding_id)
    assert workbook.grid[PHONE] == Value.text("555-0100")

    set_phone(workspace, "C001", "555-0199x")  # out-of-band edit at the source
    outcome = workbook.refresh(binding_id)
    assert outcome.changed_cells == 1
    assert workbook.grid[PHONE] == Value.text("555-0199x")

    workbook.edit_cell(PHONE, Value.text("555-0777"), user="alice")
    workbook.push_updates(binding_id, user="alice")

    before = total_audit_records(workbook)
    final = workbook.refresh(binding_id)
    assert final.changed_cells == 0
    assert total_audit_records(workbook) == before  # nothing to record: all agree

    source_value = (workspace / "fixtures" / "crm.csv").read_text()
    invoked = alice.invoke("customer-info", [("customerID", "C001")])
    assert workbook.grid[PHONE] == Value.text("555-0777")
    assert "555-0777" in source_value
    assert invoked.table.rows[0][2] == Value.text("555-0777")


# --- 6: audit ring ---------------------------------------------------------------


@criterion(6, "bounded audit ring and protection replay")
def test_audit_ring_and_protection_replay(workspace, http, fixed_clock):
    workbook = Workbook(client=client_for(http, "alice"), audit_depth=10, clock=fixed_clock)
    binding_id = bind_customer(workbook, mode="read-only")
    snap = None
    for i in range(12):
        set_phone(workspace, "C001", f"555-{i:04d}")
        outcome = workbook.refresh(binding_id)
        assert outcome.changed_cells >= 1
        fixed_clock.advance(1)
        if i == 5:
            snap = workbook.checkpoint("mid")
    records = workbook.audit_of(PHONE)
    assert len(records) == 10  # ring is bounded at n=10
    assert [r.new for r in records] == [Value.text(f"555-{i:04d}") for i in range(11, 1, -1)]
    for newer, older in zip(records, records[1:]):
        assert newer.previous == older.new  # unevicted records chain

    workbook.restore(snap)
    for address in workbook.bindings[binding_id].block():
        for record in workbook.audit_of(address):
            assert record.origin in ("refresh", "restore")


# --- 7: checkpoint/restore -------------------------------------------------------


@criterion(7, "checkpoint/restore structural equality")
def test_randomized_checkpoint_restore(http, fixed_clock):
    rng = random.Random(2749)
    pool = [CellAddress.parse(f"Scratch!{c}{r}") for c in "ABC" for r in range(1, 6)]
    for _ in range(100):
        workbook = Workbook(client=client_for(http, "alice"), clock=fixed_clock)
        for _ in range(rng.randint(0, 10)):
            workbook.edit_cell(rng.choice(pool), random_value(rng, "text"))
        binding_id = None
        if rng.random() < 0.5:
            binding_id = bind_customer(workbook, cid=rng.choice(["C001", "C002"]))
            workbook.refresh(binding_id)
        snap = workbook.checkpoint("pin")
        grid_at_snap = dict(workbook.grid)
        bindings_at_snap = {k: v for k, v in workbook.bindings.items()}

        for _ in range(rng.randint(0, 10)):
            workbook.edit_cell(rng.choice(pool), random_value(rng, "text"))
        if binding_id is not None and rng.random() < 0.5:
            workbook.edit_cell(PHONE, Value.text("555-!"), user="x")
        workbook.restore(snap)

        assert workbook.grid == grid_at_snap
        assert workbook.bindings == bindings_at_snap
        assert [c.checkpoint_id for c in workbook.list_checkpoints()] == [snap]


# --- 8: failure atomicity --------------------------------------------------------


def grid_bytes(workbook, path):
    data = store.save(workbook, path)
    return re.search(rb"<grid>.*</grid>|<grid/>", data, re.S).group(0)


@criterion(8, "failure atomicity")
def test_failures_leave_state_byte_identical(workspace, http, alice, fixed_clock, tmp_path):
    # a refresh that cannot reach the server leaves the grid bytes unchanged
    workbook = Workbook(client=client_for(http, "alice"), clock=fixed_clock)
    binding_id = bind_customer(workbook)
    workbook.refresh(binding_id)
    before = grid_bytes(workbook, tmp_path / "a.xml")
    workbook.client = ServerClient(base_url="http://127.0.0.1:1", token="alice-token")
    outcome = workbook.refresh(binding_id)
    assert outcome.state == "error"
    assert grid_bytes(workbook, tmp_path / "b.xml") == before

    # an update batch with an unknown key leaves the source file unchanged
    crm = workspace / "fixtures" / "crm.csv"
    source_before = crm.read_bytes()
    rows = [
        UpdateRow({"customer_id": Value.text("C001")}, {"phone": Value.text("x")}),
        UpdateRow({"customer_id": Value.text("C404")}, {"phone": Value.text("y")}),
    ]
    with pytest.raises(ServerError) as excinfo:
        alice.update("customer-info", rows)
    assert excinfo.value.code == "no-such-key"
    assert crm.read_bytes() == source_before


# --- 9: reload atomicity ---------------------------------------------------------


@criterion(9, "reload atomicity")
def test_concurrent_reads_see_old_or_new_registry(workspace, http, alice, admin):
    registry_dir = workspace / "fixtures" / "registry"
    marker = (registry_dir / "customer-contact.xml").read_text()
    (registry_dir / "marker.xml").write_text(
        marker.replace('name="customer-contact"', 'name="marker"')
    )
    old = frozenset({"customer-contact", "customer-info"})
    new = old | {"marker"}

    observed = [None] * 100
    start = threading.Barrier(11)

    def reader(offset):
        start.wait()
        for i in range(10):
            observed[offset + i] = frozenset(e.name for e in alice.directory())

    threads = [threading.Thread(target=reader, args=(n * 10,)) for n in range(10)]
    for t in threads:
        t.start()

    def reloader():
        start.wait()
        admin.reload()

    reload_thread = threading.Thread(target=reloader)
    reload_thread.start()
    for t in threads + [reload_thread]:
        t.join()

    assert all(result in (old, new) for result in observed), "a read saw a mixed registry"
    assert frozenset(e.name for e in alice.directory()) == new
