"""Record service responses for the webui contract tests.

Drives the real HTTP service through exactly the request sequences the
browser views perform, and saves each scenario as an ordered list of
(method, path, status, body) entries. The vitest suite replays these
byte for byte through a fetch stub, so the UI is tested against real
wire data, never against hand-written mocks.

Run from the repository root:
    python3 frontend/scripts/record_fixtures.py
"""
import json
import sys
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from tws import fixtures
from tws.pipeline import WorkspaceStore
from tws.service import create_app

OUT_DIR = Path(__file__).resolve().parent.parent / "test" / "fixtures"

TINY = fixtures.tiny_specs()
SLOT_ORDER = ["scanner", "parser", "contrainer", "generator"]

BROKEN_SCANNER = TINY["scanner"].replace(
    "token STRLIT /\"[^\"]*\"/", "token STRLIT /\"[^\"*\"/")


def fresh_client():
    store = WorkspaceStore(tempfile.mkdtemp(prefix="tws-rec-"))
    return TestClient(create_app(store))


class Recorder:
    def __init__(self, client):
        self.client = client
        self.entries = []

    def record(self, method, path, json_body=None, content=None):
        r = self.client.request(method, path, json=json_body, content=content)
        self.entries.append({
            "method": method,
            "path": path,
            "status": r.status_code,
            "contentType": r.headers.get("content-type", ""),
            "body": r.text,
        })
        return r

    def offstage(self, method, path, json_body=None, content=None):
        """Server-side arrangement the UI never sees; not recorded."""
        return self.client.request(method, path, json=json_body,
                                   content=content)


def make_workspace(client, name):
    r = client.post("/workspaces", json={"name": name})
    assert r.status_code == 201, r.text
    return r.json()["id"]


def scenario_compiler():
    """Empty workspace; compile broken scanner, then fix it."""
    client = fresh_client()
    ws = make_workspace(client, "compiler-demo")
    rec = Recorder(client)

    # boot on the compiler tab
    rec.record("GET", "/workspaces")
    rec.record("GET", f"/workspaces/{ws}/status")
    for slot in SLOT_ORDER:
        rec.record("GET", f"/workspaces/{ws}/specs/{slot}")

    # save all & compile with a broken scanner
    first = dict(TINY, scanner=BROKEN_SCANNER)
    for slot in SLOT_ORDER:
        rec.record("PUT", f"/workspaces/{ws}/specs/{slot}",
                   content=first[slot])
    rec.record("POST", f"/workspaces/{ws}/compile")
    rec.record("GET", f"/workspaces/{ws}/status")

    # fix the scanner and compile again
    for slot in SLOT_ORDER:
        rec.record("PUT", f"/workspaces/{ws}/specs/{slot}",
                   content=TINY[slot])
    rec.record("POST", f"/workspaces/{ws}/compile")
    rec.record("GET", f"/workspaces/{ws}/status")

    return {
        "meta": {
            "workspace": ws,
            "goodSpecs": TINY,
            "brokenScanner": BROKEN_SCANNER,
        },
        "entries": rec.entries,
    }


def scenario_run():
    """Compiled workspace; clean run (unoptimized), a semantic failure,
    then a stale-generator refusal."""
    client = fresh_client()
    ws = make_workspace(client, "run-demo")
    for slot in SLOT_ORDER:
        client.put(f"/workspaces/{ws}/specs/{slot}", content=TINY[slot])
    assert client.post(f"/workspaces/{ws}/compile").json()["ok"]

    arith = fixtures.load_program("arith")
    bad = fixtures.load_error_program("e04_assign_bool_to_int")
    rec = Recorder(client)

    # boot on the run tab
    rec.record("GET", "/workspaces")
    rec.record("GET", f"/workspaces/{ws}/status")
    rec.record("GET", f"/workspaces/{ws}/source")

    # run arith without the optimizer
    rec.record("PUT", f"/workspaces/{ws}/source", content=arith.source)
    rec.record("POST", f"/workspaces/{ws}/run", json_body={"optimize": False})
    rec.record("GET", f"/workspaces/{ws}/status")

    # run a program with a type error
    rec.record("PUT", f"/workspaces/{ws}/source", content=bad.source)
    rec.record("POST", f"/workspaces/{ws}/run", json_body={"optimize": False})
    rec.record("GET", f"/workspaces/{ws}/status")

    # someone edits the generator definition behind our back
    rec.offstage("PUT", f"/workspaces/{ws}/specs/generator",
                 content=TINY["generator"] + "\n-- touched\n")
    rec.record("PUT", f"/workspaces/{ws}/source", content=bad.source)
    rec.record("POST", f"/workspaces/{ws}/run", json_body={"optimize": False})

    return {
        "meta": {
            "workspace": ws,
            "arithSource": arith.source,
            "badSource": bad.source,
        },
        "entries": rec.entries,
    }


def scenario_interpret():
    """Two ready workspaces: arith (built without the optimizer) for
    stepping, factorial for the input-feeding flow."""
    client = fresh_client()
    arith_ws = make_workspace(client, "arith-demo")
    fact_ws = make_workspace(client, "factorial-demo")
    for ws, program, optimize in (
            (arith_ws, fixtures.load_program("arith"), False),
            (fact_ws, fixtures.load_program("factorial"), True)):
        for slot in SLOT_ORDER:
            client.put(f"/workspaces/{ws}/specs/{slot}", content=TINY[slot])
        assert client.post(f"/workspaces/{ws}/compile").json()["ok"]
        client.put(f"/workspaces/{ws}/source", content=program.source)
        assert client.post(f"/workspaces/{ws}/run",
                           json={"optimize": optimize}).json()["ok"]

    rec = Recorder(client)

    # boot on the interpret tab, arith workspace selected
    rec.record("GET", "/workspaces")
    rec.record("GET", f"/workspaces/{arith_ws}/status")
    rec.record("GET", f"/workspaces/{arith_ws}/artifacts/Code")

    # open a session and step: 3 steps leaves 2+3 on the stack
    r = rec.record("POST", f"/workspaces/{arith_ws}/sessions",
                   json_body={"input": ""})
    sid = r.json()["id"]
    rec.record("POST", f"/sessions/{sid}/step", json_body={"n": 3})
    rec.record("POST", f"/sessions/{sid}/step", json_body={"n": 10_000_000})
    rec.record("POST", f"/sessions/{sid}/reset")

    # switch to the factorial workspace and drive the feed flow
    rec.record("GET", f"/workspaces/{fact_ws}/status")
    rec.record("GET", f"/workspaces/{fact_ws}/artifacts/Code")
    r = rec.record("POST", f"/workspaces/{fact_ws}/sessions",
                   json_body={"input": ""})
    fact_sid = r.json()["id"]
    rec.record("POST", f"/sessions/{fact_sid}/step",
               json_body={"n": 10_000_000})
    rec.record("POST", f"/sessions/{fact_sid}/input",
               json_body={"integers": [4]})
    rec.record("POST", f"/sessions/{fact_sid}/step",
               json_body={"n": 10_000_000})

    return {
        "meta": {"arithWorkspace": arith_ws, "factorialWorkspace": fact_ws},
        "entries": rec.entries,
    }


def main():
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    for name, build in (("compiler", scenario_compiler),
                        ("run", scenario_run),
                        ("interpret", scenario_interpret)):
        data = build()
        path = OUT_DIR / f"{name}.json"
        path.write_text(json.dumps(data, indent=2, ensure_ascii=False) + "\n")
        print(f"wrote {path} ({len(data['entries'])} entries)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
