"""Workspace model: five editable texts flowing through ten cached stages.

A workspace holds four compiler-definition slots (scanner, parser,
contrainer, generator) plus one source program.  Stage results are cached
together with a hash of the exact slot texts they were computed from, so
freshness is always a recomputation-free comparison: edit a slot and every
stage downstream of it reads as stale until rebuilt.  Workspaces persist as
one directory each (manifest, slot files, cached stage payloads) written
atomically.

Stage names are part of the wire format; "Contrainer" is spelled the way
clients expect.
"""
from __future__ import annotations

import hashlib
import json
import os
import re
import shutil
import uuid
from pathlib import Path

from .codegen import generate, optimize, parse_codegen_spec
from .constrainer import constrain, parse_constrainer_spec
from .errors import GenError, LexError, ParseError, SpecError
from .lexgen import build_scanner, parse_scanner_spec, scan
from .parsegen import build_lalr, literal_terminals, named_terminals, parse, parse_grammar_spec
from .syntree import to_indented_text, tree_to_obj
from .tinyvm import MachineCode, MachineState, run

SPEC_SLOTS = ("scanner", "parser", "contrainer", "generator")
SLOTS = SPEC_SLOTS + ("source",)

SLOT_FILES = {
    "scanner": "scanner.scan",
    "parser": "grammar.grm",
    "contrainer": "constrain.con",
    "generator": "codegen.gen",
    "source": "source.src",
}

PHASE1_STAGES = ("Scanner", "Parser", "Contrainer", "Generator")
PHASE2_STAGES = ("Source", "Scanning", "Parsing", "Constrain", "GenCode")
PHASE3_STAGES = ("Code",)
STAGES = PHASE1_STAGES + PHASE2_STAGES + PHASE3_STAGES

# Which slot texts feed each stage; order matters for hashing.
STAGE_DEPS = {
    "Scanner": ("scanner",),
    "Parser": ("parser",),
    "Contrainer": ("contrainer",),
    "Generator": ("generator",),
    "Source": ("source",),
    "Scanning": ("scanner", "source"),
    "Parsing": ("scanner", "parser", "source"),
    "Constrain": ("scanner", "parser", "contrainer", "source"),
    "GenCode": ("scanner", "parser", "contrainer", "generator", "source"),
    "Code": ("scanner", "parser", "contrainer", "generator", "source"),
}

SLOT_DEPENDENTS = {
    slot: tuple(s for s in STAGES if slot in STAGE_DEPS[s]) for slot in SLOTS
}

SPEC_SLOT_OF_STAGE = dict(zip(PHASE1_STAGES, SPEC_SLOTS))

MANIFEST_SCHEMA = 1
DEFAULT_MAX_STEPS = 1_000_000
DEFAULT_MAX_TRACE = 100_000

_INT_TOKEN = re.compile(r"[+-]?[0-9]+\Z")


class StaleUpstream(Exception):
    """An operation needs upstream stages that are not currently fresh."""

    def __init__(self, stages: list[str], message: str | None = None):
        self.stages = list(stages)
        super().__init__(message or "not fresh: " + ", ".join(self.stages))


class LoadError(Exception):
    """A persisted workspace directory cannot be read back."""


def _hash_texts(texts: list[str | None]) -> str:
    blob = json.dumps(texts, ensure_ascii=False).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def _text_hash(text: str | None) -> str | None:
    return None if text is None else _hash_texts([text])


def _diag(code: str, message: str, line: int | None = None,
          col: int | None = None) -> dict:
    return {"code": code, "message": message, "line": line, "col": col}


def _failed(payload: dict) -> bool:
    return bool(payload.get("diagnostics"))


def _write_atomic(path: Path, data: str):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(data, encoding="utf-8")
    os.replace(tmp, path)


def _write_json_atomic(path: Path, obj):
    _write_atomic(path, json.dumps(obj, ensure_ascii=False, indent=1) + "\n")


def _read_json(path: Path):
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise LoadError(f"missing {path}")
    except (OSError, ValueError) as e:
        raise LoadError(f"cannot read {path}: {e}")


class Workspace:
    """One user's slot texts plus the cached stage results built from them."""

    def __init__(self, id: str, name: str):
        self.id = id
        self.name = name
        self.slots: dict[str, str | None] = {slot: None for slot in SLOTS}
        # stage -> {"input_hash": str, "payload": dict}
        self.cache: dict[str, dict] = {}
        self._runtime: dict[str, tuple[str, object]] = {}

    # ---------------------------------------------------------- slot edits

    def set_spec(self, slot: str, text: str):
        if slot not in SPEC_SLOTS:
            raise KeyError(slot)
        self.slots[slot] = text

    def set_source(self, text: str):
        self.slots["source"] = text

    # ------------------------------------------------------------ statuses

    def input_hash(self, stage: str) -> str:
        return _hash_texts([self.slots[slot] for slot in STAGE_DEPS[stage]])

    def stage_status(self, stage: str) -> str:
        entry = self.cache.get(stage)
        if entry is None:
            return "absent"
        if entry["input_hash"] != self.input_hash(stage):
            return "stale"
        return "failed" if _failed(entry["payload"]) else "fresh"

    def status(self) -> dict[str, str]:
        return {stage: self.stage_status(stage) for stage in STAGES}

    def _store(self, stage: str, payload: dict) -> dict:
        self.cache[stage] = {"input_hash": self.input_hash(stage), "payload": payload}
        return payload

    def _drop_from(self, stage: str):
        for later in STAGES[STAGES.index(stage):]:
            self.cache.pop(later, None)

    # ----------------------------------------------------- runtime objects

    def _built(self, slot: str, builder):
        """Parse-and-build results keyed by slot content, rebuilt on change."""
        text = self.slots[slot]
        key = _text_hash(text)
        cached = self._runtime.get(slot)
        if cached is not None and cached[0] == key:
            return cached[1]
        obj = builder(text)
        self._runtime[slot] = (key, obj)
        return obj

    def _scanner(self):
        return self._built("scanner", lambda t: build_scanner(parse_scanner_spec(t)))

    def _table(self):
        return self._built("parser", lambda t: build_lalr(parse_grammar_spec(t)))

    def _constrainer(self):
        return self._built("contrainer", parse_constrainer_spec)

    def _generator(self):
        return self._built("generator", parse_codegen_spec)

    # --------------------------------------------------------------- build

    def compile(self) -> dict:
        """Rebuild the four definition stages; never raises, reports instead."""
        built = {}
        for stage in PHASE1_STAGES:
            slot = SPEC_SLOT_OF_STAGE[stage]
            if self.slots[slot] is None:
                payload = {"diagnostics": [_diag(
                    "E_MISSING_SPEC", f"no {slot} definition has been provided")]}
            else:
                try:
                    payload = self._compile_stage(stage, built)
                except SpecError as e:
                    if e.conflicts:
                        diags = [_diag(
                            "E_CONFLICT",
                            f"state {c['state']} on {c['terminal']!r}: "
                            + "; ".join(c["contenders"])) for c in e.conflicts]
                    else:
                        diags = [_diag("E_SPEC", e.message, e.line, e.col)]
                    payload = {"diagnostics": diags}
            self._store(stage, payload)

        self._cross_link(built)
        report = []
        for stage in PHASE1_STAGES:
            payload = self.cache[stage]["payload"]
            report.append({"name": stage, "status": self.stage_status(stage), **payload})
        return {"ok": all(r["status"] == "fresh" for r in report), "subfases": report}

    def _compile_stage(self, stage: str, built: dict) -> dict:
        if stage == "Scanner":
            scanner = self._scanner()
            built["scanner"] = scanner
            return {"diagnostics": [],
                    "tokens": [r.name for r in scanner.rules if r.action == "token"],
                    "skips": [r.name for r in scanner.rules if r.action == "skip"],
                    "keywords": {k: sorted(v) for k, v in scanner.promotions.items()}}
        if stage == "Parser":
            table = self._table()
            built["table"] = table
            return {"diagnostics": [],
                    "states": table.state_count,
                    "productions": len(table.grammar.productions),
                    "mode": table.grammar.mode,
                    "conflicts": [c.to_obj() for c in table.conflicts]}
        if stage == "Contrainer":
            spec = self._constrainer()
            return {"diagnostics": [], "types": list(spec.types),
                    "strict": spec.strict, "kinds": sorted(spec.rules)}
        spec = self._generator()
        return {"diagnostics": [], "kinds": sorted(spec.rules)}

    def _cross_link(self, built: dict):
        """Every grammar terminal must be producible by the scanner."""
        if "scanner" not in built or "table" not in built:
            return
        scanner = built["scanner"]
        producible = {r.name for r in scanner.rules if r.action == "token"}
        for words in scanner.promotions.values():
            producible |= words
        grammar = built["table"].grammar
        unknown = (named_terminals(grammar) | literal_terminals(grammar)) - producible
        unknown.discard("$")
        if unknown:
            listed = ", ".join(sorted(unknown))
            self._store("Parser", {"diagnostics": [_diag(
                "E_UNKNOWN_TERMINAL",
                f"grammar terminals never produced by the scanner: {listed}")]})

    # ----------------------------------------------------------------- run

    def run(self, source: str | None = None, optimize_flag: bool = True) -> dict:
        """Compile the source program through every stage up to machine code."""
        if source is not None:
            self.set_source(source)
        not_fresh = [s for s in PHASE1_STAGES if self.stage_status(s) != "fresh"]
        if not_fresh:
            raise StaleUpstream(not_fresh)
        text = self.slots["source"]
        if text is None:
            raise StaleUpstream(["Source"], "no source program has been provided")

        report = {"ok": True, "subfases": []}

        def record(stage, payload):
            self._store(stage, payload)
            entry = {"name": stage, "status": self.stage_status(stage), **payload}
            report["subfases"].append(entry)
            return entry["status"] == "fresh"

        def give_up(stage):
            self._drop_from(stage)
            if stage in PHASE2_STAGES:
                for later in PHASE2_STAGES[PHASE2_STAGES.index(stage):]:
                    report["subfases"].append(
                        {"name": later, "status": "absent", "diagnostics": []})
            report["ok"] = False
            return report

        record("Source", {"diagnostics": [], "chars": len(text),
                          "lines": len(text.splitlines())})

        try:
            tokens = scan(self._scanner(), text)
        except LexError as e:
            record("Scanning", {"diagnostics": [
                _diag("E_SCAN", str(e), e.line, e.col)]})
            return give_up("Parsing")
        record("Scanning", {"diagnostics": [], "tokens": [
            {"kind": t.kind, "lexeme": t.lexeme, "line": t.line, "col": t.col}
            for t in tokens]})

        try:
            tree = parse(self._table(), tokens)
        except ParseError as e:
            record("Parsing", {"diagnostics": [_diag("E_PARSE", str(e), e.line, e.col)]})
            return give_up("Constrain")
        record("Parsing", {"diagnostics": [], "tree": tree_to_obj(tree),
                           "text": to_indented_text(tree)})

        result = constrain(self._constrainer(), tree)
        ok = record("Constrain", {
            "diagnostics": [d.to_obj() for d in result.diagnostics],
            "tree": tree_to_obj(result.tree),
            "text": to_indented_text(result.tree),
            "symbols": [s.to_obj() for s in result.symbols]})
        if not ok:
            return give_up("GenCode")

        try:
            code = generate(self._generator(), result.tree)
        except GenError as e:
            record("GenCode", {"diagnostics": [_diag("E_GEN", str(e), e.line, e.col)]})
            return give_up("Code")
        if optimize_flag:
            code = optimize(code)
        code_payload = {"code": code.to_obj(), "listing": code.to_listing(),
                        "optimized": bool(optimize_flag)}
        record("GenCode", {"diagnostics": [], **code_payload})

        # A successful run always leaves a runnable, not-yet-interpreted
        # machine image; any earlier interpretation referred to older code.
        self._store("Code", {**code_payload, "interpretation": None})
        return report

    # ----------------------------------------------------------- interpret

    def machine_code(self) -> MachineCode:
        not_fresh = [s for s in ("GenCode", "Code") if self.stage_status(s) != "fresh"]
        if not_fresh:
            raise StaleUpstream(not_fresh)
        return MachineCode.from_obj(self.cache["Code"]["payload"]["code"])

    def interpret(self, input_text: str, max_steps: int = DEFAULT_MAX_STEPS,
                  with_trace: bool = True,
                  max_trace: int | None = DEFAULT_MAX_TRACE) -> dict:
        code = self.machine_code()
        bad = [t for t in input_text.split() if not _INT_TOKEN.match(t)]
        if bad:
            interp = {"input": input_text, "halted": False,
                      "trap": "InputMalformed",
                      "trap_message": f"{bad[0]!r} is not an integer",
                      "steps": 0, "output": "", "trace": [],
                      "trace_truncated": False}
        else:
            state = MachineState()
            state.feed_input(input_text)
            res = run(code, state, max_steps, with_trace=with_trace,
                      max_trace=max_trace)
            interp = {"input": input_text, "halted": res.halted,
                      "trap": res.trap, "trap_message": res.trap_message,
                      "steps": res.steps, "output": res.output,
                      "trace": [r.to_obj() for r in res.trace],
                      "trace_truncated": res.trace_truncated}
        payload = dict(self.cache["Code"]["payload"])
        payload["interpretation"] = interp
        self._store("Code", payload)
        return {"name": "Code", "status": self.stage_status("Code"),
                "ok": interp["halted"] and interp["trap"] is None, **interp}


def create_workspace(name: str) -> Workspace:
    return Workspace(uuid.uuid4().hex[:12], name)


# ------------------------------------------------------------- persistence

def save_workspace(ws: Workspace, directory: str | Path):
    directory = Path(directory)
    art_dir = directory / "artifacts"
    art_dir.mkdir(parents=True, exist_ok=True)
    for slot, text in ws.slots.items():
        if text is not None:
            _write_atomic(directory / SLOT_FILES[slot], text)
    for stage in STAGES:
        path = art_dir / f"{stage}.json"
        entry = ws.cache.get(stage)
        if entry is None:
            path.unlink(missing_ok=True)
        else:
            _write_json_atomic(path, {"subfase": stage, **entry})
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "hash_algo": "sha256",
        "id": ws.id,
        "name": ws.name,
        "slots": {slot: _text_hash(text) for slot, text in ws.slots.items()},
        "artifacts": {stage: {"input_hash": ws.cache[stage]["input_hash"],
                              "status": ws.stage_status(stage)}
                      for stage in STAGES if stage in ws.cache},
    }
    _write_json_atomic(directory / "manifest.json", manifest)


def load_workspace(directory: str | Path) -> Workspace:
    directory = Path(directory)
    path = directory / "manifest.json"
    manifest = _read_json(path)
    if not isinstance(manifest, dict) or "schema" not in manifest:
        raise LoadError(f"corrupt manifest {path}")
    if manifest["schema"] != MANIFEST_SCHEMA:
        raise LoadError(
            f"unsupported schema {manifest['schema']!r} in {path}")
    try:
        ws = Workspace(manifest["id"], manifest["name"])
    except KeyError as e:
        raise LoadError(f"corrupt manifest {path}: missing {e}")
    for slot in SLOTS:
        slot_path = directory / SLOT_FILES[slot]
        if slot_path.exists():
            ws.slots[slot] = slot_path.read_text(encoding="utf-8")
    for stage in STAGES:
        art_path = directory / "artifacts" / f"{stage}.json"
        if not art_path.exists():
            continue
        obj = _read_json(art_path)
        try:
            ws.cache[stage] = {"input_hash": obj["input_hash"],
                               "payload": obj["payload"]}
        except (TypeError, KeyError):
            raise LoadError(f"corrupt artifact {art_path}")
    return ws


class WorkspaceStore:
    """All workspaces under one data directory, saved after every mutation."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.workspaces: dict[str, Workspace] = {}
        for child in sorted(self.root.iterdir()):
            if (child / "manifest.json").exists():
                ws = load_workspace(child)
                self.workspaces[ws.id] = ws

    def directory(self, ws_id: str) -> Path:
        return self.root / ws_id

    def create(self, name: str) -> Workspace:
        ws = create_workspace(name)
        self.workspaces[ws.id] = ws
        self.save(ws)
        return ws

    def get(self, ws_id: str) -> Workspace:
        return self.workspaces[ws_id]

    def list(self) -> list[Workspace]:
        return list(self.workspaces.values())

    def save(self, ws: Workspace):
        save_workspace(ws, self.directory(ws.id))

    def delete(self, ws_id: str):
        self.workspaces.pop(ws_id)
        shutil.rmtree(self.directory(ws_id), ignore_errors=True)
