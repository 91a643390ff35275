"""Constrainer: a small rule language for decorating syntax trees.

A constrainer spec declares type names, then attaches actions to node kinds.
Actions run in two phases around the walk of a node's children:

    types integer boolean
    %strict on
    node block   { enter: open_scope; exit: close_scope; }
    node decl    { enter: declare child(0) : integer; }
    node IDENT   { exit: synth lookup; }
    node assign  { exit: check type(0) == type(1) else E_TYPE_MISMATCH; }

`declare` binds a leaf child's lexeme in the innermost scope and assigns the
next address from a dense counter starting at 0.  `lookup` resolves the
current leaf's lexeme innermost-first and also stamps its address onto the
leaf.  `synth` sets the node's type.  `check` compares two types and reports
a diagnostic when they differ; the special type "<error>" compares equal to
everything so one fault does not cascade.

Walking never raises for program faults: they become Diagnostic records.
Misapplied rules (bad child index, lookup on an interior node, unbalanced
scopes) are reported as E_BAD_RULE diagnostics.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import SpecError
from .syntree import SynTree, copy_tree

ERROR_TYPE = "<error>"

DIAGNOSTIC_CODES = (
    "E_UNDECLARED",
    "E_REDECLARED",
    "E_TYPE_MISMATCH",
    "E_BAD_RULE",
    "E_UNKNOWN_NODE",
)

_ACTION_WORDS = ("open_scope", "close_scope", "declare", "check", "synth")


# ---------------------------------------------------------------- spec model

@dataclass(frozen=True)
class TypeExpr:
    kind: str  # "name" | "child" | "lookup"
    name: str = ""
    index: int = 0

    def show(self) -> str:
        if self.kind == "name":
            return self.name
        if self.kind == "lookup":
            return "lookup"
        return f"type({self.index})"


@dataclass(frozen=True)
class Action:
    op: str  # "open_scope" | "close_scope" | "declare" | "check" | "synth"
    index: int = 0  # declare: child index
    texpr: TypeExpr | None = None  # declare, synth
    left: TypeExpr | None = None  # check
    right: TypeExpr | None = None  # check
    code: str = ""  # check


@dataclass
class NodeRule:
    kind: str
    enter: list[Action] = field(default_factory=list)
    exit: list[Action] = field(default_factory=list)
    line: int = 0


@dataclass
class ConstrainerSpec:
    types: list[str]
    strict: bool
    rules: dict[str, NodeRule]


# -------------------------------------------------------------- spec parsing

def _tokenize_block_lines(lines: list[tuple[int, str]]) -> list[tuple[str, str, int]]:
    toks: list[tuple[str, str, int]] = []
    for lineno, line in lines:
        i = 0
        n = len(line)
        while i < n:
            c = line[i]
            if c.isspace():
                i += 1
                continue
            if c.isalpha() or c == "_":
                j = i
                while j < n and (line[j].isalnum() or line[j] == "_"):
                    j += 1
                toks.append(("id", line[i:j], lineno))
                i = j
                continue
            if c.isdigit():
                j = i
                while j < n and line[j].isdigit():
                    j += 1
                toks.append(("int", line[i:j], lineno))
                i = j
                continue
            if line.startswith("==", i):
                toks.append(("sym", "==", lineno))
                i += 2
                continue
            if c in "{}():;":
                toks.append(("sym", c, lineno))
                i += 1
                continue
            raise SpecError(f"unexpected character {c!r} in constrainer spec", lineno, i + 1)
    return toks


class _BlockParser:
    def __init__(self, toks, types: set[str]):
        self.toks = toks
        self.types = types
        self.pos = 0

    def peek(self):
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def take(self):
        t = self.peek()
        if t is None:
            last = self.toks[-1][2] if self.toks else 1
            raise SpecError("unexpected end of constrainer spec", last)
        self.pos += 1
        return t

    def expect(self, kind, value=None):
        t = self.take()
        if t[0] != kind or (value is not None and t[1] != value):
            want = value if value is not None else kind
            raise SpecError(f"expected {want!r}, found {t[1]!r}", t[2])
        return t

    def parse_rules(self) -> dict[str, NodeRule]:
        rules: dict[str, NodeRule] = {}
        while self.peek() is not None:
            t = self.expect("id", "node")
            kt = self.take()
            if kt[0] != "id":
                raise SpecError(f"expected node kind name, found {kt[1]!r}", kt[2])
            kind = kt[1]
            if kind in rules:
                raise SpecError(f"duplicate node block for {kind}", kt[2])
            rule = NodeRule(kind, line=t[2])
            self.expect("sym", "{")
            seen: set[str] = set()
            while True:
                nxt = self.peek()
                if nxt is None:
                    raise SpecError(f"unclosed block for node {kind}", t[2])
                if nxt[0] == "sym" and nxt[1] == "}":
                    self.take()
                    break
                st = self.take()
                if st[0] != "id" or st[1] not in ("enter", "exit"):
                    raise SpecError(f"expected 'enter:', 'exit:' or '}}', found {st[1]!r}", st[2])
                if st[1] in seen:
                    raise SpecError(f"duplicate {st[1]} section in node {kind}", st[2])
                seen.add(st[1])
                self.expect("sym", ":")
                actions = self.parse_actions()
                if st[1] == "enter":
                    rule.enter = actions
                else:
                    rule.exit = actions
            rules[kind] = rule
        return rules

    def parse_actions(self) -> list[Action]:
        out: list[Action] = []
        while True:
            nxt = self.peek()
            if nxt is None or nxt[0] != "id" or nxt[1] not in _ACTION_WORDS:
                return out
            out.append(self.parse_action())
            self.expect("sym", ";")

    def parse_action(self) -> Action:
        t = self.take()
        word = t[1]
        if word in ("open_scope", "close_scope"):
            return Action(word)
        if word == "declare":
            self.expect("id", "child")
            self.expect("sym", "(")
            it = self.expect("int")
            self.expect("sym", ")")
            self.expect("sym", ":")
            return Action("declare", index=int(it[1]), texpr=self.parse_texpr())
        if word == "synth":
            return Action("synth", texpr=self.parse_texpr())
        # check
        left = self.parse_texpr()
        self.expect("sym", "==")
        right = self.parse_texpr()
        self.expect("id", "else")
        ct = self.take()
        if ct[0] != "id" or ct[1] not in DIAGNOSTIC_CODES:
            raise SpecError(
                f"unknown diagnostic code {ct[1]!r} (one of {', '.join(DIAGNOSTIC_CODES)})",
                ct[2])
        return Action("check", left=left, right=right, code=ct[1])

    def parse_texpr(self) -> TypeExpr:
        t = self.take()
        if t[0] != "id":
            raise SpecError(f"expected a type expression, found {t[1]!r}", t[2])
        if t[1] == "lookup":
            return TypeExpr("lookup")
        if t[1] == "type":
            self.expect("sym", "(")
            it = self.expect("int")
            self.expect("sym", ")")
            return TypeExpr("child", index=int(it[1]))
        if t[1] not in self.types:
            raise SpecError(f"unknown type name {t[1]!r}", t[2])
        return TypeExpr("name", name=t[1])


def parse_constrainer_spec(text: str) -> ConstrainerSpec:
    types: list[str] = []
    strict: bool | None = None
    block_lines: list[tuple[int, str]] = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.split("--", 1)[0]
        stripped = line.strip()
        if not stripped:
            continue
        words = stripped.split()
        if words[0] == "types":
            if len(words) < 2:
                raise SpecError("types line needs at least one name", lineno)
            for w in words[1:]:
                if not (w[0].isalpha() or w[0] == "_") or not all(
                        c.isalnum() or c == "_" for c in w):
                    raise SpecError(f"bad type name {w!r}", lineno)
                if w in types:
                    raise SpecError(f"duplicate type name {w!r}", lineno)
                types.append(w)
        elif words[0] == "%strict":
            if strict is not None:
                raise SpecError("duplicate %strict", lineno)
            if len(words) != 2 or words[1] not in ("on", "off"):
                raise SpecError("%strict must be on or off", lineno)
            strict = words[1] == "on"
        elif words[0].startswith("%"):
            raise SpecError(f"unknown directive {words[0]}", lineno)
        else:
            block_lines.append((lineno, line))
    toks = _tokenize_block_lines(block_lines)
    rules = _BlockParser(toks, set(types)).parse_rules()
    return ConstrainerSpec(types, bool(strict), rules)


# --------------------------------------------------------------------- walk

@dataclass
class Diagnostic:
    code: str
    message: str
    line: int
    col: int

    def to_obj(self) -> dict:
        return {"code": self.code, "message": self.message,
                "line": self.line, "col": self.col}

    @staticmethod
    def from_obj(obj: dict) -> "Diagnostic":
        return Diagnostic(obj["code"], obj["message"], obj["line"], obj["col"])

    def show(self) -> str:
        return f"{self.line}:{self.col}: {self.code}: {self.message}"


@dataclass
class SymbolEntry:
    name: str
    type: str
    addr: int
    depth: int

    def to_obj(self) -> dict:
        return {"name": self.name, "type": self.type,
                "addr": self.addr, "depth": self.depth}

    @staticmethod
    def from_obj(obj: dict) -> "SymbolEntry":
        return SymbolEntry(obj["name"], obj["type"], obj["addr"], obj["depth"])


@dataclass
class ConstrainResult:
    tree: SynTree
    diagnostics: list[Diagnostic]
    symbols: list[SymbolEntry]

    @property
    def ok(self) -> bool:
        return not self.diagnostics


class _Walker:
    def __init__(self, spec: ConstrainerSpec):
        self.spec = spec
        self.scopes: list[dict[str, tuple[str, int]]] = [{}]
        self.next_addr = 0
        self.diagnostics: list[Diagnostic] = []
        self.symbols: list[SymbolEntry] = []

    def diag(self, code: str, message: str, node: SynTree):
        self.diagnostics.append(Diagnostic(code, message, node.pos[0], node.pos[1]))

    def bad_rule(self, message: str, node: SynTree):
        self.diag("E_BAD_RULE", f"{message} (node {node.kind})", node)

    def eval_texpr(self, node: SynTree, te: TypeExpr) -> str:
        if te.kind == "name":
            return te.name
        if te.kind == "lookup":
            if not node.is_leaf:
                self.bad_rule("lookup on an interior node", node)
                return ERROR_TYPE
            for scope in reversed(self.scopes):
                if node.lexeme in scope:
                    t, addr = scope[node.lexeme]
                    node.ann_addr = addr
                    return t
            self.diag("E_UNDECLARED", f"name {node.lexeme!r} is not declared", node)
            return ERROR_TYPE
        if te.index >= len(node.children):
            self.bad_rule(f"type({te.index}) is out of range", node)
            return ERROR_TYPE
        t = node.children[te.index].ann_type
        if t is None:
            self.bad_rule(f"type({te.index}) of a node with no type", node)
            return ERROR_TYPE
        return t

    def run_action(self, node: SynTree, a: Action):
        if a.op == "open_scope":
            self.scopes.append({})
        elif a.op == "close_scope":
            if len(self.scopes) == 1:
                self.bad_rule("close_scope with no open scope", node)
            else:
                self.scopes.pop()
        elif a.op == "declare":
            if a.index >= len(node.children):
                self.bad_rule(f"declare child({a.index}) is out of range", node)
                return
            target = node.children[a.index]
            if not target.is_leaf:
                self.bad_rule(f"declare child({a.index}) is not a leaf", node)
                return
            t = self.eval_texpr(node, a.texpr)
            name = target.lexeme
            here = self.scopes[-1]
            if name in here:
                self.diag("E_REDECLARED",
                          f"name {name!r} is already declared in this scope", node)
                t0, addr0 = here[name]
                target.ann_type, target.ann_addr = t0, addr0
                return
            addr = self.next_addr
            self.next_addr += 1
            here[name] = (t, addr)
            self.symbols.append(SymbolEntry(name, t, addr, len(self.scopes) - 1))
            target.ann_type, target.ann_addr = t, addr
        elif a.op == "synth":
            node.ann_type = self.eval_texpr(node, a.texpr)
        else:  # check
            lt = self.eval_texpr(node, a.left)
            rt = self.eval_texpr(node, a.right)
            if ERROR_TYPE in (lt, rt):
                return
            if lt != rt:
                self.diag(a.code, f"{lt} is not {rt}", node)

    def walk(self, root: SynTree):
        stack: list[tuple[SynTree, bool]] = [(root, False)]
        while stack:
            node, exiting = stack.pop()
            rule = self.spec.rules.get(node.kind)
            if exiting:
                if rule:
                    for a in rule.exit:
                        self.run_action(node, a)
                continue
            if rule:
                for a in rule.enter:
                    self.run_action(node, a)
            elif self.spec.strict and not node.is_leaf:
                self.diag("E_UNKNOWN_NODE", f"no rule for node kind {node.kind}", node)
            stack.append((node, True))
            for child in reversed(node.children):
                stack.append((child, False))
        if len(self.scopes) != 1:
            self.bad_rule(f"{len(self.scopes) - 1} scopes left open at end of walk", root)


def constrain(spec: ConstrainerSpec, tree: SynTree) -> ConstrainResult:
    """Decorate a copy of the tree; the input tree is never modified."""
    work = copy_tree(tree, strip_annotations=True)
    walker = _Walker(spec)
    walker.walk(work)
    return ConstrainResult(work, walker.diagnostics, walker.symbols)
