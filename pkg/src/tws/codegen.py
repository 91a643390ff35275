"""Code generator: per-node-kind emission templates over decorated trees.

A generator spec attaches an action sequence to each node kind:

    node assign { gen(1); emit STORE addr(0); }
    node while  { label top; label out;
                  place top; gen(0); emit FJP out;
                  gen(1); emit UJP top; place out; }
    node INTLIT { emit LIT $int; }
    node STRLIT { emit WRITES $str; }

`gen(i)` generates the i-th child, `gen_all` every child left to right.
Kinds with no rule default to gen_all.  `label` allocates a fresh jump
label for this activation of the rule, `place` pins it at the next
instruction slot.  Operand forms: a literal integer, `$int` (the node's
lexeme as a number), `$str` (the lexeme with one surrounding pair of
double quotes stripped, interned into the string pool), `addr(i)` /
`addr(self)` (address decorations left by the constrainer), or a label
name.  Label bookkeeping is checked when the spec is parsed; only
tree-dependent faults (missing decorations, bad lexemes, child indexes)
surface later, as GenError.

Generation always appends a final HALT and resolves labels to instruction
indexes, so the result is ready to execute.

The peephole optimizer folds constant arithmetic (never a division or
modulo by a literal zero, which must still trap), drops jumps to the next
instruction and NOPs, and repeats until nothing changes.  Instructions
that are jump targets are never swallowed into a fold window, since
execution can enter there.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import GenError, SpecError
from .syntree import SynTree
from .tinyvm import (
    BINARY_OPS,
    OPCODES,
    UNARY_OPS,
    Instr,
    MachineCode,
    _binop,
    _unop,
    wrap64,
)


# ---------------------------------------------------------------- spec model

@dataclass(frozen=True)
class Operand:
    kind: str  # "int" | "self_int" | "self_str" | "addr_child" | "addr_self" | "label"
    value: int = 0  # int literal or child index
    name: str = ""  # label name


@dataclass(frozen=True)
class GenAction:
    op: str  # "gen" | "gen_all" | "emit" | "label" | "place"
    index: int = 0  # gen
    opcode: str = ""  # emit
    operand: Operand | None = None  # emit
    name: str = ""  # label / place


@dataclass
class GenRule:
    kind: str
    actions: list[GenAction] = field(default_factory=list)
    line: int = 0


@dataclass
class CodegenSpec:
    rules: dict[str, GenRule]


_OPERAND_KINDS = {
    "LIT": ("int", "self_int"),
    "LOAD": ("int", "addr_child", "addr_self"),
    "STORE": ("int", "addr_child", "addr_self"),
    "FJP": ("label",),
    "UJP": ("label",),
    "WRITES": ("self_str",),
}


# -------------------------------------------------------------- spec parsing

def _tokenize(text: str) -> list[tuple[str, str, int]]:
    toks: list[tuple[str, str, int]] = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.split("--", 1)[0]
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
            if c == "$":
                j = i + 1
                while j < n and line[j].isalpha():
                    j += 1
                toks.append(("dollar", line[i + 1:j], lineno))
                i = j
                continue
            if c.isdigit() or (c == "-" and i + 1 < n and line[i + 1].isdigit()):
                j = i + 1
                while j < n and line[j].isdigit():
                    j += 1
                toks.append(("int", line[i:j], lineno))
                i = j
                continue
            if c in "{}();":
                toks.append(("sym", c, lineno))
                i += 1
                continue
            raise SpecError(f"unexpected character {c!r} in generator spec", lineno, i + 1)
    return toks


class _Parser:
    def __init__(self, toks):
        self.toks = toks
        self.pos = 0

    def peek(self):
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def take(self):
        t = self.peek()
        if t is None:
            last = self.toks[-1][2] if self.toks else 1
            raise SpecError("unexpected end of generator spec", last)
        self.pos += 1
        return t

    def expect(self, kind, value=None):
        t = self.take()
        if t[0] != kind or (value is not None and t[1] != value):
            want = value if value is not None else kind
            raise SpecError(f"expected {want!r}, found {t[1]!r}", t[2])
        return t

    def parse_spec(self) -> CodegenSpec:
        rules: dict[str, GenRule] = {}
        while self.peek() is not None:
            t = self.expect("id", "node")
            kt = self.take()
            if kt[0] != "id":
                raise SpecError(f"expected node kind name, found {kt[1]!r}", kt[2])
            if kt[1] in rules:
                raise SpecError(f"duplicate node block for {kt[1]}", kt[2])
            rule = GenRule(kt[1], line=t[2])
            self.expect("sym", "{")
            while True:
                nxt = self.peek()
                if nxt is None:
                    raise SpecError(f"unclosed block for node {kt[1]}", t[2])
                if nxt[0] == "sym" and nxt[1] == "}":
                    self.take()
                    break
                rule.actions.append(self.parse_action())
                self.expect("sym", ";")
            _check_rule(rule)
            rules[kt[1]] = rule
        return CodegenSpec(rules)

    def parse_action(self) -> GenAction:
        t = self.take()
        if t[0] != "id":
            raise SpecError(f"expected an action, found {t[1]!r}", t[2])
        word = t[1]
        if word == "gen_all":
            return GenAction("gen_all")
        if word == "gen":
            self.expect("sym", "(")
            it = self.expect("int")
            self.expect("sym", ")")
            if int(it[1]) < 0:
                raise SpecError(f"gen({it[1]}) is negative", it[2])
            return GenAction("gen", index=int(it[1]))
        if word in ("label", "place"):
            nt = self.take()
            if nt[0] != "id":
                raise SpecError(f"expected a label name, found {nt[1]!r}", nt[2])
            return GenAction(word, name=nt[1])
        if word == "emit":
            return self.parse_emit(t[2])
        raise SpecError(f"unknown action {word!r}", t[2])

    def parse_emit(self, lineno: int) -> GenAction:
        ot = self.take()
        if ot[0] != "id" or ot[1] not in OPCODES:
            raise SpecError(f"unknown opcode {ot[1]!r}", ot[2])
        opcode = ot[1]
        allowed = _OPERAND_KINDS.get(opcode)
        if allowed is None:
            return GenAction("emit", opcode=opcode)
        operand = self.parse_operand(opcode)
        if operand.kind not in allowed:
            raise SpecError(
                f"{opcode} cannot take a {operand.kind.replace('_', ' ')} operand", lineno)
        if operand.kind == "int":
            if opcode in ("LOAD", "STORE") and operand.value < 0:
                raise SpecError(f"{opcode} address must not be negative", lineno)
            if opcode == "LIT" and wrap64(operand.value) != operand.value:
                raise SpecError("literal outside 64-bit range", lineno)
        return GenAction("emit", opcode=opcode, operand=operand)

    def parse_operand(self, opcode: str) -> Operand:
        t = self.take()
        if t[0] == "int":
            return Operand("int", value=int(t[1]))
        if t[0] == "dollar":
            if t[1] == "int":
                return Operand("self_int")
            if t[1] == "str":
                return Operand("self_str")
            raise SpecError(f"unknown operand ${t[1]}", t[2])
        if t[0] == "id" and t[1] == "addr":
            self.expect("sym", "(")
            it = self.take()
            self.expect("sym", ")")
            if it[0] == "id" and it[1] == "self":
                return Operand("addr_self")
            if it[0] == "int" and int(it[1]) >= 0:
                return Operand("addr_child", value=int(it[1]))
            raise SpecError(f"addr() needs a child index or self, found {it[1]!r}", it[2])
        if t[0] == "id":
            return Operand("label", name=t[1])
        raise SpecError(f"bad operand {t[1]!r} for {opcode}", t[2])


def _check_rule(rule: GenRule):
    """Label discipline is fully static: declare before use, place exactly
    once for every label that some jump mentions."""
    declared: set[str] = set()
    placed: set[str] = set()
    jumped: set[str] = set()
    for a in rule.actions:
        if a.op == "label":
            if a.name in declared:
                raise SpecError(f"label {a.name!r} declared twice in node {rule.kind}",
                                rule.line)
            declared.add(a.name)
        elif a.op == "place":
            if a.name not in declared:
                raise SpecError(f"place of undeclared label {a.name!r} in node {rule.kind}",
                                rule.line)
            if a.name in placed:
                raise SpecError(f"label {a.name!r} placed twice in node {rule.kind}",
                                rule.line)
            placed.add(a.name)
        elif a.op == "emit" and a.operand is not None and a.operand.kind == "label":
            if a.operand.name not in declared:
                raise SpecError(
                    f"jump to undeclared label {a.operand.name!r} in node {rule.kind}",
                    rule.line)
            jumped.add(a.operand.name)
    missing = jumped - placed
    if missing:
        raise SpecError(
            f"label {sorted(missing)[0]!r} is jumped to but never placed in node {rule.kind}",
            rule.line)


def parse_codegen_spec(text: str) -> CodegenSpec:
    return _Parser(_tokenize(text)).parse_spec()


# ---------------------------------------------------------------- generation

_DEFAULT_ACTIONS = [GenAction("gen_all")]


class _Emitter:
    def __init__(self, spec: CodegenSpec):
        self.spec = spec
        self.buf: list[tuple[str, object]] = []  # arg: int | None | ("label", id)
        self.strings: list[str] = []
        self.interned: dict[str, int] = {}
        self.placements: dict[int, int] = {}
        self.next_label = 0

    def fail(self, node: SynTree, reason: str):
        raise GenError(node.pos[0], node.pos[1], f"{reason} (node {node.kind})")

    def intern(self, text: str) -> int:
        if text not in self.interned:
            self.interned[text] = len(self.strings)
            self.strings.append(text)
        return self.interned[text]

    def operand_value(self, node: SynTree, operand: Operand, labels: dict[str, int]):
        if operand.kind == "int":
            return operand.value
        if operand.kind == "self_int":
            if node.lexeme is None:
                self.fail(node, "$int needs a leaf with a lexeme")
            text = node.lexeme
            stripped = text[1:] if text[:1] in "+-" else text
            if not stripped.isdigit():
                self.fail(node, f"$int lexeme {text!r} is not a number")
            return wrap64(int(text))
        if operand.kind == "self_str":
            if node.lexeme is None:
                self.fail(node, "$str needs a leaf with a lexeme")
            text = node.lexeme
            if len(text) >= 2 and text[0] == '"' and text[-1] == '"':
                text = text[1:-1]
            return self.intern(text)
        if operand.kind == "addr_child":
            if operand.value >= len(node.children):
                self.fail(node, f"addr({operand.value}) is out of range")
            addr = node.children[operand.value].ann_addr
            if addr is None:
                self.fail(node, f"addr({operand.value}): child has no address decoration")
            return addr
        if operand.kind == "addr_self":
            if node.ann_addr is None:
                self.fail(node, "addr(self): node has no address decoration")
            return node.ann_addr
        return ("label", labels[operand.name])

    def generate(self, tree: SynTree) -> MachineCode:
        # frames: (node, actions, next action index, label ids)
        stack: list[list] = [[tree, self.actions_for(tree), 0, None]]
        while stack:
            frame = stack[-1]
            node, actions, i, labels = frame
            if labels is None:
                labels = {a.name: self.fresh_label() for a in actions if a.op == "label"}
                frame[3] = labels
            if i >= len(actions):
                stack.pop()
                continue
            frame[2] += 1
            a = actions[i]
            if a.op == "gen_all":
                for child in reversed(node.children):
                    stack.append([child, self.actions_for(child), 0, None])
            elif a.op == "gen":
                if a.index >= len(node.children):
                    self.fail(node, f"gen({a.index}) is out of range")
                child = node.children[a.index]
                stack.append([child, self.actions_for(child), 0, None])
            elif a.op == "label":
                pass  # allocated at frame entry
            elif a.op == "place":
                self.placements[labels[a.name]] = len(self.buf)
            else:  # emit
                arg = None
                if a.operand is not None:
                    arg = self.operand_value(node, a.operand, labels)
                self.buf.append((a.opcode, arg))
        self.buf.append(("HALT", None))
        instrs = []
        for op, arg in self.buf:
            if isinstance(arg, tuple):
                arg = self.placements[arg[1]]
            instrs.append(Instr(op, arg))
        return MachineCode(instrs, self.strings).validate()

    def actions_for(self, node: SynTree) -> list[GenAction]:
        rule = self.spec.rules.get(node.kind)
        return rule.actions if rule is not None else _DEFAULT_ACTIONS

    def fresh_label(self) -> int:
        self.next_label += 1
        return self.next_label


def generate(spec: CodegenSpec, tree: SynTree) -> MachineCode:
    return _Emitter(spec).generate(tree)


# ------------------------------------------------------------------ peephole

def _jump_targets(instrs: list[Instr]) -> set[int]:
    return {ins.arg for ins in instrs if ins.op in ("FJP", "UJP")}


def _remap(instrs: list[Instr], cut_start: int, cut_len: int):
    """Shift jump targets after removing cut_len slots at cut_start."""
    for i, ins in enumerate(instrs):
        if ins.op in ("FJP", "UJP") and ins.arg > cut_start:
            instrs[i] = Instr(ins.op, max(ins.arg - cut_len, cut_start))


def optimize(code: MachineCode) -> MachineCode:
    instrs = list(code.instrs)
    i = 0
    while i < len(instrs):
        targets = _jump_targets(instrs)
        window = instrs[i:i + 3]
        # constant fold a binary operation
        if (len(window) == 3 and window[0].op == "LIT" and window[1].op == "LIT"
                and window[2].op in BINARY_OPS
                and not (window[2].op in ("DIV", "MOD") and window[1].arg == 0)
                and i + 1 not in targets and i + 2 not in targets):
            instrs[i:i + 3] = [Instr("LIT", _binop(window[2].op, window[0].arg,
                                                   window[1].arg))]
            _remap(instrs, i, 2)
            i = max(i - 2, 0)
            continue
        # constant fold a unary operation
        if (len(window) >= 2 and window[0].op == "LIT" and window[1].op in UNARY_OPS
                and i + 1 not in targets):
            instrs[i:i + 2] = [Instr("LIT", _unop(window[1].op, window[0].arg))]
            _remap(instrs, i, 1)
            i = max(i - 2, 0)
            continue
        # a jump to the instruction that follows it does nothing; nor does NOP
        removable = (instrs[i].op == "NOP"
                     or (instrs[i].op == "UJP" and instrs[i].arg == i + 1))
        if removable and not (i == len(instrs) - 1 and i in targets):
            del instrs[i]
            _remap(instrs, i, 1)
            i = max(i - 2, 0)
            continue
        i += 1
    return MachineCode(instrs, list(code.strings)).validate()
