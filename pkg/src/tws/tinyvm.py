"""Stack machine: the execution target of the code generator.

All arithmetic is 64-bit two's-complement with wraparound; division and
modulo truncate toward zero and share sign rules with C.  Every instruction
checks its preconditions before touching any state, so a trap (VmTrap)
always leaves the machine exactly as it was.  That makes InputExhausted
resumable: feed more input and step again.

The step budget is an absolute cap on the machine's lifetime step counter,
not a per-call allowance, so a resumed run cannot sidestep the limit.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

_U64 = 1 << 64
_MIN64 = -(1 << 63)


def wrap64(value: int) -> int:
    return (value - _MIN64) % _U64 + _MIN64


BINARY_OPS = ("ADD", "SUB", "MUL", "DIV", "MOD",
              "EQ", "NE", "LT", "LE", "GT", "GE", "AND", "OR")
UNARY_OPS = ("NEG", "NOT")
_NEED_INT_ARG = ("LIT", "LOAD", "STORE", "FJP", "UJP", "WRITES")
_NO_ARG = BINARY_OPS + UNARY_OPS + ("READ", "WRITE", "NOP", "HALT")
OPCODES = _NEED_INT_ARG + _NO_ARG


class VmTrap(Exception):
    def __init__(self, kind: str, message: str):
        super().__init__(f"{kind}: {message}")
        self.kind = kind
        self.message = message


@dataclass(frozen=True)
class Instr:
    op: str
    arg: int | None = None

    def show(self) -> str:
        return self.op if self.arg is None else f"{self.op} {self.arg}"


@dataclass
class MachineCode:
    instrs: list[Instr] = field(default_factory=list)
    strings: list[str] = field(default_factory=list)

    def validate(self):
        n = len(self.instrs)
        for i, ins in enumerate(self.instrs):
            where = f"instruction {i}"
            if ins.op not in OPCODES:
                raise ValueError(f"{where}: unknown opcode {ins.op!r}")
            if ins.op in _NEED_INT_ARG:
                if not isinstance(ins.arg, int):
                    raise ValueError(f"{where}: {ins.op} needs an integer operand")
                if ins.op in ("FJP", "UJP") and not 0 <= ins.arg < n:
                    raise ValueError(f"{where}: jump target {ins.arg} out of range")
                if ins.op in ("LOAD", "STORE") and ins.arg < 0:
                    raise ValueError(f"{where}: negative address {ins.arg}")
                if ins.op == "WRITES" and not 0 <= ins.arg < len(self.strings):
                    raise ValueError(f"{where}: string index {ins.arg} out of range")
                if ins.op == "LIT" and wrap64(ins.arg) != ins.arg:
                    raise ValueError(f"{where}: literal {ins.arg} outside 64-bit range")
            elif ins.arg is not None:
                raise ValueError(f"{where}: {ins.op} takes no operand")
        return self

    def to_obj(self) -> dict:
        return {"instrs": [[i.op] if i.arg is None else [i.op, i.arg]
                           for i in self.instrs],
                "strings": list(self.strings)}

    @staticmethod
    def from_obj(obj: dict) -> "MachineCode":
        instrs = [Instr(row[0], row[1] if len(row) > 1 else None)
                  for row in obj["instrs"]]
        return MachineCode(instrs, list(obj["strings"])).validate()

    def to_listing(self) -> str:
        lines = [f"{i}: {ins.show()}" for i, ins in enumerate(self.instrs)]
        lines += [f'.str {k} {json.dumps(s, ensure_ascii=False)}'
                  for k, s in enumerate(self.strings)]
        return "\n".join(lines) + "\n"


@dataclass
class MachineState:
    pc: int = 0
    stack: list[int] = field(default_factory=list)
    memory: dict[int, int] = field(default_factory=dict)
    input_tokens: list[str] = field(default_factory=list)
    output: str = ""
    steps: int = 0
    halted: bool = False

    def feed_input(self, text: str):
        self.input_tokens.extend(text.split())


@dataclass
class StepRecord:
    step: int
    pc: int
    instr: str
    stack: list[int]
    out: str = ""
    read: int | None = None

    def to_obj(self) -> dict:
        obj: dict = {"step": self.step, "pc": self.pc, "instr": self.instr,
                     "stack": list(self.stack)}
        if self.out:
            obj["out"] = self.out
        if self.read is not None:
            obj["read"] = self.read
        return obj


def trace_to_jsonl(records: list[StepRecord]) -> str:
    return "".join(json.dumps(r.to_obj(), ensure_ascii=False) + "\n" for r in records)


def _binop(op: str, left: int, right: int) -> int:
    if op == "ADD":
        return wrap64(left + right)
    if op == "SUB":
        return wrap64(left - right)
    if op == "MUL":
        return wrap64(left * right)
    if op in ("DIV", "MOD"):
        q = abs(left) // abs(right)
        if (left < 0) != (right < 0):
            q = -q
        if op == "DIV":
            return wrap64(q)
        return wrap64(left - right * q)
    if op == "EQ":
        return int(left == right)
    if op == "NE":
        return int(left != right)
    if op == "LT":
        return int(left < right)
    if op == "LE":
        return int(left <= right)
    if op == "GT":
        return int(left > right)
    if op == "GE":
        return int(left >= right)
    if op == "AND":
        return int(left != 0 and right != 0)
    return int(left != 0 or right != 0)  # OR


def _unop(op: str, value: int) -> int:
    if op == "NEG":
        return wrap64(-value)
    return int(value == 0)  # NOT


def step(code: MachineCode, state: MachineState) -> StepRecord | None:
    """Execute one instruction; None when already halted."""
    if state.halted:
        return None
    if not 0 <= state.pc < len(code.instrs):
        raise VmTrap("PcOutOfRange", f"pc {state.pc} outside code of length {len(code.instrs)}")
    ins = code.instrs[state.pc]
    op = ins.op
    pc = state.pc
    out = ""
    read_value: int | None = None

    # check phase: compute effects, raise before any mutation
    pops = 0
    push: int | None = None
    next_pc = pc + 1
    store_at: int | None = None
    store_value = 0
    consume_input = False
    halt = False

    if op == "LIT":
        push = ins.arg
    elif op == "LOAD":
        push = state.memory.get(ins.arg, 0)
    elif op == "STORE":
        if not state.stack:
            raise VmTrap("StackUnderflow", f"STORE at pc {pc} on empty stack")
        pops = 1
        store_at = ins.arg
        store_value = state.stack[-1]
    elif op in BINARY_OPS:
        if len(state.stack) < 2:
            raise VmTrap("StackUnderflow", f"{op} at pc {pc} needs two values")
        left, right = state.stack[-2], state.stack[-1]
        if op in ("DIV", "MOD") and right == 0:
            raise VmTrap("DivByZero", f"{op} by zero at pc {pc}")
        pops = 2
        push = _binop(op, left, right)
    elif op in UNARY_OPS:
        if not state.stack:
            raise VmTrap("StackUnderflow", f"{op} at pc {pc} on empty stack")
        pops = 1
        push = _unop(op, state.stack[-1])
    elif op == "FJP":
        if not state.stack:
            raise VmTrap("StackUnderflow", f"FJP at pc {pc} on empty stack")
        pops = 1
        if state.stack[-1] == 0:
            next_pc = ins.arg
    elif op == "UJP":
        next_pc = ins.arg
    elif op == "READ":
        if not state.input_tokens:
            raise VmTrap("InputExhausted", f"READ at pc {pc} with no pending input")
        token = state.input_tokens[0]
        stripped = token[1:] if token[:1] in "+-" else token
        if not stripped.isdigit():
            raise VmTrap("InputMalformed", f"READ at pc {pc}: {token!r} is not an integer")
        consume_input = True
        push = wrap64(int(token))
        read_value = push
    elif op == "WRITE":
        if not state.stack:
            raise VmTrap("StackUnderflow", f"WRITE at pc {pc} on empty stack")
        pops = 1
        out = f"{state.stack[-1]}\n"
    elif op == "WRITES":
        out = code.strings[ins.arg]
    elif op == "HALT":
        halt = True
        next_pc = pc
    # NOP: nothing

    # mutate phase
    if pops:
        del state.stack[len(state.stack) - pops:]
    if store_at is not None:
        state.memory[store_at] = store_value
    if push is not None:
        state.stack.append(push)
    if consume_input:
        state.input_tokens.pop(0)
    state.output += out
    state.pc = next_pc
    state.steps += 1
    state.halted = halt
    return StepRecord(state.steps, pc, ins.show(), list(state.stack), out, read_value)


@dataclass
class RunResult:
    halted: bool
    trap: str | None
    trap_message: str | None
    steps: int
    output: str
    trace: list[StepRecord]
    trace_truncated: bool = False


def run(code: MachineCode, state: MachineState, max_steps: int,
        with_trace: bool = False, max_trace: int | None = None) -> RunResult:
    trace: list[StepRecord] = []
    truncated = False
    trap_kind = trap_message = None
    while not state.halted:
        if state.steps >= max_steps:
            trap_kind = "StepLimit"
            trap_message = f"step budget of {max_steps} exhausted"
            break
        try:
            record = step(code, state)
        except VmTrap as t:
            trap_kind, trap_message = t.kind, t.message
            break
        if with_trace and record is not None:
            if max_trace is None or len(trace) < max_trace:
                trace.append(record)
            else:
                truncated = True
    return RunResult(state.halted, trap_kind, trap_message,
                     state.steps, state.output, trace, truncated)
