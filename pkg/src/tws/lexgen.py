"""Scanner generator: rule specs compiled into a DFA tokenizer.

Each rule's regex becomes a Thompson NFA fragment; fragments are unioned
with rule-tagged accept states and subset construction yields the DFA.
Accepting DFA states remember the lowest rule index among their NFA
accepts, which implements priority tie-breaking.  Scanning is repeated
maximal munch plus keyword promotion.

simulate_nfa is the checking oracle: it rebuilds an epsilon-NFA with its
own local constructor (deliberately not sharing the DFA path's builder)
and simulates it with closure sets.
"""
from __future__ import annotations

import re
from bisect import bisect_right
from dataclasses import dataclass, field

from .errors import LexError, SpecError

MAX_CP = 0x10FFFF
_NEWLINE = ord("\n")

# ---------------------------------------------------------------- regex ast

# kinds: empty, lit, cls, any, cat, alt, star, plus, opt
@dataclass(frozen=True)
class RegexAst:
    kind: str
    cp: int = -1
    negated: bool = False
    ranges: tuple[tuple[int, int], ...] = ()
    children: tuple["RegexAst", ...] = ()


_ESCAPES = {
    "n": ord("\n"), "t": ord("\t"), "\\": ord("\\"), "/": ord("/"),
    ".": ord("."), "*": ord("*"), "+": ord("+"), "?": ord("?"),
    "|": ord("|"), "(": ord("("), ")": ord(")"), "[": ord("["), "]": ord("]"),
}
_POSTFIX = {"*": "star", "+": "plus", "?": "opt"}


class _RegexParser:
    """Recursive descent over one pattern. Precedence: postfix > concat > alt."""

    def __init__(self, pattern: str, line: int, col0: int):
        self.s = pattern
        self.i = 0
        self.line = line
        self.col0 = col0  # source column of pattern[0]

    def fail(self, msg: str):
        raise SpecError(msg, self.line, self.col0 + self.i)

    def peek(self) -> str | None:
        return self.s[self.i] if self.i < len(self.s) else None

    def parse(self) -> RegexAst:
        node = self.alt()
        if self.i != len(self.s):
            self.fail(f"unexpected {self.s[self.i]!r} in regex")
        return node

    def alt(self) -> RegexAst:
        parts = [self.cat()]
        while self.peek() == "|":
            self.i += 1
            parts.append(self.cat())
        if len(parts) == 1:
            return parts[0]
        return RegexAst("alt", children=tuple(parts))

    def cat(self) -> RegexAst:
        parts = []
        while True:
            c = self.peek()
            if c is None or c in "|)":
                break
            parts.append(self.postfix())
        if not parts:
            return RegexAst("empty")
        if len(parts) == 1:
            return parts[0]
        return RegexAst("cat", children=tuple(parts))

    def postfix(self) -> RegexAst:
        node = self.atom()
        while (c := self.peek()) in _POSTFIX:
            self.i += 1
            node = RegexAst(_POSTFIX[c], children=(node,))
        return node

    def atom(self) -> RegexAst:
        c = self.peek()
        if c is None:
            self.fail("regex ended unexpectedly")
        if c == "(":
            self.i += 1
            node = self.alt()
            if self.peek() != ")":
                self.fail("unclosed group")
            self.i += 1
            return node
        if c == "[":
            return self.char_class()
        if c == ".":
            self.i += 1
            return RegexAst("any")
        if c == "\\":
            return RegexAst("lit", cp=self.escape())
        if c in "*+?":
            self.fail(f"postfix {c!r} with nothing to repeat")
        if c == ")":
            self.fail("unbalanced ')'")
        self.i += 1
        return RegexAst("lit", cp=ord(c))

    def escape(self) -> int:
        # at self.s[self.i] == '\\'
        self.i += 1
        c = self.peek()
        if c is None:
            self.fail("dangling backslash")
        if c not in _ESCAPES:
            self.fail(f"unknown escape \\{c}")
        self.i += 1
        return _ESCAPES[c]

    def class_char(self) -> int:
        c = self.peek()
        if c is None:
            self.fail("unterminated character class")
        if c == "\\":
            return self.escape()
        self.i += 1
        return ord(c)

    def char_class(self) -> RegexAst:
        # at '['
        self.i += 1
        negated = False
        if self.peek() == "^":
            negated = True
            self.i += 1
        ranges: list[tuple[int, int]] = []
        while True:
            c = self.peek()
            if c is None:
                self.fail("unterminated character class")
            if c == "]":
                self.i += 1
                break
            lo = self.class_char()
            # '-' makes a range unless it is the last char before ']'
            if self.peek() == "-" and self.i + 1 < len(self.s) and self.s[self.i + 1] != "]":
                self.i += 1
                hi = self.class_char()
                if lo > hi:
                    self.fail("inverted range in character class")
                ranges.append((lo, hi))
            else:
                ranges.append((lo, lo))
        if not ranges:
            self.fail("empty character class")
        return RegexAst("cls", negated=negated, ranges=tuple(ranges))


def _nullable(node: RegexAst) -> bool:
    k = node.kind
    if k == "empty":
        return True
    if k in ("lit", "cls", "any"):
        return False
    if k == "cat":
        return all(_nullable(c) for c in node.children)
    if k == "alt":
        return any(_nullable(c) for c in node.children)
    if k in ("star", "opt"):
        return True
    if k == "plus":
        return _nullable(node.children[0])
    raise AssertionError(k)


def _complement(ranges: tuple[tuple[int, int], ...]) -> list[tuple[int, int]]:
    merged: list[list[int]] = []
    for lo, hi in sorted(ranges):
        if merged and lo <= merged[-1][1] + 1:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    out = []
    cur = 0
    for lo, hi in merged:
        if cur < lo:
            out.append((cur, lo - 1))
        cur = hi + 1
    if cur <= MAX_CP:
        out.append((cur, MAX_CP))
    return out


def _char_ranges(node: RegexAst) -> list[tuple[int, int]]:
    """Ranges matched by a single-character node."""
    if node.kind == "lit":
        return [(node.cp, node.cp)]
    if node.kind == "any":
        return [(0, _NEWLINE - 1), (_NEWLINE + 1, MAX_CP)]
    if node.kind == "cls":
        if node.negated:
            return _complement(node.ranges)
        return list(node.ranges)
    raise AssertionError(node.kind)


# ------------------------------------------------------------- spec parsing

@dataclass(frozen=True)
class ScanRule:
    name: str
    action: str  # "token" | "skip"
    pattern: RegexAst
    pattern_text: str
    line: int


@dataclass
class ScannerSpec:
    rules: list[ScanRule]
    promotions: dict[str, frozenset[str]]  # TOKEN rule name -> reserved words


_DIRECTIVE_RE = re.compile(r"^\s*(token|skip)\s+([A-Za-z_][A-Za-z0-9_]*)\s*(/)")
_KEYWORDS_RE = re.compile(r"^\s*keywords\s+([A-Za-z_][A-Za-z0-9_]*)\s*:\s*(.*)$")


def parse_scanner_spec(text: str) -> ScannerSpec:
    rules: list[ScanRule] = []
    promo_lines: list[tuple[str, list[str], int]] = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("--"):
            continue
        m = _DIRECTIVE_RE.match(raw)
        if m:
            action, name = m.group(1), m.group(2)
            start = m.end(3)  # index just past the opening '/'
            i = start
            while i < len(raw):
                if raw[i] == "\\":
                    i += 2
                    continue
                if raw[i] == "/":
                    break
                i += 1
            if i >= len(raw):
                raise SpecError("unterminated /regex/", lineno, len(raw) + 1)
            pattern_text = raw[start:i]
            if raw[i + 1:].strip():
                raise SpecError("trailing text after pattern", lineno, i + 2)
            pattern = _RegexParser(pattern_text, lineno, start + 1).parse()
            if _nullable(pattern):
                raise SpecError(f"rule {name} matches the empty string", lineno, start + 1)
            if action == "token" and any(r.name == name and r.action == "token" for r in rules):
                raise SpecError(f"duplicate token rule name {name}", lineno, 1)
            rules.append(ScanRule(name, action, pattern, pattern_text, lineno))
            continue
        m = _KEYWORDS_RE.match(raw)
        if m:
            words = m.group(2).split()
            if not words:
                raise SpecError("keywords directive lists no words", lineno, 1)
            promo_lines.append((m.group(1), words, lineno))
            continue
        raise SpecError("unrecognized directive", lineno, 1)

    token_names = {r.name for r in rules if r.action == "token"}
    promotions: dict[str, set[str]] = {}
    seen_words: set[str] = set()
    for name, words, lineno in promo_lines:
        if name not in token_names:
            raise SpecError(f"keywords for unknown token rule {name}", lineno, 1)
        for w in words:
            if w in seen_words:
                raise SpecError(f"reserved word {w!r} listed twice", lineno, 1)
            seen_words.add(w)
        promotions.setdefault(name, set()).update(words)
    return ScannerSpec(rules, {k: frozenset(v) for k, v in promotions.items()})


# ------------------------------------------------- NFA and subset construction

class _Nfa:
    def __init__(self):
        self.eps: list[list[int]] = []
        self.edges: list[list[tuple[int, int, int]]] = []  # (lo, hi, target)

    def new_state(self) -> int:
        self.eps.append([])
        self.edges.append([])
        return len(self.eps) - 1

    def fragment(self, node: RegexAst) -> tuple[int, int]:
        k = node.kind
        s, e = self.new_state(), self.new_state()
        if k == "empty":
            self.eps[s].append(e)
        elif k in ("lit", "any", "cls"):
            for lo, hi in _char_ranges(node):
                self.edges[s].append((lo, hi, e))
        elif k == "cat":
            prev = s
            for child in node.children:
                cs, ce = self.fragment(child)
                self.eps[prev].append(cs)
                prev = ce
            self.eps[prev].append(e)
        elif k == "alt":
            for child in node.children:
                cs, ce = self.fragment(child)
                self.eps[s].append(cs)
                self.eps[ce].append(e)
        elif k == "star":
            cs, ce = self.fragment(node.children[0])
            self.eps[s] += [cs, e]
            self.eps[ce] += [cs, e]
        elif k == "plus":
            cs, ce = self.fragment(node.children[0])
            self.eps[s].append(cs)
            self.eps[ce] += [cs, e]
        elif k == "opt":
            cs, ce = self.fragment(node.children[0])
            self.eps[s] += [cs, e]
            self.eps[ce].append(e)
        else:
            raise AssertionError(k)
        return s, e


def _closure(nfa_eps: list[list[int]], states: frozenset[int]) -> frozenset[int]:
    seen = set(states)
    stack = list(states)
    while stack:
        for t in nfa_eps[stack.pop()]:
            if t not in seen:
                seen.add(t)
                stack.append(t)
    return frozenset(seen)


@dataclass
class ScannerAutomaton:
    """Deterministic tokenizer: transition table plus rule metadata."""

    # per state: sorted tuple of (lo, hi, target), accept rule index or None
    transitions: list[tuple[tuple[int, int, int], ...]]
    accepts: list[int | None]
    lows: list[list[int]] = field(default_factory=list)  # bisect keys per state
    rules: list[ScanRule] = field(default_factory=list)
    promotions: dict[str, frozenset[str]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.lows:
            self.lows = [[tr[0] for tr in row] for row in self.transitions]

    @property
    def state_count(self) -> int:
        return len(self.transitions)

    def longest_match(self, source: str, pos: int) -> tuple[int, int] | None:
        """Maximal munch from pos: (length, rule index) or None."""
        state = 0
        best: tuple[int, int] | None = None
        i = pos
        n = len(source)
        while i < n:
            cp = ord(source[i])
            row = self.transitions[state]
            j = bisect_right(self.lows[state], cp) - 1
            if j < 0 or row[j][1] < cp:
                break
            state = row[j][2]
            i += 1
            acc = self.accepts[state]
            if acc is not None:
                best = (i - pos, acc)
        return best


def build_scanner(spec: ScannerSpec, max_states: int = 100_000) -> ScannerAutomaton:
    if not spec.rules:
        raise SpecError("scanner spec declares no rules")
    nfa = _Nfa()
    start = nfa.new_state()
    accept_of: dict[int, int] = {}  # nfa state -> rule index
    for idx, rule in enumerate(spec.rules):
        fs, fe = nfa.fragment(rule.pattern)
        nfa.eps[start].append(fs)
        accept_of[fe] = idx

    d0 = _closure(nfa.eps, frozenset([start]))
    index: dict[frozenset[int], int] = {d0: 0}
    order = [d0]
    transitions: list[tuple[tuple[int, int, int], ...]] = []
    accepts: list[int | None] = []
    qi = 0
    while qi < len(order):
        current = order[qi]
        qi += 1
        # elementary intervals over outgoing edges
        bounds: set[int] = set()
        out: list[tuple[int, int, int]] = []
        for s in current:
            for lo, hi, t in nfa.edges[s]:
                out.append((lo, hi, t))
                bounds.add(lo)
                bounds.add(hi + 1)
        row: list[tuple[int, int, int]] = []
        for lo in sorted(b for b in bounds if b <= MAX_CP):
            uppers = [b - 1 for b in bounds if b > lo]
            hi = min(uppers) if uppers else MAX_CP
            targets = frozenset(t for elo, ehi, t in out if elo <= lo <= ehi)
            if not targets:
                continue
            dest = _closure(nfa.eps, targets)
            di = index.get(dest)
            if di is None:
                di = len(order)
                if di >= max_states:
                    raise SpecError(f"state count exceeds cap of {max_states}")
                index[dest] = di
                order.append(dest)
            if row and row[-1][2] == di and row[-1][1] + 1 == lo:
                row[-1] = (row[-1][0], hi, di)
            else:
                row.append((lo, hi, di))
        transitions.append(tuple(row))
        rule_hits = [accept_of[s] for s in current if s in accept_of]
        accepts.append(min(rule_hits) if rule_hits else None)

    return ScannerAutomaton(transitions, accepts, rules=list(spec.rules),
                            promotions=dict(spec.promotions))


# ---------------------------------------------------------------- tokenizing

@dataclass(frozen=True)
class Token:
    kind: str
    lexeme: str
    line: int
    col: int


EOF_KIND = "$"


def scan(automaton: ScannerAutomaton, source: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line, col = 1, 1
    n = len(source)
    while pos < n:
        m = automaton.longest_match(source, pos)
        if m is None:
            raise LexError(line, col, source[pos])
        length, rule_idx = m
        rule = automaton.rules[rule_idx]
        lexeme = source[pos:pos + length]
        if rule.action == "token":
            kind = rule.name
            words = automaton.promotions.get(kind)
            if words and lexeme in words:
                kind = lexeme
            tokens.append(Token(kind, lexeme, line, col))
        for ch in lexeme:
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1
        pos += length
    tokens.append(Token(EOF_KIND, "", line, col))
    return tokens


# ------------------------------------------------------------------- oracle

class OracleNfa:
    """Brute-force epsilon-closure NFA simulation used as the scanning oracle.

    Builds its own NFA from the regex asts (not via the production builder)
    so a bug in the DFA path's construction cannot hide here.
    """

    def __init__(self, spec: ScannerSpec):
        self.eps: list[list[int]] = []
        self.edges: list[list[tuple[int, int, int]]] = []
        self.accept_rule: dict[int, int] = {}
        self.start = self._state()
        for idx, rule in enumerate(spec.rules):
            s, e = self._build(rule.pattern)
            self.eps[self.start].append(s)
            self.accept_rule[e] = idx
        self._closure_cache: dict[int, frozenset[int]] = {}

    def _state(self) -> int:
        self.eps.append([])
        self.edges.append([])
        return len(self.eps) - 1

    def _build(self, node: RegexAst) -> tuple[int, int]:
        k = node.kind
        if k == "empty":
            s = self._state()
            e = self._state()
            self.eps[s].append(e)
            return s, e
        if k in ("lit", "any", "cls"):
            s = self._state()
            e = self._state()
            for lo, hi in _char_ranges(node):
                self.edges[s].append((lo, hi, e))
            return s, e
        if k == "cat":
            first_s, prev_e = self._build(node.children[0])
            for child in node.children[1:]:
                cs, ce = self._build(child)
                self.eps[prev_e].append(cs)
                prev_e = ce
            return first_s, prev_e
        if k == "alt":
            s = self._state()
            e = self._state()
            for child in node.children:
                cs, ce = self._build(child)
                self.eps[s].append(cs)
                self.eps[ce].append(e)
            return s, e
        if k in ("star", "plus", "opt"):
            s = self._state()
            e = self._state()
            cs, ce = self._build(node.children[0])
            self.eps[s].append(cs)
            self.eps[ce].append(e)
            if k in ("star", "opt"):
                self.eps[s].append(e)
            if k in ("star", "plus"):
                self.eps[ce].append(cs)
            return s, e
        raise AssertionError(k)

    def _close_one(self, s: int) -> frozenset[int]:
        cached = self._closure_cache.get(s)
        if cached is None:
            seen = {s}
            stack = [s]
            while stack:
                for t in self.eps[stack.pop()]:
                    if t not in seen:
                        seen.add(t)
                        stack.append(t)
            cached = frozenset(seen)
            self._closure_cache[s] = cached
        return cached

    def _close(self, states) -> frozenset[int]:
        out: set[int] = set()
        for s in states:
            out |= self._close_one(s)
        return frozenset(out)

    def match(self, source: str, start: int) -> tuple[int, int] | None:
        current = self._close([self.start])
        best: tuple[int, int] | None = None
        i = start
        n = len(source)
        while True:
            hits = [self.accept_rule[s] for s in current if s in self.accept_rule]
            if hits and i > start:
                best = (i - start, min(hits))
            if i >= n or not current:
                break
            cp = ord(source[i])
            moved = set()
            for s in current:
                for lo, hi, t in self.edges[s]:
                    if lo <= cp <= hi:
                        moved.add(t)
            if not moved:
                break
            current = self._close(moved)
            i += 1
        return best


def simulate_nfa(spec: ScannerSpec, source: str, start: int) -> tuple[int, int] | None:
    """Longest match length from start and the lowest rule index achieving it."""
    return OracleNfa(spec).match(source, start)
