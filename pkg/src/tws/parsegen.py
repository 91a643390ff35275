"""Parser generator: grammar specs compiled to LALR(1) tables.

Construction is the classic efficient route: build the LR(0) canonical
collection, then compute LALR(1) lookaheads for kernel items by spontaneous
generation plus propagation (closing each kernel item with a dummy
lookahead), then fill ACTION/GOTO from the LR(1) closure of the kernels.

Tree building is driven by per-production directives `=> name(k)`: a reduce
pops k trees from a parallel tree stack and pushes one interior node.
Shifting a named terminal pushes a leaf; shifting a quoted literal pushes
nothing.

earley_recognize is the checking oracle: a plain Earley recognizer over the
same grammar that ignores directives entirely.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ParseError, SpecError
from .lexgen import Token
from .syntree import SynTree

END = "$"  # synthetic end-of-input terminal, reserved


# ------------------------------------------------------------------- grammar

@dataclass(frozen=True)
class GrammarSymbol:
    tag: str  # "nt" | "term" | "lit"
    name: str  # nonterminal name, terminal kind, or literal text

    @property
    def is_terminal(self) -> bool:
        return self.tag != "nt"

    @property
    def pushes_tree(self) -> bool:
        # named terminals become leaves; literals vanish; nonterminals carry one tree
        return self.tag != "lit"

    def show(self) -> str:
        return f"'{self.name}'" if self.tag == "lit" else self.name


@dataclass(frozen=True)
class Production:
    index: int
    lhs: str
    rhs: tuple[GrammarSymbol, ...]
    directive: tuple[str, int] | None  # (node kind, pop count)
    line: int = 0

    def show(self) -> str:
        rhs = " ".join(s.show() for s in self.rhs) or "<empty>"
        suffix = f" => {self.directive[0]}({self.directive[1]})" if self.directive else ""
        return f"{self.lhs} -> {rhs}{suffix}"


@dataclass
class GrammarSpec:
    start: str
    productions: list[Production]
    mode: str  # "strict" | "permissive"
    nonterminals: set[str] = field(default_factory=set)

    def by_lhs(self) -> dict[str, list[Production]]:
        out: dict[str, list[Production]] = {}
        for p in self.productions:
            out.setdefault(p.lhs, []).append(p)
        return out


# -------------------------------------------------------------- spec parsing

def _strip_comment(line: str) -> str:
    in_quote = False
    i = 0
    while i < len(line):
        c = line[i]
        if c == "'":
            in_quote = not in_quote
        elif not in_quote and c == "-" and line[i:i + 2] == "--":
            return line[:i]
        i += 1
    return line


def _tokenize_rule(text: str, lineno: int) -> list[tuple[str, str]]:
    """Split a rule line into ('id'|'lit'|'op'|'int', value) pairs."""
    out: list[tuple[str, str]] = []
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c == "'":
            j = text.find("'", i + 1)
            if j < 0:
                raise SpecError("unterminated literal", lineno, i + 1)
            if j == i + 1:
                raise SpecError("empty literal", lineno, i + 1)
            out.append(("lit", text[i + 1:j]))
            i = j + 1
            continue
        if text.startswith("->", i):
            out.append(("op", "->"))
            i += 2
            continue
        if text.startswith("=>", i):
            out.append(("op", "=>"))
            i += 2
            continue
        if c in "|()":
            out.append(("op", c))
            i += 1
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            out.append(("int", text[i:j]))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            out.append(("id", text[i:j]))
            i = j
            continue
        raise SpecError(f"unexpected character {c!r} in rule", lineno, i + 1)
    return out


def parse_grammar_spec(text: str) -> GrammarSpec:
    start: str | None = None
    mode: str | None = None
    # raw alternative: (lhs, [symbol tokens], directive, line)
    raw: list[tuple[str, list[tuple[str, str]], tuple[str, int] | None, int]] = []
    current_lhs: str | None = None

    for lineno, line0 in enumerate(text.split("\n"), start=1):
        line = _strip_comment(line0).strip()
        if not line:
            continue
        if line.startswith("%"):
            parts = line.split()
            if parts[0] == "%start":
                if start is not None:
                    raise SpecError("duplicate %start", lineno, 1)
                if len(parts) != 2:
                    raise SpecError("%start needs one name", lineno, 1)
                start = parts[1]
            elif parts[0] == "%mode":
                if mode is not None:
                    raise SpecError("duplicate %mode", lineno, 1)
                if len(parts) != 2 or parts[1] not in ("strict", "permissive"):
                    raise SpecError("%mode must be strict or permissive", lineno, 1)
                mode = parts[1]
            else:
                raise SpecError(f"unknown directive {parts[0]}", lineno, 1)
            continue

        toks = _tokenize_rule(line, lineno)
        if len(toks) >= 2 and toks[0][0] == "id" and toks[1] == ("op", "->"):
            current_lhs = toks[0][1]
            body = toks[2:]
        elif toks and toks[0] == ("op", "|"):
            if current_lhs is None:
                raise SpecError("alternative with no preceding rule", lineno, 1)
            body = toks  # leading | is handled by the splitter below
        else:
            raise SpecError("expected 'Name ->' or '|' to start a rule line", lineno, 1)

        # split body into alternatives on top-level '|'
        alts: list[list[tuple[str, str]]] = [[]]
        for t in body:
            if t == ("op", "|"):
                alts.append([])
            else:
                alts[-1].append(t)
        if body and body[0] == ("op", "|") and alts and alts[0] == []:
            alts = alts[1:]
        for alt in alts:
            directive = None
            symbols = alt
            if ("op", "=>") in alt:
                at = alt.index(("op", "=>"))
                symbols = alt[:at]
                d = alt[at + 1:]
                ok = (len(d) == 4 and d[0][0] == "id" and d[1] == ("op", "(")
                      and d[2][0] == "int" and d[3] == ("op", ")"))
                if not ok:
                    raise SpecError("directive must look like => name(k)", lineno, 1)
                directive = (d[0][1], int(d[2][1]))
            for t in symbols:
                if t[0] not in ("id", "lit"):
                    raise SpecError(f"unexpected {t[1]!r} in rule body", lineno, 1)
            raw.append((current_lhs, symbols, directive, lineno))

    if start is None:
        raise SpecError("missing %start")
    defined = {lhs for lhs, _, _, _ in raw}
    productions: list[Production] = []
    for idx, (lhs, symbols, directive, lineno) in enumerate(raw):
        rhs: list[GrammarSymbol] = []
        for tag, value in symbols:
            if tag == "lit":
                if value == END:
                    raise SpecError(f"the terminal {END!r} is reserved", lineno, 1)
                rhs.append(GrammarSymbol("lit", value))
            elif value in defined:
                rhs.append(GrammarSymbol("nt", value))
            elif value[0].isupper():
                rhs.append(GrammarSymbol("term", value))
            else:
                raise SpecError(f"undefined nonterminal {value}", lineno, 1)
        productions.append(Production(idx, lhs, tuple(rhs), directive, lineno))
    if start not in defined:
        raise SpecError(f"undefined nonterminal {start} (%start)")
    return GrammarSpec(start, productions, mode or "strict", defined)


def named_terminals(grammar: GrammarSpec) -> set[str]:
    return {s.name for p in grammar.productions for s in p.rhs if s.tag == "term"}


def literal_terminals(grammar: GrammarSpec) -> set[str]:
    return {s.name for p in grammar.productions for s in p.rhs if s.tag == "lit"}


# -------------------------------------------------- nullable / first / follow

def compute_nullable_first_follow(grammar: GrammarSpec):
    nts = grammar.nonterminals
    nullable: set[str] = set()
    first: dict[str, set[str]] = {nt: set() for nt in nts}
    changed = True
    while changed:
        changed = False
        for p in grammar.productions:
            if p.lhs not in nullable and all(
                    (s.tag == "nt" and s.name in nullable) for s in p.rhs):
                nullable.add(p.lhs)
                changed = True
            acc = first[p.lhs]
            before = len(acc)
            for s in p.rhs:
                if s.is_terminal:
                    acc.add(s.name)
                    break
                acc |= first[s.name]
                if s.name not in nullable:
                    break
            if len(acc) != before:
                changed = True

    follow: dict[str, set[str]] = {nt: set() for nt in nts}
    follow[grammar.start].add(END)
    changed = True
    while changed:
        changed = False
        for p in grammar.productions:
            trailer = set(follow[p.lhs])
            for s in reversed(p.rhs):
                if s.is_terminal:
                    trailer = {s.name}
                    continue
                before = len(follow[s.name])
                follow[s.name] |= trailer
                if len(follow[s.name]) != before:
                    changed = True
                if s.name in nullable:
                    trailer = trailer | first[s.name]
                else:
                    trailer = set(first[s.name])
    return nullable, first, follow


def _first_of_seq(symbols, first, nullable) -> tuple[set[str], bool]:
    """Terminals that can start the sequence, and whether it is all-nullable."""
    out: set[str] = set()
    for s in symbols:
        if s.is_terminal:
            out.add(s.name)
            return out, False
        out |= first[s.name]
        if s.name not in nullable:
            return out, False
    return out, True


# ----------------------------------------------------------------- the table

@dataclass
class ConflictInfo:
    state: int
    terminal: str
    contenders: list[str]
    resolution: str | None = None

    def to_obj(self) -> dict:
        return {"state": self.state, "terminal": self.terminal,
                "contenders": list(self.contenders), "resolution": self.resolution}

    def show(self) -> str:
        kinds = sorted({c.split()[0] for c in self.contenders})
        label = "/".join(kinds)
        return (f"state {self.state} on {self.terminal!r}: {label} conflict"
                f" ({'; '.join(self.contenders)})")


# actions: ("shift", state, push_leaf) | ("reduce", prod index) | ("accept",)
@dataclass
class LalrTable:
    grammar: GrammarSpec
    action: list[dict[str, tuple]]
    goto: list[dict[str, int]]
    conflicts: list[ConflictInfo]

    @property
    def state_count(self) -> int:
        return len(self.action)


def _check_push_rule(grammar: GrammarSpec):
    for p in grammar.productions:
        pushes = sum(1 for s in p.rhs if s.pushes_tree)
        if p.directive is None:
            if pushes != 1:
                raise SpecError(
                    f"production {p.show()} has no directive and push count {pushes} != 1",
                    p.line)
        elif p.directive[1] > pushes:
            raise SpecError(
                f"production {p.show()} pops {p.directive[1]} trees but pushes only {pushes}",
                p.line)


def build_lalr(grammar: GrammarSpec) -> LalrTable:
    _check_push_rule(grammar)
    nullable, first, _ = compute_nullable_first_follow(grammar)
    by_lhs = grammar.by_lhs()

    prods = list(grammar.productions)
    aug = Production(len(prods), "%accept",
                     (GrammarSymbol("nt", grammar.start), GrammarSymbol("term", END)), None)
    prods.append(aug)
    by_lhs["%accept"] = [aug]
    rhs_len = [len(p.rhs) for p in prods]

    def closure0(kernel: frozenset[tuple[int, int]]) -> list[tuple[int, int]]:
        items = set(kernel)
        stack = list(kernel)
        while stack:
            p, d = stack.pop()
            if d < rhs_len[p]:
                s = prods[p].rhs[d]
                if s.tag == "nt":
                    for q in by_lhs.get(s.name, ()):
                        item = (q.index, 0)
                        if item not in items:
                            items.add(item)
                            stack.append(item)
        return sorted(items)

    def symbol_key(s: GrammarSymbol) -> tuple[str, str]:
        return ("nt", s.name) if s.tag == "nt" else ("t", s.name)

    start_kernel = frozenset([(aug.index, 0)])
    kernels: list[frozenset[tuple[int, int]]] = [start_kernel]
    state_of: dict[frozenset, int] = {start_kernel: 0}
    transitions: list[dict[tuple[str, str], int]] = []
    shift_push: list[dict[str, bool]] = []  # per state: terminal kind -> pushes leaf
    qi = 0
    while qi < len(kernels):
        kernel = kernels[qi]
        qi += 1
        closed = closure0(kernel)
        moves: dict[tuple[str, str], set[tuple[int, int]]] = {}
        pushes: dict[str, set[bool]] = {}
        for p, d in closed:
            if d < rhs_len[p]:
                s = prods[p].rhs[d]
                if s.is_terminal and s.name == END:
                    continue  # end marker handled as accept, no state for it
                moves.setdefault(symbol_key(s), set()).add((p, d + 1))
                if s.is_terminal:
                    pushes.setdefault(s.name, set()).add(s.pushes_tree)
        for kind, flags in pushes.items():
            if len(flags) > 1:
                raise SpecError(
                    f"terminal {kind} used both quoted and bare with different tree effects")
        row: dict[tuple[str, str], int] = {}
        for key in sorted(moves):
            target = frozenset(moves[key])
            ti = state_of.get(target)
            if ti is None:
                ti = len(kernels)
                state_of[target] = ti
                kernels.append(target)
            row[key] = ti
        transitions.append(row)
        shift_push.append({k: next(iter(v)) for k, v in pushes.items()})

    # LALR(1) lookaheads for kernel items: spontaneous generation + propagation
    DUMMY = "\x00#"
    la: dict[tuple[int, tuple[int, int]], set[str]] = {}
    propagate: dict[tuple[int, tuple[int, int]], list[tuple[int, tuple[int, int]]]] = {}
    la[(0, (aug.index, 0))] = {END}

    def lr1_closure(seed: dict[tuple[int, int], set[str]]) -> dict[tuple[int, int], set[str]]:
        out = {item: set(las) for item, las in seed.items()}
        changed = True
        while changed:
            changed = False
            for (p, d), las in list(out.items()):
                if d >= rhs_len[p]:
                    continue
                s = prods[p].rhs[d]
                if s.tag != "nt":
                    continue
                beta = prods[p].rhs[d + 1:]
                fb, beta_nullable = _first_of_seq(beta, first, nullable)
                spread = set(fb)
                if beta_nullable:
                    spread |= las
                for q in by_lhs.get(s.name, ()):
                    item = (q.index, 0)
                    cur = out.setdefault(item, set())
                    if not spread <= cur:
                        cur |= spread
                        changed = True
        return out

    for i, kernel in enumerate(kernels):
        for kitem in kernel:
            closed = lr1_closure({kitem: {DUMMY}})
            for (p, d), las in closed.items():
                if d >= rhs_len[p]:
                    continue
                s = prods[p].rhs[d]
                if s.is_terminal and s.name == END:
                    continue
                target = transitions[i][symbol_key(s)]
                titem = (p, d + 1)
                for x in las:
                    if x == DUMMY:
                        propagate.setdefault((i, kitem), []).append((target, titem))
                    else:
                        la.setdefault((target, titem), set()).add(x)

    changed = True
    while changed:
        changed = False
        for src, targets in propagate.items():
            src_las = la.get(src)
            if not src_las:
                continue
            for tgt in targets:
                cur = la.setdefault(tgt, set())
                if not src_las <= cur:
                    cur |= src_las
                    changed = True

    # fill ACTION/GOTO from the LR(1) closure of each kernel with its lookaheads
    action: list[dict[str, tuple]] = []
    goto: list[dict[str, int]] = []
    conflicts: list[ConflictInfo] = []
    permissive = grammar.mode == "permissive"
    for i, kernel in enumerate(kernels):
        closed = lr1_closure({item: la.get((i, item), set()) for item in kernel})
        cells: dict[str, list[tuple]] = {}
        grow: dict[str, int] = {}
        for (p, d), las in sorted(closed.items()):
            if d < rhs_len[p]:
                s = prods[p].rhs[d]
                if s.tag == "nt":
                    grow[s.name] = transitions[i][symbol_key(s)]
                elif s.name == END:
                    entry = ("accept",)
                    if entry not in cells.setdefault(END, []):
                        cells[END].append(entry)
                else:
                    target = transitions[i][symbol_key(s)]
                    entry = ("shift", target, shift_push[i][s.name])
                    if entry not in cells.setdefault(s.name, []):
                        cells[s.name].append(entry)
            else:
                if p == aug.index:
                    continue
                for x in sorted(las):
                    entry = ("reduce", p)
                    if entry not in cells.setdefault(x, []):
                        cells[x].append(entry)

        row: dict[str, tuple] = {}
        for terminal, entries in sorted(cells.items()):
            if len(entries) == 1:
                row[terminal] = entries[0]
                continue
            shifts = [e for e in entries if e[0] in ("shift", "accept")]
            reduces = sorted(e[1] for e in entries if e[0] == "reduce")
            names = ([f"shift to state {e[1]}" if e[0] == "shift" else "accept"
                      for e in shifts]
                     + [f"reduce {prods[r].show()}" for r in reduces])
            info = ConflictInfo(i, terminal, names)
            if shifts:
                row[terminal] = shifts[0]
                info.resolution = names[0]
            else:
                row[terminal] = ("reduce", reduces[0])
                info.resolution = f"reduce {prods[reduces[0]].show()}"
            conflicts.append(info)
        action.append(row)
        goto.append(grow)

    if conflicts and not permissive:
        listing = "; ".join(c.show() for c in conflicts)
        raise SpecError(f"grammar has {len(conflicts)} conflicts: {listing}",
                        conflicts=[c.to_obj() for c in conflicts])
    return LalrTable(grammar, action, goto, conflicts)


# --------------------------------------------------------------- parse driver

def parse(table: LalrTable, tokens: list[Token]) -> SynTree:
    prods = table.grammar.productions
    states = [0]
    trees: list[SynTree] = []
    i = 0
    while True:
        tok = tokens[i]
        act = table.action[states[-1]].get(tok.kind)
        if act is None:
            raise ParseError(tok.line, tok.col, tok.kind or END,
                             sorted(table.action[states[-1]].keys()))
        if act[0] == "shift":
            states.append(act[1])
            if act[2]:
                trees.append(SynTree(tok.kind, lexeme=tok.lexeme, pos=(tok.line, tok.col)))
            i += 1
        elif act[0] == "reduce":
            p = prods[act[1]]
            del states[len(states) - len(p.rhs):]
            if p.directive is not None:
                name, k = p.directive
                children = trees[len(trees) - k:] if k else []
                del trees[len(trees) - k:]
                pos = children[0].pos if children else (tok.line, tok.col)
                trees.append(SynTree(name, children=list(children), pos=pos))
            states.append(table.goto[states[-1]][p.lhs])
        else:  # accept
            if len(trees) != 1:
                raise ParseError(tok.line, tok.col, tok.kind or END,
                                 [f"tree stack imbalance: {len(trees)} trees at accept"])
            return trees[0]


# -------------------------------------------------------------------- oracle

def earley_recognize(grammar: GrammarSpec, kinds: list[str]) -> bool:
    """Plain Earley recognizer over token kinds; ignores tree directives.

    Each state set is re-scanned to a fixpoint, which handles empty
    productions without a separate nullable precomputation.
    """
    by_lhs = grammar.by_lhs()
    n = len(kinds)
    # item: (prod index | -1 for the synthetic start, dot, origin)
    START = -1
    start_rhs = [GrammarSymbol("nt", grammar.start)]

    def rhs_of(p: int):
        return start_rhs if p == START else grammar.productions[p].rhs

    sets: list[list[tuple[int, int, int]]] = [[] for _ in range(n + 1)]
    seen: list[set[tuple[int, int, int]]] = [set() for _ in range(n + 1)]

    def add(i: int, item: tuple[int, int, int]):
        if item not in seen[i]:
            seen[i].add(item)
            sets[i].append(item)

    add(0, (START, 0, 0))
    for i in range(n + 1):
        changed = True
        while changed:
            changed = False
            idx = 0
            while idx < len(sets[i]):
                p, d, origin = sets[i][idx]
                idx += 1
                rhs = rhs_of(p)
                if d < len(rhs):
                    s = rhs[d]
                    if s.tag == "nt":
                        for q in by_lhs.get(s.name, ()):
                            before = len(sets[i])
                            add(i, (q.index, 0, i))
                            if len(sets[i]) != before:
                                changed = True
                    elif i < n and kinds[i] == s.name:
                        add(i + 1, (p, d + 1, origin))
                else:
                    lhs = "%start" if p == START else grammar.productions[p].lhs
                    jdx = 0
                    while jdx < len(sets[origin]):
                        q, e, o2 = sets[origin][jdx]
                        jdx += 1
                        qrhs = rhs_of(q)
                        if e < len(qrhs) and qrhs[e].tag == "nt" and qrhs[e].name == lhs:
                            before = len(sets[i])
                            add(i, (q, e + 1, o2))
                            if len(sets[i]) != before:
                                changed = True
    return (START, 1, 0) in seen[n]
