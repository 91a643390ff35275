"""Code generator tests: templates, labels, interning, peephole rules."""
import random

import pytest

from tws.codegen import generate, optimize, parse_codegen_spec
from tws.errors import GenError, SpecError
from tws.syntree import SynTree
from tws.tinyvm import Instr, MachineCode, MachineState, run

I = Instr


def leaf(kind, lexeme, addr=None, pos=(1, 1)):
    t = SynTree(kind, lexeme=lexeme, pos=pos)
    t.ann_addr = addr
    return t


def node(kind, *children, addr=None, pos=(1, 1)):
    t = SynTree(kind, children=list(children), pos=pos)
    t.ann_addr = addr
    return t


def ops(code):
    return [(i.op, i.arg) for i in code.instrs]


EXPRS = """
node INTLIT { emit LIT $int; }
node wr     { gen_all; emit WRITE; }
node add    { gen_all; emit ADD; }
"""


# -------------------------------------------------------------- spec parsing

class TestSpecParsing:
    def test_rule_shape(self):
        spec = parse_codegen_spec("node assign { gen(1); emit STORE addr(0); }")
        rule = spec.rules["assign"]
        assert [a.op for a in rule.actions] == ["gen", "emit"]
        assert rule.actions[0].index == 1
        emit = rule.actions[1]
        assert emit.opcode == "STORE"
        assert emit.operand.kind == "addr_child" and emit.operand.value == 0

    def test_operand_forms(self):
        spec = parse_codegen_spec("""
node a { emit LIT 42; emit LIT -7; emit LIT $int; }
node b { emit LOAD addr(self); emit WRITES $str; }
node c { label out; emit UJP out; place out; }
""")
        kinds = [a.operand.kind for a in spec.rules["a"].actions]
        assert kinds == ["int", "int", "self_int"]
        assert spec.rules["a"].actions[1].operand.value == -7
        assert spec.rules["b"].actions[0].operand.kind == "addr_self"
        assert spec.rules["c"].actions[1].operand.name == "out"

    def test_comments(self):
        spec = parse_codegen_spec("-- header\nnode x { emit NOP; } -- tail\n")
        assert "x" in spec.rules

    def test_rejections(self):
        bad = [
            ("node x { emit BLORP; }", "unknown opcode"),
            ("node x { emit LIT out; }", "LIT cannot take a label"),
            ("node x { emit FJP 3; }", "FJP cannot take a int"),
            ("node x { emit WRITES 0; }", "WRITES cannot take a int"),
            ("node x { emit ADD 1; }", "expected ';'"),
            ("node x { emit READ $int; }", "expected ';'"),
            ("node x { emit STORE -1; }", "must not be negative"),
            ("node x { emit LIT $str; }", "LIT cannot take a self str"),
            ("node x { emit LIT 9223372036854775808; }", "64-bit range"),
            ("node x { gen(-1); }", "negative"),
            ("node x { emit LOAD addr(-1); }", "addr\\(\\) needs"),
            ("node x { emit UJP out; }", "undeclared label"),
            ("node x { place out; }", "undeclared label"),
            ("node x { label a; label a; }", "declared twice"),
            ("node x { label a; place a; place a; }", "placed twice"),
            ("node x { label a; emit UJP a; }", "never placed"),
            ("node x { emit NOP; } node x { }", "duplicate node block"),
            ("node x { emit NOP;", "unclosed block"),
            ("node x { blorp; }", "unknown action"),
            ("stuff", "expected 'node'"),
            ("node x { emit LIT @5; }", "unexpected character"),
        ]
        for text, match in bad:
            with pytest.raises(SpecError, match=match):
                parse_codegen_spec(text)

    def test_unknown_dollar(self):
        with pytest.raises(SpecError, match="unknown operand \\$lex"):
            parse_codegen_spec("node x { emit LIT $lex; }")


# ---------------------------------------------------------------- generation

class TestGeneration:
    def test_halt_always_appended(self):
        spec = parse_codegen_spec("node x { }")
        assert ops(generate(spec, node("x"))) == [("HALT", None)]

    def test_literal_leaf(self):
        spec = parse_codegen_spec("node INTLIT { emit LIT $int; }")
        assert ops(generate(spec, leaf("INTLIT", "42"))) == [("LIT", 42), ("HALT", None)]

    def test_unknown_kind_defaults_to_children(self):
        spec = parse_codegen_spec(EXPRS)
        tree = node("mystery", node("wr", leaf("INTLIT", "1")),
                    node("wr", leaf("INTLIT", "2")))
        code = generate(spec, tree)
        assert ops(code) == [("LIT", 1), ("WRITE", None), ("LIT", 2),
                             ("WRITE", None), ("HALT", None)]

    def test_assign_template(self):
        spec = parse_codegen_spec(EXPRS + "node assign { gen(1); emit STORE addr(0); }")
        tree = node("assign", leaf("IDENT", "x", addr=3), leaf("INTLIT", "5"))
        assert ops(generate(spec, tree)) == [("LIT", 5), ("STORE", 3), ("HALT", None)]

    def test_load_self_address(self):
        spec = parse_codegen_spec("node IDENT { emit LOAD addr(self); }")
        assert ops(generate(spec, leaf("IDENT", "x", addr=7))) == [
            ("LOAD", 7), ("HALT", None)]

    def test_if_else_layout(self):
        spec = parse_codegen_spec(EXPRS + """
node ifelse { label els; label end;
              gen(0); emit FJP els; gen(1); emit UJP end;
              place els; gen(2); place end; }
""")
        tree = node("ifelse", leaf("INTLIT", "1"),
                    node("wr", leaf("INTLIT", "2")),
                    node("wr", leaf("INTLIT", "3")))
        code = generate(spec, tree)
        assert ops(code) == [
            ("LIT", 1), ("FJP", 5), ("LIT", 2), ("WRITE", None),
            ("UJP", 7), ("LIT", 3), ("WRITE", None), ("HALT", None)]
        assert run(code, MachineState(), 100).output == "2\n"

    def test_while_layout(self):
        spec = parse_codegen_spec(EXPRS + """
node while { label top; label out;
             place top; gen(0); emit FJP out;
             gen(1); emit UJP top; place out; }
""")
        tree = node("while", leaf("INTLIT", "0"), node("wr", leaf("INTLIT", "9")))
        code = generate(spec, tree)
        assert ops(code) == [
            ("LIT", 0), ("FJP", 5), ("LIT", 9), ("WRITE", None),
            ("UJP", 0), ("HALT", None)]
        assert run(code, MachineState(), 100).output == ""

    def test_sibling_activations_get_distinct_labels(self):
        spec = parse_codegen_spec(EXPRS + """
node ifthen { label out; gen(0); emit FJP out; gen(1); place out; }
""")
        tree = node("seq",
                    node("ifthen", leaf("INTLIT", "0"), node("wr", leaf("INTLIT", "1"))),
                    node("ifthen", leaf("INTLIT", "0"), node("wr", leaf("INTLIT", "2"))))
        code = generate(spec, tree)
        assert ops(code) == [
            ("LIT", 0), ("FJP", 4), ("LIT", 1), ("WRITE", None),
            ("LIT", 0), ("FJP", 8), ("LIT", 2), ("WRITE", None), ("HALT", None)]
        assert run(code, MachineState(), 100).output == ""

    def test_string_interning(self):
        spec = parse_codegen_spec('node STRLIT { emit WRITES $str; }')
        tree = node("seq", leaf("STRLIT", '"hi"'), leaf("STRLIT", '"yo"'),
                    leaf("STRLIT", '"hi"'))
        code = generate(spec, tree)
        assert code.strings == ["hi", "yo"]
        assert ops(code) == [("WRITES", 0), ("WRITES", 1), ("WRITES", 0), ("HALT", None)]

    def test_str_strips_exactly_one_quote_pair(self):
        spec = parse_codegen_spec('node STRLIT { emit WRITES $str; }')
        assert generate(spec, leaf("STRLIT", '""hi""')).strings == ['"hi"']
        assert generate(spec, leaf("STRLIT", 'bare')).strings == ['bare']
        assert generate(spec, leaf("STRLIT", '""')).strings == ['']

    def test_int_lexeme_wraps(self):
        spec = parse_codegen_spec("node INTLIT { emit LIT $int; }")
        code = generate(spec, leaf("INTLIT", "18446744073709551617"))
        assert ops(code)[0] == ("LIT", 1)

    def test_gen_errors(self):
        spec = parse_codegen_spec(EXPRS + """
node g2   { gen(2); }
node self { emit LOAD addr(self); }
node kid  { emit STORE addr(0); }
""")
        cases = [
            (node("g2", leaf("INTLIT", "1"), pos=(3, 4)), "out of range"),
            (node("self", pos=(2, 9)), "no address decoration"),
            (node("kid", leaf("IDENT", "x"), pos=(5, 1)), "no address decoration"),
            (node("kid", pos=(5, 1)), "out of range"),
        ]
        for tree, match in cases:
            with pytest.raises(GenError, match=match):
                generate(spec, tree)

    def test_gen_error_position(self):
        spec = parse_codegen_spec("node self { emit LOAD addr(self); }")
        try:
            generate(spec, node("self", pos=(4, 7)))
        except GenError as e:
            assert (e.line, e.col) == (4, 7)
        else:
            pytest.fail("expected GenError")

    def test_dollar_int_needs_numeric_leaf(self):
        spec = parse_codegen_spec("node x { emit LIT $int; }")
        with pytest.raises(GenError, match="is not a number"):
            generate(spec, leaf("x", "12y"))
        with pytest.raises(GenError, match="needs a leaf"):
            generate(spec, node("x"))

    def test_deep_tree_generation(self):
        spec = parse_codegen_spec("node INTLIT { emit LIT $int; }")
        tree = leaf("INTLIT", "1")
        for _ in range(5000):
            tree = node("wrap", tree)
        code = generate(spec, tree)
        assert ops(code) == [("LIT", 1), ("HALT", None)]


# ------------------------------------------------------------------ peephole

def mc(*rows, strings=()):
    return MachineCode([I(op, arg) for op, arg in rows], list(strings)).validate()


class TestOptimize:
    def test_binary_fold(self):
        code = mc(("LIT", 2), ("LIT", 3), ("ADD", None), ("WRITE", None), ("HALT", None))
        assert ops(optimize(code)) == [("LIT", 5), ("WRITE", None), ("HALT", None)]

    def test_fold_cascades(self):
        code = mc(("LIT", 2), ("LIT", 3), ("ADD", None), ("LIT", 4), ("MUL", None),
                  ("WRITE", None), ("HALT", None))
        assert ops(optimize(code)) == [("LIT", 20), ("WRITE", None), ("HALT", None)]

    def test_unary_fold(self):
        code = mc(("LIT", 5), ("NEG", None), ("WRITE", None), ("HALT", None))
        assert ops(optimize(code)) == [("LIT", -5), ("WRITE", None), ("HALT", None)]

    def test_mixed_fold_backtracks(self):
        code = mc(("LIT", 6), ("LIT", 2), ("DIV", None), ("NOT", None),
                  ("WRITE", None), ("HALT", None))
        assert ops(optimize(code)) == [("LIT", 0), ("WRITE", None), ("HALT", None)]

    def test_division_by_literal_zero_is_kept(self):
        for op in ("DIV", "MOD"):
            code = mc(("LIT", 1), ("LIT", 0), (op, None), ("HALT", None))
            assert optimize(code) == code
            assert run(optimize(code), MachineState(), 100).trap == "DivByZero"

    def test_zero_dividend_still_folds(self):
        code = mc(("LIT", 0), ("LIT", 2), ("DIV", None), ("HALT", None))
        assert ops(optimize(code)) == [("LIT", 0), ("HALT", None)]

    def test_jump_into_window_blocks_fold(self):
        code = mc(("UJP", 2), ("LIT", 1), ("LIT", 2), ("ADD", None), ("HALT", None))
        assert optimize(code) == code

    def test_jump_to_window_start_is_fine(self):
        code = mc(("LIT", 0), ("FJP", 2), ("LIT", 1), ("LIT", 2), ("ADD", None),
                  ("WRITE", None), ("HALT", None))
        out = optimize(code)
        assert ops(out) == [("LIT", 0), ("FJP", 2), ("LIT", 3),
                            ("WRITE", None), ("HALT", None)]
        assert run(out, MachineState(), 100).output == "3\n"

    def test_jump_to_next_removed(self):
        code = mc(("UJP", 1), ("LIT", 9), ("WRITE", None), ("HALT", None))
        assert ops(optimize(code)) == [("LIT", 9), ("WRITE", None), ("HALT", None)]

    def test_nop_removed_and_targets_remapped(self):
        code = mc(("LIT", 0), ("FJP", 4), ("NOP", None), ("NOP", None), ("HALT", None))
        out = optimize(code)
        assert ops(out) == [("LIT", 0), ("FJP", 2), ("HALT", None)]
        assert run(out, MachineState(), 100).halted

    def test_targeted_last_nop_survives(self):
        code = mc(("LIT", 0), ("FJP", 2), ("NOP", None))
        out = optimize(code)
        assert ops(out) == [("LIT", 0), ("FJP", 2), ("NOP", None)]

    def test_self_loop_kept(self):
        code = mc(("UJP", 0),)
        assert optimize(code) == code

    def test_strings_preserved(self):
        code = mc(("WRITES", 0), ("HALT", None), strings=["x"])
        assert optimize(code).strings == ["x"]

    def test_idempotent_and_never_larger_random(self):
        rng = random.Random(1234)
        checked = skipped = 0
        for _ in range(200):
            code = self.random_program(rng)
            out = optimize(code)
            out.validate()
            assert len(out.instrs) <= len(code.instrs)
            assert optimize(out) == out
            base = run(code, self.seeded_state(), 10_000)
            if base.trap == "StepLimit":
                skipped += 1
                continue
            opt = run(out, self.seeded_state(), 10_000)
            checked += 1
            assert (opt.halted, opt.trap, opt.output) == (
                base.halted, base.trap, base.output), ops(code)
        assert checked > 100, (checked, skipped)

    @staticmethod
    def seeded_state():
        state = MachineState()
        state.feed_input("3 -2 7 0 5 1 4 9 8 6")
        return state

    @staticmethod
    def random_program(rng):
        n = rng.randrange(1, 28)
        pool = ["a", "b"]
        instrs = []
        for _ in range(n):
            pick = rng.random()
            if pick < 0.3:
                instrs.append(I("LIT", rng.randrange(-5, 6)))
            elif pick < 0.5:
                instrs.append(I(rng.choice(("ADD", "SUB", "MUL", "DIV", "MOD",
                                            "EQ", "NE", "LT", "LE", "GT", "GE",
                                            "AND", "OR"))))
            elif pick < 0.58:
                instrs.append(I(rng.choice(("NEG", "NOT"))))
            elif pick < 0.68:
                instrs.append(I("NOP"))
            elif pick < 0.76:
                instrs.append(I(rng.choice(("UJP", "FJP")), rng.randrange(n)))
            elif pick < 0.84:
                instrs.append(I(rng.choice(("LOAD", "STORE")), rng.randrange(3)))
            elif pick < 0.9:
                instrs.append(I("WRITE"))
            elif pick < 0.94:
                instrs.append(I("WRITES", rng.randrange(2)))
            elif pick < 0.97:
                instrs.append(I("READ"))
            else:
                instrs.append(I("HALT"))
        return MachineCode(instrs, pool).validate()
