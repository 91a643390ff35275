"""Bundled example language and program corpus.

The tiny/ directory holds a complete working quadruple of compiler specs
for a small imperative language; programs/ holds runnable sources with
their inputs and expected outputs, and programs/errors/ holds sources
that each produce exactly one semantic diagnostic.
"""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

_ROOT = resources.files(__package__)


def tiny_specs() -> dict[str, str]:
    """Spec texts keyed by workspace slot name."""
    tiny = _ROOT / "tiny"
    return {
        "scanner": (tiny / "scanner.scan").read_text(),
        "parser": (tiny / "grammar.grm").read_text(),
        "contrainer": (tiny / "constrain.con").read_text(),
        "generator": (tiny / "codegen.gen").read_text(),
    }


@dataclass(frozen=True)
class Program:
    name: str
    source: str
    input_text: str
    expected_output: str


@dataclass(frozen=True)
class ErrorProgram:
    name: str
    source: str
    expected_codes: tuple[str, ...]


def program_names() -> list[str]:
    base = _ROOT / "programs"
    return sorted(p.name[:-4] for p in base.iterdir()
                  if p.name.endswith(".src"))


def load_program(name: str) -> Program:
    base = _ROOT / "programs"
    src = (base / f"{name}.src").read_text()
    inp = base / f"{name}.in"
    out = base / f"{name}.out"
    return Program(
        name=name,
        source=src,
        input_text=inp.read_text() if inp.is_file() else "",
        expected_output=out.read_text(),
    )


def programs() -> list[Program]:
    return [load_program(n) for n in program_names()]


def error_program_names() -> list[str]:
    base = _ROOT / "programs" / "errors"
    return sorted(p.name[:-4] for p in base.iterdir()
                  if p.name.endswith(".src"))


def load_error_program(name: str) -> ErrorProgram:
    base = _ROOT / "programs" / "errors"
    codes = (base / f"{name}.codes").read_text().split()
    return ErrorProgram(
        name=name,
        source=(base / f"{name}.src").read_text(),
        expected_codes=tuple(codes),
    )


def error_programs() -> list[ErrorProgram]:
    return [load_error_program(n) for n in error_program_names()]
