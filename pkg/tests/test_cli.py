"""Command line: workspace bootstrap, subcommands, exit codes, streams."""
import json

import pytest

from tws import fixtures
from tws.cli import main
from tws.pipeline import SLOT_FILES

TINY = fixtures.tiny_specs()
SLOT_OF = {"scanner": "scanner", "parser": "parser",
           "contrainer": "contrainer", "generator": "generator"}


@pytest.fixture()
def ws_dir(tmp_path):
    d = tmp_path / "lang"
    d.mkdir()
    for slot, text in TINY.items():
        (d / SLOT_FILES[slot]).write_text(text)
    return d


def write_source(tmp_path, name="factorial"):
    src = tmp_path / "prog.src"
    src.write_text(fixtures.load_program(name).source)
    return src


class TestCompile:
    def test_bootstrap_and_compile(self, ws_dir, capsys):
        assert main(["compile", "-w", str(ws_dir)]) == 0
        out = capsys.readouterr().out
        for stage in ("Scanner", "Parser", "Contrainer", "Generator"):
            assert f"{stage}: fresh" in out
        assert (ws_dir / "manifest.json").exists()

    def test_compile_failure_exit_1(self, ws_dir, capsys):
        (ws_dir / "scanner.scan").write_text("token BAD /[oops/\n")
        assert main(["compile", "-w", str(ws_dir)]) == 1
        out = capsys.readouterr().out
        assert "Scanner: failed" in out and "E_SPEC" in out

    def test_empty_dir_exit_2(self, tmp_path, capsys):
        empty = tmp_path / "nothing"
        empty.mkdir()
        assert main(["compile", "-w", str(empty)]) == 2
        assert "manifest.json" in capsys.readouterr().err

    def test_missing_dir_exit_2(self, tmp_path, capsys):
        assert main(["compile", "-w", str(tmp_path / "ghost")]) == 2


class TestRun:
    def test_clean_run(self, ws_dir, tmp_path, capsys):
        main(["compile", "-w", str(ws_dir)])
        src = write_source(tmp_path)
        assert main(["run", "-w", str(ws_dir), "-s", str(src)]) == 0
        out = capsys.readouterr().out
        assert "GenCode: fresh" in out

    def test_type_error_exit_1(self, ws_dir, tmp_path, capsys):
        main(["compile", "-w", str(ws_dir)])
        src = tmp_path / "bad.src"
        src.write_text(fixtures.load_error_program("e01_undeclared_use").source)
        assert main(["run", "-w", str(ws_dir), "-s", str(src)]) == 1
        out = capsys.readouterr().out
        assert "Constrain: failed" in out and "E_UNDECLARED" in out
        assert "GenCode: absent" in out

    def test_run_before_compile_exit_1(self, ws_dir, tmp_path, capsys):
        src = write_source(tmp_path)
        assert main(["run", "-w", str(ws_dir), "-s", str(src)]) == 1
        assert "recompile" in capsys.readouterr().err

    def test_missing_source_file_exit_2(self, ws_dir, tmp_path, capsys):
        main(["compile", "-w", str(ws_dir)])
        code = main(["run", "-w", str(ws_dir), "-s", str(tmp_path / "ghost.src")])
        assert code == 2

    def test_no_optimize_keeps_raw_code(self, ws_dir, tmp_path, capsys):
        main(["compile", "-w", str(ws_dir)])
        src = tmp_path / "arith.src"
        src.write_text(fixtures.load_program("arith").source)
        assert main(["run", "-w", str(ws_dir), "-s", str(src),
                     "--no-optimize"]) == 0
        listing = json.loads(
            (ws_dir / "artifacts" / "GenCode.json").read_text())["payload"]["listing"]
        assert "ADD" in listing


class TestInterpret:
    def prepared(self, ws_dir, tmp_path, name="factorial"):
        main(["compile", "-w", str(ws_dir)])
        src = write_source(tmp_path, name)
        main(["run", "-w", str(ws_dir), "-s", str(src)])

    def test_factorial_prints_120(self, ws_dir, tmp_path, capsys):
        self.prepared(ws_dir, tmp_path)
        capsys.readouterr()
        assert main(["interpret", "-w", str(ws_dir), "--input", "5"]) == 0
        captured = capsys.readouterr()
        assert captured.out == "120\n"
        assert captured.err == ""

    def test_trace_goes_to_stderr_as_jsonl(self, ws_dir, tmp_path, capsys):
        self.prepared(ws_dir, tmp_path)
        capsys.readouterr()
        assert main(["interpret", "-w", str(ws_dir), "--input", "5",
                     "--trace"]) == 0
        captured = capsys.readouterr()
        assert captured.out == "120\n"
        rows = [json.loads(line) for line in captured.err.splitlines()]
        assert rows[0]["pc"] == 0 and rows[0]["step"] == 1

    def test_trap_exit_1(self, ws_dir, tmp_path, capsys):
        self.prepared(ws_dir, tmp_path)
        capsys.readouterr()
        assert main(["interpret", "-w", str(ws_dir), "--input", "oops"]) == 1
        captured = capsys.readouterr()
        assert "InputMalformed" in captured.err

    def test_step_limit_env_default(self, ws_dir, tmp_path, capsys, monkeypatch):
        self.prepared(ws_dir, tmp_path)
        capsys.readouterr()
        monkeypatch.setenv("TWS_MAX_STEPS", "3")
        assert main(["interpret", "-w", str(ws_dir), "--input", "5"]) == 1
        assert "StepLimit" in capsys.readouterr().err

    def test_interpret_before_run_exit_1(self, ws_dir, capsys):
        main(["compile", "-w", str(ws_dir)])
        capsys.readouterr()
        assert main(["interpret", "-w", str(ws_dir), "--input", "5"]) == 1
        assert "run first" in capsys.readouterr().err


class TestUsage:
    def test_unknown_flag_exit_2(self, ws_dir, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["compile", "-w", str(ws_dir), "--frobnicate"])
        assert exc.value.code == 2
        assert "usage" in capsys.readouterr().err

    def test_unknown_command_exit_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["transmogrify"])
        assert exc.value.code == 2

    def test_no_command_exit_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2
