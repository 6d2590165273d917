import os
import subprocess
from unittest.mock import patch

import pytest
from conftest import requires_z3

from moet.handler.solver_client import (
    SolverClient,
    _validate_output,
    parse_sexprs,
    resolve_solver_command,
    run_solver,
)
from moet.models.errors import SolverNotFoundError, SolverParseError, SolverTimeoutError
from moet.models.verification import SmtScript

SAT_OUTPUT = """sat
(model
  (define-fun s_0_1 () Real
    (/ 1.0 20.0))
  (define-fun s_0_0 () Real
    (- 0.5))
  (define-fun a_0_1 () Bool
    true)
  (define-fun s_0_2 () Real
    0.0)
)
"""


class TestResolveSolverCommand:
    def test_flag_wins(self, monkeypatch):
        monkeypatch.setenv("MOET_SOLVER_CMD", "cvc5")

        assert resolve_solver_command("yices-smt2") == "yices-smt2"

    def test_environment(self, monkeypatch):
        monkeypatch.setenv("MOET_SOLVER_CMD", "cvc5 --lang smt2")

        assert resolve_solver_command() == "cvc5 --lang smt2"

    def test_default(self, monkeypatch):
        monkeypatch.delenv("MOET_SOLVER_CMD", raising=False)

        assert resolve_solver_command() == "z3 -smt2"


class TestParseSexprs:
    def test_nested(self):
        assert parse_sexprs("(a (b c) d) e") == [["a", ["b", "c"], "d"], "e"]

    def test_quoted_atoms(self):
        assert parse_sexprs('(error "line 3: x y")') == [["error", '"line 3: x y"']]

    def test_unbalanced(self):
        with pytest.raises(SolverParseError):
            parse_sexprs("(a (b)")
        with pytest.raises(SolverParseError):
            parse_sexprs("a)")

    def test_multiline_model(self):
        parsed = parse_sexprs("(model\n  (define-fun s_0_0 () Real\n    (/ (- 1.0) 3.0))\n)\n")

        assert parsed == [["model", ["define-fun", "s_0_0", [], "Real", ["/", ["-", "1.0"], "3.0"]]]]

    def test_rationals_are_rounded_once(self):
        parsed = _validate_output(
            "sat\n(model (define-fun x () Real (/ 1.0 3.0)) (define-fun y () Real (* 3.0 (/ 1.0 3.0))))\n"
        )

        assert parsed["assignment"] == {"x": 1 / 3, "y": 1.0}


class TestValidateOutput:
    def test_sat_model(self):
        parsed = _validate_output(SAT_OUTPUT)

        assert parsed["status"] == "sat"
        assert parsed["assignment"] == {"s_0_0": -0.5, "s_0_1": 0.05, "s_0_2": 0.0}

    def test_model_without_wrapper(self):
        parsed = _validate_output("sat\n((define-fun x () Real (/ (- 3.0) 4.0)))\n")

        assert parsed["assignment"] == {"x": -0.75}

    def test_unsat_ignores_model_error(self):
        parsed = _validate_output('unsat\n(error "line 9 column 10: model is not available")\n')

        assert parsed == {"status": "unsat", "assignment": {}}

    def test_unknown(self):
        assert _validate_output("unknown\n")["status"] == "unknown"

    def test_missing_status(self):
        with pytest.raises(SolverParseError) as e:
            _validate_output("(error \"boom\")\n")

        assert "boom" in e.value.output

    def test_unsupported_term(self):
        with pytest.raises(SolverParseError):
            _validate_output("sat\n(model (define-fun x () Real (root-obj (+ (^ x 2) (- 2)) 1)))\n")


class TestSolverClient:
    def test_build_command_appends_path(self):
        client = SolverClient("z3 -smt2 -T:5")

        assert client._build_command("/tmp/q.smt2") == ["z3", "-smt2", "-T:5", "/tmp/q.smt2"]

    def test_build_command_file_token(self):
        client = SolverClient("solver --input {file} --quiet")

        assert client._build_command("/tmp/my query.smt2") == ["solver", "--input", "/tmp/my query.smt2", "--quiet"]

    def test_check_runs_and_cleans_up(self, patched_run):
        client = SolverClient("z3 -smt2", timeout=30)

        result = client.check(SmtScript("QF_LRA", ("(declare-const x Real)",), ("(assert (> x 0.0))",)))

        argv = patched_run.call_args[0][0]
        assert argv[:2] == ["z3", "-smt2"]
        assert patched_run.call_args[1]["timeout"] == 30
        assert not os.path.exists(argv[-1])
        assert result.status == "unsat"
        assert result.elapsed_seconds >= 0

    def test_check_writes_script(self, completed_process):
        seen = {}

        def fake_run(argv, **kwargs):
            with open(argv[-1]) as handle:
                seen["text"] = handle.read()
            return completed_process(SAT_OUTPUT)

        with patch("moet.handler.solver_client.subprocess.run", side_effect=fake_run):
            result = SolverClient("z3 -smt2").check("(check-sat)\n")

        assert seen["text"] == "(check-sat)\n"
        assert result.status == "sat"
        assert result.assignment["s_0_1"] == 0.05

    def test_timeout(self):
        with patch(
            "moet.handler.solver_client.subprocess.run",
            side_effect=subprocess.TimeoutExpired(["z3"], 1),
        ):
            with pytest.raises(SolverTimeoutError) as e:
                SolverClient("z3 -smt2", timeout=1).check("(check-sat)\n")

        assert e.value.timeout == 1

    def test_missing_executable(self):
        with patch("moet.handler.solver_client.subprocess.run", side_effect=FileNotFoundError()):
            with pytest.raises(SolverNotFoundError) as e:
                run_solver("(check-sat)\n", "no-such-solver")

        assert e.value.command == "no-such-solver"


@requires_z3
class TestZ3:
    def test_unsat(self):
        assert run_solver("(assert false)\n(check-sat)\n(get-model)\n", "z3 -smt2").status == "unsat"

    def test_sat_model(self):
        script = "(declare-const x Real)\n(assert (> x 0.5))\n(check-sat)\n(get-model)\n"

        result = run_solver(script, "z3 -smt2")

        assert result.status == "sat"
        assert result.assignment["x"] > 0.5
