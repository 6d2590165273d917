import logging
import os
import re
import shlex
import subprocess
import tempfile
import time
from fractions import Fraction
from typing import Dict, List, Optional, Union

from moet.config import (
    DEFAULT_SOLVER_COMMAND,
    DEFAULT_SOLVER_TIMEOUT,
    SOLVER_COMMAND_ENV_VAR,
)
from moet.models.errors import (
    SolverNotFoundError,
    SolverParseError,
    SolverTimeoutError,
)
from moet.models.verification import SmtScript, SolverResult

logger = logging.getLogger(__name__)

_STATUSES = ("sat", "unsat", "unknown", "timeout")
_TOKEN = re.compile(r'\(|\)|"[^"]*"|\|[^|]*\||[^\s()]+')

SExpr = Union[str, List["SExpr"]]


def resolve_solver_command(flag: Optional[str] = None) -> str:
    """
    Solver command from the flag, else the environment, else the default.
    """
    return flag or os.environ.get(SOLVER_COMMAND_ENV_VAR) or DEFAULT_SOLVER_COMMAND


def parse_sexprs(text: str) -> List[SExpr]:
    """
    Parse a sequence of s-expressions into nested lists of atoms.

    Raises:
        SolverParseError: If the parentheses are unbalanced.
    """
    stack: List[List[SExpr]] = [[]]
    for token in _TOKEN.findall(text):
        if token == "(":
            stack.append([])
        elif token == ")":
            if len(stack) == 1:
                raise SolverParseError("Unbalanced ')' in solver output.", text)
            closed = stack.pop()
            stack[-1].append(closed)
        else:
            stack[-1].append(token)
    if len(stack) != 1:
        raise SolverParseError("Unterminated s-expression in solver output.", text)
    return stack[0]


def _evaluate(term: SExpr, output: str) -> Fraction:
    if isinstance(term, str):
        try:
            return Fraction(term)
        except ValueError as exc:
            raise SolverParseError(f"Unexpected value {term!r} in solver model.", output) from exc
    if not term:
        raise SolverParseError("Empty term in solver model.", output)
    head, args = term[0], [_evaluate(arg, output) for arg in term[1:]]
    if head == "-" and len(args) == 1:
        return -args[0]
    if head == "-" and args:
        return args[0] - sum(args[1:], Fraction(0))
    if head == "/" and len(args) == 2:
        return args[0] / args[1]
    if head == "+":
        return sum(args, Fraction(0))
    if head == "*" and args:
        product = Fraction(1)
        for arg in args:
            product *= arg
        return product
    raise SolverParseError(f"Unsupported term {head!r} in solver model.", output)


def _collect_definitions(expressions: List[SExpr], output: str, into: Dict[str, float]):
    for expression in expressions:
        if not isinstance(expression, list) or not expression:
            continue
        if expression[0] == "define-fun" and len(expression) == 5:
            _, name, params, sort, value = expression
            if params == [] and sort == "Real":
                into[name] = float(_evaluate(value, output))
        elif expression[0] != "error":
            _collect_definitions(expression, output, into)


def _validate_output(output: str) -> Dict:
    lines = [line.strip() for line in output.splitlines()]
    for index, line in enumerate(lines):
        if line in _STATUSES:
            status = line
            rest = "\n".join(lines[index + 1 :])
            break
    else:
        raise SolverParseError("Solver output has no check-sat answer.", output)

    assignment: Dict[str, float] = {}
    if status == "sat":
        _collect_definitions(parse_sexprs(rest), output, assignment)
    return {"status": status, "assignment": assignment}


class SolverClient:
    """
    Driver for an external SMT-LIB2 solver process.

    The script is written to a temporary file. A `{file}` token in the command
    is replaced by its path; otherwise the path is appended to the command.

    Attributes:
        command: The solver command line.
        timeout: Seconds the process may run.
    """

    def __init__(self, command: Optional[str] = None, timeout: float = DEFAULT_SOLVER_TIMEOUT):
        self.command = resolve_solver_command(command)
        self.timeout = timeout

    def _build_command(self, path: str) -> List[str]:
        if "{file}" in self.command:
            return shlex.split(self.command.replace("{file}", shlex.quote(path)))
        return shlex.split(self.command) + [path]

    def _execute(self, path: str) -> subprocess.CompletedProcess:
        argv = self._build_command(path)
        logger.info("Running solver: %s", " ".join(argv))
        try:
            return subprocess.run(
                argv,
                capture_output=True,
                text=True,
                timeout=self.timeout,
                check=False,
            )
        except subprocess.TimeoutExpired as exc:
            raise SolverTimeoutError(self.command, self.timeout) from exc
        except FileNotFoundError as exc:
            raise SolverNotFoundError(self.command) from exc

    def check(self, script: Union[SmtScript, str]) -> SolverResult:
        """
        Run the solver on a script.

        Args:
            script: The script or its text.

        Returns:
            The verdict; on sat, the values of the real constants.

        Raises:
            SolverNotFoundError: If the executable cannot be started.
            SolverTimeoutError: If the process outlives the timeout.
            SolverParseError: If the output has no check-sat answer or a malformed model.
        """
        text = script.text if isinstance(script, SmtScript) else script
        with tempfile.NamedTemporaryFile("w", suffix=".smt2", delete=False) as handle:
            handle.write(text)
            path = handle.name
        try:
            started = time.perf_counter()
            completed = self._execute(path)
            elapsed = time.perf_counter() - started
        finally:
            os.unlink(path)

        parsed = _validate_output(completed.stdout)
        logger.info("Solver answered %s in %.3fs", parsed["status"], elapsed)
        return SolverResult(
            status=parsed["status"],
            assignment=parsed["assignment"],
            elapsed_seconds=elapsed,
            output=completed.stdout,
        )


def run_solver(
    script: Union[SmtScript, str],
    command: Optional[str] = None,
    timeout: float = DEFAULT_SOLVER_TIMEOUT,
) -> SolverResult:
    """
    Run a script through a one-off `SolverClient`.
    """
    return SolverClient(command, timeout).check(script)
