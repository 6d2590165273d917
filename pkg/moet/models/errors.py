from typing import Optional, Tuple


class AbstractMoetError(Exception):
    """
    Base class for all errors raised by the moet library.
    """

    pass


class AbstractSolverError(Exception):
    """
    Base class for all errors raised while driving an external SMT solver.
    """

    pass


class ConfigError(AbstractMoetError):
    """
    Error thrown when a configuration value or file is invalid.
    """

    pass


class DegenerateWeightError(AbstractMoetError):
    """
    Error thrown when a set of instances carries no positive weight.

    Attributes:
        total_weight: The total weight that was found.
    """

    def __init__(self, total_weight: float):
        """
        Args:
            total_weight: The total weight that was found.
        """
        super().__init__(f"Total instance weight must be positive, got {total_weight!r}.")
        self.total_weight: float = total_weight


class ZeroDenominatorError(AbstractMoetError):
    """
    Error thrown when the mixture likelihood of an instance vanishes.

    Attributes:
        row: Index of the offending instance.
    """

    def __init__(self, row: int):
        """
        Args:
            row: Index of the offending instance.
        """
        super().__init__(
            f"Mixture likelihood of instance {row} is zero or not finite; expert likelihoods are corrupt."
        )
        self.row: int = row


class UnreachableCellError(AbstractMoetError):
    """
    Error thrown when a free Gridworld cell has no path to any door.

    Attributes:
        cell: The (x, y) coordinates of the cell.
    """

    def __init__(self, cell: Tuple[int, int]):
        """
        Args:
            cell: The (x, y) coordinates of the cell.
        """
        super().__init__(f"Gridworld cell {cell} cannot reach any door.")
        self.cell: Tuple[int, int] = cell


class ModeError(AbstractMoetError):
    """
    Error thrown when an operation needs a different inference mode than the model has.

    Attributes:
        mode: The mode of the model that was passed.
    """

    def __init__(self, mode: str, message: Optional[str] = None):
        """
        Args:
            mode: The mode of the model that was passed.
            message: Optional override of the error message.
        """
        super().__init__(message or f"Operation requires a hard-mode model, got mode {mode!r}.")
        self.mode: str = mode


class ModelFormatError(AbstractMoetError):
    """
    Error thrown when a model file cannot be parsed.

    Attributes:
        path: The file being read.
        line_number: 1-based line at which parsing failed, if known.
    """

    def __init__(self, message: str, path: Optional[str] = None, line_number: Optional[int] = None):
        """
        Args:
            message: Description of the problem.
            path: The file being read.
            line_number: 1-based line at which parsing failed, if known.
        """
        location = ""
        if path is not None:
            location = f"{path}:{line_number}: " if line_number is not None else f"{path}: "
        super().__init__(f"{location}{message}")
        self.path: Optional[str] = path
        self.line_number: Optional[int] = line_number


class FormatVersionMismatchError(ModelFormatError):
    """
    Error thrown when a model file header is missing or carries an unsupported version.

    Attributes:
        found: The version string found in the file, or None if there was no header.
        expected: The version this library reads.
    """

    def __init__(self, found: Optional[str], expected: int, path: Optional[str] = None):
        """
        Args:
            found: The version string found in the file, or None if there was no header.
            expected: The version this library reads.
            path: The file being read.
        """
        super().__init__(f"Unsupported model format version {found!r}, expected {expected}.", path, 1)
        self.found: Optional[str] = found
        self.expected: int = expected


class SolverNotFoundError(AbstractSolverError):
    """
    Error thrown when the solver executable cannot be started.

    Attributes:
        command: The command that was attempted.
    """

    def __init__(self, command: str):
        """
        Args:
            command: The command that was attempted.
        """
        super().__init__(f"Solver executable not found for command {command!r}.")
        self.command: str = command


class SolverParseError(AbstractSolverError):
    """
    Error thrown when solver output does not follow the SMT-LIB2 response grammar.

    Attributes:
        output: The raw solver output.
    """

    def __init__(self, message: str, output: str):
        """
        Args:
            message: Description of the problem.
            output: The raw solver output.
        """
        super().__init__(message)
        self.output: str = output


class SolverTimeoutError(AbstractSolverError):
    """
    Error thrown when the solver process does not finish before the deadline.

    Attributes:
        command: The command that timed out.
        timeout: The deadline, in seconds.
    """

    def __init__(self, command: str, timeout: float):
        """
        Args:
            command: The command that timed out.
            timeout: The deadline, in seconds.
        """
        super().__init__(f"Solver did not answer within {timeout} seconds.")
        self.command: str = command
        self.timeout: float = timeout


class DegenerateExpertWarning(UserWarning):
    """
    Warning emitted when an expert receives almost no responsibility during an epoch.
    """

    pass
