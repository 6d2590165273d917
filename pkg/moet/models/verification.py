from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np

from moet.models.errors import ConfigError

SolverStatus = Literal["unsat", "sat", "unknown", "timeout"]
""" Literal representing the verdict of a solver run. """


@dataclass(frozen=True)
class AffineDynamics:
    """
    Class representation of action-dependent affine dynamics s' = A s + b[a].

    Attributes:
        matrix: F x F state matrix A.
        offsets: C x F array; row a is the offset b for action a.
    """

    matrix: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=float)
        offsets = np.array(self.offsets, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ConfigError("Dynamics matrix must be square.")
        if offsets.ndim != 2 or offsets.shape[1] != matrix.shape[0]:
            raise ConfigError("Dynamics offsets must be a C x F array.")
        matrix.setflags(write=False)
        offsets.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "offsets", offsets)

    def step(self, state: np.ndarray, action: int) -> np.ndarray:
        return self.matrix @ np.asarray(state, dtype=float) + self.offsets[action]


@dataclass(frozen=True)
class VerificationSpec:
    """
    Class representation of a bounded safety query.

    The property holds if, from every state in the box, the monitored feature
    stays within [-y_0, y_0] for steps 1..T_max.

    Attributes:
        initial_box: Per-feature (low, high) bounds of the initial-state set.
        y_0: Bound on the absolute value of the monitored feature.
        t_max: Number of steps checked.
        dynamics: Affine transition maps per action.
        monitored_feature: Index of the monitored feature (the pole angle for CartPole).
    """

    initial_box: Tuple[Tuple[float, float], ...]
    y_0: float
    t_max: int
    dynamics: AffineDynamics
    monitored_feature: int = 2

    def __post_init__(self):
        box = tuple((float(lo), float(hi)) for lo, hi in self.initial_box)
        if not box or any(lo > hi for lo, hi in box):
            raise ConfigError("Initial box must be nonempty with low <= high on every feature.")
        if len(box) != self.dynamics.matrix.shape[0]:
            raise ConfigError("Initial box and dynamics must have the same number of features.")
        if self.t_max < 1:
            raise ConfigError(f"t_max must be >= 1, got {self.t_max}.")
        if self.y_0 < 0:
            raise ConfigError(f"y_0 must be non-negative, got {self.y_0}.")
        if not 0 <= self.monitored_feature < len(box):
            raise ConfigError("Monitored feature index out of range.")
        object.__setattr__(self, "initial_box", box)


@dataclass(frozen=True)
class SmtScript:
    """
    Class representation of an SMT-LIB2 query.

    Attributes:
        logic: Logic tag passed to set-logic.
        declarations: declare-const and define-fun commands.
        assertions: assert commands.
        commands: Trailing commands such as check-sat and get-model.
    """

    logic: str
    declarations: Tuple[str, ...]
    assertions: Tuple[str, ...]
    commands: Tuple[str, ...] = ("(check-sat)", "(get-model)")

    @property
    def lines(self) -> List[str]:
        return [f"(set-logic {self.logic})", *self.declarations, *self.assertions, *self.commands]

    @property
    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


@dataclass(frozen=True)
class SolverResult:
    """
    Class representation of a solver verdict.

    Attributes:
        status: The check-sat answer.
        assignment: Values of the declared constants when the status is sat.
        elapsed_seconds: Wall-clock time of the solver process.
        output: Raw solver output.
    """

    status: SolverStatus
    assignment: Dict[str, float] = field(default_factory=dict)
    elapsed_seconds: float = 0.0
    output: str = ""


@dataclass(frozen=True)
class EquivalenceResult:
    """
    Class representation of an exhaustive policy comparison.

    Attributes:
        equivalent: Whether the policies agree on every state.
        state: Lexicographically smallest state where they differ.
        expected: Reference action at that state.
        actual: Compared policy's action at that state.
    """

    equivalent: bool
    state: Optional[Tuple[int, ...]] = None
    expected: Optional[int] = None
    actual: Optional[int] = None


@dataclass(frozen=True)
class Violation:
    """
    Class representation of a replayed property violation.

    Attributes:
        step: First step at which the monitored feature leaves the bound.
        value: Value of the monitored feature at that step.
        trajectory: States s_0 .. s_step.
    """

    step: int
    value: float
    trajectory: Tuple[Tuple[float, ...], ...]
