from dataclasses import dataclass
from typing import FrozenSet, Iterable, Optional, Tuple

from dataclasses_json import dataclass_json

from moet.config import DEFAULT_ANGLE_LIMIT
from moet.models.errors import ConfigError

Cell = Tuple[int, int]
""" Gridworld (x, y) coordinates; (0, 0) is bottom left. """


@dataclass(frozen=True)
class EnvState:
    """
    Class representation of an environment state.

    Attributes:
        values: Feature values in environment units.
        terminal: Whether the episode has ended.
        steps_elapsed: Number of actions taken so far in the episode.
    """

    values: Tuple[float, ...]
    terminal: bool = False
    steps_elapsed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))


@dataclass(frozen=True)
class Transition:
    """
    Class representation of one environment step.

    Attributes:
        state: State the action was taken in.
        action: Action index.
        next_state: Resulting state.
        reward: Reward received for the action.
        done: Whether the episode ended with this step.
    """

    state: EnvState
    action: int
    next_state: EnvState
    reward: float
    done: bool


@dataclass(frozen=True)
class GridworldSpec:
    """
    Class representation of an N x N escape grid.

    Doors sit outside the grid: a left door on row r is reached by moving left
    from (0, r), a right door on row r by moving right from (N - 1, r).
    Leaving `walls` unset places walls on the anti-diagonal; leaving a door set
    unset opens a door on every row whose edge cell is free.

    Attributes:
        n: Grid size.
        walls: Blocked cells.
        left_door_rows: Rows with a door left of the first column.
        right_door_rows: Rows with a door right of the last column.
        step_reward: Reward received for every action.
        horizon: Maximum number of actions per episode.
    """

    n: int = 5
    walls: Optional[FrozenSet[Cell]] = None
    left_door_rows: Optional[FrozenSet[int]] = None
    right_door_rows: Optional[FrozenSet[int]] = None
    step_reward: float = -0.1
    horizon: int = 100

    def __post_init__(self):
        if self.n < 2:
            raise ConfigError(f"Gridworld size must be >= 2, got {self.n}.")
        if self.horizon < 1:
            raise ConfigError(f"Gridworld horizon must be >= 1, got {self.horizon}.")

        walls = self.walls
        if walls is None:
            walls = {(x, self.n - 1 - x) for x in range(self.n)}
        walls = frozenset((int(x), int(y)) for x, y in walls)
        if any(not (0 <= x < self.n and 0 <= y < self.n) for x, y in walls):
            raise ConfigError("Walls must lie inside the grid.")
        object.__setattr__(self, "walls", walls)

        left = self._door_rows(self.left_door_rows, 0)
        right = self._door_rows(self.right_door_rows, self.n - 1)
        object.__setattr__(self, "left_door_rows", left)
        object.__setattr__(self, "right_door_rows", right)
        if not left and not right:
            raise ConfigError("Gridworld needs at least one door.")

    def _door_rows(self, rows: Optional[Iterable[int]], edge_x: int) -> FrozenSet[int]:
        if rows is None:
            rows = [y for y in range(self.n) if (edge_x, y) not in self.walls]
        rows = frozenset(int(r) for r in rows)
        if any(not 0 <= r < self.n for r in rows):
            raise ConfigError(f"Door rows must lie in [0, {self.n}).")
        if any((edge_x, r) in self.walls for r in rows):
            raise ConfigError("A wall may not block the cell in front of a door.")
        return rows

    @property
    def free_cells(self) -> Tuple[Cell, ...]:
        """
        All non-wall cells in lexicographic (x, y) order.
        """
        return tuple(
            (x, y) for x in range(self.n) for y in range(self.n) if (x, y) not in self.walls
        )


@dataclass_json
@dataclass(frozen=True)
class CartPoleSpec:
    """
    Class representation of the cart-pole physics and episode limits.

    Attributes:
        gravity: Gravitational acceleration.
        cart_mass: Mass of the cart.
        pole_mass: Mass of the pole.
        pole_half_length: Half the pole length.
        force_magnitude: Magnitude of the force applied by either action.
        tau: Integration step in seconds.
        angle_limit: Pole angle, in radians, beyond which the episode fails.
        position_limit: Cart distance from the center beyond which the episode fails.
        horizon: Maximum number of steps per episode.
        init_bound: Half-width of the uniform initial-state box.
    """

    gravity: float = 9.8
    cart_mass: float = 1.0
    pole_mass: float = 0.1
    pole_half_length: float = 0.5
    force_magnitude: float = 10.0
    tau: float = 0.02
    angle_limit: float = DEFAULT_ANGLE_LIMIT
    position_limit: float = 2.4
    horizon: int = 200
    init_bound: float = 0.05

    def __post_init__(self):
        for name in (
            "gravity",
            "cart_mass",
            "pole_mass",
            "pole_half_length",
            "force_magnitude",
            "tau",
            "angle_limit",
            "position_limit",
            "horizon",
            "init_bound",
        ):
            if not getattr(self, name) > 0:
                raise ConfigError(f"CartPole {name} must be positive, got {getattr(self, name)}.")


@dataclass_json
@dataclass(frozen=True)
class MountainCarSpec:
    """
    Class representation of the mountain-car dynamics and episode limits.

    Attributes:
        min_position: Left end of the track.
        max_position: Right end of the track.
        max_speed: Bound on the absolute velocity.
        goal_position: Position at which the episode succeeds.
        force: Acceleration contributed by a push.
        gravity: Gravity term scaling cos(3 * position).
        horizon: Maximum number of steps per episode.
        init_low: Lower bound of the uniform initial position.
        init_high: Upper bound of the uniform initial position.
    """

    min_position: float = -1.2
    max_position: float = 0.6
    max_speed: float = 0.07
    goal_position: float = 0.5
    force: float = 0.001
    gravity: float = 0.0025
    horizon: int = 200
    init_low: float = -0.6
    init_high: float = -0.4

    def __post_init__(self):
        if not self.min_position < self.goal_position <= self.max_position:
            raise ConfigError("Mountaincar goal must lie inside the track.")
        if not self.min_position <= self.init_low <= self.init_high < self.goal_position:
            raise ConfigError("Mountaincar initial range must lie left of the goal.")
        if not (self.max_speed > 0 and self.force > 0 and self.gravity > 0 and self.horizon > 0):
            raise ConfigError("Mountaincar speed, force, gravity and horizon must be positive.")
