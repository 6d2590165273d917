import math
from collections import deque
from typing import Dict, Optional, Tuple

import numpy as np

from moet.envs.environment import Environment
from moet.models.envs import Cell, EnvState, GridworldSpec, Transition
from moet.models.errors import UnreachableCellError

LEFT, RIGHT, UP, DOWN = 0, 1, 2, 3
""" Gridworld action indices; the order is also the tie-break order. """

ACTION_NAMES = ("left", "right", "up", "down")
MOVES = {LEFT: (-1, 0), RIGHT: (1, 0), UP: (0, 1), DOWN: (0, -1)}


def _exits(spec: GridworldSpec, cell: Cell, action: int) -> bool:
    x, y = cell
    if action == LEFT:
        return x == 0 and y in spec.left_door_rows
    if action == RIGHT:
        return x == spec.n - 1 and y in spec.right_door_rows
    return False


def _move(spec: GridworldSpec, cell: Cell, action: int) -> Cell:
    dx, dy = MOVES[action]
    target = (cell[0] + dx, cell[1] + dy)
    if not (0 <= target[0] < spec.n and 0 <= target[1] < spec.n) or target in spec.walls:
        return cell
    return target


def gridworld_step(spec: GridworldSpec, state: EnvState, action: int) -> Transition:
    """
    Move the agent one cell.

    Bumping into a wall or the boundary leaves the agent in place. Moving
    through a door ends the episode, as does reaching the horizon.

    Args:
        spec: The grid.
        state: Current non-terminal state (x, y).
        action: One of LEFT, RIGHT, UP, DOWN.

    Returns:
        The transition.
    """
    cell = (int(state.values[0]), int(state.values[1]))
    steps = state.steps_elapsed + 1
    escaped = _exits(spec, cell, action)
    target = cell if escaped else _move(spec, cell, action)
    done = escaped or steps >= spec.horizon
    next_state = EnvState(target, terminal=done, steps_elapsed=steps)
    return Transition(state, action, next_state, spec.step_reward, done)


def _door_distances(spec: GridworldSpec, doors) -> Dict[Cell, int]:
    distances: Dict[Cell, int] = {}
    queue = deque()
    for door in doors:
        if door not in distances:
            distances[door] = 1
            queue.append(door)

    while queue:
        cell = queue.popleft()
        for dx, dy in MOVES.values():
            neighbor = (cell[0] + dx, cell[1] + dy)
            if (
                0 <= neighbor[0] < spec.n
                and 0 <= neighbor[1] < spec.n
                and neighbor not in spec.walls
                and neighbor not in distances
            ):
                distances[neighbor] = distances[cell] + 1
                queue.append(neighbor)
    return distances


def _left_exit_distances(spec: GridworldSpec) -> Dict[Cell, int]:
    return _door_distances(spec, [(0, y) for y in sorted(spec.left_door_rows)])


def exit_distances(spec: GridworldSpec) -> Dict[Cell, int]:
    """
    Number of actions needed to leave the grid from every free cell.

    Raises:
        UnreachableCellError: For the first free cell with no path to a door.
    """
    distances = _door_distances(
        spec,
        [(0, y) for y in sorted(spec.left_door_rows)] + [(spec.n - 1, y) for y in sorted(spec.right_door_rows)],
    )
    for cell in spec.free_cells:
        if cell not in distances:
            raise UnreachableCellError(cell)
    return distances


def _distance_after(
    spec: GridworldSpec, distances: Dict[Cell, int], cell: Cell, action: int, exit_side: Optional[int] = None
) -> float:
    if _exits(spec, cell, action):
        return 0 if exit_side in (None, action) else math.inf
    return distances.get(_move(spec, cell, action), math.inf)


def gridworld_q_values(spec: GridworldSpec, distances: Dict[Cell, int], cell: Cell) -> np.ndarray:
    """
    Exact action values Q(s, a) = step_reward + V(s') with V = step_reward x exit distance.
    """
    return np.array(
        [
            spec.step_reward * (1 + _distance_after(spec, distances, cell, action))
            for action in range(len(ACTION_NAMES))
        ]
    )


def gridworld_optimal_policy(spec: GridworldSpec) -> Dict[Cell, int]:
    """
    Shortest-path policy over all free cells.

    Among actions that leave the grid fastest, those on a shortest path to a
    left door win if the cell has one; the lowest action index breaks the
    remaining ties.

    Raises:
        UnreachableCellError: If some free cell cannot reach a door.
    """
    distances = exit_distances(spec)
    left_distances = _left_exit_distances(spec)
    policy = {}
    for cell in spec.free_cells:
        remaining = [_distance_after(spec, distances, cell, a) for a in range(len(ACTION_NAMES))]
        best = min(remaining)
        candidates = [a for a in range(len(ACTION_NAMES)) if remaining[a] == best]
        if left_distances.get(cell) == distances[cell]:
            candidates = [
                a for a in candidates if _distance_after(spec, left_distances, cell, a, exit_side=LEFT) == best
            ]
        policy[cell] = candidates[0]
    return policy


class Gridworld(Environment[GridworldSpec]):
    """
    N x N escape grid; features are the raw (x, y) coordinates.
    """

    feature_names = ("x", "y")
    action_names = ACTION_NAMES

    def reset(self, rng: np.random.Generator) -> EnvState:
        cells = self.spec.free_cells
        return EnvState(cells[int(rng.integers(len(cells)))])

    def step(self, state: EnvState, action: int) -> Transition:
        return gridworld_step(self.spec, state, action)

    def all_states(self) -> Tuple[Cell, ...]:
        return self.spec.free_cells
