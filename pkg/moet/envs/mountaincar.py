from typing import Tuple

import numpy as np

from moet.envs.environment import Environment
from moet.models.envs import EnvState, MountainCarSpec, Transition

PUSH_LEFT, NEUTRAL, PUSH_RIGHT = 0, 1, 2
ACTION_NAMES = ("left", "neutral", "right")
FEATURE_NAMES = ("position", "velocity")


def mountaincar_dynamics(spec: MountainCarSpec, values: np.ndarray, actions) -> np.ndarray:
    """
    One step of the mountain-car update for a state or an N x 2 array of states.

    Velocity is clipped to [-max_speed, max_speed] and position to the track;
    a car stopped by the left wall loses its leftward velocity.
    """
    values = np.asarray(values, dtype=float)
    position, velocity = np.moveaxis(np.atleast_2d(values), -1, 0)
    push = np.asarray(actions, dtype=float) - 1.0

    velocity = velocity + push * spec.force - np.cos(3.0 * position) * spec.gravity
    velocity = np.clip(velocity, -spec.max_speed, spec.max_speed)
    position = np.clip(position + velocity, spec.min_position, spec.max_position)
    velocity = np.where((position <= spec.min_position) & (velocity < 0), 0.0, velocity)

    next_values = np.stack([position, velocity], axis=-1)
    return next_values[0] if values.ndim == 1 else next_values


def mountaincar_step(spec: MountainCarSpec, state: EnvState, action: int) -> Transition:
    """
    Apply a push and advance one step; every step costs -1.

    The episode ends when the car reaches the goal position or at the horizon.

    Args:
        spec: Track and dynamics constants.
        state: Current non-terminal state (position, velocity).
        action: PUSH_LEFT, NEUTRAL or PUSH_RIGHT.

    Returns:
        The transition.
    """
    values = mountaincar_dynamics(spec, np.array(state.values), action)
    steps = state.steps_elapsed + 1
    done = bool(values[0] >= spec.goal_position) or steps >= spec.horizon
    next_state = EnvState(tuple(values), terminal=done, steps_elapsed=steps)
    return Transition(state, action, next_state, -1.0, done)


class MountainCar(Environment[MountainCarSpec]):
    """
    Under-powered car in a valley; starts at rest at a uniform position in [init_low, init_high].
    """

    feature_names = FEATURE_NAMES
    action_names = ACTION_NAMES

    def reset(self, rng: np.random.Generator) -> EnvState:
        return EnvState((float(rng.uniform(self.spec.init_low, self.spec.init_high)), 0.0))

    def step(self, state: EnvState, action: int) -> Transition:
        return mountaincar_step(self.spec, state, action)

    def step_batch(self, values: np.ndarray, actions: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        next_values = mountaincar_dynamics(self.spec, np.atleast_2d(values), actions)
        return next_values, -np.ones(len(next_values)), next_values[:, 0] >= self.spec.goal_position
