from typing import Tuple

import numpy as np

from moet.envs.environment import Environment
from moet.models.envs import CartPoleSpec, EnvState, Transition
from moet.models.verification import AffineDynamics

PUSH_LEFT, PUSH_RIGHT = 0, 1
ACTION_NAMES = ("left", "right")
FEATURE_NAMES = ("x", "x_dot", "theta", "theta_dot")
ANGLE_FEATURE = 2


def _force(spec: CartPoleSpec, actions):
    return np.where(np.asarray(actions) == PUSH_RIGHT, spec.force_magnitude, -spec.force_magnitude)


def cartpole_dynamics(spec: CartPoleSpec, values: np.ndarray, actions) -> np.ndarray:
    """
    One explicit Euler step of the cart-pole equations of motion.

    Args:
        spec: Physical constants.
        values: A state (x, x_dot, theta, theta_dot) or an N x 4 array of states.
        actions: Action or length-N array of actions.

    Returns:
        Next state values with the same shape as `values`.
    """
    values = np.asarray(values, dtype=float)
    x, x_dot, theta, theta_dot = np.moveaxis(np.atleast_2d(values), -1, 0)
    force = _force(spec, actions)
    total_mass = spec.cart_mass + spec.pole_mass
    pole_moment = spec.pole_mass * spec.pole_half_length
    cos, sin = np.cos(theta), np.sin(theta)

    temp = (force + pole_moment * theta_dot**2 * sin) / total_mass
    theta_acc = (spec.gravity * sin - cos * temp) / (
        spec.pole_half_length * (4.0 / 3.0 - spec.pole_mass * cos**2 / total_mass)
    )
    x_acc = temp - pole_moment * theta_acc * cos / total_mass

    next_values = np.stack(
        [
            x + spec.tau * x_dot,
            x_dot + spec.tau * x_acc,
            theta + spec.tau * theta_dot,
            theta_dot + spec.tau * theta_acc,
        ],
        axis=-1,
    )
    return next_values[0] if values.ndim == 1 else next_values


def cartpole_failed(spec: CartPoleSpec, values: np.ndarray) -> np.ndarray:
    values = np.atleast_2d(values)
    return (np.abs(values[:, 0]) > spec.position_limit) | (np.abs(values[:, ANGLE_FEATURE]) > spec.angle_limit)


def cartpole_step(spec: CartPoleSpec, state: EnvState, action: int) -> Transition:
    """
    Push the cart left or right for one integration step.

    Every step earns +1. The episode ends when the pole angle or cart position
    leaves its limit, or at the horizon.

    Args:
        spec: Physical constants and limits.
        state: Current non-terminal state (x, x_dot, theta, theta_dot).
        action: PUSH_LEFT or PUSH_RIGHT.

    Returns:
        The transition.
    """
    values = cartpole_dynamics(spec, np.array(state.values), action)
    steps = state.steps_elapsed + 1
    done = bool(cartpole_failed(spec, values)[0]) or steps >= spec.horizon
    next_state = EnvState(tuple(values), terminal=done, steps_elapsed=steps)
    return Transition(state, action, next_state, 1.0, done)


def cartpole_linearization(spec: CartPoleSpec) -> AffineDynamics:
    """
    Small-angle linearization of the Euler step around the upright state.

    sin(theta) is replaced by theta, cos(theta) by 1 and the theta_dot^2 term
    is dropped, giving s' = A s + b[action].
    """
    total_mass = spec.cart_mass + spec.pole_mass
    mass_ratio = spec.pole_mass / total_mass
    denominator = spec.pole_half_length * (4.0 / 3.0 - mass_ratio)
    theta_gain = spec.gravity / denominator
    tau = spec.tau

    matrix = np.eye(4)
    matrix[0, 1] = tau
    matrix[1, 2] = -tau * spec.pole_mass * spec.pole_half_length * theta_gain / total_mass
    matrix[2, 3] = tau
    matrix[3, 2] = tau * theta_gain

    offsets = np.zeros((2, 4))
    for action, force in ((PUSH_LEFT, -spec.force_magnitude), (PUSH_RIGHT, spec.force_magnitude)):
        omega_acc = -force / (total_mass * denominator)
        offsets[action, 1] = tau * (force / total_mass - spec.pole_mass * spec.pole_half_length * omega_acc / total_mass)
        offsets[action, 3] = tau * omega_acc
    return AffineDynamics(matrix, offsets)


def cartpole_linearized_step(spec: CartPoleSpec, values, action: int) -> np.ndarray:
    """
    Affine approximation of `cartpole_dynamics` for a single state.
    """
    return cartpole_linearization(spec).step(values, action)


class CartPole(Environment[CartPoleSpec]):
    """
    Cart-pole balancing; initial components are i.i.d. uniform on [-init_bound, init_bound].
    """

    feature_names = FEATURE_NAMES
    action_names = ACTION_NAMES

    def reset(self, rng: np.random.Generator) -> EnvState:
        bound = self.spec.init_bound
        return EnvState(tuple(rng.uniform(-bound, bound, size=4)))

    def step(self, state: EnvState, action: int) -> Transition:
        return cartpole_step(self.spec, state, action)

    def step_batch(self, values: np.ndarray, actions: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        next_values = cartpole_dynamics(self.spec, np.atleast_2d(values), actions)
        return next_values, np.ones(len(next_values)), cartpole_failed(self.spec, next_values)
