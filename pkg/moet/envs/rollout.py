from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from moet.config import EnvName
from moet.envs.cartpole import CartPole
from moet.envs.environment import Environment
from moet.envs.gridworld import Gridworld
from moet.envs.mountaincar import MountainCar
from moet.models.envs import CartPoleSpec, EnvState, GridworldSpec, MountainCarSpec, Transition
from moet.models.errors import ConfigError

Policy = Callable[[np.ndarray], int]
""" A policy maps the feature vector of a state to an action index. """

_REGISTRY = {
    EnvName.GRIDWORLD: (Gridworld, GridworldSpec),
    EnvName.CARTPOLE: (CartPole, CartPoleSpec),
    EnvName.MOUNTAINCAR: (MountainCar, MountainCarSpec),
}


def make_env(name, overrides: Optional[Dict[str, Any]] = None) -> Environment:
    """
    Build a built-in environment.

    Args:
        name: Environment name.
        overrides: Spec fields to change from their defaults.

    Returns:
        The environment.

    Raises:
        ConfigError: If the name or an override field is unknown.
    """
    try:
        env_cls, spec_cls = _REGISTRY[EnvName(name)]
    except ValueError as exc:
        raise ConfigError(f"Unknown environment {name!r}.") from exc
    try:
        spec = spec_cls(**(overrides or {}))
    except TypeError as exc:
        raise ConfigError(f"Invalid {name} settings: {exc}") from exc
    return env_cls(spec)


def rollout(
    env: Environment,
    policy: Policy,
    seed: Union[int, Sequence[int]],
    initial_state: Optional[EnvState] = None,
) -> Tuple[List[Transition], float]:
    """
    Run one episode.

    The seed only drives initial-state sampling, so equal seeds give equal
    trajectories.

    Args:
        env: The environment.
        policy: The acting policy.
        seed: Seed for the initial state.
        initial_state: Start state; sampled from the environment if omitted.

    Returns:
        The transitions of the episode and its cumulative reward.
    """
    state = initial_state if initial_state is not None else env.reset(np.random.default_rng(seed))
    transitions: List[Transition] = []
    total = 0.0
    while not state.terminal:
        transition = env.step(state, int(policy(np.array(state.values))))
        transitions.append(transition)
        total += transition.reward
        state = transition.next_state
    return transitions, total
