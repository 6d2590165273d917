from typing import Generic, Sequence, Tuple, TypeVar

import numpy as np

from moet.models.envs import EnvState, Transition

SpecT = TypeVar("SpecT")


class Environment(Generic[SpecT]):
    """
    Base class for all environments.

    Subclasses wrap a pure step function of (spec, state, action). The
    environment object itself holds no per-episode state.
    """

    feature_names: Sequence[str] = ()
    action_names: Sequence[str] = ()
    deterministic: bool = True

    def __init__(self, spec: SpecT):
        self.spec = spec

    @property
    def num_features(self) -> int:
        return len(self.feature_names)

    @property
    def num_actions(self) -> int:
        return len(self.action_names)

    @property
    def horizon(self) -> int:
        return self.spec.horizon

    def reset(self, rng: np.random.Generator) -> EnvState:
        """
        Sample an initial state.

        Args:
            rng: Source of randomness for the initial state.

        Returns:
            A non-terminal state with zero elapsed steps.
        """
        raise NotImplementedError

    def step(self, state: EnvState, action: int) -> Transition:
        """
        Apply an action to a non-terminal state.
        """
        raise NotImplementedError

    def step_batch(
        self, values: np.ndarray, actions: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Step many states at once, ignoring the horizon.

        Args:
            values: N x F array of state values.
            actions: Length-N array of actions.

        Returns:
            Next state values, rewards and termination flags.
        """
        next_values = np.empty_like(values, dtype=float)
        rewards = np.empty(len(values))
        done = np.empty(len(values), dtype=bool)
        for i, (row, action) in enumerate(zip(values, actions)):
            transition = self.step(EnvState(tuple(row)), int(action))
            next_values[i] = transition.next_state.values
            rewards[i] = transition.reward
            done[i] = transition.next_state.terminal
        return next_values, rewards, done
