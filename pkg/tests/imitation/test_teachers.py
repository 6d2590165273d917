import numpy as np
import pytest

from moet.envs.cartpole import PUSH_LEFT, PUSH_RIGHT, CartPole
from moet.envs.environment import Environment
from moet.envs.gridworld import LEFT, RIGHT, Gridworld
from moet.envs.mountaincar import MountainCar
from moet.envs.mountaincar import PUSH_LEFT as CAR_LEFT
from moet.envs.mountaincar import PUSH_RIGHT as CAR_RIGHT
from moet.envs.rollout import rollout
from moet.imitation.teachers import (
    GridworldTeacher,
    ScriptedTeacher,
    cartpole_teacher,
    estimate_q_values,
    importance,
    importance_batch,
    make_teacher,
    mountaincar_teacher,
)
from moet.models.envs import CartPoleSpec, MountainCarSpec
from moet.models.errors import ConfigError


class TestGridworldTeacher:
    def test_acts_optimally(self, gridworld_spec):
        teacher = GridworldTeacher(gridworld_spec)

        for x, y in gridworld_spec.free_cells:
            assert teacher.act([x, y]) == (LEFT if x + y < 4 else RIGHT)

    def test_importance_is_q_gap(self, gridworld_spec):
        teacher = GridworldTeacher(gridworld_spec)

        assert importance(teacher, [0, 0]) == pytest.approx(0.2)

    def test_batch_matches_single(self, gridworld_spec):
        teacher = GridworldTeacher(gridworld_spec)
        states = np.array(gridworld_spec.free_cells, dtype=float)

        assert importance_batch(teacher, states) == pytest.approx([importance(teacher, s) for s in states])
        assert teacher.act_batch(states).tolist() == [teacher(s) for s in states]


class TestCartPoleTeacher:
    def test_q_prefers_recovering_push(self):
        teacher = cartpole_teacher(CartPoleSpec(), {"horizon": 50})

        q = teacher.q_values([0.0, 0.0, 0.15, 0.9])

        assert q[PUSH_RIGHT] > q[PUSH_LEFT]

    def test_q_is_mirrored(self):
        teacher = cartpole_teacher(CartPoleSpec(), {"horizon": 50})

        q = teacher.q_values([0.0, 0.0, -0.15, -0.9])

        assert q[PUSH_LEFT] > q[PUSH_RIGHT]

    def test_balanced_state_has_no_importance(self):
        teacher = cartpole_teacher(CartPoleSpec(), {"horizon": 5, "discount": 0.9})

        q = teacher.q_values(np.zeros(4))

        assert q == pytest.approx([(1 - 0.9**6) / 0.1] * 2)
        assert importance(teacher, np.zeros(4)) == pytest.approx(0.0, abs=1e-12)

    def test_controller(self):
        teacher = cartpole_teacher(CartPoleSpec())

        assert teacher.act([0.0, 0.0, 0.05, 0.0]) == PUSH_RIGHT
        assert teacher.act([0.0, 0.0, -0.05, 0.0]) == PUSH_LEFT

    def test_noisy_estimates_are_reproducible(self):
        env = CartPole(CartPoleSpec())
        teacher = cartpole_teacher(env.spec)
        options = {"num_rollouts": 4, "horizon": 10, "rollout_noise": 0.01}
        states = np.array([[0.0, 0.0, 0.02, 0.1], [0.0, 0.1, -0.02, 0.0]])

        first = estimate_q_values(env, teacher.act_batch, states, options, seed=7)
        second = estimate_q_values(env, teacher.act_batch, states, options, seed=7)

        assert first.shape == (2, 2)
        assert np.array_equal(first, second)

    def test_estimates_do_not_depend_on_batch_composition(self):
        teacher = cartpole_teacher(CartPoleSpec(), {"num_rollouts": 4, "horizon": 20})
        states = np.array([[0.0, 0.0, 0.02, 0.1], [0.1, -0.2, -0.03, 0.05], [0.0, 0.1, 0.01, -0.1]])

        batch = teacher.q_values_batch(states)

        for row, expected in zip(states, batch):
            assert teacher.q_values(row) == pytest.approx(expected, rel=1e-12)

    def test_importances_on_teacher_rollouts_are_informative(self):
        teacher = cartpole_teacher(CartPoleSpec())
        states = []
        for seed in range(3):
            transitions, total = rollout(teacher.env, teacher, seed)
            assert total == 200.0
            states.extend(t.state.values for t in transitions[::4])

        importances = importance_batch(teacher, np.array(states))

        assert np.mean(importances > 0) >= 0.9
        assert np.unique(importances).size > 10


class TestMountainCarTeacher:
    def test_pushes_with_velocity(self):
        teacher = mountaincar_teacher(MountainCarSpec())

        assert teacher.act([-0.5, 0.01]) == CAR_RIGHT
        assert teacher.act([-0.5, -0.01]) == CAR_LEFT

    def test_q_values_shape(self):
        teacher = mountaincar_teacher(MountainCarSpec(), {"horizon": 5})

        assert teacher.q_values([-0.5, 0.0]).shape == (3,)


class TestMakeTeacher:
    def test_defaults(self, gridworld_spec):
        assert isinstance(make_teacher(Gridworld(gridworld_spec)), GridworldTeacher)
        assert isinstance(make_teacher(CartPole(CartPoleSpec())), ScriptedTeacher)
        assert isinstance(make_teacher(MountainCar(MountainCarSpec())), ScriptedTeacher)

    def test_unknown_environment(self):
        with pytest.raises(ConfigError):
            make_teacher(Environment(None))
