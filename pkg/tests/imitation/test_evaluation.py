import numpy as np
import pytest

from moet.envs.gridworld import Gridworld, exit_distances
from moet.imitation.evaluation import evaluate_policy, pareto_front, policy_slice
from moet.imitation.teachers import GridworldTeacher
from moet.learning.dtree import fit_tree
from moet.learning.trainer import tree_model
from moet.models.errors import ConfigError
from moet.models.imitation import ScoredModel
from moet.models.trees import TreeFitConfig


class TestEvaluatePolicy:
    def test_teacher_against_itself(self, gridworld_spec):
        env = Gridworld(gridworld_spec)
        teacher = GridworldTeacher(gridworld_spec)

        result = evaluate_policy(env, teacher, teacher, episodes=10, seed=0, iteration=4)

        assert result.fidelity == 1.0
        assert result.iteration == 4
        assert (result.depth, result.nodes) == (0, 0)

    def test_optimal_reward_is_shortest_path(self, gridworld_spec):
        env = Gridworld(gridworld_spec)
        teacher = GridworldTeacher(gridworld_spec)
        distances = exit_distances(gridworld_spec)
        starts = [
            tuple(int(v) for v in env.reset(np.random.default_rng([0, k])).values) for k in range(20)
        ]

        result = evaluate_policy(env, teacher, teacher, episodes=20, seed=0)

        assert result.mean_reward == pytest.approx(-0.1 * np.mean([distances[s] for s in starts]))

    def test_model_reports_its_size(self, gridworld_spec, gridworld_data):
        env = Gridworld(gridworld_spec)
        teacher = GridworldTeacher(gridworld_spec)
        model = tree_model(fit_tree(gridworld_data, TreeFitConfig(max_depth=3)), 2, 4)

        result = evaluate_policy(env, model, teacher, episodes=5, seed=1)

        assert (result.depth, result.nodes) == (3, 9)
        assert result.fidelity == 1.0

    def test_weak_student_loses_fidelity(self, gridworld_spec):
        env = Gridworld(gridworld_spec)
        teacher = GridworldTeacher(gridworld_spec)

        result = evaluate_policy(env, lambda x: 0, teacher, episodes=20, seed=0)

        assert result.fidelity < 1.0

    def test_requires_episodes(self, gridworld_spec):
        teacher = GridworldTeacher(gridworld_spec)

        with pytest.raises(ConfigError):
            evaluate_policy(Gridworld(gridworld_spec), teacher, teacher, episodes=0, seed=0)


class TestParetoFront:
    def test_dominated_models_are_dropped(self):
        models = [
            ScoredModel(200.0, 0.9, "a"),
            ScoredModel(180.0, 0.95, "b"),
            ScoredModel(170.0, 0.85, "c"),
            ScoredModel(200.0, 0.8, "d"),
        ]

        assert [m.model_id for m in pareto_front(models)] == ["a", "b"]

    def test_duplicates_are_kept(self):
        models = [ScoredModel(1.0, 1.0, "a"), ScoredModel(1.0, 1.0, "b")]

        assert pareto_front(models) == models

    def test_matches_brute_force(self):
        rng = np.random.default_rng(29)
        for _ in range(20):
            models = [
                ScoredModel(float(rng.integers(150, 160)), float(rng.integers(80, 90)) / 100, f"m{i}")
                for i in range(100)
            ]

            expected = [
                m
                for m in models
                if not any(
                    o.reward >= m.reward
                    and o.fidelity >= m.fidelity
                    and (o.reward > m.reward or o.fidelity > m.fidelity)
                    for o in models
                )
            ]

            assert pareto_front(models) == expected

    def test_empty(self):
        with pytest.raises(ConfigError):
            pareto_front([])


class TestPolicySlice:
    def test_grid_orientation(self):
        xs, ys, grid = policy_slice(lambda s: int(s[1] > 0), 1, 3, (-1.0, 1.0), (-2.0, 2.0), 5, [0.0] * 4)

        assert xs.tolist() == [-1.0, -0.5, 0.0, 0.5, 1.0]
        assert ys.tolist() == [-2.0, -1.0, 0.0, 1.0, 2.0]
        assert grid.shape == (5, 5)
        assert grid[0].tolist() == [0, 0, 0, 1, 1]
        assert grid[:, 4].tolist() == [1, 1, 1, 1, 1]

    def test_model_policy(self, cartpole_model):
        _, ys, grid = policy_slice(cartpole_model, 3, 1, (-2.0, 2.0), (-2.0, 2.0), 3, [0.0, 0.0, 0.1, 0.0])

        assert grid.tolist() == [[1, 1, 1]] * 3

    def test_resolution(self):
        with pytest.raises(ConfigError):
            policy_slice(lambda s: 0, 0, 1, (0, 1), (0, 1), 1, [0.0, 0.0])
