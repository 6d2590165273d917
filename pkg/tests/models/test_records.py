import numpy as np
import pytest
from conftest import leaf

from moet.config import InferenceMode
from moet.models.datasets import ClassDistribution, WeightedDataset, WeightedExample
from moet.models.errors import ConfigError
from moet.models.gating import GatingParams, Responsibilities
from moet.models.imitation import AggregatedDataset, EvalResult
from moet.models.moet_model import MoetConfig, MoetModel
from moet.models.trees import TreeFitConfig
from moet.models.verification import AffineDynamics, SmtScript, VerificationSpec


class TestClassDistribution:
    def test_valid(self):
        assert ClassDistribution((0.25, 0.75)).num_classes == 2

    @pytest.mark.parametrize("probs", [(), (0.5, 0.6), (-0.1, 1.1), (float("nan"), 1.0)])
    def test_invalid(self, probs):
        with pytest.raises(ConfigError):
            ClassDistribution(probs)


class TestWeightedDataset:
    def test_from_examples(self):
        data = WeightedDataset.from_examples(
            [WeightedExample((0.0, 1.0), 1, 2.0), WeightedExample((3.0, 4.0), 0)], 2
        )

        assert data.features.tolist() == [[0.0, 1.0], [3.0, 4.0]]
        assert data.weights.tolist() == [2.0, 1.0]

    def test_mixed_widths(self):
        with pytest.raises(ConfigError):
            WeightedDataset.from_examples([WeightedExample((0.0,), 0), WeightedExample((0.0, 1.0), 0)], 2)

    @pytest.mark.parametrize(
        "features,labels,weights",
        [
            ([[0.0], [1.0]], [0], [1.0, 1.0]),
            ([[0.0], [1.0]], [0, 2], [1.0, 1.0]),
            ([[0.0], [1.0]], [0, 1], [1.0, -1.0]),
            ([[0.0], [np.inf]], [0, 1], [1.0, 1.0]),
        ],
    )
    def test_invalid(self, features, labels, weights):
        with pytest.raises(ConfigError):
            WeightedDataset(np.array(features), labels, weights, 2)


class TestGatingRecords:
    def test_gate_must_be_finite(self):
        with pytest.raises(ConfigError):
            GatingParams(np.array([[np.nan, 0.0]]))

    def test_gate_is_read_only(self):
        gate = GatingParams.zeros(2, 3)

        with pytest.raises(ValueError):
            gate.coefficients[0, 0] = 1.0

    def test_responsibility_rows_sum_to_one(self):
        with pytest.raises(ConfigError):
            Responsibilities(np.array([[0.5, 0.4]]))


class TestModelRecords:
    def test_expert_count_matches_gate(self):
        with pytest.raises(ConfigError):
            MoetModel(GatingParams.zeros(2, 1), (leaf(0.5, 0.5),), np.zeros(1), np.ones(1), 2)

    def test_standardization_width(self):
        with pytest.raises(ConfigError):
            MoetModel(GatingParams.zeros(1, 2), (leaf(0.5, 0.5),), np.zeros(3), np.ones(3), 2)

    def test_with_mode_keeps_parameters(self, cartpole_model):
        soft = cartpole_model.with_mode("soft")

        assert soft.mode == InferenceMode.SOFT
        assert soft.experts == cartpole_model.experts

    @pytest.mark.parametrize(
        "overrides",
        [{"num_experts": 0}, {"epochs": 0}, {"expert_max_depth": -1}, {"learning_rate": 0.0}, {"lr_decay": 1.5}],
    )
    def test_invalid_moet_config(self, overrides):
        with pytest.raises(ConfigError):
            MoetConfig(**overrides)

    def test_invalid_tree_config(self):
        with pytest.raises(ConfigError):
            TreeFitConfig(max_depth=-1)


class TestImitationRecords:
    def test_aggregated_dataset_extend_and_subset(self):
        first = AggregatedDataset(np.zeros((2, 2)), [0, 1], [0.1, 0.2])
        second = AggregatedDataset(np.ones((1, 2)), [1], [0.3])

        merged = first.extend(second)

        assert len(merged) == 3
        assert merged.subset([2]).importances.tolist() == [0.3]

    def test_negative_importance(self):
        with pytest.raises(ConfigError):
            AggregatedDataset(np.zeros((1, 2)), [0], [-0.1])

    def test_fidelity_range(self):
        with pytest.raises(ConfigError):
            EvalResult(mean_reward=1.0, fidelity=1.5, episodes=1)


class TestVerificationRecords:
    def test_affine_step(self):
        dynamics = AffineDynamics(np.eye(2), [[0.0, -1.0], [0.0, 1.0]])

        assert dynamics.step([1.0, 1.0], 1).tolist() == [1.0, 2.0]

    def test_box_must_match_dynamics(self):
        with pytest.raises(ConfigError):
            VerificationSpec(((0.0, 1.0),), 0.2, 10, AffineDynamics(np.eye(2), np.zeros((2, 2))))

    def test_empty_box_side(self):
        with pytest.raises(ConfigError):
            VerificationSpec(((1.0, 0.0), (0.0, 1.0)), 0.2, 10, AffineDynamics(np.eye(2), np.zeros((2, 2))), 0)

    def test_script_text(self):
        script = SmtScript("QF_LRA", ("(declare-const x Real)",), ("(assert (> x 0.0))",))

        assert script.text == "(set-logic QF_LRA)\n(declare-const x Real)\n(assert (> x 0.0))\n(check-sat)\n(get-model)\n"
