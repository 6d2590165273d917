import numpy as np
import pytest

from moet.config import Criterion
from moet.learning.core import (
    argmax_class,
    class_weight_fractions,
    entropy_index,
    gini_index,
    impurity,
    smooth,
    weighted_class_distribution,
)
from moet.models.datasets import ClassDistribution, WeightedDataset
from moet.models.errors import DegenerateWeightError


class TestWeightedClassDistribution:
    def test_symmetric_weights(self):
        data = WeightedDataset(np.zeros((2, 1)), [0, 1], [0.5, 0.5], 2)

        dist = weighted_class_distribution(data)

        assert dist.probs == pytest.approx((0.5, 0.5))

    def test_weights_are_summed_per_class(self):
        data = WeightedDataset(np.zeros((3, 1)), [0, 0, 1], [0.2, 0.3, 0.5], 2)

        dist = weighted_class_distribution(data)

        assert dist.probs == pytest.approx((0.5, 0.5))

    def test_single_class_is_smoothed(self):
        data = WeightedDataset(np.zeros((2, 1)), [1, 1], [3.0, 7.0], 2)

        dist = weighted_class_distribution(data)

        assert dist.probs[0] > 0
        assert dist.probs == pytest.approx((0.0, 1.0), abs=1e-5)

    def test_indices_select_instances(self):
        data = WeightedDataset(np.zeros((3, 1)), [0, 1, 1], [1.0, 1.0, 1.0], 2)

        dist = weighted_class_distribution(data, indices=[1, 2], smoothing_eps=1e-9)

        assert argmax_class(dist) == 1

    def test_scale_invariance(self):
        rng = np.random.default_rng(3)
        labels = rng.integers(0, 3, size=40)
        weights = rng.uniform(0.1, 2.0, size=40)
        data = WeightedDataset(np.zeros((40, 1)), labels, weights, 3)

        base = weighted_class_distribution(data).as_array()
        scaled = weighted_class_distribution(data.with_weights(weights * 17.5)).as_array()

        assert np.max(np.abs(base - scaled)) < 1e-12

    def test_integer_weights_match_replication(self):
        labels = np.array([0, 1, 2, 1])
        weights = np.array([2, 3, 1, 4])
        weighted = WeightedDataset(np.zeros((4, 1)), labels, weights, 3)
        replicated = WeightedDataset.unweighted(np.zeros((10, 1)), np.repeat(labels, weights), 3)

        assert weighted_class_distribution(weighted).probs == pytest.approx(
            weighted_class_distribution(replicated).probs, abs=1e-12
        )

    def test_zero_weight_raises(self):
        data = WeightedDataset(np.zeros((2, 1)), [0, 1], [0.0, 0.0], 2)

        with pytest.raises(DegenerateWeightError) as e:
            weighted_class_distribution(data)

        assert e.value.total_weight == 0.0


class TestFractions:
    def test_class_weight_fractions_are_unsmoothed(self):
        fractions = class_weight_fractions(np.array([0, 0]), np.array([1.0, 1.0]), 3)

        assert fractions.tolist() == [1.0, 0.0, 0.0]

    def test_smooth(self):
        smoothed = smooth(np.array([1.0, 0.0]), smoothing_eps=0.5)

        assert smoothed.tolist() == pytest.approx([0.75, 0.25])


class TestImpurity:
    def test_gini_pure(self):
        assert gini_index(ClassDistribution((1.0, 0.0))) == 0.0

    def test_gini_even(self):
        assert gini_index(ClassDistribution((0.5, 0.5))) == 0.5

    def test_gini_three_classes(self):
        assert gini_index(ClassDistribution((0.2, 0.3, 0.5))) == pytest.approx(0.62)

    @pytest.mark.parametrize("num_classes", range(2, 11))
    def test_gini_uniform(self, num_classes):
        uniform = np.full(num_classes, 1.0 / num_classes)

        assert gini_index(uniform) == pytest.approx(1.0 - 1.0 / num_classes, abs=1e-15)

    def test_entropy(self):
        assert entropy_index((0.5, 0.5)) == pytest.approx(1.0)
        assert entropy_index((1.0, 0.0)) == 0.0

    def test_impurity_dispatches_on_criterion(self):
        dist = (0.25, 0.75)

        assert impurity(dist) == gini_index(dist)
        assert impurity(dist, Criterion.ENTROPY) == entropy_index(dist)


class TestArgmaxClass:
    def test_argmax(self):
        assert argmax_class(ClassDistribution((0.1, 0.9))) == 1
        assert argmax_class(ClassDistribution((0.3, 0.4, 0.3))) == 1

    def test_tie_goes_to_lowest_index(self):
        assert argmax_class(ClassDistribution((0.5, 0.5))) == 0
