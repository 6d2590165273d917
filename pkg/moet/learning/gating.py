from typing import Union

import numpy as np

from moet.config import GATE_INIT_STD, LOG_FLOOR
from moet.models.errors import ZeroDenominatorError
from moet.models.gating import GatingParams, Responsibilities

ResponsibilityLike = Union[Responsibilities, np.ndarray]


def _values(h: ResponsibilityLike) -> np.ndarray:
    if isinstance(h, Responsibilities):
        return h.values
    return np.asarray(h, dtype=float)


def augment(features) -> np.ndarray:
    """
    Append the constant bias feature to every row of an N x F array.
    """
    features = np.atleast_2d(np.asarray(features, dtype=float))
    return np.hstack([features, np.ones((len(features), 1))])


def gate_scores(params: GatingParams, features) -> np.ndarray:
    """
    Linear expert scores theta_j . x~.

    Args:
        params: The gate.
        features: A single feature vector or an N x F array.

    Returns:
        Length-E vector for a single input, N x E array otherwise.
    """
    features = np.asarray(features, dtype=float)
    scores = augment(features) @ params.coefficients.T
    return scores[0] if features.ndim == 1 else scores


def log_gate_probabilities(params: GatingParams, features) -> np.ndarray:
    scores = np.atleast_2d(gate_scores(params, features))
    shifted = scores - scores.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    return log_probs[0] if np.ndim(features) == 1 else log_probs


def gate_probabilities(params: GatingParams, features) -> np.ndarray:
    """
    Softmax of the linear expert scores, computed with max-subtraction.

    Args:
        params: The gate.
        features: A single feature vector or an N x F array.

    Returns:
        Length-E vector for a single input, N x E array otherwise; rows sum to 1.
    """
    scores = np.atleast_2d(gate_scores(params, features))
    exps = np.exp(scores - scores.max(axis=1, keepdims=True))
    probs = exps / exps.sum(axis=1, keepdims=True)
    return probs[0] if np.ndim(features) == 1 else probs


def select_expert(params: GatingParams, features) -> Union[int, np.ndarray]:
    """
    Index of the highest linear score; the lowest index wins ties.
    """
    scores = gate_scores(params, features)
    if scores.ndim == 1:
        return int(np.argmax(scores))
    return np.argmax(scores, axis=1)


def responsibilities(params: GatingParams, expert_likelihoods, features) -> Responsibilities:
    """
    Posterior expert assignment h_ij = g_j(x_i) P_ij / sum_l g_l(x_i) P_il.

    Args:
        params: The gate.
        expert_likelihoods: N x E array; entry (i, j) is the probability expert j gives the label of instance i.
        features: N x F array.

    Returns:
        The responsibilities.

    Raises:
        ZeroDenominatorError: If an instance's mixture likelihood is zero or not finite.
    """
    likelihoods = np.asarray(expert_likelihoods, dtype=float)
    joint = gate_probabilities(params, np.atleast_2d(features)) * likelihoods
    totals = joint.sum(axis=1)
    bad = np.nonzero(~(np.isfinite(totals) & (totals > 0)))[0]
    if len(bad):
        raise ZeroDenominatorError(int(bad[0]))
    return Responsibilities(joint / totals[:, None])


def gating_objective(params: GatingParams, h: ResponsibilityLike, features) -> float:
    """
    Weighted gate log-likelihood sum_i sum_j h_ij log g_j(x_i), with logs floored at log(1e-300).
    """
    log_probs = np.maximum(log_gate_probabilities(params, np.atleast_2d(features)), LOG_FLOOR)
    return float(np.sum(_values(h) * log_probs))


def _augmented_gradient(coefficients: np.ndarray, h: np.ndarray, augmented: np.ndarray) -> np.ndarray:
    scores = augmented @ coefficients.T
    exps = np.exp(scores - scores.max(axis=1, keepdims=True))
    residual = h - exps / exps.sum(axis=1, keepdims=True)
    return residual.T @ augmented


def gating_gradient(params: GatingParams, h: ResponsibilityLike, features) -> np.ndarray:
    """
    Gradient of the gating objective; row j is sum_i (h_ij - g_j(x_i)) x~_i.
    """
    return _augmented_gradient(params.coefficients, _values(h), augment(features))


def gradient_step(params: GatingParams, h: ResponsibilityLike, features, learning_rate: float) -> GatingParams:
    """
    One gradient-ascent step on the gating objective; `params` is left untouched.
    """
    return GatingParams(params.coefficients + learning_rate * gating_gradient(params, h, features))


def initialize_gate(num_experts: int, num_features: int, rng: np.random.Generator) -> GatingParams:
    """
    Gate with coefficients drawn i.i.d. from N(0, GATE_INIT_STD^2).
    """
    return GatingParams(rng.normal(0.0, GATE_INIT_STD, size=(num_experts, num_features + 1)))


def ascend_gate(params: GatingParams, h: ResponsibilityLike, features, learning_rate: float, steps: int) -> GatingParams:
    """
    `steps` consecutive gradient steps with fixed responsibilities; the bias column is appended once.
    """
    augmented = augment(features)
    values = _values(h)
    coefficients = params.coefficients.copy()
    for _ in range(steps):
        coefficients += learning_rate * _augmented_gradient(coefficients, values, augmented)
    return GatingParams(coefficients)
