import logging
import warnings
from typing import List, Optional, Sequence, Tuple

import numpy as np

from moet.config import DEGENERATE_EXPERT_FRACTION, InferenceMode
from moet.learning.core import argmax_class
from moet.learning.dtree import fit_tree, predict_proba, predict_proba_batch, tree_stats
from moet.learning.gating import (
    ascend_gate,
    gate_probabilities,
    gating_objective,
    initialize_gate,
    responsibilities,
    select_expert,
)
from moet.models.datasets import WeightedDataset
from moet.models.errors import ConfigError, DegenerateExpertWarning
from moet.models.gating import GatingParams
from moet.models.moet_model import MoetConfig, MoetModel, TrainReport
from moet.models.trees import LeafNode, TreeFitConfig, TreeNode

logger = logging.getLogger(__name__)


def standardization(features: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per-feature mean and standard deviation; constant features get a deviation of 1.
    """
    mean = features.mean(axis=0)
    std = features.std(axis=0)
    std[~(std > 0)] = 1.0
    return mean, std


def compose_gate(standardized: GatingParams, mean: np.ndarray, std: np.ndarray) -> GatingParams:
    """
    Rewrite a gate trained on z-scored features as a gate over raw features.
    """
    coefficients = standardized.coefficients
    weights = coefficients[:, :-1] / std
    bias = coefficients[:, -1] - weights @ mean
    return GatingParams(np.hstack([weights, bias[:, None]]))


def _true_class_likelihoods(experts: Sequence[TreeNode], features: np.ndarray, labels: np.ndarray) -> np.ndarray:
    rows = np.arange(len(labels))
    return np.column_stack([predict_proba_batch(tree, features)[rows, labels] for tree in experts])


def train_moet(
    data: WeightedDataset,
    cfg: MoetConfig,
    mode: InferenceMode = InferenceMode.HARD,
) -> Tuple[MoetModel, TrainReport]:
    """
    Train a mixture of expert trees by alternating expert fits and gate ascent.

    Every epoch freezes the responsibilities of the current model, refits each
    expert on its responsibility-weighted copy of the data and then takes
    `cfg.gradient_steps_per_epoch` ascent steps on the gate. The gate is
    trained on z-scored features and returned composed into raw units. Instance
    weights of `data` are ignored; the responsibilities are the only weights.

    Args:
        data: Labeled training instances.
        cfg: Training hyperparameters.
        mode: Inference mode stored in the returned model.

    Returns:
        The final-epoch model and the per-epoch training trace.

    Raises:
        ConfigError: If there are fewer instances than experts or fewer than two classes.
    """
    features, labels = data.features, data.labels
    num_instances, num_features = features.shape
    num_experts = cfg.num_experts
    if num_instances < num_experts:
        raise ConfigError(f"Need at least {num_experts} instances, got {num_instances}.")
    if data.num_classes < 2:
        raise ConfigError("MoËT training needs at least two classes.")

    mean, std = standardization(features)
    standardized = (features - mean) / std
    rng = np.random.default_rng(cfg.seed)
    if num_experts == 1:
        gate = GatingParams.zeros(1, num_features)
    else:
        gate = initialize_gate(num_experts, num_features, rng)

    tree_cfg = TreeFitConfig(max_depth=cfg.expert_max_depth, criterion=cfg.criterion)
    unit = data.with_weights(np.ones(num_instances))
    experts: List[Optional[TreeNode]] = [None] * num_experts
    report = TrainReport()
    learning_rate = cfg.learning_rate

    for epoch in range(cfg.epochs):
        if experts[0] is None:
            likelihoods = np.ones((num_instances, num_experts))
        else:
            likelihoods = _true_class_likelihoods(experts, features, labels)
        h = responsibilities(gate, likelihoods, standardized).values

        for j in range(num_experts):
            weight = h[:, j]
            if weight.sum() < DEGENERATE_EXPERT_FRACTION * num_instances:
                message = f"Expert {j} received total responsibility {weight.sum():.3g} in epoch {epoch}"
                logger.warning(message)
                warnings.warn(message, DegenerateExpertWarning)
                if experts[j] is None:
                    experts[j] = fit_tree(unit, tree_cfg, cfg.smoothing_eps)
                continue
            experts[j] = fit_tree(data.with_weights(weight), tree_cfg, cfg.smoothing_eps)

        fitted = _true_class_likelihoods(experts, features, labels)
        report.expert_log_likelihood.append(float(np.sum(h * np.log(fitted))))

        if num_experts > 1:
            gate = ascend_gate(gate, h, standardized, learning_rate / num_instances, cfg.gradient_steps_per_epoch)
        report.gating_objective.append(gating_objective(gate, h, standardized))
        logger.debug(
            "Epoch %d: gating objective %.6g, expert log-likelihood %.6g",
            epoch,
            report.gating_objective[-1],
            report.expert_log_likelihood[-1],
        )
        learning_rate *= cfg.lr_decay

    model = MoetModel(
        gate=compose_gate(gate, mean, std),
        experts=tuple(experts),
        feature_mean=mean,
        feature_std=std,
        num_classes=data.num_classes,
        mode=mode,
    )
    report.training_fidelity = float(np.mean(predict_batch(model, features) == labels))
    return model, report


def tree_model(tree: TreeNode, num_features: int, num_classes: int) -> MoetModel:
    """
    Wrap a single decision tree as a one-expert model.
    """
    return MoetModel(
        gate=GatingParams.zeros(1, num_features),
        experts=(tree,),
        feature_mean=np.zeros(num_features),
        feature_std=np.ones(num_features),
        num_classes=num_classes,
        mode=InferenceMode.HARD,
    )


def predict_soft(model: MoetModel, x) -> int:
    """
    Class maximizing the gate-weighted mixture of expert distributions.
    """
    weights = gate_probabilities(model.gate, x)
    mixture = sum(w * predict_proba(tree, x).as_array() for w, tree in zip(weights, model.experts))
    return argmax_class(mixture)


def predict_hard(model: MoetModel, x) -> int:
    """
    Most probable class of the expert with the highest linear gate score.
    """
    expert = select_expert(model.gate, x)
    return argmax_class(predict_proba(model.experts[expert], x))


def predict_soft_batch(model: MoetModel, features) -> np.ndarray:
    features = np.atleast_2d(np.asarray(features, dtype=float))
    weights = gate_probabilities(model.gate, features)
    mixture = sum(
        weights[:, [j]] * predict_proba_batch(tree, features) for j, tree in enumerate(model.experts)
    )
    return np.argmax(mixture, axis=1)


def predict_hard_batch(model: MoetModel, features) -> np.ndarray:
    features = np.atleast_2d(np.asarray(features, dtype=float))
    selected = select_expert(model.gate, features)
    out = np.zeros(len(features), dtype=np.int64)
    for j, tree in enumerate(model.experts):
        rows = np.nonzero(selected == j)[0]
        if len(rows):
            out[rows] = np.argmax(predict_proba_batch(tree, features[rows]), axis=1)
    return out


def predict(model: MoetModel, x) -> int:
    """
    Predict with the inference mode stored in the model.
    """
    if model.mode == InferenceMode.SOFT:
        return predict_soft(model, x)
    return predict_hard(model, x)


def predict_batch(model: MoetModel, features) -> np.ndarray:
    if model.mode == InferenceMode.SOFT:
        return predict_soft_batch(model, features)
    return predict_hard_batch(model, features)


def model_stats(model: MoetModel) -> Tuple[int, int]:
    """
    Reported (depth, node count) of a model.

    A one-expert model reports its tree. Otherwise the gate counts as one
    decision level and one node on top of the experts.
    """
    stats = [tree_stats(tree) for tree in model.experts]
    if len(stats) == 1:
        return stats[0]
    return 1 + max(depth for depth, _ in stats), 1 + sum(nodes for _, nodes in stats)


def _format_affine(weights: np.ndarray, bias: float, names: Sequence[str]) -> str:
    terms = [f"{w:+.6g}*{name}" for w, name in zip(weights, names) if w != 0]
    terms.append(f"{bias:+.6g}")
    return " ".join(terms).lstrip("+")


def _render_tree(
    node: TreeNode,
    feature_names: Sequence[str],
    action_names: Sequence[str],
    indent: str,
) -> List[str]:
    if isinstance(node, LeafNode):
        return [f"{indent}{action_names[argmax_class(node.dist)]}"]
    name = feature_names[node.feature]
    return [
        f"{indent}if {name} <= {node.threshold:.6g}:",
        *_render_tree(node.left, feature_names, action_names, indent + "    "),
        f"{indent}else:",
        *_render_tree(node.right, feature_names, action_names, indent + "    "),
    ]


def render_rules(
    model: MoetModel,
    feature_names: Optional[Sequence[str]] = None,
    action_names: Optional[Sequence[str]] = None,
) -> str:
    """
    Render the hard-mode policy of a model as nested if/else text.

    Gate scores are printed as affine expressions over raw features, followed
    by one rule block per expert.

    Args:
        model: The model.
        feature_names: Names of the features; x0, x1, ... if omitted.
        action_names: Names of the classes; the class indices if omitted.

    Returns:
        The rule text.
    """
    feature_names = list(feature_names or [f"x{k}" for k in range(model.num_features)])
    action_names = list(action_names or [str(c) for c in range(model.num_classes)])
    if model.num_experts == 1:
        return "\n".join(_render_tree(model.experts[0], feature_names, action_names, "")) + "\n"

    lines = ["gate scores:"]
    for j, row in enumerate(model.gate.coefficients):
        lines.append(f"    score{j} = {_format_affine(row[:-1], row[-1], feature_names)}")
    for j, tree in enumerate(model.experts):
        lines.append(f"if expert {j} has the highest score:")
        lines.extend(_render_tree(tree, feature_names, action_names, "    "))
    return "\n".join(lines) + "\n"
