from dataclasses import dataclass
from decimal import Decimal
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from moet.config import InferenceMode
from moet.envs.cartpole import ANGLE_FEATURE, cartpole_linearization
from moet.learning.core import argmax_class
from moet.learning.gating import gate_scores
from moet.learning.trainer import predict_hard
from moet.models.envs import CartPoleSpec
from moet.models.errors import ConfigError, ModeError
from moet.models.gating import GatingParams
from moet.models.moet_model import MoetModel
from moet.models.trees import InternalNode, TreeNode
from moet.models.verification import SmtScript, VerificationSpec, Violation

SMT_LOGIC = "QF_LRA"


def smt_number(value: float) -> str:
    """
    Exact SMT-LIB decimal of the 17-significant-digit rendering of `value`.
    """
    decimal = Decimal(format(float(value), ".17g"))
    text = format(abs(decimal), "f")
    if "." not in text:
        text += ".0"
    return f"(- {text})" if decimal < 0 else text


def _conjunction(terms: Sequence[str]) -> str:
    if not terms:
        return "true"
    if len(terms) == 1:
        return terms[0]
    return f"(and {' '.join(terms)})"


def _disjunction(terms: Sequence[str]) -> str:
    if not terms:
        return "false"
    if len(terms) == 1:
        return terms[0]
    return f"(or {' '.join(terms)})"


def affine_term(weights: Sequence[float], bias: float, symbols: Sequence[str]) -> str:
    """
    SMT term for sum_k weights[k] * symbols[k] + bias.
    """
    products = [f"(* {smt_number(w)} {s})" for w, s in zip(weights, symbols)]
    return f"(+ {' '.join(products)} {smt_number(bias)})"


def state_symbols(step: int, num_features: int) -> List[str]:
    return [f"s_{step}_{k}" for k in range(num_features)]


@dataclass(frozen=True)
class ScoreComparison:
    """
    Comparison of two expert gate scores: `expert` beats `other` strictly or weakly.
    """

    expert: int
    other: int
    strict: bool

    def holds(self, scores: np.ndarray) -> bool:
        if self.strict:
            return bool(scores[self.expert] > scores[self.other])
        return bool(scores[self.expert] >= scores[self.other])

    def to_smt(self, score_terms: Sequence[str]) -> str:
        op = ">" if self.strict else ">="
        return f"({op} {score_terms[self.expert]} {score_terms[self.other]})"


@dataclass(frozen=True)
class ExpertSelection:
    """
    Condition under which the hard gate routes an input to `expert`.

    Attributes:
        gate: Raw-space gate the scores are computed with.
        expert: Selected expert.
        comparisons: Strict comparisons against lower-indexed experts, weak against higher ones.
    """

    gate: GatingParams
    expert: int
    comparisons: Tuple[ScoreComparison, ...]

    def holds(self, values) -> bool:
        scores = gate_scores(self.gate, np.asarray(values, dtype=float))
        return all(c.holds(scores) for c in self.comparisons)

    def to_smt(self, score_terms: Sequence[str]) -> str:
        return _conjunction([c.to_smt(score_terms) for c in self.comparisons])


@dataclass(frozen=True)
class ThresholdTest:
    """
    Axis-aligned test `x[feature] <= threshold`, or its complement when `above` is set.
    """

    feature: int
    threshold: float
    above: bool

    def holds(self, values) -> bool:
        value = values[self.feature]
        return bool(value > self.threshold) if self.above else bool(value <= self.threshold)

    def to_smt(self, symbols: Sequence[str]) -> str:
        op = ">" if self.above else "<="
        return f"({op} {symbols[self.feature]} {smt_number(self.threshold)})"


@dataclass(frozen=True)
class TreePath:
    """
    Root-to-leaf path of a tree and the action of its leaf.
    """

    tests: Tuple[ThresholdTest, ...]
    action: int

    def holds(self, values) -> bool:
        return all(test.holds(values) for test in self.tests)

    def to_smt(self, symbols: Sequence[str]) -> str:
        return _conjunction([test.to_smt(symbols) for test in self.tests])


def _require_hard(model: MoetModel):
    if model.mode != InferenceMode.HARD:
        raise ModeError(model.mode.value)


def encode_gate_selection(model: MoetModel) -> Tuple[ExpertSelection, ...]:
    """
    One selection predicate per expert, mirroring the argmax tie-break of hard inference.

    Expert j is selected iff its score is strictly greater than every lower
    expert's and at least every higher expert's, so exactly one predicate holds
    for any input.

    Raises:
        ModeError: If the model is not a hard-mode model.
    """
    _require_hard(model)
    num_experts = model.num_experts
    return tuple(
        ExpertSelection(
            model.gate,
            j,
            tuple(ScoreComparison(j, k, strict=k < j) for k in range(num_experts) if k != j),
        )
        for j in range(num_experts)
    )


def encode_tree(tree: TreeNode) -> Tuple[TreePath, ...]:
    """
    Root-to-leaf paths of a tree, left subtrees first.

    Each path conjoins `<=` tests for left turns and `>` tests for right turns
    and implies the argmax class of its leaf; exactly one path holds for any input.
    """
    paths: List[TreePath] = []

    def walk(node: TreeNode, tests: Tuple[ThresholdTest, ...]):
        if isinstance(node, InternalNode):
            walk(node.left, tests + (ThresholdTest(node.feature, node.threshold, above=False),))
            walk(node.right, tests + (ThresholdTest(node.feature, node.threshold, above=True),))
        else:
            paths.append(TreePath(tests, argmax_class(node.dist)))

    walk(tree, ())
    return tuple(paths)


def encoded_action(model: MoetModel, values) -> int:
    """
    Action implied by the selection and path predicates at a concrete state.
    """
    actions = [
        path.action
        for selection in encode_gate_selection(model)
        if selection.holds(values)
        for path in encode_tree(model.experts[selection.expert])
        if path.holds(values)
    ]
    if len(actions) != 1:
        raise ConfigError(f"Expected exactly one active rule, found {len(actions)}.")
    return actions[0]


def encode_policy_step(model: MoetModel, step: int, num_actions: int) -> Tuple[List[str], List[str]]:
    """
    Declarations and assertions that fix the action Booleans a_{step}_c to the policy's choice.
    """
    symbols = state_symbols(step, model.num_features)
    declarations: List[str] = []
    if model.num_experts > 1:
        score_terms = [f"g_{step}_{j}" for j in range(model.num_experts)]
        for j, row in enumerate(model.gate.coefficients):
            declarations.append(f"(define-fun {score_terms[j]} () Real {affine_term(row[:-1], row[-1], symbols)})")
    else:
        score_terms = []

    guarded: Dict[int, List[str]] = {c: [] for c in range(num_actions)}
    for selection in encode_gate_selection(model):
        selected = selection.to_smt(score_terms)
        for path in encode_tree(model.experts[selection.expert]):
            guarded[path.action].append(_conjunction([t for t in (selected, path.to_smt(symbols)) if t != "true"]))

    assertions = []
    for action in range(num_actions):
        name = f"a_{step}_{action}"
        declarations.append(f"(declare-const {name} Bool)")
        assertions.append(f"(assert (= {name} {_disjunction(guarded[action])}))")
    return declarations, assertions


def encode_safety(model: MoetModel, vspec: VerificationSpec) -> SmtScript:
    """
    Bounded query whose satisfiability witnesses a safety violation.

    States s_0..s_T are real constants; s_0 lies in the initial box, every step
    applies the policy's action through the affine dynamics, and some step t in
    1..T has |s_t[monitored]| > y_0. The policy is safe over the horizon iff
    the script is unsatisfiable.

    Args:
        model: Hard-mode policy.
        vspec: Initial box, bound, horizon and dynamics.

    Returns:
        The SMT-LIB2 script.

    Raises:
        ModeError: If the model is not a hard-mode model.
        ConfigError: If the model and dynamics disagree on features or actions.
    """
    _require_hard(model)
    num_features = vspec.dynamics.matrix.shape[0]
    num_actions = vspec.dynamics.offsets.shape[0]
    if model.num_features != num_features:
        raise ConfigError("Model and dynamics must have the same number of features.")
    if model.num_classes != num_actions:
        raise ConfigError("Model and dynamics must have the same number of actions.")

    declarations = [
        f"(declare-const {symbol} Real)"
        for t in range(vspec.t_max + 1)
        for symbol in state_symbols(t, num_features)
    ]
    assertions = [
        f"(assert (and (>= {s} {smt_number(lo)}) (<= {s} {smt_number(hi)})))"
        for s, (lo, hi) in zip(state_symbols(0, num_features), vspec.initial_box)
    ]

    matrix, offsets = vspec.dynamics.matrix, vspec.dynamics.offsets
    for t in range(vspec.t_max):
        step_declarations, step_assertions = encode_policy_step(model, t, num_actions)
        declarations.extend(step_declarations)
        assertions.extend(step_assertions)
        current, following = state_symbols(t, num_features), state_symbols(t + 1, num_features)
        for action in range(num_actions):
            updates = [
                f"(= {following[k]} {affine_term(matrix[k], offsets[action, k], current)})"
                for k in range(num_features)
            ]
            assertions.append(f"(assert (=> a_{t}_{action} {_conjunction(updates)}))")

    bound = smt_number(vspec.y_0)
    violations = []
    for t in range(1, vspec.t_max + 1):
        angle = state_symbols(t, num_features)[vspec.monitored_feature]
        violations.append(f"(> {angle} {bound})")
        violations.append(f"(< {angle} (- {bound}))")
    assertions.append(f"(assert {_disjunction(violations)})")
    return SmtScript(SMT_LOGIC, tuple(declarations), tuple(assertions))


def default_verification_spec(
    spec: Optional[CartPoleSpec] = None,
    t_max: int = 10,
    y_0: Optional[float] = None,
    s0_bound: Optional[float] = None,
) -> VerificationSpec:
    """
    CartPole safety query over the linearized dynamics.

    Args:
        spec: Physical constants; the classic ones if omitted.
        t_max: Number of steps checked.
        y_0: Angle bound; the environment's angle limit if omitted.
        s0_bound: Half-width of the initial box; the environment's init bound if omitted.
    """
    spec = spec or CartPoleSpec()
    bound = spec.init_bound if s0_bound is None else s0_bound
    return VerificationSpec(
        initial_box=tuple((-bound, bound) for _ in range(4)),
        y_0=spec.angle_limit if y_0 is None else y_0,
        t_max=t_max,
        dynamics=cartpole_linearization(spec),
        monitored_feature=ANGLE_FEATURE,
    )


def initial_state_from_assignment(assignment: Dict[str, float], num_features: int) -> np.ndarray:
    """
    The s_0 values of a solver model.

    Raises:
        ConfigError: If some s_0 constant is missing.
    """
    try:
        return np.array([assignment[s] for s in state_symbols(0, num_features)], dtype=float)
    except KeyError as exc:
        raise ConfigError(f"Solver model does not assign {exc.args[0]}.") from exc


def replay_counterexample(model: MoetModel, vspec: VerificationSpec, s0) -> Optional[Violation]:
    """
    Roll the affine dynamics forward from `s0` under hard inference.

    Returns:
        The first step whose monitored feature leaves [-y_0, y_0], or None if
        the trajectory stays within the bound for the whole horizon.

    Raises:
        ModeError: If the model is not a hard-mode model.
    """
    _require_hard(model)
    state = np.asarray(s0, dtype=float)
    trajectory = [tuple(state)]
    for step in range(1, vspec.t_max + 1):
        state = vspec.dynamics.step(state, predict_hard(model, state))
        trajectory.append(tuple(state))
        value = float(state[vspec.monitored_feature])
        if abs(value) > vspec.y_0:
            return Violation(step, value, tuple(trajectory))
    return None
