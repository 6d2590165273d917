import shutil
from unittest.mock import Mock, patch

import numpy as np
import pytest

from moet.config import InferenceMode
from moet.envs.gridworld import gridworld_optimal_policy
from moet.models.datasets import ClassDistribution, WeightedDataset
from moet.models.envs import GridworldSpec
from moet.models.gating import GatingParams
from moet.models.moet_model import MoetModel
from moet.models.trees import InternalNode, LeafNode

requires_z3 = pytest.mark.skipif(shutil.which("z3") is None, reason="z3 is not on PATH")


def leaf(*probs):
    return LeafNode(ClassDistribution(probs))


@pytest.fixture
def gridworld_spec():
    return GridworldSpec(n=5)


@pytest.fixture
def gridworld_data(gridworld_spec):
    optimal = gridworld_optimal_policy(gridworld_spec)
    cells = gridworld_spec.free_cells
    return WeightedDataset.unweighted(np.array(cells, dtype=float), [optimal[c] for c in cells], 4)


@pytest.fixture
def threshold_data():
    return WeightedDataset.unweighted(
        np.array([[0.0], [1.0], [2.0], [3.0]]),
        [0, 0, 1, 1],
        2,
    )


@pytest.fixture
def cartpole_model():
    """
    Two-expert CartPole policy: expert 0 while theta >= 0, expert 1 otherwise.

    Expert 0 pushes right; expert 1 pushes left unless theta_dot > 0.5.
    """
    gate = GatingParams(np.array([[0.0, 0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0, 0.0]]))
    experts = (
        leaf(0.1, 0.9),
        InternalNode(3, 0.5, leaf(0.8, 0.2), leaf(0.3, 0.7)),
    )
    return MoetModel(gate, experts, np.zeros(4), np.ones(4), 2, InferenceMode.HARD)


@pytest.fixture
def stabilizing_model():
    """
    Single-tree CartPole policy pushing toward the side the pole leans to.
    """
    gate = GatingParams(np.zeros((1, 5)))
    tree = InternalNode(2, 0.0, leaf(0.9, 0.1), leaf(0.1, 0.9))
    return MoetModel(gate, (tree,), np.zeros(4), np.ones(4), 2, InferenceMode.HARD)


@pytest.fixture
def completed_process():
    def build(stdout, returncode=0):
        process = Mock()
        process.stdout = stdout
        process.stderr = ""
        process.returncode = returncode
        return process

    return build


@pytest.fixture
def patched_run(completed_process):
    with patch("moet.handler.solver_client.subprocess.run", return_value=completed_process("unsat\n")) as run:
        yield run
