import numpy as np

from moet.envs.gridworld import gridworld_optimal_policy
from moet.imitation.evaluation import Student, as_policy
from moet.models.envs import GridworldSpec
from moet.models.verification import EquivalenceResult


def check_gridworld_equivalence(policy: Student, spec: GridworldSpec) -> EquivalenceResult:
    """
    Compare a policy with the optimal Gridworld policy on every free cell.

    Cells are visited in lexicographic (x, y) order, so a reported difference
    is the smallest differing cell.

    Raises:
        UnreachableCellError: If some free cell cannot reach a door.
    """
    act = as_policy(policy)
    optimal = gridworld_optimal_policy(spec)
    for cell in spec.free_cells:
        action = int(act(np.array(cell, dtype=float)))
        if action != optimal[cell]:
            return EquivalenceResult(False, cell, optimal[cell], action)
    return EquivalenceResult(True)
