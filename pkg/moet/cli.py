import argparse
import csv
import dataclasses
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from moet.config import (
    REEVAL_SEED_OFFSET,
    EnvName,
    InferenceMode,
)
from moet.envs.environment import Environment
from moet.envs.gridworld import gridworld_optimal_policy
from moet.envs.rollout import make_env, rollout
from moet.handler.solver_client import SolverClient
from moet.imitation.dagger import dagger_train, make_learner
from moet.imitation.evaluation import as_policy, evaluate_policy, pareto_front, policy_slice
from moet.imitation.teachers import make_teacher
from moet.learning.dtree import fit_tree
from moet.learning.trainer import model_stats, render_rules, train_moet, tree_model
from moet.models.datasets import WeightedDataset
from moet.models.envs import GridworldSpec
from moet.models.errors import AbstractMoetError, AbstractSolverError, ConfigError
from moet.models.imitation import DaggerResult, EvalResult, LedgerRow, ScoredModel
from moet.models.moet_model import MoetConfig, MoetModel
from moet.models.run_config import RunConfig
from moet.models.trees import TreeFitConfig
from moet.utils.file_utils import (
    append_ledger_row,
    expand_sweep,
    load_model,
    load_run_config,
    read_config_sections,
    resolve_output_dir,
    save_model,
    write_ledger,
    write_slice_csv,
    write_trajectory_csv,
)
from moet.verify.equivalence import check_gridworld_equivalence
from moet.verify.smt import (
    default_verification_spec,
    encode_safety,
    initial_state_from_assignment,
    replay_counterexample,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2
EXIT_VIOLATED = 3

MODEL_FILE = "model.moet"
RESULTS_FILE = "results.csv"
ITERATIONS_FILE = "iterations.csv"
PARETO_FILE = "pareto.csv"
REEVAL_FILE = "reeval.csv"
SCRIPT_FILE = "safety.smt2"
TABLE_FILE = "gridworld_table.csv"

LOG_FORMAT = "%(asctime)s %(levelname)s %(processName)s %(name)s: %(message)s"


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _with_overrides(config: RunConfig, args: argparse.Namespace) -> RunConfig:
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed, moet=dataclasses.replace(config.moet, seed=args.seed))
    if args.out is not None:
        config = dataclasses.replace(config, out_dir=args.out)
    return config


def _load_config(args: argparse.Namespace) -> RunConfig:
    config = load_run_config(args.config) if args.config else RunConfig()
    return _with_overrides(config, args)


def run_training(config: RunConfig) -> Tuple[Environment, DaggerResult]:
    """
    Distill the configured teacher into the configured student.
    """
    env = make_env(config.env, config.env_overrides)
    teacher = make_teacher(env, config.dagger.q_options)
    learner = make_learner(config.learner, config.moet, config.tree)
    result = dagger_train(
        env,
        teacher,
        learner,
        iterations=config.dagger.iterations,
        max_samples=config.dagger.max_samples,
        seed=config.seed,
        rollouts_per_iteration=config.dagger.rollouts_per_iteration,
        eval_episodes=config.dagger.eval_episodes,
    )
    return env, result


def ledger_row(config: RunConfig, result: EvalResult) -> LedgerRow:
    return LedgerRow(
        env=config.env.value,
        learner=config.learner.value,
        E=config.num_experts,
        depth=config.max_depth,
        iteration=result.iteration or 0,
        reward=result.mean_reward,
        fidelity=result.fidelity,
        nodes=result.nodes,
        depth_actual=result.depth,
        seed=config.seed,
    )


def cmd_train(args: argparse.Namespace) -> int:
    config = _load_config(args)
    _, result = run_training(config)
    out = resolve_output_dir(config)
    save_model(result.best_model, out / MODEL_FILE)
    write_ledger(out / ITERATIONS_FILE, [ledger_row(config, r) for r in result.results])
    append_ledger_row(out / RESULTS_FILE, ledger_row(config, result.best_result))
    print(
        f"best iteration {result.best_result.iteration}: reward {result.best_result.mean_reward:.4f}, "
        f"fidelity {result.best_result.fidelity:.4f}"
    )
    return EXIT_OK


def _default_slice(env: Environment) -> Tuple[int, int, Tuple[float, float], Tuple[float, float], np.ndarray]:
    if env.num_features == 4:
        return 3, 1, (-2.0, 2.0), (-2.0, 2.0), np.zeros(4)
    if isinstance(env.spec, GridworldSpec):
        edge = (0.0, float(env.spec.n - 1))
        return 0, 1, edge, edge, np.zeros(2)
    return 0, 1, (env.spec.min_position, env.spec.max_position), (-env.spec.max_speed, env.spec.max_speed), np.zeros(2)


def cmd_eval(args: argparse.Namespace) -> int:
    config = _load_config(args)
    model = load_model(args.model)
    env = make_env(config.env, config.env_overrides)
    teacher = make_teacher(env, config.dagger.q_options)
    episodes = args.episodes or config.dagger.eval_episodes
    result = evaluate_policy(env, model, teacher, episodes, config.seed)
    print(f"reward {result.mean_reward:.4f}, fidelity {result.fidelity:.4f}, depth {result.depth}, nodes {result.nodes}")
    if args.rules:
        print(render_rules(model, env.feature_names, env.action_names), end="")
    if args.slice_csv:
        x_feature, y_feature, x_range, y_range, base = _default_slice(env)
        xs, ys, actions = policy_slice(model, x_feature, y_feature, x_range, y_range, args.resolution, base)
        write_slice_csv(args.slice_csv, xs, ys, actions, env.feature_names[x_feature], env.feature_names[y_feature])
    if args.trajectory_csv:
        transitions, _ = rollout(env, as_policy(model), [config.seed, 0])
        write_trajectory_csv(args.trajectory_csv, transitions, env.feature_names)
    return EXIT_OK


def configure_logging(level: int) -> None:
    """
    Configure the root logger; also run in every sweep worker process.
    """
    logging.basicConfig(level=level, format=LOG_FORMAT)


def _log_level(args: argparse.Namespace) -> int:
    if args.verbose:
        return logging.DEBUG
    return logging.WARNING if args.quiet else logging.INFO


def _sweep_worker(job: Tuple[int, RunConfig]) -> Tuple[int, Optional[LedgerRow], Optional[str]]:
    index, config = job
    try:
        _, result = run_training(config)
        path = Path(config.out_dir) / f"config_{index:03d}" / MODEL_FILE
        save_model(result.best_model, path)
        return index, ledger_row(config, result.best_result), str(path)
    except Exception:  # pylint: disable=broad-except
        logger.exception("Sweep configuration %d failed", index)
        return index, None, None


def cmd_sweep(args: argparse.Namespace) -> int:
    if not args.config:
        raise ConfigError("sweep needs --config.")
    configs = [_with_overrides(c, args) for c in expand_sweep(read_config_sections(args.config))]
    out = resolve_output_dir(configs[0])
    jobs = list(enumerate(configs))
    if args.jobs > 1:
        with ProcessPoolExecutor(
            max_workers=args.jobs, initializer=configure_logging, initargs=(_log_level(args),)
        ) as pool:
            outcomes = list(pool.map(_sweep_worker, jobs))
    else:
        outcomes = [_sweep_worker(job) for job in jobs]

    completed = [(index, row, path) for index, row, path in outcomes if row is not None]
    write_ledger(out / RESULTS_FILE, [row for _, row, _ in completed])
    if not completed:
        logger.error("Every sweep configuration failed")
        return EXIT_CONFIG

    scored = [ScoredModel(row.reward, row.fidelity, path) for _, row, path in completed]
    front = {s.model_id for s in pareto_front(scored)}
    pareto = [(index, row, path) for index, row, path in completed if path in front]
    write_ledger(out / PARETO_FILE, [row for _, row, _ in pareto])
    print(f"{len(completed)} of {len(configs)} configurations trained, {len(pareto)} on the Pareto front")

    if args.reeval:
        reevaluated = []
        for index, row, path in pareto:
            config = configs[index]
            env = make_env(config.env, config.env_overrides)
            teacher = make_teacher(env, config.dagger.q_options)
            result = evaluate_policy(
                env, load_model(path), teacher, config.dagger.eval_episodes, config.seed + REEVAL_SEED_OFFSET
            )
            reevaluated.append(dataclasses.replace(row, reward=result.mean_reward, fidelity=result.fidelity))
        write_ledger(out / REEVAL_FILE, reevaluated)
    return EXIT_OK


def _verification_inputs(args: argparse.Namespace) -> Tuple[RunConfig, MoetModel]:
    config = _load_config(args)
    if not args.config:
        config = dataclasses.replace(config, env=EnvName.CARTPOLE)
    return config, load_model(args.model)


def _safety_script(config: RunConfig, model: MoetModel):
    env = make_env(EnvName.CARTPOLE, config.env_overrides if config.env == EnvName.CARTPOLE else {})
    vspec = default_verification_spec(env.spec, config.verify.t_max, config.verify.y_0, config.verify.s0_bound)
    return vspec, encode_safety(model, vspec)


def cmd_emit_smt(args: argparse.Namespace) -> int:
    config, model = _verification_inputs(args)
    _, script = _safety_script(config, model)
    path = Path(args.output) if args.output else resolve_output_dir(config) / SCRIPT_FILE
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(script.text, encoding="utf-8")
    print(path)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    config, model = _verification_inputs(args)
    if config.env == EnvName.GRIDWORLD:
        env = make_env(config.env, config.env_overrides)
        outcome = check_gridworld_equivalence(model, env.spec)
        if outcome.equivalent:
            print("equivalent")
            return EXIT_OK
        print(f"not equivalent at {outcome.state}: expected {outcome.expected}, got {outcome.actual}")
        return EXIT_VIOLATED

    vspec, script = _safety_script(config, model)
    path = resolve_output_dir(config) / SCRIPT_FILE
    path.write_text(script.text, encoding="utf-8")
    result = SolverClient(args.solver_cmd, config.verify.timeout).check(script)
    print(f"{result.status} ({result.elapsed_seconds:.3f}s)")
    if result.status == "unsat":
        return EXIT_OK
    if result.status != "sat":
        return EXIT_SOLVER

    s0 = initial_state_from_assignment(result.assignment, model.num_features)
    print("counterexample s_0 = " + ", ".join(f"{v:.17g}" for v in s0))
    violation = replay_counterexample(model, vspec, s0)
    if violation is not None:
        print(f"violation at step {violation.step}: angle {violation.value:.6g}")
    else:
        logger.warning("Counterexample did not replay to a violation under the affine dynamics")
    return EXIT_VIOLATED


def gridworld_table_rows(n_values: Sequence[int], max_depth: int, seed: int) -> List[dict]:
    """
    Smallest equivalent tree and a two-expert hard mixture for every grid size.

    Students are fitted on all free cells labeled by the optimal policy. Tree
    depths are tried from 1 up to `max_depth` until the tree is equivalent.
    """
    rows = []
    for n in n_values:
        spec = GridworldSpec(n=n)
        optimal = gridworld_optimal_policy(spec)
        cells = spec.free_cells
        data = WeightedDataset.unweighted(np.array(cells, dtype=float), [optimal[c] for c in cells], 4)

        tree_depth, tree_nodes, tree_equivalent = 0, 0, False
        for depth in range(1, max_depth + 1):
            tree = tree_model(fit_tree(data, TreeFitConfig(max_depth=depth)), 2, 4)
            tree_depth, tree_nodes = model_stats(tree)
            if check_gridworld_equivalence(tree, spec).equivalent:
                tree_equivalent = True
                break

        moet, _ = train_moet(data, MoetConfig(num_experts=2, expert_max_depth=0, seed=seed), InferenceMode.HARD)
        moet_depth, moet_nodes = model_stats(moet)
        rows.append(
            {
                "N": n,
                "viper_depth": tree_depth,
                "viper_nodes": tree_nodes,
                "viper_equivalent": tree_equivalent,
                "moet_depth": moet_depth,
                "moet_nodes": moet_nodes,
                "moet_equivalent": check_gridworld_equivalence(moet, spec).equivalent,
            }
        )
        logger.info("Gridworld N=%d: %s", n, rows[-1])
    return rows


def cmd_gridworld_table(args: argparse.Namespace) -> int:
    if not 2 <= args.n_min <= args.n_max <= 12:
        raise ConfigError("Grid sizes must satisfy 2 <= n-min <= n-max <= 12.")
    rows = gridworld_table_rows(range(args.n_min, args.n_max + 1), args.max_depth, args.seed or 0)
    out = Path(args.out or "out")
    out.mkdir(parents=True, exist_ok=True)
    columns = list(rows[0])
    with (out / TABLE_FILE).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=columns)
        writer.writeheader()
        writer.writerows(rows)

    widths = [max(len(c), *(len(str(r[c])) for r in rows)) for c in columns]
    print("  ".join(c.rjust(w) for c, w in zip(columns, widths)))
    for row in rows:
        print("  ".join(str(row[c]).rjust(w) for c, w in zip(columns, widths)))
    all_equivalent = all(r["viper_equivalent"] and r["moet_equivalent"] for r in rows)
    return EXIT_OK if all_equivalent else EXIT_VIOLATED


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI run-config file")
    common.add_argument("--seed", type=int, help="override the run seed")
    common.add_argument("--out", help="override the output directory")
    common.add_argument("--solver-cmd", help="solver command; {file} is replaced by the script path")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true", help="log debug messages")
    verbosity.add_argument("--quiet", action="store_true", help="log warnings and errors only")

    parser = _ArgumentParser(prog="moet", description="Distill, evaluate and verify mixture-of-expert-tree policies.")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    train = commands.add_parser("train", parents=[common], help="distill a teacher with DAgger")
    train.set_defaults(handler=cmd_train)

    evaluate = commands.add_parser("eval", parents=[common], help="evaluate a saved model")
    evaluate.add_argument("--model", required=True)
    evaluate.add_argument("--episodes", type=int)
    evaluate.add_argument("--rules", action="store_true", help="print the policy as rules")
    evaluate.add_argument("--slice-csv", help="write the policy over two features to this CSV")
    evaluate.add_argument("--resolution", type=int, default=41)
    evaluate.add_argument("--trajectory-csv", help="write one episode to this CSV")
    evaluate.set_defaults(handler=cmd_eval)

    sweep = commands.add_parser("sweep", parents=[common], help="train every configuration of a grid")
    sweep.add_argument("--jobs", type=int, default=1)
    sweep.add_argument("--reeval", action="store_true", help="re-evaluate Pareto models with fresh seeds")
    sweep.set_defaults(handler=cmd_sweep)

    emit = commands.add_parser("emit-smt", parents=[common], help="write the CartPole safety query")
    emit.add_argument("--model", required=True)
    emit.add_argument("--output")
    emit.set_defaults(handler=cmd_emit_smt)

    verify = commands.add_parser("verify", parents=[common], help="verify a hard-mode model")
    verify.add_argument("--model", required=True)
    verify.set_defaults(handler=cmd_verify)

    table = commands.add_parser("gridworld-table", parents=[common], help="tree and mixture sizes per grid size")
    table.add_argument("--n-min", type=int, default=5)
    table.add_argument("--n-max", type=int, default=10)
    table.add_argument("--max-depth", type=int, default=8)
    table.set_defaults(handler=cmd_gridworld_table)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(_log_level(args))
    try:
        return args.handler(args)
    except AbstractSolverError as exc:
        logger.error("%s", exc)
        return EXIT_SOLVER
    except AbstractMoetError as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
