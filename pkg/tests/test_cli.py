import logging
from unittest.mock import patch

import pytest
from conftest import leaf

from moet.cli import configure_logging, main
from moet.config import InferenceMode
from moet.learning.dtree import fit_tree
from moet.learning.trainer import tree_model
from moet.models.trees import TreeFitConfig
from moet.utils.file_utils import load_model, read_ledger, save_model
from moet.verify.smt import default_verification_spec, encode_safety

GRIDWORLD_CONFIG = """[run]
env = gridworld
learner = viper-tree

[tree]
max_depth = 3

[dagger]
iterations = 2
rollouts_per_iteration = 2
eval_episodes = 2
"""

SAT_ALWAYS_RIGHT = """sat
(model
  (define-fun s_0_0 () Real 0.0)
  (define-fun s_0_1 () Real 0.0)
  (define-fun s_0_2 () Real 0.0)
  (define-fun s_0_3 () Real 0.0)
)
"""


@pytest.fixture
def gridworld_config(tmp_path):
    path = tmp_path / "gridworld.ini"
    path.write_text(GRIDWORLD_CONFIG)
    return str(path)


@pytest.fixture
def gridworld_tree_path(tmp_path, gridworld_data):
    def build(depth):
        path = tmp_path / f"tree_{depth}.moet"
        save_model(tree_model(fit_tree(gridworld_data, TreeFitConfig(max_depth=depth)), 2, 4), path)
        return str(path)

    return build


@pytest.fixture
def always_right_path(tmp_path):
    path = tmp_path / "always_right.moet"
    save_model(tree_model(leaf(0.1, 0.9), 4, 2), path)
    return str(path)


class TestTrain:
    def test_writes_model_and_ledgers(self, tmp_path, gridworld_config, capsys):
        out = tmp_path / "run"

        code = main(["train", "--config", gridworld_config, "--out", str(out)])

        assert code == 0
        assert len(load_model(out / "model.moet").experts) == 1
        assert [r.iteration for r in read_ledger(out / "iterations.csv")] == [1, 2]
        assert len(read_ledger(out / "results.csv")) == 1
        assert "best iteration" in capsys.readouterr().out

    def test_results_ledger_accumulates(self, tmp_path, gridworld_config):
        out = str(tmp_path / "run")

        main(["train", "--config", gridworld_config, "--out", out])
        main(["train", "--config", gridworld_config, "--out", out, "--seed", "4"])

        assert [r.seed for r in read_ledger(tmp_path / "run" / "results.csv")] == [0, 4]

    @pytest.mark.parametrize(
        "env,dagger",
        [
            ("gridworld", ""),
            ("cartpole", "q_num_rollouts = 2\nq_horizon = 10\n"),
            ("mountaincar", "q_num_rollouts = 2\nq_horizon = 10\n"),
        ],
    )
    def test_same_seed_same_outputs(self, tmp_path, env, dagger):
        config = tmp_path / f"{env}.ini"
        config.write_text(
            f"[run]\nenv = {env}\nlearner = moet-hard\nseed = 3\n\n[moet]\nnum_experts = 2\nexpert_max_depth = 1\n"
            f"epochs = 5\n\n[dagger]\niterations = 2\nrollouts_per_iteration = 1\neval_episodes = 2\n{dagger}"
        )

        for run in ("first", "second"):
            assert main(["train", "--config", str(config), "--out", str(tmp_path / run)]) == 0

        for name in ("model.moet", "iterations.csv", "results.csv"):
            assert (tmp_path / "first" / name).read_bytes() == (tmp_path / "second" / name).read_bytes()

    def test_malformed_config(self, tmp_path):
        config = tmp_path / "bad.ini"
        config.write_text("[moet]\nnum_experts = lots\n")

        code = main(["train", "--config", str(config), "--out", str(tmp_path / "run")])

        assert code == 1
        assert not (tmp_path / "run").exists()


class TestEval:
    def test_reports_and_writes_csvs(self, tmp_path, gridworld_config, gridworld_tree_path, capsys):
        slice_path = tmp_path / "slice.csv"
        trajectory_path = tmp_path / "trajectory.csv"

        code = main(
            [
                "eval", "--config", gridworld_config, "--model", gridworld_tree_path(3),
                "--episodes", "3", "--rules", "--slice-csv", str(slice_path), "--resolution", "5",
                "--trajectory-csv", str(trajectory_path),
            ]
        )

        out = capsys.readouterr().out
        assert code == 0
        assert "fidelity 1.0000, depth 3, nodes 9" in out
        assert "if x <= 1.5:" in out
        assert len(slice_path.read_text().splitlines()) == 26
        assert trajectory_path.read_text().startswith("step,x,y,action,next_x,next_y,reward,done")

    def test_missing_model(self, tmp_path, gridworld_config):
        assert main(["eval", "--config", gridworld_config, "--model", str(tmp_path / "none.moet")]) == 1


class TestSweep:
    def test_trains_every_configuration(self, tmp_path, gridworld_config):
        config = tmp_path / "sweep.ini"
        config.write_text(GRIDWORLD_CONFIG + "\n[sweep]\ntree.max_depth = 1, 3\n")
        out = tmp_path / "sweep"

        code = main(["sweep", "--config", str(config), "--out", str(out), "--reeval"])

        assert code == 0
        assert [r.depth for r in read_ledger(out / "results.csv")] == [1, 3]
        assert (out / "config_000" / "model.moet").exists()
        assert (out / "config_001" / "model.moet").exists()
        assert 1 <= len(read_ledger(out / "pareto.csv")) <= 2
        assert len(read_ledger(out / "reeval.csv")) == len(read_ledger(out / "pareto.csv"))

    def test_workers_configure_logging(self, tmp_path):
        config = tmp_path / "sweep.ini"
        config.write_text(GRIDWORLD_CONFIG + "\n[sweep]\ntree.max_depth = 1, 3\n")
        pools = []

        class InlineExecutor:
            def __init__(self, max_workers, initializer, initargs):
                pools.append((max_workers, initializer, initargs))
                initializer(*initargs)

            def __enter__(self):
                return self

            def __exit__(self, *exc):
                return False

            def map(self, fn, items):
                return map(fn, items)

        with patch("moet.cli.ProcessPoolExecutor", InlineExecutor):
            code = main(["sweep", "--config", str(config), "--out", str(tmp_path / "sweep"), "--jobs", "2"])

        assert code == 0
        assert pools == [(2, configure_logging, (logging.INFO,))]
        assert len(read_ledger(tmp_path / "sweep" / "results.csv")) == 2

    def test_requires_config(self, tmp_path):
        assert main(["sweep", "--out", str(tmp_path)]) == 1


class TestVerifyGridworld:
    def test_equivalent(self, tmp_path, gridworld_config, gridworld_tree_path, capsys):
        code = main(["verify", "--config", gridworld_config, "--model", gridworld_tree_path(3), "--out", str(tmp_path)])

        assert code == 0
        assert capsys.readouterr().out.strip() == "equivalent"

    def test_not_equivalent(self, tmp_path, gridworld_config, gridworld_tree_path, capsys):
        code = main(["verify", "--config", gridworld_config, "--model", gridworld_tree_path(1), "--out", str(tmp_path)])

        assert code == 3
        assert "not equivalent at (1, 4): expected 1, got 0" in capsys.readouterr().out


class TestVerifyCartPole:
    def test_unsat_is_safe(self, tmp_path, always_right_path, patched_run, capsys):
        code = main(["verify", "--model", always_right_path, "--out", str(tmp_path)])

        assert code == 0
        assert capsys.readouterr().out.startswith("unsat (")
        assert (tmp_path / "safety.smt2").read_text().startswith("(set-logic QF_LRA)")

    def test_sat_replays_counterexample(self, tmp_path, always_right_path, completed_process, capsys):
        with patch("moet.handler.solver_client.subprocess.run", return_value=completed_process(SAT_ALWAYS_RIGHT)):
            code = main(["verify", "--model", always_right_path, "--out", str(tmp_path)])

        out = capsys.readouterr().out
        assert code == 3
        assert "counterexample s_0 = 0, 0, 0, 0" in out
        assert "violation at step 9" in out

    def test_unknown(self, tmp_path, always_right_path, completed_process):
        with patch("moet.handler.solver_client.subprocess.run", return_value=completed_process("unknown\n")):
            assert main(["verify", "--model", always_right_path, "--out", str(tmp_path)]) == 2

    def test_missing_solver(self, tmp_path, always_right_path):
        with patch("moet.handler.solver_client.subprocess.run", side_effect=FileNotFoundError()):
            code = main(["verify", "--model", always_right_path, "--out", str(tmp_path), "--solver-cmd", "nope"])

        assert code == 2

    def test_solver_command_flag(self, tmp_path, always_right_path, patched_run):
        main(["verify", "--model", always_right_path, "--out", str(tmp_path), "--solver-cmd", "cvc5 --lang smt2"])

        assert patched_run.call_args[0][0][:3] == ["cvc5", "--lang", "smt2"]

    def test_soft_model_is_rejected(self, tmp_path, cartpole_model, patched_run):
        path = tmp_path / "soft.moet"
        save_model(cartpole_model.with_mode(InferenceMode.SOFT), path)

        assert main(["verify", "--model", str(path), "--out", str(tmp_path)]) == 1
        patched_run.assert_not_called()


class TestEmitSmt:
    def test_writes_script(self, tmp_path, cartpole_model, capsys):
        model_path = tmp_path / "model.moet"
        save_model(cartpole_model, model_path)
        script_path = tmp_path / "query" / "q.smt2"

        code = main(["emit-smt", "--model", str(model_path), "--output", str(script_path)])

        text = script_path.read_text()
        assert code == 0
        assert text.startswith("(set-logic QF_LRA)\n")
        assert text.endswith("(check-sat)\n(get-model)\n")
        assert "g_9_1" in text
        assert capsys.readouterr().out.strip() == str(script_path)

    def test_script_is_the_encoded_query(self, tmp_path, cartpole_model):
        model_path = tmp_path / "model.moet"
        save_model(cartpole_model, model_path)
        script_path = tmp_path / "q.smt2"

        main(["emit-smt", "--model", str(model_path), "--output", str(script_path)])

        expected = encode_safety(load_model(model_path), default_verification_spec()).text
        assert script_path.read_bytes() == expected.encode()


class TestGridworldTable:
    def test_single_size(self, tmp_path, capsys):
        code = main(["gridworld-table", "--n-min", "5", "--n-max", "5", "--out", str(tmp_path)])

        lines = (tmp_path / "gridworld_table.csv").read_text().splitlines()
        assert code == 0
        assert lines[0] == "N,viper_depth,viper_nodes,viper_equivalent,moet_depth,moet_nodes,moet_equivalent"
        assert lines[1] == "5,3,9,True,1,3,True"
        assert "viper_depth" in capsys.readouterr().out

    def test_invalid_range(self, tmp_path):
        assert main(["gridworld-table", "--n-min", "6", "--n-max", "5", "--out", str(tmp_path)]) == 1


class TestUsage:
    def test_unknown_option(self):
        with pytest.raises(SystemExit) as e:
            main(["train", "--bogus"])

        assert e.value.code == 1

    def test_missing_command(self):
        with pytest.raises(SystemExit) as e:
            main([])

        assert e.value.code == 1
