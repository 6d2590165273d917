import configparser
import csv
import dataclasses
import itertools
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from moet.config import MODEL_FORMAT_VERSION, EnvName, InferenceMode, LearnerKind
from moet.models.datasets import ClassDistribution
from moet.models.envs import CartPoleSpec, GridworldSpec, MountainCarSpec, Transition
from moet.models.errors import ConfigError, FormatVersionMismatchError, ModelFormatError
from moet.models.gating import GatingParams
from moet.models.imitation import LedgerRow
from moet.models.moet_model import MoetConfig, MoetModel
from moet.models.run_config import DaggerConfig, RunConfig, VerifyConfig
from moet.models.trees import InternalNode, LeafNode, TreeFitConfig, TreeNode

MODEL_MAGIC = "moet-model"
""" First token of every model file. """

LEDGER_COLUMNS = [f.name for f in dataclasses.fields(LedgerRow)]
""" Column order of the results ledger. """

CONFIG_SECTIONS = ("run", "env", "moet", "tree", "dagger", "verify", "sweep")

_SPEC_TYPES = {
    EnvName.GRIDWORLD: GridworldSpec,
    EnvName.CARTPOLE: CartPoleSpec,
    EnvName.MOUNTAINCAR: MountainCarSpec,
}
_Q_KEYS = {
    "q_num_rollouts": int,
    "q_horizon": int,
    "q_discount": float,
    "q_rollout_noise": float,
    "q_exploration": float,
}


def _num(value: float) -> str:
    return format(float(value), ".17g")


def _serialize_tree(node: TreeNode, lines: List[str]):
    if isinstance(node, LeafNode):
        lines.append("node leaf " + " ".join(_num(p) for p in node.dist.probs))
        return
    lines.append(f"node internal {node.feature} {_num(node.threshold)}")
    _serialize_tree(node.left, lines)
    _serialize_tree(node.right, lines)


def dump_model(model: MoetModel) -> str:
    """
    Text form of a model.

    The format is line oriented: a `moet-model <version>` header, the
    dimensions and mode, the standardization constants, one `gate` line per
    expert with raw-space coefficients (bias last), and one preorder node list
    per expert tree, followed by `end`. Reals use 17 significant digits.
    """
    lines = [
        f"{MODEL_MAGIC} {MODEL_FORMAT_VERSION}",
        f"experts {model.num_experts} classes {model.num_classes} "
        f"features {model.num_features} mode {model.mode.value}",
        "mean " + " ".join(_num(v) for v in model.feature_mean),
        "std " + " ".join(_num(v) for v in model.feature_std),
    ]
    for j, row in enumerate(model.gate.coefficients):
        lines.append(f"gate {j} " + " ".join(_num(v) for v in row))
    for j, tree in enumerate(model.experts):
        lines.append(f"tree {j}")
        _serialize_tree(tree, lines)
    lines.append("end")
    return "\n".join(lines) + "\n"


def save_model(model: MoetModel, path) -> None:
    """
    Write a model file.

    Args:
        model: The model to save.
        path: Destination file; parent directories are created.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_model(model), encoding="utf-8")


class _ModelReader:
    def __init__(self, text: str, path: Optional[str]):
        self.lines = text.splitlines()
        self.position = 0
        self.path = path

    def fail(self, message: str):
        raise ModelFormatError(message, self.path, self.position)

    def next(self, keyword: str) -> List[str]:
        if self.position >= len(self.lines):
            self.fail(f"unexpected end of file, expected {keyword!r}")
        tokens = self.lines[self.position].split()
        self.position += 1
        if not tokens or tokens[0] != keyword:
            self.fail(f"expected {keyword!r}")
        return tokens[1:]

    def floats(self, keyword: str, count: int) -> List[float]:
        tokens = self.next(keyword)
        if len(tokens) != count:
            self.fail(f"expected {count} values after {keyword!r}, got {len(tokens)}")
        return [float(t) for t in tokens]

    def tree(self, num_classes: int, num_features: int) -> TreeNode:
        tokens = self.next("node")
        if tokens[:1] == ["leaf"] and len(tokens) == num_classes + 1:
            return LeafNode(ClassDistribution(tuple(float(t) for t in tokens[1:])))
        if tokens[:1] == ["internal"] and len(tokens) == 3:
            feature = int(tokens[1])
            if not 0 <= feature < num_features:
                self.fail(f"feature index {feature} out of range")
            threshold = float(tokens[2])
            left = self.tree(num_classes, num_features)
            right = self.tree(num_classes, num_features)
            return InternalNode(feature, threshold, left, right)
        self.fail("malformed node line")


def parse_model(text: str, path: Optional[str] = None) -> MoetModel:
    """
    Parse the text form written by `dump_model`.

    Raises:
        FormatVersionMismatchError: If the header is missing or has another version.
        ModelFormatError: If the file is truncated or malformed.
    """
    lines = text.splitlines()
    header = lines[0].split() if lines else []
    if len(header) != 2 or header[0] != MODEL_MAGIC or header[1] != str(MODEL_FORMAT_VERSION):
        found = header[1] if len(header) == 2 and header[0] == MODEL_MAGIC else None
        raise FormatVersionMismatchError(found, MODEL_FORMAT_VERSION, path)

    reader = _ModelReader(text, path)
    reader.position = 1
    try:
        dims = reader.next("experts")
        if len(dims) != 7 or dims[1::2] != ["classes", "features", "mode"]:
            reader.fail("malformed dimensions line")
        num_experts, num_classes, num_features = int(dims[0]), int(dims[2]), int(dims[4])
        mode = InferenceMode(dims[6])
        mean = reader.floats("mean", num_features)
        std = reader.floats("std", num_features)
        gate = []
        for j in range(num_experts):
            row = reader.floats("gate", num_features + 2)
            if row[0] != j:
                reader.fail(f"expected gate row {j}")
            gate.append(row[1:])
        experts = []
        for j in range(num_experts):
            if reader.next("tree") != [str(j)]:
                reader.fail(f"expected tree {j}")
            experts.append(reader.tree(num_classes, num_features))
        reader.next("end")
        return MoetModel(GatingParams(np.array(gate)), tuple(experts), mean, std, num_classes, mode)
    except (ValueError, ConfigError) as exc:
        raise ModelFormatError(str(exc), path, reader.position) from exc


def load_model(path) -> MoetModel:
    """
    Read a model file.

    Args:
        path: The file to read.

    Returns:
        The model.
    """
    return parse_model(Path(path).read_text(encoding="utf-8"), str(path))


def write_ledger(path, rows: Iterable[LedgerRow]) -> None:
    """
    Write a results ledger, replacing any existing file.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=LEDGER_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row.to_dict())


def append_ledger_row(path, row: LedgerRow) -> None:
    """
    Append one row to a results ledger, writing the header if the file is new.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    is_new = not path.exists() or path.stat().st_size == 0
    with path.open("a", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=LEDGER_COLUMNS)
        if is_new:
            writer.writeheader()
        writer.writerow(row.to_dict())


def read_ledger(path) -> List[LedgerRow]:
    """
    Read a results ledger; fields are converted by the ledger row schema.
    """
    with Path(path).open(newline="", encoding="utf-8") as handle:
        return LedgerRow.schema().load(list(csv.DictReader(handle)), many=True)


def write_trajectory_csv(path, transitions: Sequence[Transition], feature_names: Optional[Sequence[str]] = None) -> None:
    """
    Write one transition per row: step, state, action, next state, reward, done.
    """
    if feature_names is None:
        width = len(transitions[0].state.values) if transitions else 0
        feature_names = [f"x{k}" for k in range(width)]
    header = ["step", *feature_names, "action", *[f"next_{n}" for n in feature_names], "reward", "done"]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for step, t in enumerate(transitions):
            writer.writerow(
                [step, *map(_num, t.state.values), t.action, *map(_num, t.next_state.values), _num(t.reward), int(t.done)]
            )


def write_slice_csv(path, xs: np.ndarray, ys: np.ndarray, actions: np.ndarray, x_name: str, y_name: str) -> None:
    """
    Write a policy slice as (x, y, action) rows.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow([x_name, y_name, "action"])
        for row, y in enumerate(ys):
            for column, x in enumerate(xs):
                writer.writerow([_num(x), _num(y), int(actions[row, column])])


def _parse_cells(value: str) -> frozenset:
    cells = []
    for item in value.replace(";", " ").split():
        x, _, y = item.partition(":")
        cells.append((int(x), int(y)))
    return frozenset(cells)


def _parse_rows(value: str) -> frozenset:
    return frozenset(int(v) for v in value.replace(",", " ").split())


def _coerce(value: str, target):
    if isinstance(target, type) and issubclass(target, Enum):
        return target(value)
    if target is bool:
        return value.strip().lower() in ("1", "true", "yes", "on")
    if target is int:
        return int(value)
    if target is float:
        return float(value)
    return value


def _typed_fields(cls, values: Dict[str, str], section: str, skip: Sequence[str] = ()) -> Dict:
    types = {f.name: f.type for f in dataclasses.fields(cls) if f.name not in skip}
    unknown = sorted(set(values) - set(types))
    if unknown:
        raise ConfigError(f"Unknown keys in [{section}]: {', '.join(unknown)}")
    return {key: _coerce(value, types[key]) for key, value in values.items()}


def _env_overrides(env: EnvName, values: Dict[str, str]) -> Dict:
    if env != EnvName.GRIDWORLD:
        return _typed_fields(_SPEC_TYPES[env], values, "env")
    overrides = {}
    for key, value in values.items():
        if key == "walls":
            overrides[key] = _parse_cells(value)
        elif key in ("left_door_rows", "right_door_rows"):
            overrides[key] = _parse_rows(value)
        elif key == "n" or key == "horizon":
            overrides[key] = int(value)
        elif key == "step_reward":
            overrides[key] = float(value)
        else:
            raise ConfigError(f"Unknown keys in [env]: {key}")
    return overrides


def read_config_sections(path) -> Dict[str, Dict[str, str]]:
    """
    Read an INI run-config file into plain section dictionaries.

    Raises:
        ConfigError: If the file is missing, unparsable or has unknown sections.
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as handle:
            parser.read_file(handle)
    except OSError as exc:
        raise ConfigError(f"Cannot read config file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"Malformed config file {path}: {exc}") from exc
    unknown = sorted(set(parser.sections()) - set(CONFIG_SECTIONS))
    if unknown:
        raise ConfigError(f"Unknown config sections: {', '.join(unknown)}")
    return {section: dict(parser.items(section)) for section in parser.sections()}


def run_config_from_sections(sections: Dict[str, Dict[str, str]]) -> RunConfig:
    """
    Build a validated run configuration from config sections.

    Raises:
        ConfigError: If a key is unknown or a value is invalid.
    """
    try:
        run = dict(sections.get("run", {}))
        env = EnvName(run.pop("env", EnvName.GRIDWORLD.value))
        learner = LearnerKind(run.pop("learner", LearnerKind.MOET_HARD.value))
        seed = int(run.pop("seed", "0"))
        out_dir = run.pop("out", "out")
        if run:
            raise ConfigError(f"Unknown keys in [run]: {', '.join(sorted(run))}")

        dagger_values = dict(sections.get("dagger", {}))
        q_options = {
            key[len("q_"):]: cast(dagger_values.pop(key))
            for key, cast in _Q_KEYS.items()
            if key in dagger_values
        }
        dagger = DaggerConfig(**_typed_fields(DaggerConfig, dagger_values, "dagger", skip=("q_options",)), q_options=q_options)

        moet_values = _typed_fields(MoetConfig, sections.get("moet", {}), "moet")
        moet_values.setdefault("seed", seed)
        tree_values = _typed_fields(TreeFitConfig, sections.get("tree", {}), "tree")
        tree_values.setdefault("max_depth", 3)

        return RunConfig(
            env=env,
            env_overrides=_env_overrides(env, sections.get("env", {})),
            learner=learner,
            moet=MoetConfig(**moet_values),
            tree=TreeFitConfig(**tree_values),
            dagger=dagger,
            verify=VerifyConfig(**_typed_fields(VerifyConfig, sections.get("verify", {}), "verify")),
            seed=seed,
            out_dir=out_dir,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_run_config(path) -> RunConfig:
    """
    Read and validate an INI run-config file.
    """
    return run_config_from_sections(read_config_sections(path))


def _sweep_grid(sections: Dict[str, Dict[str, str]]) -> List[Tuple[str, str, List[str]]]:
    grid = []
    for name, values in sections.get("sweep", {}).items():
        section, _, key = name.partition(".")
        if section not in CONFIG_SECTIONS or section == "sweep" or not key:
            raise ConfigError(f"Sweep entries must be named section.key, got {name!r}.")
        choices = [v.strip() for v in values.split(",") if v.strip()]
        if not choices:
            raise ConfigError(f"Sweep entry {name!r} has no values.")
        grid.append((section, key, choices))
    return grid


def _relevant_key(config: RunConfig) -> str:
    learner_part = config.tree if config.learner == LearnerKind.VIPER_TREE else config.moet
    return repr((config.env, sorted(config.env_overrides.items(), key=repr), config.learner, learner_part,
                 config.dagger, config.verify, config.seed))


def expand_sweep(sections: Dict[str, Dict[str, str]]) -> List[RunConfig]:
    """
    All run configurations of a sweep.

    Every `[sweep]` entry `section.key = v1, v2, ...` is a grid axis; the
    sweep is the cartesian product of the axes applied on top of the other
    sections. Configurations that differ only in settings their learner
    ignores are kept once, in first-seen order.

    Raises:
        ConfigError: If an entry or a resulting configuration is invalid.
    """
    grid = _sweep_grid(sections)
    base = {name: dict(values) for name, values in sections.items() if name != "sweep"}
    configs, seen = [], set()
    for combination in itertools.product(*(choices for _, _, choices in grid)):
        current = {name: dict(values) for name, values in base.items()}
        for (section, key, _), value in zip(grid, combination):
            current.setdefault(section, {})[key] = value
        config = run_config_from_sections(current)
        key = _relevant_key(config)
        if key not in seen:
            seen.add(key)
            configs.append(config)
    return configs


def resolve_output_dir(config: RunConfig, override: Optional[str] = None) -> Path:
    path = Path(override or config.out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path
