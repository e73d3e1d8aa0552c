"""Run configuration: a strict YAML schema with line-anchored errors.

Matrices are written row-major as flat lists of reals, with the dimension
given once as ``system.n``.  Unknown keys are rejected.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from lincs.algebra import Tolerances
from lincs.exceptions import ConfigError
from lincs.system import LinearSystemSpec

SCHEMA = {
    "system": {"n": True, "H": True, "drift": False, "Y": True, "rho": True},
    "grid": {"n_theta": False, "n_x": False, "x_min": False, "x_max": False},
    "cell_map": {"tau": False, "controls": False, "pts_per_cell": False,
                 "interior_threshold": False},
    "steer": {"budget": False, "tol": False, "targets": False},
    "tolerances": {name: False for name in Tolerances.__dataclass_fields__},
    "seed": None,
    "out_dir": None,
}
REQUIRED_SECTIONS = ("system",)


@dataclass
class RunConfig:
    H: np.ndarray
    X_drift: np.ndarray
    Y: list
    rho: float
    n_theta: int = 256
    n_x: int = 128
    x_min: float = -3.0
    x_max: float = 3.0
    tau: float = 0.25
    controls: list = None
    pts_per_cell: int = 5
    interior_threshold: int = 4
    steer_budget: int = 20000
    steer_tol: float = 0.05
    steer_targets: list = field(default_factory=lambda: [[1.2, 0.3], [1.1, -0.2], [0.9, 0.5]])
    tolerances: Tolerances = field(default_factory=Tolerances)
    seed: int = 0
    out_dir: str = "out"

    def __post_init__(self):
        if self.controls is None:
            self.controls = [-self.rho, -self.rho / 2, 0.0, self.rho / 2, self.rho]

    def system(self):
        return LinearSystemSpec.from_matrices(self.X_drift, self.Y, self.rho)

    def grid_params(self):
        return dict(n_theta=self.n_theta, n_x=self.n_x, x_min=self.x_min, x_max=self.x_max)

    def target_matrices(self):
        return [np.array([[a, b], [0.0, 1.0 / a]]) for a, b in self.steer_targets]


class _Node:
    """Plain value paired with the 1-based line it came from."""

    def __init__(self, value, line):
        self.value = value
        self.line = line


def _convert(node):
    line = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        out = {}
        for key_node, value_node in node.value:
            key = key_node.value
            if key in out:
                raise ConfigError(f"duplicate key {key!r}", key_node.start_mark.line + 1)
            out[key] = (key_node.start_mark.line + 1, _convert(value_node))
        return _Node(out, line)
    if isinstance(node, yaml.SequenceNode):
        return _Node([_convert(item) for item in node.value], line)
    value = yaml.safe_load(yaml.serialize(node))
    return _Node(value, line)


def _plain(node):
    if isinstance(node.value, dict):
        return {k: _plain(v) for k, (_, v) in node.value.items()}
    if isinstance(node.value, list):
        return [_plain(v) for v in node.value]
    return node.value


def _real(node, name):
    value = node.value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a real number", node.line)
    return float(value)


def _int(node, name):
    value = node.value
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name} must be an integer", node.line)
    return value


def _real_list(node, name):
    if not isinstance(node.value, list):
        raise ConfigError(f"{name} must be a list of reals", node.line)
    return [_real(item, name) for item in node.value]


def _matrix(node, name, n, traceless=True):
    entries = _real_list(node, name)
    if len(entries) != n * n:
        raise ConfigError(f"{name} needs {n * n} row-major entries, got {len(entries)}", node.line)
    M = np.array(entries).reshape(n, n)
    if traceless and abs(np.trace(M)) > 1e-12:
        raise ConfigError(f"{name}: matrix not traceless", node.line)
    return M


def parse_config_text(text, path=None):
    """Parse configuration text; see :func:`parse_config`."""
    try:
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        line = getattr(getattr(exc, "problem_mark", None), "line", None)
        raise ConfigError(f"invalid YAML: {exc}", None if line is None else line + 1, path) from None
    if root is None or not isinstance(root, yaml.MappingNode):
        raise ConfigError("configuration must be a mapping", 1, path)
    try:
        return _build(_convert(root))
    except ConfigError as exc:
        raise ConfigError(exc.message, exc.line, path) from None


def _build(root):
    top = root.value
    for key, (line, _) in top.items():
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}", line)
    for section in REQUIRED_SECTIONS:
        if section not in top:
            raise ConfigError(f"missing key {section!r}", root.line)
    sections = {}
    for name, keys in SCHEMA.items():
        if keys is None or name not in top:
            continue
        line, node = top[name]
        if not isinstance(node.value, dict):
            raise ConfigError(f"{name} must be a mapping", line)
        for key, (kline, _) in node.value.items():
            if key not in keys:
                raise ConfigError(f"unknown key {name}.{key!r}", kline)
        for key, required in keys.items():
            if required and key not in node.value:
                raise ConfigError(f"missing key {name}.{key}", line)
        sections[name] = {k: v for k, (_, v) in node.value.items()}

    system = sections["system"]
    n = _int(system["n"], "system.n")
    if n < 2:
        raise ConfigError("system.n must be at least 2", system["n"].line)
    rho = _real(system["rho"], "system.rho")
    if not rho > 0:
        raise ConfigError("rho must be positive", system["rho"].line)
    H = _matrix(system["H"], "system.H", n)
    drift = _matrix(system["drift"], "system.drift", n) if "drift" in system else H.copy()
    if not isinstance(system["Y"].value, list) or not system["Y"].value:
        raise ConfigError("system.Y must be a non-empty list of matrices", system["Y"].line)
    Y = [_matrix(item, "system.Y", n) for item in system["Y"].value]
    cfg = RunConfig(H=H, X_drift=drift, Y=Y, rho=rho)

    grid = sections.get("grid", {})
    for key in ("n_theta", "n_x"):
        if key in grid:
            setattr(cfg, key, _int(grid[key], f"grid.{key}"))
    for key in ("x_min", "x_max"):
        if key in grid:
            setattr(cfg, key, _real(grid[key], f"grid.{key}"))
    if cfg.n_theta < 2 or cfg.n_theta % 2:
        raise ConfigError("grid.n_theta must be a positive even number", grid.get("n_theta", root).line)
    if cfg.n_x < 1:
        raise ConfigError("grid.n_x must be positive", grid.get("n_x", root).line)
    if not cfg.x_max > cfg.x_min:
        raise ConfigError("grid.x_max must exceed grid.x_min", grid.get("x_max", root).line)

    cell_map = sections.get("cell_map", {})
    if "tau" in cell_map:
        cfg.tau = _real(cell_map["tau"], "cell_map.tau")
        if not cfg.tau > 0:
            raise ConfigError("cell_map.tau must be positive", cell_map["tau"].line)
    if "controls" in cell_map:
        cfg.controls = _real_list(cell_map["controls"], "cell_map.controls")
    if any(abs(c) > rho + 1e-12 for c in cfg.controls):
        raise ConfigError("controls must lie in [-rho, rho]", cell_map.get("controls", root).line)
    for key in ("pts_per_cell", "interior_threshold"):
        if key in cell_map:
            value = _int(cell_map[key], f"cell_map.{key}")
            if value < 1:
                raise ConfigError(f"cell_map.{key} must be positive", cell_map[key].line)
            setattr(cfg, key, value)

    steer = sections.get("steer", {})
    if "budget" in steer:
        cfg.steer_budget = _int(steer["budget"], "steer.budget")
    if "tol" in steer:
        cfg.steer_tol = _real(steer["tol"], "steer.tol")
        if not cfg.steer_tol > 0:
            raise ConfigError("steer.tol must be positive", steer["tol"].line)
    if "targets" in steer:
        targets = []
        for item in steer["targets"].value:
            pair = _real_list(item, "steer.targets")
            if len(pair) != 2 or not pair[0] > 0:
                raise ConfigError("steer.targets entries are [diagonal > 0, upper-right]", item.line)
            targets.append(pair)
        cfg.steer_targets = targets

    tolerances = sections.get("tolerances", {})
    for key, node in tolerances.items():
        value = _real(node, f"tolerances.{key}")
        if not value > 0:
            raise ConfigError(f"tolerances.{key} must be positive", node.line)
        setattr(cfg.tolerances, key, value)

    if "seed" in top:
        cfg.seed = _int(top["seed"][1], "seed")
    if "out_dir" in top:
        node = top["out_dir"][1]
        if not isinstance(node.value, str):
            raise ConfigError("out_dir must be a string", node.line)
        cfg.out_dir = node.value
    return cfg


def parse_config(path):
    """Read and validate a run configuration file.

    Raises
    ------
    ConfigError
        On a missing or unknown key, a non-traceless matrix, ``rho <= 0`` or
        any other schema violation; the message carries ``path:line:``.
    """
    path = Path(path)
    return parse_config_text(path.read_text(), str(path))


def default_config_text():
    return resources.files("lincs").joinpath("data/default.yaml").read_text()


def default_config():
    return parse_config_text(default_config_text(), "<default>")
