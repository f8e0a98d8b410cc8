"""Strict run configuration: key = value sections, no silent defaults.

Unknown sections or keys are rejected; every problem is reported at
once, with a section.key path.  The fully resolved configuration
(including defaults) is echoed into each run's manifest.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


COMMANDS = (
    "townes", "nls", "hartree", "sweep-lambda", "stability",
    "manybody", "definetti", "exponents",
)

# section -> key -> (type tag, default); None default means required
_SCHEMA: dict[str, dict[str, tuple[str, object]]] = {
    "model": {
        "s": ("float", 2.0),
        "profile": ("choice:none,gaussian,bump", "none"),
        "a": ("float", 0.0),
        "sigma": ("float", 1.0),
        "radius": ("float", 1.0),
        "beta": ("float", 0.0),
    },
    "grid": {
        "half_extent": ("float", 8.0),
        "points": ("int", 128),
    },
    "minimize": {
        "max_iterations": ("int", 4000),
        "step": ("float", 0.5),
        "tolerance": ("float", 1e-8),
        "backtrack": ("float", 0.5),
    },
    "sweep": {
        "lambdas": ("floats", [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0]),
        "workers": ("int", 1),
    },
    "stability": {
        "polish_steps": ("int", 200),
    },
    "manybody": {
        "modes": ("int", 6),
        "n_list": ("ints", [2, 3, 4, 5]),
        "cutoff": ("float", 10.0),
        "delta": ("float", 0.1),
        "epsilon": ("float", 0.1),
        "dump_density": ("bool", False),
    },
    "definetti": {
        "d": ("int", 2),
        "n_particles": ("int", 8),
        "states": ("int", 10),
        "samples": ("int", 1000000),
    },
    "exponents": {
        "s": ("str", "2"),
        "beta": ("str", "0.5"),
        "c": ("str", ""),
        "max_steps": ("int", 100000),
    },
    "output": {
        "directory": ("str", ""),
        "seed": ("int", 0),
    },
}

# which sections each command may use (output is always allowed)
_COMMAND_SECTIONS = {
    "townes": {"output"},
    "nls": {"model", "grid", "minimize", "output"},
    "hartree": {"model", "grid", "minimize", "output"},
    "sweep-lambda": {"model", "grid", "sweep", "output"},
    "stability": {"model", "grid", "stability", "output"},
    "manybody": {"model", "grid", "manybody", "output"},
    "definetti": {"definetti", "output"},
    "exponents": {"exponents", "output"},
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    values: dict = field(default_factory=dict)  # section -> key -> value

    def __getitem__(self, pair):
        section, key = pair
        return self.values[section][key]

    def manifest(self) -> dict:
        return {"command": self.command, "config": self.values}


def _parse_value(tag: str, raw: str, path: str, problems: list[str]):
    try:
        if tag == "float":
            return float(raw)
        if tag == "int":
            return int(raw)
        if tag == "bool":
            low = raw.strip().lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        if tag == "str":
            return raw.strip()
        if tag == "floats":
            return [float(t) for t in raw.replace(",", " ").split()]
        if tag == "ints":
            return [int(t) for t in raw.replace(",", " ").split()]
        if tag.startswith("choice:"):
            options = tag.split(":", 1)[1].split(",")
            val = raw.strip().lower()
            if val not in options:
                raise ValueError(f"expected one of {options}")
            return val
    except ValueError as exc:
        problems.append(f"{path}: cannot parse {raw!r} ({exc})")
        return None
    raise AssertionError(f"unknown tag {tag}")


def validate(command: str, text: str = "") -> RunConfig:
    """Resolve a config text for the given command, or raise ConfigError
    listing every problem."""
    problems: list[str] = []
    if command not in COMMANDS:
        raise ConfigError([f"unknown command {command!r}"])
    allowed = _COMMAND_SECTIONS[command]

    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"config syntax: {exc}"]) from exc

    values: dict = {}
    for section in allowed:
        values[section] = {
            key: default for key, (_, default) in _SCHEMA[section].items()
        }

    for section in parser.sections():
        if section not in allowed:
            problems.append(
                f"{section}: unknown or inapplicable section for command "
                f"{command!r} (allowed: {sorted(allowed)})"
            )
            continue
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                problems.append(f"{section}.{key}: unknown key")
                continue
            tag, _ = _SCHEMA[section][key]
            val = _parse_value(tag, raw, f"{section}.{key}", problems)
            if val is not None:
                values[section][key] = val

    _semantic_checks(command, values, problems)
    if problems:
        raise ConfigError(problems)
    if not values["output"]["directory"]:
        root = os.environ.get("NLS2D_OUTPUT_ROOT", ".")
        values["output"]["directory"] = os.path.join(root, f"nls2d-{command}")
    return RunConfig(command=command, values=values)


def _semantic_checks(command: str, values: dict, problems: list[str]) -> None:
    model = values.get("model")
    if model:
        if model["s"] <= 0:
            problems.append(f"model.s: must be > 0, got {model['s']}")
        if model["beta"] < 0:
            problems.append(f"model.beta: must be >= 0, got {model['beta']}")
        if model["sigma"] <= 0:
            problems.append("model.sigma: must be > 0")
        if model["radius"] <= 0:
            problems.append("model.radius: must be > 0")
        needs_profile = command in ("hartree", "sweep-lambda", "stability", "manybody")
        if needs_profile and model["profile"] == "none":
            problems.append(
                f"model.profile: the {command} command needs an interaction "
                "profile (gaussian or bump)"
            )
    grid = values.get("grid")
    if grid:
        n = grid["points"]
        if n < 2 or (n & (n - 1)) != 0:
            problems.append(f"grid.points: must be a power of two >= 2, got {n}")
        if grid["half_extent"] <= 0:
            problems.append("grid.half_extent: must be > 0")
    mb = values.get("manybody")
    if mb:
        from .manybody import DIMENSION_CAP, MAX_MODES

        if not 1 <= mb["modes"] <= MAX_MODES:
            problems.append(f"manybody.modes: must be in [1, {MAX_MODES}]")
        for N in mb["n_list"]:
            if N < 2:
                problems.append(f"manybody.n_list: N must be >= 2, got {N}")
                continue
            dim = comb(mb["modes"] + N - 1, N)
            if dim > DIMENSION_CAP:
                problems.append(
                    f"manybody.n_list: C({mb['modes']}+{N}-1,{N}) = {dim} "
                    f"exceeds the dimension cap {DIMENSION_CAP}"
                )
        if not 0.0 < mb["delta"] < 0.5:
            problems.append("manybody.delta: must lie in (0, 1/2)")
        if not 0.0 <= mb["epsilon"] < 1.0:
            problems.append("manybody.epsilon: must lie in [0, 1)")
        if mb["cutoff"] < 1.0:
            problems.append("manybody.cutoff: must be >= 1")
    df = values.get("definetti")
    if df:
        if not 1 <= df["d"] <= 4:
            problems.append("definetti.d: must lie in [1, 4]")
        if not 2 <= df["n_particles"] <= 32:
            problems.append("definetti.n_particles: must lie in [2, 32]")
        if df["states"] < 1:
            problems.append("definetti.states: must be >= 1")
    ex = values.get("exponents")
    if ex:
        for key in ("s", "beta"):
            try:
                val = Fraction(ex[key])
                if val <= 0:
                    problems.append(f"exponents.{key}: must be > 0")
            except (ValueError, ZeroDivisionError):
                problems.append(f"exponents.{key}: not a number: {ex[key]!r}")
