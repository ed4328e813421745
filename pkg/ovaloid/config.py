#!/usr/bin/env python3
# SPDX-License-Identifier: GPL-3.0-or-later

"""Experiment files: Markdown with a frontmatter block of settings."""

import logging
import os
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Self

logger = logging.getLogger("ovaloid.config")

# Matches: key_name: value
KEY_VALUE_PATTERN = re.compile(r"^([a-zA-Z0-9_-]+):\s*(.*)$")

COMMANDS = ("verify-identity", "wirtinger", "mixed", "flow")

TRUE_WORDS = frozenset({"true", "yes", "on", "1"})
FALSE_WORDS = frozenset({"false", "no", "off", "0"})


class ConfigError(ValueError):
    """An experiment file or override does not match the command's schema."""


@dataclass
class Markdown:
    """
    Markdown text with parsed frontmatter.

    Attributes:
        frontmatter: key-value pairs between the leading ``---`` lines
        text: everything after the frontmatter
    """

    frontmatter: dict[str, str] = field(default_factory=dict)
    text: str = ""

    @classmethod
    def from_string(cls, content: str) -> Self:
        """
        Split ``content`` into frontmatter and text.

        Values may continue over several lines. Content without a complete
        ``---`` block has empty frontmatter.
        """
        lines = content.split("\n")
        if not lines or lines[0].strip() != "---":
            return cls(frontmatter={}, text=content)

        current_key = None
        current_value: list[str] = []
        frontmatter: dict[str, str] = {}

        for idx, line in enumerate(lines[1:], 1):
            if line.strip() == "---":
                if current_key:
                    frontmatter[current_key] = "\n".join(current_value).strip()
                return cls(frontmatter=frontmatter, text="\n".join(lines[idx + 1 :]))

            match = KEY_VALUE_PATTERN.match(line)
            if match:
                if current_key:
                    frontmatter[current_key] = "\n".join(current_value).strip()
                current_key = match.group(1)
                current_value = [match.group(2)]
            elif current_key:
                current_value.append(line)

        return cls(frontmatter={}, text=content)

    @classmethod
    def from_file(cls, file_path: Path) -> Self:
        """
        Raises:
            FileNotFoundError: If the file does not exist
            PermissionError: If the file cannot be read
        """
        return cls.from_string(file_path.read_text())


@dataclass(frozen=True)
class Option:
    """
    One configuration key.

    Attributes:
        kind: ``int``, ``float``, ``bool`` or ``str``
        default: value when the key is absent
        choices: allowed values for strings
        minimum: smallest allowed number
    """

    kind: type
    default: Any
    choices: tuple[str, ...] | None = None
    minimum: float | None = None

    def parse(self, key: str, raw: Any) -> Any:
        if isinstance(raw, str):
            raw = raw.strip()
        try:
            if self.kind is bool:
                value: Any = _parse_bool(raw)
            elif self.kind is int:
                if isinstance(raw, float) and not raw.is_integer():
                    raise ValueError(f"{raw} is not an integer")
                value = int(raw)
            elif self.kind is float:
                value = float(raw)
            else:
                value = str(raw)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"{key}: expected {self.kind.__name__}, got {raw!r}") from e

        if self.choices is not None and value not in self.choices:
            raise ConfigError(f"{key}: {value!r} is not one of {', '.join(self.choices)}")
        if self.minimum is not None and value < self.minimum:
            raise ConfigError(f"{key}: {value} is below the minimum {self.minimum:g}")
        return value


def _parse_bool(raw: Any) -> bool:
    if isinstance(raw, bool):
        return raw
    word = str(raw).lower()
    if word in TRUE_WORDS:
        return True
    if word in FALSE_WORDS:
        return False
    raise ValueError(f"{raw!r} is not a boolean")


COMMON_OPTIONS: dict[str, Option] = {
    "description": Option(str, ""),
    "dim": Option(int, 2, minimum=2),
    "resolution": Option(int, 0, minimum=0),
    "seed": Option(int, 0, minimum=0),
    "tol": Option(float, 1e-6, minimum=0),
    "bodies": Option(int, 4, minimum=1),
    "functions": Option(int, 3, minimum=1),
    "bandlimit": Option(int, 4, minimum=1),
    "amplitude": Option(float, 0.1, minimum=0),
    "symmetric": Option(bool, False),
    "corpus": Option(str, "random", choices=("ball", "ellipsoid", "random", "mixed")),
    "threads": Option(int, 1, minimum=1),
}

COMMAND_OPTIONS: dict[str, dict[str, Option]] = {
    "verify-identity": {
        "convergence": Option(bool, True),
    },
    "wirtinger": {
        "family": Option(str, "random", choices=("random", "equality", "scalar-d")),
        "tol": Option(float, 1e-7, minimum=0),
    },
    "mixed": {
        "radii": Option(str, "1,2"),
        "tol": Option(float, 1e-8, minimum=0),
    },
    "flow": {
        "kind": Option(
            str,
            "p-centro-affine",
            choices=("weighted-affine", "p-centro-affine", "weighted-p-centro-affine"),
        ),
        "p": Option(float, 1.0, minimum=1),
        "phi": Option(str, "one"),
        "t_end": Option(float, 0.01, minimum=0),
        "dt0": Option(float, 0.0, minimum=0),
        "normalize": Option(str, "none", choices=("none", "fixed-volume")),
        "record_every": Option(int, 1, minimum=1),
        "weight": Option(str, "one"),
        "psi": Option(str, ""),
        "steps_min": Option(int, 0, minimum=0),
        "symmetric": Option(bool, True),
        "bodies": Option(int, 1, minimum=1),
    },
}


def schema_for(command: str) -> dict[str, Option]:
    if command not in COMMAND_OPTIONS:
        raise ConfigError(f"Unknown command {command!r}")
    return {**COMMON_OPTIONS, **COMMAND_OPTIONS[command]}


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Validated settings of one experiment.

    Attributes:
        command: the CLI command the settings belong to
        name: experiment name (file stem or ``default``)
        values: every schema key, parsed and with defaults filled in
        notes: the Markdown text after the frontmatter
    """

    command: str
    name: str
    values: dict[str, Any]
    notes: str = ""

    @classmethod
    def from_mapping(
        cls, command: str, settings: dict[str, Any], name: str = "default", notes: str = ""
    ) -> Self:
        """
        Raises:
            ConfigError: on unknown keys, wrong types or out-of-range values
        """
        schema = schema_for(command)
        unknown = sorted(set(settings) - set(schema))
        if unknown:
            raise ConfigError(f"Unknown key(s) for {command}: {', '.join(unknown)}")

        values = {key: option.default for key, option in schema.items()}
        for key, raw in settings.items():
            values[key] = schema[key].parse(key, raw)
        if values["dim"] not in (2, 3):
            raise ConfigError(f"dim: must be 2 or 3, got {values['dim']}")
        return cls(command=command, name=name, values=values, notes=notes)

    @classmethod
    def from_string(cls, command: str, content: str, name: str = "default") -> Self:
        md = Markdown.from_string(content)
        return cls.from_mapping(command, md.frontmatter, name=name, notes=md.text)

    @classmethod
    def from_file(cls, command: str, path: Path) -> Self:
        """
        Raises:
            ConfigError: if the file cannot be read or fails validation
        """
        try:
            content = path.read_text()
        except OSError as e:
            raise ConfigError(f"Cannot read experiment file {path}: {e}") from e
        try:
            return cls.from_string(command, content, name=path.stem)
        except ConfigError as e:
            raise ConfigError(f"{path}: {e}") from e

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    @property
    def description(self) -> str:
        return str(self.values["description"])

    def with_overrides(self, **overrides: Any) -> "ExperimentConfig":
        """Apply command-line values; ``None`` means the flag was not given."""
        schema = schema_for(self.command)
        values = dict(self.values)
        for key, raw in overrides.items():
            if raw is None:
                continue
            if key not in schema:
                raise ConfigError(f"Unknown key for {self.command}: {key}")
            values[key] = schema[key].parse(key, raw)
            logger.debug(f"Override {key}={values[key]!r}")
        if values["dim"] not in (2, 3):
            raise ConfigError(f"dim: must be 2 or 3, got {values['dim']}")
        return replace(self, values=values)


def get_builtin_experiments_dir() -> Path:
    package_dir = Path(__file__).parent
    return package_dir / "experiments"


def get_xdg_experiments_dir() -> Path:
    return (
        Path(os.getenv("XDG_CONFIG_HOME", Path.home() / ".config"))
        / "ovaloid"
        / "experiments"
    )


def experiment_dirs(command: str) -> list[Path]:
    """User directory first, so user experiments shadow built-ins."""
    return [get_xdg_experiments_dir() / command, get_builtin_experiments_dir() / command]


def find_experiment(command: str, name: str) -> Path:
    """
    Resolve an experiment name or path to a file.

    Raises:
        ConfigError: if nothing matches
    """
    candidate = Path(name)
    if candidate.suffix == ".md" and candidate.exists():
        return candidate
    for directory in experiment_dirs(command):
        path = directory / f"{name}.md"
        if path.exists():
            return path
    raise ConfigError(
        f"Experiment '{name}' not found; run 'ovaloid {command} --list' to see the available ones"
    )


def load_experiment(command: str, name: str | None) -> ExperimentConfig:
    """The named experiment, or the defaults when ``name`` is None."""
    if name is None:
        return ExperimentConfig.from_mapping(command, {})
    return ExperimentConfig.from_file(command, find_experiment(command, name))


@dataclass(frozen=True)
class ExperimentEntry:
    name: str
    description: str
    path: Path


def list_experiments(command: str) -> list[ExperimentEntry]:
    """
    All experiments of ``command`` with a description, user ones first.
    Files that fail to parse are skipped with a warning.
    """
    entries: list[ExperimentEntry] = []
    seen: set[str] = set()
    for directory in experiment_dirs(command):
        if not directory.is_dir():
            continue
        for path in sorted(directory.glob("*.md")):
            if path.stem in seen:
                continue
            try:
                config = ExperimentConfig.from_file(command, path)
            except ConfigError as e:
                logger.warning(f"Skipping {path}: {e}")
                continue
            if not config.description:
                logger.warning(f"Experiment file {path} has no description")
                continue
            seen.add(path.stem)
            entries.append(ExperimentEntry(path.stem, config.description, path))
    return entries
