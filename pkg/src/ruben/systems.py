"""Preconfigured systems: a corpus, a retriever, safety text, oracles, predicates.

A system manifest is a JSON file tying together everything one red-teaming
target needs.  Three are bundled (finance, software, employees); more can be
loaded from any config directory.  Schema:

    {
      "system_tag": "finance",
      "description": "...",
      "corpus": "finance.corpus.json",        // path relative to the manifest
      "retriever": {"k": 5},
      "safety_instructions": "...",
      "oracle_name": "assistant-weak",         // default oracle
      "oracles": {"<name>": {"kind": "triggered"|"http", ...}, ...},
      "predicate_name": "phone_number",
      "predicates": {"<name>": {"kind": ...}, ...}
    }

Oracle configs may carry "selectable": false to hide internal oracles (e.g.
judge models) from user-facing choices while keeping them resolvable by name.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib.resources import files
from pathlib import Path

from .errors import ConfigError
from .oracles import (
    HttpChatOracle,
    HttpOracleConfig,
    ModelOracle,
    SafetyInstructions,
    TriggeredOracle,
    trigger_from_config,
)
from .predicates import OutputPredicate, builtin_predicates, predicate_from_config
from .retrieval import Corpus, load_corpus


def _oracle_from_config(name: str, cfg: dict) -> ModelOracle:
    kind = cfg.get("kind")
    if kind == "triggered":
        return TriggeredOracle(
            name=name,
            trigger=trigger_from_config(cfg["trigger"]),
            triggered_output=cfg["triggered_output"],
            default_output=cfg["default_output"],
        )
    if kind == "http":
        return HttpChatOracle(
            HttpOracleConfig(
                base_url=cfg["base_url"],
                model=cfg.get("model", name),
                api_key_env=cfg.get("api_key_env", "RUBEN_API_KEY"),
                temperature=cfg.get("temperature", 0.0),
                timeout_s=cfg.get("timeout_s", 30.0),
            )
        )
    raise ConfigError(f"oracle {name!r} has unknown kind {kind!r}")


@dataclass
class SystemConfig:
    """One loaded system manifest, ready to build oracles and predicates."""

    system_tag: str
    description: str
    corpus: Corpus
    k: int
    safety: SafetyInstructions
    oracle_name: str
    oracle_configs: dict[str, dict]
    predicate_name: str
    predicate_configs: dict[str, dict]
    oracle_instances: dict[str, ModelOracle] = field(default_factory=dict)

    def oracle_names(self) -> list[str]:
        """User-selectable oracle names, manifest order."""
        names = [
            name
            for name, cfg in self.oracle_configs.items()
            if cfg.get("selectable", True)
        ]
        for name in self.oracle_instances:
            if name not in names:
                names.append(name)
        return names

    def build_oracle(self, name: str | None = None) -> ModelOracle:
        name = name or self.oracle_name
        if name in self.oracle_instances:
            return self.oracle_instances[name]
        if name not in self.oracle_configs:
            raise ConfigError(
                f"system {self.system_tag!r} has no oracle {name!r} "
                f"(choices: {sorted(self.oracle_configs)})"
            )
        return _oracle_from_config(name, self.oracle_configs[name])

    def build_predicate(self, name: str | None = None) -> OutputPredicate:
        name = name or self.predicate_name
        if name in self.predicate_configs:
            return predicate_from_config(
                self.predicate_configs[name], self.build_oracle
            )
        builtins = builtin_predicates()
        if name in builtins:
            return builtins[name]
        raise ConfigError(
            f"system {self.system_tag!r} has no predicate {name!r} "
            f"(choices: {sorted(self.predicate_configs) + sorted(builtins)})"
        )


def bundled_config_dir() -> Path:
    return Path(str(files("ruben").joinpath("data")))


def load_system(manifest_path: str | Path) -> SystemConfig:
    manifest_path = Path(manifest_path)
    try:
        raw = json.loads(manifest_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load manifest {manifest_path}: {exc}") from exc
    try:
        corpus_path = manifest_path.parent / raw["corpus"]
        return SystemConfig(
            system_tag=raw["system_tag"],
            description=raw.get("description", ""),
            corpus=load_corpus(corpus_path, system_tag=raw["system_tag"]),
            k=raw.get("retriever", {}).get("k", 5),
            safety=SafetyInstructions(text=raw["safety_instructions"]),
            oracle_name=raw["oracle_name"],
            oracle_configs=raw.get("oracles", {}),
            predicate_name=raw["predicate_name"],
            predicate_configs=raw.get("predicates", {}),
        )
    except KeyError as exc:
        raise ConfigError(
            f"manifest {manifest_path} is missing key {exc.args[0]!r}"
        ) from exc


def load_systems(config_dir: str | Path | None = None) -> dict[str, SystemConfig]:
    """Load every *.manifest.json under a config directory, keyed by tag."""
    directory = Path(config_dir) if config_dir is not None else bundled_config_dir()
    systems: dict[str, SystemConfig] = {}
    for path in sorted(directory.glob("*.manifest.json")):
        system = load_system(path)
        if system.system_tag in systems:
            raise ConfigError(f"duplicate system_tag {system.system_tag!r}")
        systems[system.system_tag] = system
    return systems


def resolve_manifest_path(ref: str, config_dir: str | Path | None = None) -> Path:
    """Accept either a manifest file path or a bundled system tag."""
    candidate = Path(ref)
    if candidate.is_file():
        return candidate
    directory = Path(config_dir) if config_dir is not None else bundled_config_dir()
    bundled = directory / f"{ref}.manifest.json"
    if bundled.is_file():
        return bundled
    raise ConfigError(f"{ref!r} is neither a manifest file nor a bundled system")
