__all__ = [
    "load_config",
    "section_of",
    "prepare",
]


import copy
from pathlib import Path

import yaml

from heatlab.config import load_section
from heatlab.errors import ConfigError
from heatlab.log import configure


DEFAULTS = Path(__file__).parent.parent / "heatlab.defaults.yaml"


def _read_yaml(path):
    try:
        with open(path) as config_yaml:
            return yaml.load(config_yaml, Loader=yaml.FullLoader) or {}
    except FileNotFoundError:
        raise ConfigError(f"{path} does not exist")
    except yaml.YAMLError as e:
        raise ConfigError(f"Could not parse {path}: {e}")


def deep_merge(base: dict, update: dict) -> dict:
    merged = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def section_of(config: dict, section: str) -> dict:
    """`section` may be dotted, e.g. ``experiment.selfsim``"""
    node = config
    for part in section.split("."):
        if not isinstance(node, dict) or part not in node:
            raise ConfigError(f"Configuration has no section {section!r}")
        node = node[part]
    return node


def load_config(path=None, overrides=None, defaults=DEFAULTS) -> dict:
    """
    Defaults, then the user file, then flag overrides

    When no path is given, ``heatlab.yaml`` in the working directory is
    used if it exists (the defaults file with ``.defaults`` dropped).

    :param overrides: {dotted.key: value}; a section in the user file
        replaces the default section key by key, nested sections merge
    """
    config = _read_yaml(defaults)
    if path is None and Path(Path(defaults).name.replace(".defaults", "")).exists():
        path = Path(defaults).name.replace(".defaults", "")
    if path is not None:
        config = deep_merge(config, _read_yaml(path))

    for dotted, value in (overrides or {}).items():
        *parents, leaf = dotted.split(".")
        node = config
        for part in parents:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"Cannot override {dotted}: {part} is not a section")
        node[leaf] = value
    return config


def prepare(section: str, path=None, overrides=None) -> dict:
    """Load, validate and build one section; flags override its keys one to one"""
    overrides = {f"{section}.{key}": value for key, value in (overrides or {}).items()}
    config = load_config(path, overrides)
    configure(config.get("logging", {}).get("level", "INFO"))
    return load_section(section, section_of(config, section))
