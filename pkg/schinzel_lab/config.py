"""
Configuration loading: YAML experiment catalogues, env tokens and budgets.
"""

import os
import re
from pathlib import Path

import yaml
from dotenv import load_dotenv

from .logger import logger
from .models import Budgets, ExperimentConfig

# Load environment variables from .env file if it exists
load_dotenv()

BUDGET_ENV = "SCHINZEL_LAB_BUDGET"

_BUDGET_KEYS = {
    "factor": "factor_iterations",
    "enumeration": "enumeration",
    "sieve": "sieve_limit",
}


def resolve_env_tokens(s: str) -> str:
    """
    Replace __ENV:VAR tokens with environment variable values.

    Args:
        s: String potentially containing __ENV:VAR tokens

    Returns:
        String with environment variables resolved
    """
    if not isinstance(s, str):
        return s

    result = s
    for match in re.finditer(r"__ENV:([A-Z0-9_]+)", s):
        token, var = match.group(0), match.group(1)
        value = os.environ.get(var, "")
        if not value:
            logger.error(f"Environment variable {var} not found")
            raise ValueError(f"Required environment variable '{var}' is not set.")
        result = result.replace(token, value)

    return result


def _coerce_scalar(value: str):
    """Turn a fully substituted token back into a number when it looks like one."""
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        return value


def resolve_tokens_in_dict(d: dict) -> dict:
    """
    Recursively resolve __ENV tokens in a dictionary (lists included).

    A value that is exactly one token is coerced to int/float when possible, so
    `seed: __ENV:SEED` yields an integer seed.
    """

    def resolve(value):
        if isinstance(value, str):
            resolved = resolve_env_tokens(value)
            return _coerce_scalar(resolved) if resolved != value else value
        if isinstance(value, dict):
            return resolve_tokens_in_dict(value)
        if isinstance(value, list):
            return [resolve(item) for item in value]
        return value

    return {key: resolve(value) for key, value in d.items()}


def load_experiments(path: str) -> dict[str, ExperimentConfig]:
    """
    Load and validate an experiment catalogue from a YAML file.

    Args:
        path: Path to YAML file with a top-level 'experiments' mapping

    Returns:
        Dictionary mapping experiment names to validated ExperimentConfig objects

    Raises:
        ValueError: If the catalogue or one of its entries is invalid
        FileNotFoundError: If the file doesn't exist
    """
    config_path = Path(path)
    if not config_path.exists():
        raise FileNotFoundError(f"Configuration file not found: {path}")

    logger.info(f"Loading experiments from {path}")

    with open(path, encoding="utf-8") as f:
        cfg = yaml.safe_load(f) or {}

    if "experiments" not in cfg:
        raise ValueError("Missing top-level 'experiments' key in configuration")

    cfg = resolve_tokens_in_dict(cfg)

    validated = {}
    for name, entry in (cfg["experiments"] or {}).items():
        try:
            validated[name] = ExperimentConfig(**entry)
            logger.debug(f"Validated experiment: {name}")
        except Exception as e:
            logger.error(f"Invalid configuration for experiment '{name}': {e}")
            raise ValueError(f"Invalid configuration for experiment '{name}': {e}") from e

    logger.info(f"Loaded {len(validated)} experiments")
    return validated


def save_experiment(path: str, name: str, config: ExperimentConfig) -> None:
    """
    Save an experiment configuration into a YAML catalogue, creating it if needed.

    Args:
        path: Path to YAML catalogue
        name: Experiment name
        config: ExperimentConfig to store
    """
    config_path = Path(path)

    if config_path.exists():
        with open(path, encoding="utf-8") as f:
            cfg = yaml.safe_load(f) or {}
    else:
        cfg = {}

    cfg.setdefault("experiments", {})
    cfg["experiments"][name] = config.model_dump(exclude_defaults=True, exclude={"out"}) | {
        "subcommand": config.subcommand
    }

    with open(path, "w", encoding="utf-8") as f:
        yaml.dump(cfg, f, sort_keys=False, indent=2)

    logger.info(f"Saved experiment '{name}' to {path}")


def parse_budget_override(raw: str) -> dict[str, int]:
    """
    Parse the SCHINZEL_LAB_BUDGET value.

    A bare integer caps both the factoring and the enumeration budget; otherwise
    the value is a comma list such as ``factor=100000,enumeration=5000000``.
    """
    raw = raw.strip()
    if not raw:
        return {}
    if re.fullmatch(r"\d+", raw):
        return {"factor_iterations": int(raw), "enumeration": int(raw)}

    overrides = {}
    for part in raw.split(","):
        key, sep, value = part.partition("=")
        key = key.strip()
        if not sep or key not in _BUDGET_KEYS or not value.strip().isdigit():
            raise ValueError(f"Invalid {BUDGET_ENV} entry '{part}'")
        overrides[_BUDGET_KEYS[key]] = int(value)
    return overrides


def get_budgets() -> Budgets:
    """Default budgets with the SCHINZEL_LAB_BUDGET override applied."""
    raw = os.environ.get(BUDGET_ENV, "")
    overrides = parse_budget_override(raw)
    if overrides:
        logger.debug(f"Budget override from {BUDGET_ENV}: {overrides}")
    return Budgets(**overrides)
