"""Run configuration plumbing: canonical JSON, hashing, seed derivation.

Every piece of randomness in the package flows from one root seed through
``derive_rng(root, stream, *indices)``.  Stream ids are the constants below;
the same (root, stream, indices) tuple always yields the same generator, so
serial and parallel runs agree and a resumed run continues exactly where the
interrupted one left off.
"""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np

from .errors import ConfigError

SEED_ENV_VAR = "HAMFLOW_SEED"

# seed streams; never renumber, only append
STREAM_DATASET = 1
STREAM_MODEL_INIT = 2
STREAM_SHUFFLE = 3
STREAM_PROTOCOL = 4


def canonical_json(obj) -> str:
    """Stable serialization: sorted keys, no incidental whitespace.

    Floats use Python's shortest exact round-trip form, so equal values
    always produce equal bytes.
    """
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def derive_rng(root_seed: int, *stream: int) -> np.random.Generator:
    entropy = [int(root_seed)] + [int(s) for s in stream]
    if any(s < 0 for s in entropy):
        raise ConfigError(f"seed path must be non-negative integers, got {entropy}")
    return np.random.default_rng(np.random.SeedSequence(entropy))


def resolve_seed(configured: int | None, default: int = 0) -> int:
    """Environment override wins over the config value, which wins over the default."""
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is not None:
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}") from None
    if configured is not None:
        return int(configured)
    return default


def load_json_config(path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return data


def check_keys(config: dict, required: dict, optional: dict, where: str) -> dict:
    """Schema check naming the offending key; returns config merged with defaults.

    ``required`` and ``optional`` map key -> type (or tuple of types);
    ``optional`` values are (type, default) pairs.
    """
    out = {}
    for key, typ in required.items():
        if key not in config:
            raise ConfigError(f"{where}: missing required key '{key}'")
        if not isinstance(config[key], typ):
            raise ConfigError(f"{where}: key '{key}' must be {typ}, got {type(config[key]).__name__}")
        out[key] = config[key]
    for key, (typ, default) in optional.items():
        if key in config:
            if not isinstance(config[key], typ):
                raise ConfigError(f"{where}: key '{key}' must be {typ}, got {type(config[key]).__name__}")
            out[key] = config[key]
        else:
            out[key] = default
    known = set(required) | set(optional)
    for key in config:
        if key not in known:
            raise ConfigError(f"{where}: unknown key '{key}'")
    return out
