"""Checkpoints: one .npz per model, bit-identical on reload.

Arrays go in under namespaced keys ("param/...", "adam_m/...", "adam_v/...");
the model shape and any caller metadata travel as one JSON string.  float64
survives the npz round trip exactly, so a restored model continues training
on the same trajectory it left.
"""

from __future__ import annotations

import json

import numpy as np

from ..errors import ConfigError
from .adam import AdamState
from .model import ModelConfig


def save_checkpoint(path, params: dict, config: ModelConfig, adam_state: AdamState | None = None, meta: dict | None = None) -> None:
    arrays = {f"param/{k}": v for k, v in params.items()}
    payload = {"config": config.to_dict(), "meta": meta or {}, "has_adam": adam_state is not None}
    if adam_state is not None:
        arrays.update({f"adam_m/{k}": v for k, v in adam_state.m.items()})
        arrays.update({f"adam_v/{k}": v for k, v in adam_state.v.items()})
        payload["adam_step"] = adam_state.step
    arrays["meta_json"] = np.array(json.dumps(payload, sort_keys=True))
    np.savez(path, **arrays)


def load_checkpoint(path):
    """Returns (params, config, adam_state_or_None, meta)."""
    with np.load(path, allow_pickle=False) as blob:
        if "meta_json" not in blob:
            raise ConfigError(f"{path} is not a model checkpoint")
        payload = json.loads(str(blob["meta_json"]))
        params = {k[len("param/") :]: blob[k] for k in blob.files if k.startswith("param/")}
        adam_state = None
        if payload.get("has_adam"):
            adam_state = AdamState(
                step=int(payload["adam_step"]),
                m={k[len("adam_m/") :]: blob[k] for k in blob.files if k.startswith("adam_m/")},
                v={k[len("adam_v/") :]: blob[k] for k in blob.files if k.startswith("adam_v/")},
            )
    config = ModelConfig.from_dict(payload["config"])
    return params, config, adam_state, payload["meta"]
