"""Bidirectional training on a shared dataset.

Both mapping directions consume the same records.  The forward direction
("dynamics") reads per-step drive values plus time and regresses the
observable trajectories; the inverse direction ("hamiltonian") reads the
observables plus time and regresses the drive values.  Drive values enter
and leave the network divided by the dataset's field scale; the time input
is divided by the dataset's time scale.

Checkpoint selection: the parameters with the lowest validation MSE are kept
(validation records only cover the training window by construction).
"""

from __future__ import annotations

import copy
from dataclasses import asdict, dataclass

import numpy as np

from ..config import STREAM_MODEL_INIT, STREAM_SHUFFLE, derive_rng
from ..errors import ConfigError, NumericalError
from ..neural import (
    ModelConfig,
    adam_init,
    adam_step,
    init_params,
    load_checkpoint,
    model_backward,
    model_forward,
    mse_grad,
    mse_loss,
    save_checkpoint,
)
from .dataset import split_records

DIRECTIONS = ("dynamics", "hamiltonian")

BEST_CHECKPOINT = "best.npz"
LAST_CHECKPOINT = "last.npz"
HISTORY_FILE = "history.csv"

EVAL_CHUNK = 64


@dataclass(frozen=True)
class TrainingConfig:
    direction: str
    seed: int
    hidden_size: int = 128
    n_layers: int = 2
    encoder_layers: int = 2
    epochs: int = 30
    batch_size: int = 64
    lr: float = 1e-3

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise ConfigError(f"direction must be one of {DIRECTIONS}, got {self.direction!r}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be positive")


@dataclass
class TrainedModel:
    params: dict
    config: ModelConfig
    meta: dict

    @property
    def direction(self) -> str:
        return self.meta["direction"]


def build_arrays(manifest: dict, records: list, direction: str):
    """Stack one split's records into (x, o0, y) arrays for the given direction."""
    if direction not in DIRECTIONS:
        raise ConfigError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
    if not records:
        raise ConfigError("no records to build arrays from")
    grids = {rec["grid"] for rec in records}
    if len(grids) > 1:
        raise ConfigError(f"records mix grids {sorted(grids)}; split them first")
    times = np.array(manifest["times_full" if grids.pop() == "full" else "times_train"])
    scale = manifest["config"]["field_scale"]
    t_col = times / manifest["config"]["time_scale"]
    drive_names = manifest["drive_names"]
    moment_width = manifest["moment_width"]

    xs, o0s, ys = [], [], []
    for rec in records:
        obs = np.array(rec["observables"])
        drives = np.column_stack([np.array(rec["field"][name]) / scale for name in drive_names])
        if obs.shape[0] != times.size or drives.shape[0] != times.size:
            raise ConfigError(f"record {rec['index']} does not match the manifest grid")
        if direction == "dynamics":
            xs.append(np.column_stack([drives, t_col]))
            ys.append(obs)
        else:
            xs.append(np.column_stack([obs, t_col]))
            ys.append(drives)
        bloch = np.asarray(rec["init_bloch"], dtype=float)
        o0s.append(bloch[0] if moment_width == 3 else bloch.reshape(-1))
    return np.stack(xs), np.stack(o0s), np.stack(ys)


def model_config_for(manifest: dict, train_config: TrainingConfig) -> ModelConfig:
    n_obs = len(manifest["observable_names"])
    n_drives = len(manifest["drive_names"])
    if train_config.direction == "dynamics":
        input_width, output_width = n_drives + 1, n_obs
    else:
        input_width, output_width = n_obs + 1, n_drives
    return ModelConfig(
        input_width=input_width,
        output_width=output_width,
        moment_width=manifest["moment_width"],
        hidden_size=train_config.hidden_size,
        n_layers=train_config.n_layers,
        encoder_layers=train_config.encoder_layers,
    )


def dataset_loss(params: dict, config: ModelConfig, x, o0, y, chunk: int = EVAL_CHUNK) -> float:
    """Full-dataset MSE computed in chunks so the forward cache stays small."""
    total, count = 0.0, 0
    for start in range(0, x.shape[0], chunk):
        sl = slice(start, start + chunk)
        pred, _ = model_forward(params, config, x[sl], o0[sl])
        total += float(np.sum((pred - y[sl]) ** 2))
        count += pred.size
    return total / count


def _model_meta(manifest: dict, train_config: TrainingConfig) -> dict:
    return {
        "direction": train_config.direction,
        "kind": manifest["config"]["kind"],
        "field_scale": manifest["config"]["field_scale"],
        "time_scale": manifest["config"]["time_scale"],
        "observable_names": manifest["observable_names"],
        "drive_names": manifest["drive_names"],
        "moment_width": manifest["moment_width"],
        "manifest_hash": manifest["content_hash"],
        "train_config": asdict(train_config),
    }


def train(manifest: dict, records: list, train_config: TrainingConfig, out_dir=None, resume: bool = False):
    """Train one direction; returns (TrainedModel, history).

    history rows are dicts with epoch, train_loss, val_loss.  With ``out_dir``
    set, every epoch writes ``last.npz`` (full optimizer state) and each
    validation improvement refreshes ``best.npz``; ``resume=True`` continues
    from ``last.npz``.  Shuffle order is derived from (seed, epoch), so a
    resumed run retraces exactly the schedule of an uninterrupted one.
    """
    cfg = model_config_for(manifest, train_config)
    meta = _model_meta(manifest, train_config)

    x_tr, o_tr, y_tr = build_arrays(manifest, split_records(manifest, records, "train"), train_config.direction)
    x_va, o_va, y_va = build_arrays(manifest, split_records(manifest, records, "val"), train_config.direction)

    params = init_params(cfg, derive_rng(train_config.seed, STREAM_MODEL_INIT))
    state = adam_init(params)
    start_epoch = 0
    best_val = np.inf
    best_params = copy.deepcopy(params)
    history = []

    if resume:
        if out_dir is None:
            raise ConfigError("resume requires out_dir")
        last = _checkpoint_path(out_dir, LAST_CHECKPOINT)
        if last.exists():
            params, loaded_cfg, state, loaded_meta = load_checkpoint(last)
            if loaded_cfg != cfg:
                raise ConfigError("checkpoint model shape does not match this training config")
            if loaded_meta.get("manifest_hash") != meta["manifest_hash"]:
                raise ConfigError("checkpoint was trained on a different dataset (manifest hash mismatch)")
            # Retracing the schedule needs identical seed/lr/batch; only epochs may grow.
            saved = dict(loaded_meta.get("train_config", {}))
            saved.pop("epochs", None)
            current = asdict(train_config)
            current.pop("epochs")
            if saved != current:
                raise ConfigError("resume settings differ from the checkpoint (only epochs may change)")
            start_epoch = loaded_meta["epoch"]
            best_val = loaded_meta["best_val"]
            history = loaded_meta["history"]
            best_params, _, _, _ = load_checkpoint(_checkpoint_path(out_dir, BEST_CHECKPOINT))

    n_train = x_tr.shape[0]
    for epoch in range(start_epoch, train_config.epochs):
        order = derive_rng(train_config.seed, STREAM_SHUFFLE, epoch).permutation(n_train)
        epoch_sq_sum, epoch_count = 0.0, 0
        for start in range(0, n_train, train_config.batch_size):
            idx = order[start : start + train_config.batch_size]
            pred, cache = model_forward(params, cfg, x_tr[idx], o_tr[idx])
            target = y_tr[idx]
            grads = model_backward(params, cfg, cache, mse_grad(pred, target))
            adam_step(params, grads, state, lr=train_config.lr)
            epoch_sq_sum += float(np.sum((pred - target) ** 2))
            epoch_count += pred.size
        train_loss = epoch_sq_sum / epoch_count
        val_loss = dataset_loss(params, cfg, x_va, o_va, y_va)
        if not (np.isfinite(train_loss) and np.isfinite(val_loss)):
            raise NumericalError(f"training diverged at epoch {epoch} (non-finite loss)")
        history.append({"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss})
        if val_loss < best_val:
            best_val = val_loss
            best_params = copy.deepcopy(params)
            if out_dir is not None:
                save_checkpoint(_checkpoint_path(out_dir, BEST_CHECKPOINT), best_params, cfg, meta=meta)
        if out_dir is not None:
            save_checkpoint(
                _checkpoint_path(out_dir, LAST_CHECKPOINT),
                params,
                cfg,
                adam_state=state,
                meta={**meta, "epoch": epoch + 1, "best_val": best_val, "history": history},
            )
            _write_history(out_dir, history)

    return TrainedModel(params=best_params, config=cfg, meta=meta), history


def _checkpoint_path(out_dir, name):
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out / name


def _write_history(out_dir, history) -> None:
    with open(_checkpoint_path(out_dir, HISTORY_FILE), "w") as fh:
        fh.write("epoch,train_loss,val_loss\n")
        for row in history:
            fh.write(f"{row['epoch']},{row['train_loss']:.17g},{row['val_loss']:.17g}\n")


def load_trained(path) -> TrainedModel:
    params, cfg, _, meta = load_checkpoint(path)
    if "direction" not in meta:
        raise ConfigError(f"{path} is not a trained-model checkpoint")
    return TrainedModel(params=params, config=cfg, meta=meta)
