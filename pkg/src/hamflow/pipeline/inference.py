"""Prediction, field inference, and dataset evaluation.

Network outputs live in scaled units; every public function here undoes the
scaling so callers see physical quantities.  Losses are computed on raw
(unclamped) predictions; clamping to [-1, 1] only affects reported
observable trajectories, never the loss.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..config import canonical_json
from ..dynamics import ObservableSeries
from ..errors import ConfigError
from ..fields import DrivingField
from .dataset import split_records
from .training import TrainedModel, build_arrays
from ..neural import model_forward

EVAL_CHUNK = 64
AGGREGATE_ATOL = 1e-12

EVAL_REPORT_FILE = "eval_report.json"
MSE_VS_TIME_FILE = "mse_vs_time.csv"


def _single_forward(model: TrainedModel, x: np.ndarray, o0: np.ndarray) -> np.ndarray:
    pred, _ = model_forward(model.params, model.config, x[None], o0[None])
    return pred[0]


def _time_column(model: TrainedModel, times: np.ndarray) -> np.ndarray:
    return np.asarray(times, dtype=float) / model.meta["time_scale"]


def predict_dynamics(model: TrainedModel, fields: dict, times, init_bloch):
    """Predict observable trajectories from drive schedules.

    ``fields`` maps drive name to per-step values on ``times``; ``init_bloch``
    is the per-qubit Bloch list as stored in dataset records.  Returns
    (series, raw): the ObservableSeries holds values clamped to [-1, 1] for
    reporting, ``raw`` keeps the unclamped network output for losses.
    """
    if model.direction != "dynamics":
        raise ConfigError("predict_dynamics needs a dynamics-direction model")
    times = np.asarray(times, dtype=float)
    scale = model.meta["field_scale"]
    cols = []
    for name in model.meta["drive_names"]:
        if name not in fields:
            raise ConfigError(f"missing drive {name!r}")
        col = np.asarray(fields[name], dtype=float)
        if col.shape != times.shape:
            raise ConfigError(f"drive {name!r} does not match the time grid")
        cols.append(col / scale)
    x = np.column_stack(cols + [_time_column(model, times)])
    o0 = _init_moments(model, init_bloch)
    raw = _single_forward(model, x, o0)
    series = ObservableSeries(times=times, values=np.clip(raw, -1.0, 1.0), names=list(model.meta["observable_names"]))
    return series, raw


def _init_moments(model: TrainedModel, init_bloch) -> np.ndarray:
    bloch = np.asarray(init_bloch, dtype=float)
    if bloch.ndim == 1:
        bloch = bloch[None]
    width = model.meta["moment_width"]
    o0 = bloch[0] if width == 3 else bloch.reshape(-1)
    if o0.size != width:
        raise ConfigError(f"initial Bloch vector has width {o0.size}, model expects {width}")
    return o0


def infer_field(model: TrainedModel, observables: ObservableSeries, init_bloch) -> DrivingField:
    """Estimate the single drive that produced ``observables`` (rescaling undone)."""
    if model.direction != "hamiltonian":
        raise ConfigError("infer_field needs a hamiltonian-direction model")
    if len(model.meta["drive_names"]) != 1:
        raise ConfigError("this model predicts several drives; use infer_detunings")
    raw = _infer_drives_raw(model, observables, init_bloch)
    return DrivingField(times=observables.times.copy(), values=raw[:, 0] * model.meta["field_scale"])


def infer_detunings(model: TrainedModel, observables: ObservableSeries, init_bloch):
    """Estimate the (delta1, delta2) schedules behind a two-qubit exchange record."""
    if model.direction != "hamiltonian":
        raise ConfigError("infer_detunings needs a hamiltonian-direction model")
    if tuple(model.meta["drive_names"]) != ("delta1", "delta2"):
        raise ConfigError("this model does not predict a detuning pair")
    raw = _infer_drives_raw(model, observables, init_bloch)
    scale = model.meta["field_scale"]
    times = observables.times
    return (
        DrivingField(times=times.copy(), values=raw[:, 0] * scale),
        DrivingField(times=times.copy(), values=raw[:, 1] * scale),
    )


def _infer_drives_raw(model: TrainedModel, observables: ObservableSeries, init_bloch) -> np.ndarray:
    expected = tuple(model.meta["observable_names"])
    if tuple(observables.names) != expected:
        raise ConfigError("observable set does not match the one the model was trained on")
    x = np.column_stack([observables.values, _time_column(model, observables.times)])
    return _single_forward(model, x, _init_moments(model, init_bloch))


@dataclass
class EvalReport:
    direction: str
    split: str
    n_instances: int
    window_boundary: float
    overall_mse: float
    train_window_mse: float
    extrapolation_mse: float | None
    times: np.ndarray = field(repr=False)
    per_time_mse: np.ndarray = field(repr=False)
    per_output_mse: dict = field(repr=False)
    per_instance_mse: np.ndarray = field(repr=False)

    def to_json_dict(self) -> dict:
        return {
            "direction": self.direction,
            "split": self.split,
            "n_instances": self.n_instances,
            "window_boundary": self.window_boundary,
            "overall_mse": self.overall_mse,
            "train_window_mse": self.train_window_mse,
            "extrapolation_mse": self.extrapolation_mse,
            "per_output_mse": self.per_output_mse,
            "per_instance_mse": self.per_instance_mse.tolist(),
        }

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / EVAL_REPORT_FILE).write_text(canonical_json(self.to_json_dict()) + "\n")
        with open(out / MSE_VS_TIME_FILE, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "mse"])
            for t, m in zip(self.times, self.per_time_mse):
                writer.writerow([f"{t:.17g}", f"{m:.17g}"])


def evaluate(
    model: TrainedModel,
    manifest: dict,
    records: list,
    split: str = "test",
    allow_train_split: bool = False,
    require_same_dataset: bool = True,
) -> EvalReport:
    """Score a model on one dataset split.

    Field-direction errors are computed in scaled units (drive/field_scale),
    so both directions report on the same dimensionless footing.  Aggregates
    are exact means of the per-instance values.  ``require_same_dataset=False``
    permits deliberate cross-dataset scoring (e.g. a noiseless-trained model
    on noisy test records); the grids must still agree.
    """
    if require_same_dataset and model.meta["manifest_hash"] != manifest["content_hash"]:
        raise ConfigError("model was trained on a different dataset (manifest hash mismatch)")
    if split == "train" and not allow_train_split:
        raise ConfigError("evaluating on the train split requires allow_train_split")
    recs = split_records(manifest, records, split)
    if not recs:
        raise ConfigError(f"split {split!r} is empty")
    x, o0, y = build_arrays(manifest, recs, model.direction)
    sq = np.empty_like(y)
    for start in range(0, x.shape[0], EVAL_CHUNK):
        sl = slice(start, start + EVAL_CHUNK)
        pred, _ = model_forward(model.params, model.config, x[sl], o0[sl])
        sq[sl] = (pred - y[sl]) ** 2

    times = np.array(manifest["times_full" if recs[0]["grid"] == "full" else "times_train"])
    boundary = float(manifest["config"]["train_horizon"])
    in_window = times <= boundary + 1e-12

    per_instance = sq.mean(axis=(1, 2))
    per_time = sq.mean(axis=(0, 2))
    output_names = (
        manifest["observable_names"] if model.direction == "dynamics" else manifest["drive_names"]
    )
    per_output = {name: float(v) for name, v in zip(output_names, sq.mean(axis=(0, 1)))}
    overall = float(per_instance.mean())
    if abs(overall - sq.mean()) > AGGREGATE_ATOL:
        raise ConfigError("aggregate MSE disagrees with per-instance mean")
    extrap = float(sq[:, ~in_window, :].mean()) if (~in_window).any() else None
    return EvalReport(
        direction=model.direction,
        split=split,
        n_instances=len(recs),
        window_boundary=boundary,
        overall_mse=overall,
        train_window_mse=float(sq[:, in_window, :].mean()),
        extrapolation_mse=extrap,
        times=times,
        per_time_mse=per_time,
        per_output_mse=per_output,
        per_instance_mse=per_instance,
    )
