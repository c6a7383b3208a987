import numpy as np
import pytest

from hamflow.dynamics import ObservableSeries, ObservableSet, TimeGrid, evolve_schrodinger, product_state, rabi_x
from hamflow.errors import ConfigError
from hamflow.fields import DrivingField, constant_field
from hamflow.neural import model_forward
from hamflow.pipeline import (
    TrainingConfig,
    build_arrays,
    dataset_preset,
    evaluate,
    generate_dataset,
    infer_detunings,
    infer_field,
    load_dataset,
    predict_dynamics,
    split_records,
    train,
)


def _grid_times(manifest):
    return np.array(manifest["times_train"])


def test_predict_matches_field_grid_and_clamps(toy_rabi):
    manifest = toy_rabi["manifest"]
    model = toy_rabi["dynamics"]
    times = _grid_times(manifest)
    series, raw = predict_dynamics(model, {"B": np.full(times.size, 1.2)}, times, [0.0, 0.0, 1.0])
    assert series.values.shape == (times.size, 3)
    assert np.array_equal(series.times, times)
    assert series.values.min() >= -1.0 and series.values.max() <= 1.0
    assert np.allclose(np.clip(raw, -1.0, 1.0), series.values)


def test_predict_rejects_wrong_direction_and_drives(toy_rabi):
    manifest = toy_rabi["manifest"]
    times = _grid_times(manifest)
    field = {"B": np.zeros(times.size)}
    with pytest.raises(ConfigError):
        predict_dynamics(toy_rabi["hamiltonian"], field, times, [0, 0, 1])
    with pytest.raises(ConfigError):
        predict_dynamics(toy_rabi["dynamics"], {"A": np.zeros(times.size)}, times, [0, 0, 1])
    with pytest.raises(ConfigError):
        predict_dynamics(toy_rabi["dynamics"], {"B": np.zeros(times.size - 1)}, times, [0, 0, 1])


def test_infer_field_round_trip_properties(toy_rabi):
    manifest = toy_rabi["manifest"]
    model = toy_rabi["hamiltonian"]
    rec = split_records(manifest, toy_rabi["records"], "test")[0]
    times = _grid_times(manifest)
    obs = ObservableSeries(times=times, values=np.array(rec["observables"]), names=list(manifest["observable_names"]))
    field = infer_field(model, obs, rec["init_bloch"])
    assert np.array_equal(field.times, times)  # output grid equals input grid
    # rescaling undone: raw network output lives on the /scale axis
    x, o0, _ = build_arrays(manifest, [rec], "hamiltonian")
    raw, _ = model_forward(model.params, model.config, x, o0)
    assert np.allclose(field.values, raw[0, :, 0] * manifest["config"]["field_scale"])
    with pytest.raises(ConfigError):
        infer_field(toy_rabi["dynamics"], obs, rec["init_bloch"])


def test_infer_field_rejects_wrong_observable_names(toy_rabi):
    manifest = toy_rabi["manifest"]
    times = _grid_times(manifest)
    obs = ObservableSeries(times=times, values=np.zeros((times.size, 3)), names=["X0", "Z0", "Y0"])
    with pytest.raises(ConfigError):
        infer_field(toy_rabi["hamiltonian"], obs, [0, 0, 1])


def test_constant_field_recovers_near_constant(toy_rabi):
    """Observables from B=1.5 must map back to a visibly flat field estimate."""
    manifest = toy_rabi["manifest"]
    times = _grid_times(manifest)
    field = constant_field(1.5, dt=0.1, horizon=5.0)
    grid = TimeGrid(dt=0.1, n_steps=times.size - 1)
    bloch = np.array([[0.0, 1.0, 0.0]])
    truth = evolve_schrodinger(rabi_x(field), product_state(bloch), grid, ObservableSet.ring_default(1))
    recovered = infer_field(toy_rabi["hamiltonian"], truth, bloch)
    mean_abs = np.abs(recovered.values).mean()
    assert recovered.values.std() < 0.10 * mean_abs


def test_closed_loop_no_worse_than_4x_direct(toy_rabi):
    """simulate -> infer field -> re-simulate stays within 4x the forward model's MSE."""
    manifest = toy_rabi["manifest"]
    recs = split_records(manifest, toy_rabi["records"], "test")
    times = _grid_times(manifest)
    grid = TimeGrid(dt=0.1, n_steps=times.size - 1)
    obs_set = ObservableSet.ring_default(1)
    names = list(manifest["observable_names"])

    direct_sq, loop_sq = [], []
    for rec in recs:
        truth = np.array(rec["observables"])
        obs = ObservableSeries(times=times, values=truth, names=names)
        _, raw = predict_dynamics(toy_rabi["dynamics"], {"B": np.array(rec["field"]["B"])}, times, rec["init_bloch"])
        direct_sq.append(((raw - truth) ** 2).mean())
        inferred = infer_field(toy_rabi["hamiltonian"], obs, rec["init_bloch"])
        resim = evolve_schrodinger(rabi_x(inferred), product_state(np.array(rec["init_bloch"])), grid, obs_set)
        loop_sq.append(((resim.values - truth) ** 2).mean())

    direct, loop = np.mean(direct_sq), np.mean(loop_sq)
    assert loop <= 4.0 * direct, f"loop {loop:.2e} vs direct {direct:.2e}"


def test_infer_detunings_needs_two_drive_model(toy_rabi, tmp_path):
    config = dataset_preset("SC_SWAP_DETUNED", 6, 2, 0, seed=4)
    generate_dataset(config, tmp_path / "sc")
    manifest, records = load_dataset(tmp_path / "sc")
    tc = TrainingConfig(direction="hamiltonian", seed=1, hidden_size=8, n_layers=1, epochs=2, batch_size=4)
    model, _ = train(manifest, records, tc)
    rec = records[0]
    times = np.array(manifest["times_train"])
    obs = ObservableSeries(times=times, values=np.array(rec["observables"]), names=list(manifest["observable_names"]))
    d1, d2 = infer_detunings(model, obs, rec["init_bloch"])
    assert isinstance(d1, DrivingField) and isinstance(d2, DrivingField)
    assert np.array_equal(d1.times, times) and np.array_equal(d2.times, times)
    with pytest.raises(ConfigError):
        infer_detunings(toy_rabi["hamiltonian"], obs, rec["init_bloch"])  # single-drive model
    with pytest.raises(ConfigError):
        infer_field(model, obs, rec["init_bloch"])  # two-drive model


def test_perfect_predictor_scores_zero(toy_rabi):
    manifest = toy_rabi["manifest"]
    model = toy_rabi["dynamics"]
    recs = [dict(r) for r in toy_rabi["records"]]
    test_recs = split_records(manifest, recs, "test")
    x, o0, _ = build_arrays(manifest, test_recs, "dynamics")
    pred, _ = model_forward(model.params, model.config, x, o0)
    for rec, values in zip(test_recs, pred):
        rec["observables"] = values.tolist()
    report = evaluate(model, manifest, recs, split="test", require_same_dataset=False)
    assert report.overall_mse == 0.0
    assert report.train_window_mse == 0.0
    assert max(report.per_time_mse) == 0.0


def test_eval_report_contents_and_files(toy_rabi, tmp_path):
    manifest = toy_rabi["manifest"]
    report = evaluate(toy_rabi["dynamics"], manifest, toy_rabi["records"], split="test")
    assert report.n_instances == 8
    assert report.direction == "dynamics"
    assert report.extrapolation_mse is None  # this preset has no horizon beyond the train window
    assert abs(np.mean(report.per_instance_mse) - report.overall_mse) < 1e-12
    assert abs(np.mean(report.per_time_mse) - report.overall_mse) < 1e-9
    report.write(tmp_path)
    assert (tmp_path / "eval_report.json").exists()
    lines = (tmp_path / "mse_vs_time.csv").read_text().strip().splitlines()
    assert lines[0] == "t,mse"
    assert len(lines) == 1 + len(report.times)


def test_eval_split_hygiene(toy_rabi):
    manifest = toy_rabi["manifest"]
    with pytest.raises(ConfigError):
        evaluate(toy_rabi["dynamics"], manifest, toy_rabi["records"], split="train")
    report = evaluate(toy_rabi["dynamics"], manifest, toy_rabi["records"], split="train", allow_train_split=True)
    assert report.split == "train"
    assert report.n_instances == 50


def test_eval_rejects_foreign_checkpoint(toy_rabi, tmp_path):
    config = dataset_preset("RABI_X", 4, 2, 2, seed=77)
    generate_dataset(config, tmp_path / "other")
    manifest, records = load_dataset(tmp_path / "other")
    with pytest.raises(ConfigError):
        evaluate(toy_rabi["dynamics"], manifest, records, split="test")
    report = evaluate(toy_rabi["dynamics"], manifest, records, split="test", require_same_dataset=False)
    assert report.n_instances == 2
