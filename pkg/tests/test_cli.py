import json

import numpy as np
import pytest

import hamflow.pipeline.reproduce as reproduce_mod
import hamflow.pipeline.selftest as selftest_mod
from hamflow.cli import main
from hamflow.errors import NumericalError
from hamflow.pipeline.selftest import CheckResult


def write_json(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """One generated dataset plus trained checkpoints, shared by the command tests."""
    root = tmp_path_factory.mktemp("cli")
    gen_cfg = write_json(
        root / "gen.json",
        {"schema_version": 1, "kind": "RABI_X", "n_train": 6, "n_val": 2, "n_test": 2, "seed": 9},
    )
    assert main(["gen", "--config", gen_cfg, "--out", str(root / "ds")]) == 0
    train_cfg = write_json(
        root / "train.json",
        {
            "schema_version": 1,
            "dataset": str(root / "ds"),
            "hidden_size": 8,
            "n_layers": 1,
            "epochs": 2,
            "batch_size": 4,
            "lr": 3e-3,
            "seed": 5,
        },
    )
    assert main(["train", "--config", train_cfg, "--out", str(root / "dyn"), "--direction", "dynamics"]) == 0
    assert main(["train", "--config", train_cfg, "--out", str(root / "ham"), "--direction", "hamiltonian"]) == 0
    return root


def test_gen_writes_dataset_and_resolved_config(workspace):
    manifest = json.loads((workspace / "ds" / "manifest.json").read_text())
    assert manifest["n_records"] == 10
    resolved = json.loads((workspace / "ds" / "resolved_config.json").read_text())
    assert resolved["schema_version"] == 1
    assert resolved["seed"] == 9
    assert resolved["command"] == "gen"


def test_train_outputs(workspace):
    for sub in ("dyn", "ham"):
        assert (workspace / sub / "best.npz").exists()
        resolved = json.loads((workspace / sub / "resolved_config.json").read_text())
        assert resolved["manifest_hash"]
        assert resolved["epochs"] == 2


def test_direction_flag_overrides_config(workspace, tmp_path):
    cfg = write_json(
        tmp_path / "t.json",
        {
            "schema_version": 1,
            "dataset": str(workspace / "ds"),
            "direction": "dynamics",
            "hidden_size": 8,
            "n_layers": 1,
            "epochs": 1,
            "batch_size": 4,
            "seed": 5,
        },
    )
    assert main(["train", "--config", cfg, "--out", str(tmp_path / "m"), "--direction", "hamiltonian"]) == 0
    meta = json.loads((tmp_path / "m" / "resolved_config.json").read_text())
    assert meta["direction"] == "hamiltonian"


def test_train_requires_some_direction(workspace, tmp_path):
    cfg = write_json(
        tmp_path / "t.json",
        {"schema_version": 1, "dataset": str(workspace / "ds"), "epochs": 1},
    )
    assert main(["train", "--config", cfg, "--out", str(tmp_path / "m")]) == 1


def test_eval_guard_and_report(workspace, tmp_path, capsys):
    cfg = write_json(
        tmp_path / "e.json",
        {"schema_version": 1, "checkpoint": str(workspace / "dyn" / "best.npz"), "dataset": str(workspace / "ds")},
    )
    assert main(["eval", "--config", cfg, "--out", str(tmp_path / "ev")]) == 0
    assert (tmp_path / "ev" / "eval_report.json").exists()
    train_cfg = write_json(
        tmp_path / "et.json",
        {
            "schema_version": 1,
            "checkpoint": str(workspace / "dyn" / "best.npz"),
            "dataset": str(workspace / "ds"),
            "split": "train",
        },
    )
    assert main(["eval", "--config", train_cfg, "--out", str(tmp_path / "ev2")]) == 1
    assert "train split" in capsys.readouterr().err
    assert main(["eval", "--config", train_cfg, "--out", str(tmp_path / "ev2"), "--allow-train-split"]) == 0


def test_predict_then_infer_round_trip(workspace, tmp_path):
    times = np.round(np.arange(51) * 0.1, 10)
    field_csv = tmp_path / "field.csv"
    field_csv.write_text("t,B\n" + "\n".join(f"{t},1.5" for t in times) + "\n")
    pred_cfg = write_json(
        tmp_path / "p.json",
        {
            "schema_version": 1,
            "checkpoint": str(workspace / "dyn" / "best.npz"),
            "field_csv": str(field_csv),
            "init_bloch": [0.0, 0.0, 1.0],
        },
    )
    assert main(["predict", "--config", pred_cfg, "--out", str(tmp_path / "pr")]) == 0
    obs_csv = tmp_path / "pr" / "observables.csv"
    assert obs_csv.read_text().startswith("t,X0,Y0,Z0")
    infer_cfg = write_json(
        tmp_path / "i.json",
        {
            "schema_version": 1,
            "checkpoint": str(workspace / "ham" / "best.npz"),
            "observables_csv": str(obs_csv),
            "init_bloch": [0.0, 0.0, 1.0],
        },
    )
    assert main(["infer", "--config", infer_cfg, "--out", str(tmp_path / "inf")]) == 0
    lines = (tmp_path / "inf" / "field.csv").read_text().strip().splitlines()
    assert lines[0] == "t,B"
    assert len(lines) == 52


def test_bad_configs_exit_1(workspace, tmp_path):
    missing = str(tmp_path / "nope.json")
    assert main(["gen", "--config", missing, "--out", str(tmp_path / "o")]) == 1
    bad_json = tmp_path / "broken.json"
    bad_json.write_text("{oops")
    assert main(["gen", "--config", str(bad_json), "--out", str(tmp_path / "o")]) == 1
    unknown = write_json(
        tmp_path / "u.json",
        {"schema_version": 1, "kind": "RABI_X", "n_train": 1, "n_val": 0, "n_test": 0, "bogus": 1},
    )
    assert main(["gen", "--config", unknown, "--out", str(tmp_path / "o")]) == 1
    wrong_version = write_json(
        tmp_path / "v.json",
        {"schema_version": 2, "kind": "RABI_X", "n_train": 1, "n_val": 0, "n_test": 0},
    )
    assert main(["gen", "--config", wrong_version, "--out", str(tmp_path / "o")]) == 1
    wrong_type = write_json(
        tmp_path / "w.json",
        {"schema_version": 1, "kind": "RABI_X", "n_train": "six", "n_val": 0, "n_test": 0},
    )
    assert main(["gen", "--config", wrong_type, "--out", str(tmp_path / "o")]) == 1


def test_usage_errors_exit_1():
    with pytest.raises(SystemExit) as exc:
        main(["gen", "--config", "x.json"])  # --out missing
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["repro", "fig99", "--out", "r"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1


def test_seed_precedence(tmp_path, monkeypatch):
    base = {"schema_version": 1, "kind": "RABI_X", "n_train": 2, "n_val": 0, "n_test": 0, "seed": 9}
    cfg = write_json(tmp_path / "g.json", base)

    def run_and_read(out, *extra):
        assert main(["gen", "--config", cfg, "--out", str(tmp_path / out), *extra]) == 0
        return json.loads((tmp_path / out / "resolved_config.json").read_text())["seed"]

    monkeypatch.delenv("HAMFLOW_SEED", raising=False)
    assert run_and_read("a") == 9  # config value
    monkeypatch.setenv("HAMFLOW_SEED", "123")
    assert run_and_read("b") == 123  # environment beats config
    assert run_and_read("c", "--seed", "55") == 55  # flag beats environment
    monkeypatch.setenv("HAMFLOW_SEED", "not-a-number")
    assert main(["gen", "--config", cfg, "--out", str(tmp_path / "d")]) == 1


def test_repro_exit_codes(tmp_path, monkeypatch, capsys):
    def fake_pass(out_dir, seed):
        return {
            "figure": "fig3",
            "seed": seed,
            "checks": [{"name": "alpha", "value": 0.5, "threshold": 1.0, "op": "<", "pass": True}],
            "pass": True,
        }

    def fake_fail(out_dir, seed):
        return {
            "figure": "fig3",
            "seed": seed,
            "checks": [{"name": "beta_gate", "value": 2.0, "threshold": 1.0, "op": "<", "pass": False}],
            "pass": False,
        }

    monkeypatch.setitem(reproduce_mod.REPRO_FUNCTIONS, "fig3", fake_pass)
    assert main(["repro", "fig3", "--out", str(tmp_path / "r1")]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "alpha" in out

    monkeypatch.setitem(reproduce_mod.REPRO_FUNCTIONS, "fig3", fake_fail)
    assert main(["repro", "fig3", "--out", str(tmp_path / "r2")]) == 2
    captured = capsys.readouterr()
    assert "FAIL" in captured.out
    assert "beta_gate" in captured.err  # the failing criterion is named on stderr


def test_repro_numerical_failure_exits_3(tmp_path, monkeypatch):
    def blow_up(out_dir, seed):
        raise NumericalError("synthetic instability")

    monkeypatch.setitem(reproduce_mod.REPRO_FUNCTIONS, "fig3", blow_up)
    assert main(["repro", "fig3", "--out", str(tmp_path / "r")]) == 3


def test_repro_deterministic_pins_threads(tmp_path, monkeypatch):
    monkeypatch.delenv("OPENBLAS_NUM_THREADS", raising=False)
    monkeypatch.setitem(
        reproduce_mod.REPRO_FUNCTIONS,
        "fig3",
        lambda out_dir, seed: {"figure": "fig3", "seed": seed, "checks": [], "pass": True},
    )
    assert main(["repro", "fig3", "--out", str(tmp_path / "r"), "--deterministic"]) == 0
    import os

    assert os.environ["OPENBLAS_NUM_THREADS"] == "1"


def test_selftest_exit_codes(tmp_path, monkeypatch, capsys):
    ok = [CheckResult("osc", 1e-9, 1e-8, True, 0.01)]
    monkeypatch.setattr(selftest_mod, "run_selftest", lambda verbose=True: ok)
    assert main(["selftest", "--out", str(tmp_path / "s")]) == 0
    dumped = json.loads((tmp_path / "s" / "selftest_results.json").read_text())
    assert dumped[0]["name"] == "osc" and dumped[0]["pass"] is True

    bad = [CheckResult("gate_check", 5.0, 1.0, False, 0.01)]
    monkeypatch.setattr(selftest_mod, "run_selftest", lambda verbose=True: bad)
    assert main(["selftest"]) == 2
    assert "gate_check" in capsys.readouterr().err
