"""Shared fixtures: a small single-qubit dataset trained well in both directions.

Built once per session; the convergence-contract tests read the returned
histories instead of retraining.
"""

import pytest

from hamflow.pipeline import TrainingConfig, dataset_preset, generate_dataset, load_dataset, train

TOY_SEED = 23
TOY_EPOCHS = 800


@pytest.fixture(scope="session")
def toy_rabi(tmp_path_factory):
    root = tmp_path_factory.mktemp("toy_rabi")
    config = dataset_preset("RABI_X", 50, 10, 8, seed=TOY_SEED)
    generate_dataset(config, root / "dataset")
    manifest, records = load_dataset(root / "dataset")

    out = {"config": config, "manifest": manifest, "records": records, "dir": root}
    for direction in ("dynamics", "hamiltonian"):
        tc = TrainingConfig(
            direction=direction,
            seed=TOY_SEED,
            hidden_size=64,
            n_layers=2,
            epochs=TOY_EPOCHS,
            batch_size=50,
            lr=3e-3,
        )
        model, history = train(manifest, records, tc, out_dir=root / f"model_{direction}")
        out[direction] = model
        out[f"history_{direction}"] = history
    return out
