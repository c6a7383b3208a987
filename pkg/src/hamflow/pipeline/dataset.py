"""Dataset generation: seeded record sampling, batch simulation, manifests.

A dataset is a directory holding ``records.jsonl`` (one record per line) and
``manifest.json`` (grids, splits, the sha256 of the records file, and the
fully resolved generation config).  Records are ordered train, then
validation, then test; train and validation records carry observables on the
training-window grid only, test records on the full grid so extrapolation can
be scored.

Every record is reproducible in isolation: its inputs are drawn from
``derive_rng(seed, STREAM_DATASET, index, retry)``, where retry counts
regeneration attempts after a simulator tolerance failure (each one logged in
the manifest).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..config import STREAM_DATASET, canonical_json, derive_rng, file_sha256
from ..dynamics import (
    KINDS,
    NMR_B0_HZ,
    ObservableSet,
    TimeGrid,
    density_from_state,
    evolve_lindblad,
    evolve_schrodinger,
    lindblad_batch,
    nmr_zz,
    product_state,
    rabi_x,
    sc_swap,
    schrodinger_batch,
    tfim_ring,
)
from ..errors import ConfigError, NumericalError
from ..fields import (
    DrivingField,
    GPParams,
    constant_field,
    random_quench,
    sample_gp,
    sample_gp_mixture,
    uniform_grid,
)

FIELD_FAMILIES = ("gp_mixture", "nmr_mixed", "sc_mixed")
INIT_POLICIES = ("random_product_shared", "random_product", "one_zero")
OBSERVABLE_CHOICES = ("ring_default", "two_qubit_all")

RECORDS_FILE = "records.jsonl"
MANIFEST_FILE = "manifest.json"

GENERATION_BATCH = 256
MAX_RETRIES = 5
NORM_DRIFT_ACCEPT = 1e-9
TRACE_DRIFT_ACCEPT = 1e-8

# relative-units driving family for the two-qubit ZZ system: the drawn signal
# u multiplies the reference amplitude, so u = 1 is the undriven calibration
NMR_GP_WEIGHT = 0.6
NMR_QUENCH_WEIGHT = 0.2
NMR_GP_C0_RANGE = (0.0, 0.25)
NMR_GP_SIGMA_RANGE = (0.002, 0.02)  # seconds
NMR_QUENCH_LEVEL_RANGE = (0.3, 1.7)
NMR_PERIODIC_AMP_RANGE = (-0.5, 0.5)
NMR_PERIODIC_OMEGA_RANGE = (100.0, 1200.0)  # rad/s

# detuning family for the exchange-coupled pair, MHz and microseconds
SC_CONSTANT_WEIGHT = 0.5
SC_DETUNING_RANGE = (-2.0, 2.0)
SC_GP_C0_RANGE = (0.0, 4.0)
SC_GP_SIGMA_RANGE = (0.01, 0.1)


@dataclass(frozen=True)
class DatasetConfig:
    kind: str
    n_train: int
    n_val: int
    n_test: int
    seed: int
    n_qubits: int
    dt: float
    train_horizon: float
    full_horizon: float
    field_family: str
    observables: str
    init_policy: str
    gamma: float = 0.0
    noise: bool = False
    field_scale: float = 5.0
    time_scale: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown system kind {self.kind!r}")
        for name in ("n_train", "n_val", "n_test"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if self.dt <= 0 or self.train_horizon <= 0 or self.full_horizon < self.train_horizon:
            raise ConfigError("need dt > 0 and full_horizon >= train_horizon > 0")
        if self.field_family not in FIELD_FAMILIES:
            raise ConfigError(f"unknown field family {self.field_family!r}")
        if self.observables not in OBSERVABLE_CHOICES:
            raise ConfigError(f"unknown observable choice {self.observables!r}")
        if self.init_policy not in INIT_POLICIES:
            raise ConfigError(f"unknown init policy {self.init_policy!r}")
        if self.noise and self.gamma <= 0:
            raise ConfigError("noise=True requires gamma > 0")
        if self.field_scale <= 0 or self.time_scale <= 0:
            raise ConfigError("field_scale and time_scale must be positive")
        if self.kind == "TFIM_RING" and self.n_qubits < 3:
            raise ConfigError("the ring coupling needs n_qubits >= 3")
        if self.kind == "RABI_X" and self.n_qubits != 1:
            raise ConfigError("RABI_X is a single-qubit system")
        if self.kind in ("NMR_ZZ", "SC_SWAP_DETUNED") and self.n_qubits != 2:
            raise ConfigError(f"{self.kind} is a two-qubit system")

    @property
    def train_points(self) -> int:
        return int(round(self.train_horizon / self.dt)) + 1

    @property
    def full_points(self) -> int:
        return int(round(self.full_horizon / self.dt)) + 1

    @property
    def drive_names(self) -> tuple:
        return ("delta1", "delta2") if self.kind == "SC_SWAP_DETUNED" else ("B",)

    @property
    def moment_width(self) -> int:
        return 3 if self.init_policy == "random_product_shared" else 3 * self.n_qubits

    def observable_set(self) -> ObservableSet:
        if self.observables == "ring_default":
            return ObservableSet.ring_default(self.n_qubits)
        return ObservableSet.two_qubit_all()


_PRESETS = {
    "TFIM_RING": dict(
        n_qubits=5, dt=0.1, train_horizon=5.0, full_horizon=15.0,
        field_family="gp_mixture", observables="ring_default",
        init_policy="random_product_shared", field_scale=5.0, time_scale=1.0,
    ),
    "RABI_X": dict(
        n_qubits=1, dt=0.1, train_horizon=5.0, full_horizon=5.0,
        field_family="gp_mixture", observables="ring_default",
        init_policy="random_product_shared", field_scale=5.0, time_scale=1.0,
    ),
    "NMR_ZZ": dict(
        n_qubits=2, dt=2e-4, train_horizon=0.02, full_horizon=0.0498,
        field_family="nmr_mixed", observables="two_qubit_all",
        init_policy="random_product", field_scale=NMR_B0_HZ, time_scale=1e-3,
    ),
    "SC_SWAP_DETUNED": dict(
        n_qubits=2, dt=2e-3, train_horizon=0.02, full_horizon=0.02,
        field_family="sc_mixed", observables="two_qubit_all",
        init_policy="one_zero", field_scale=5.0, time_scale=1e-3,
    ),
}


def dataset_preset(kind: str, n_train: int, n_val: int, n_test: int, seed: int, **overrides) -> DatasetConfig:
    """Per-system defaults with explicit counts; keyword overrides win."""
    if kind not in _PRESETS:
        raise ConfigError(f"no preset for kind {kind!r}")
    merged = dict(_PRESETS[kind])
    merged.update(overrides)
    return DatasetConfig(kind=kind, n_train=n_train, n_val=n_val, n_test=n_test, seed=seed, **merged)


def _uniform_sphere(rng: np.random.Generator) -> np.ndarray:
    z = rng.uniform(-1.0, 1.0)
    phi = rng.uniform(0.0, 2.0 * np.pi)
    s = np.sqrt(1.0 - z * z)
    return np.array([s * np.cos(phi), s * np.sin(phi), z])


def _draw_init(config: DatasetConfig, rng: np.random.Generator) -> np.ndarray:
    if config.init_policy == "random_product_shared":
        return np.tile(_uniform_sphere(rng), (config.n_qubits, 1))
    if config.init_policy == "random_product":
        return np.stack([_uniform_sphere(rng) for _ in range(config.n_qubits)])
    return np.array([[0.0, 0.0, -1.0], [0.0, 0.0, 1.0]])  # |1> on qubit 0, |0> on qubit 1


def _draw_relative_drive(config: DatasetConfig, rng: np.random.Generator) -> DrivingField:
    """Signal u(t) around 1 on the full grid; the caller applies the reference."""
    r = rng.uniform()
    times = uniform_grid(config.dt, config.full_horizon)
    if r < NMR_GP_WEIGHT:
        c0 = rng.uniform(*NMR_GP_C0_RANGE)
        sigma = rng.uniform(*NMR_GP_SIGMA_RANGE)
        wiggle = sample_gp(GPParams(c0=c0, sigma=sigma, dt=config.dt, horizon=config.full_horizon), rng)
        return DrivingField(times, 1.0 + wiggle.values, {"family": "gp_offset", "c0": c0, "sigma": sigma})
    if r < NMR_GP_WEIGHT + NMR_QUENCH_WEIGHT:
        return random_quench(rng, config.dt, config.full_horizon, height_range=NMR_QUENCH_LEVEL_RANGE)
    amplitude = rng.uniform(*NMR_PERIODIC_AMP_RANGE)
    omega = rng.uniform(*NMR_PERIODIC_OMEGA_RANGE)
    return DrivingField(
        times,
        1.0 + amplitude * np.cos(omega * times),
        {"family": "periodic_offset", "amplitude": amplitude, "omega": omega},
    )


def _draw_fields(config: DatasetConfig, rng: np.random.Generator) -> dict:
    if config.field_family == "gp_mixture":
        return {"B": sample_gp_mixture(rng, dt=config.dt, horizon=config.full_horizon)}
    if config.field_family == "nmr_mixed":
        u = _draw_relative_drive(config, rng)
        return {"B": DrivingField(u.times, NMR_B0_HZ * u.values, {**u.meta, "reference": NMR_B0_HZ})}
    # sc_mixed: either both detunings constant or both smooth random draws
    if rng.uniform() < SC_CONSTANT_WEIGHT:
        return {
            name: constant_field(rng.uniform(*SC_DETUNING_RANGE), config.dt, config.full_horizon)
            for name in ("delta1", "delta2")
        }
    out = {}
    for name in ("delta1", "delta2"):
        c0 = rng.uniform(*SC_GP_C0_RANGE)
        sigma = rng.uniform(*SC_GP_SIGMA_RANGE)
        field = sample_gp(GPParams(c0=c0, sigma=sigma, dt=config.dt, horizon=config.full_horizon), rng)
        out[name] = DrivingField(field.times, field.values, {"family": "gp", "c0": c0, "sigma": sigma})
    return out


def _draw_record_inputs(config: DatasetConfig, index: int, retry: int):
    """Initial state first, then fields: the draw order is part of the format."""
    rng = derive_rng(config.seed, STREAM_DATASET, index, retry)
    blochs = _draw_init(config, rng)
    fields = _draw_fields(config, rng)
    return blochs, fields


def _truncate(field: DrivingField, n_points: int) -> DrivingField:
    return DrivingField(field.times[:n_points], field.values[:n_points], field.meta)


def _record_spec(config: DatasetConfig, fields: dict, n_points: int):
    cut = {name: _truncate(f, n_points) for name, f in fields.items()}
    if config.kind == "TFIM_RING":
        return tfim_ring(cut["B"], n_qubits=config.n_qubits)
    if config.kind == "RABI_X":
        return rabi_x(cut["B"])
    if config.kind == "NMR_ZZ":
        return nmr_zz(cut["B"])
    return sc_swap(cut["delta1"], cut["delta2"])


def _simulate_single(config: DatasetConfig, blochs, fields, grid: TimeGrid, obs: ObservableSet):
    spec = _record_spec(config, fields, grid.n_steps + 1)
    psi0 = product_state(blochs)
    if config.noise:
        series = evolve_lindblad(spec, density_from_state(psi0), grid, config.gamma, obs)
    else:
        series = evolve_schrodinger(spec, psi0, grid, obs)
    return series.values


def _simulate_batch(config: DatasetConfig, entries, grid: TimeGrid, obs: ObservableSet):
    """Returns (values (R, T+1, K), drift (R,)) or raises NumericalError."""
    n_points = grid.n_steps + 1
    specs = [_record_spec(config, fields, n_points) for _, fields in entries]
    states = np.stack([product_state(blochs) for blochs, _ in entries])
    if config.noise:
        rhos = np.einsum("ri,rj->rij", states, states.conj())
        return lindblad_batch(specs, rhos, grid, config.gamma, obs)
    return schrodinger_batch(specs, states, grid, obs)


def _record_dict(config, index, split, grid_name, blochs, fields, values, retry):
    n_points = values.shape[0]
    return {
        "index": index,
        "split": split,
        "grid": grid_name,
        "init_bloch": np.asarray(blochs).tolist(),
        "field": {name: f.values[:n_points].tolist() for name, f in fields.items()},
        "field_meta": {name: f.meta for name, f in fields.items()},
        "observables": values.tolist(),
        "gamma": config.gamma if config.noise else 0.0,
        "noise": config.noise,
        "retries": retry,
    }


def generate_dataset(config: DatasetConfig, out_dir) -> dict:
    """Simulate every record, write records.jsonl + manifest.json, return the manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    obs = config.observable_set()
    drift_accept = TRACE_DRIFT_ACCEPT if config.noise else NORM_DRIFT_ACCEPT

    records = []
    retry_log = []
    index = 0
    for split, count in (("train", config.n_train), ("val", config.n_val), ("test", config.n_test)):
        n_points = config.full_points if split == "test" else config.train_points
        grid_name = "full" if split == "test" else "train"
        grid = TimeGrid(dt=config.dt, n_steps=n_points - 1)
        indices = list(range(index, index + count))
        index += count
        for start in range(0, len(indices), GENERATION_BATCH):
            chunk = indices[start : start + GENERATION_BATCH]
            entries = [_draw_record_inputs(config, i, 0) for i in chunk]
            try:
                values, drift = _simulate_batch(config, entries, grid, obs)
            except NumericalError as exc:
                values, drift = None, None
                retry_log.append({"index": chunk[0], "retry": 0, "error": f"batch rejected: {exc}"})
            for j, rec_index in enumerate(chunk):
                blochs, fields = entries[j]
                retry = 0
                if values is not None and drift[j] <= drift_accept:
                    rec_values = values[j]
                else:
                    rec_values = None
                    while rec_values is None:
                        try:
                            rec_values = _simulate_single(config, blochs, fields, grid, obs)
                        except NumericalError as exc:
                            retry += 1
                            if retry > MAX_RETRIES:
                                raise NumericalError(
                                    f"record {rec_index} failed {MAX_RETRIES} regeneration attempts"
                                ) from exc
                            retry_log.append({"index": rec_index, "retry": retry, "error": str(exc)})
                            blochs, fields = _draw_record_inputs(config, rec_index, retry)
                records.append(_record_dict(config, rec_index, split, grid_name, blochs, fields, rec_values, retry))

    records_path = out / RECORDS_FILE
    with open(records_path, "w") as fh:
        for rec in records:
            fh.write(canonical_json(rec) + "\n")

    manifest = {
        "schema_version": 1,
        "config": asdict(config),
        "observable_names": obs.names,
        "drive_names": list(config.drive_names),
        "moment_width": config.moment_width,
        "times_train": uniform_grid(config.dt, config.train_horizon).tolist(),
        "times_full": uniform_grid(config.dt, config.full_horizon).tolist(),
        "n_records": len(records),
        "splits": {
            "train": [0, config.n_train],
            "val": [config.n_train, config.n_train + config.n_val],
            "test": [config.n_train + config.n_val, config.n_train + config.n_val + config.n_test],
        },
        "content_hash": file_sha256(records_path),
        "retries": retry_log,
    }
    with open(out / MANIFEST_FILE, "w") as fh:
        fh.write(canonical_json(manifest) + "\n")
    return manifest


def load_dataset(dataset_dir, verify: bool = True):
    """Read (manifest, records); verify the content hash unless told not to."""
    root = Path(dataset_dir)
    manifest_path = root / MANIFEST_FILE
    if not manifest_path.exists():
        raise ConfigError(f"no {MANIFEST_FILE} in {root}")
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    records_path = root / RECORDS_FILE
    if verify:
        actual = file_sha256(records_path)
        if actual != manifest["content_hash"]:
            raise ConfigError(
                f"records file hash {actual[:12]}... does not match manifest {manifest['content_hash'][:12]}..."
            )
    records = []
    with open(records_path) as fh:
        for line in fh:
            if line.strip():
                records.append(json.loads(line))
    return manifest, records


def split_records(manifest: dict, records: list, split: str) -> list:
    if split not in manifest["splits"]:
        raise ConfigError(f"unknown split {split!r}")
    start, stop = manifest["splits"][split]
    return records[start:stop]
