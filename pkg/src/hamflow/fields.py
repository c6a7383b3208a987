"""Driving-field generators: Gaussian-process samples, quenches, periodic drives.

A field is a uniformly sampled time series.  Between samples it means its
linear interpolant, with constant extension at the boundaries; integrators
read it at substep midpoints.  Random generators draw every number from a
caller-supplied ``numpy.random.Generator`` so equal seeds give bit-identical
fields.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import ConfigError, DomainError

# eigenvalues of the correlation matrix below this are rounding noise
EIG_CLAMP = 1e-12

GP_C0_RANGE = (0.0, 4.0)
GP_SIGMA_RANGE = (1.0, 9.0)
QUENCH_HEIGHT_RANGE = (-3.0, 3.0)
PERIODIC_AMP_RANGE = (-3.0, 3.0)
PERIODIC_OMEGA_RANGE = (0.1, 4.0)


@dataclass
class DrivingField:
    """A scalar control signal sampled on a uniform time grid."""

    times: np.ndarray
    values: np.ndarray
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.ndim != 1 or self.times.shape != self.values.shape:
            raise ConfigError("times and values must be equal-length 1-d arrays")
        if self.times.size < 2:
            raise ConfigError("a field needs at least two samples")
        steps = np.diff(self.times)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
            raise ConfigError("time grid is not uniform")
        if not np.all(np.isfinite(self.values)):
            raise ConfigError("field values must be finite")

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def at(self, t) -> np.ndarray:
        """Linear interpolation, clamped at the boundary samples.

        Times more than one grid step outside the sampled window raise
        ``DomainError``: that is a sign the caller paired a field with the
        wrong simulation grid rather than a boundary rounding effect.
        """
        t = np.asarray(t, dtype=float)
        slack = self.dt
        if np.any(t < self.t_start - slack) or np.any(t > self.t_end + slack):
            raise DomainError(
                f"time {t} outside field domain [{self.t_start}, {self.t_end}]"
            )
        return np.interp(t, self.times, self.values)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("t,B\n")
            for t, v in zip(self.times, self.values):
                fh.write(f"{t:.17g},{v:.17g}\n")

    @classmethod
    def from_csv(cls, path) -> "DrivingField":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(times=data[:, 0], values=data[:, 1])


def uniform_grid(dt: float, horizon: float, t_start: float = 0.0) -> np.ndarray:
    n = int(round(horizon / dt))
    return t_start + dt * np.arange(n + 1)


@dataclass(frozen=True)
class GPParams:
    """Stationary squared-exponential process on a uniform grid.

    C[n, m] = c0 * exp(-(n - m)^2 dt^2 / (2 sigma^2)), so c0 is the pointwise
    variance and sigma the correlation time.
    """

    c0: float
    sigma: float
    dt: float = 0.1
    horizon: float = 15.0
    t_start: float = 0.0

    def __post_init__(self):
        if self.c0 < 0:
            raise ConfigError("c0 must be >= 0")
        if self.sigma <= 0:
            raise ConfigError("sigma must be > 0")


def gp_correlation_matrix(params: GPParams) -> np.ndarray:
    t = uniform_grid(params.dt, params.horizon, params.t_start)
    dt2 = (t[:, None] - t[None, :]) ** 2
    return params.c0 * np.exp(-dt2 / (2.0 * params.sigma**2))


def _gp_factor(params: GPParams) -> np.ndarray:
    """Matrix F with F F^T = C; drawing F @ x, x ~ N(0, I) samples the process."""
    corr = gp_correlation_matrix(params)
    w, q = np.linalg.eigh(corr)
    w[w < EIG_CLAMP] = 0.0
    return q * np.sqrt(w)


def sample_gp(params: GPParams, rng: np.random.Generator) -> DrivingField:
    """One realization of the process; c0 = 0 gives the zero field."""
    factor = _gp_factor(params)
    x = rng.standard_normal(factor.shape[0])
    return DrivingField(
        times=uniform_grid(params.dt, params.horizon, params.t_start),
        values=factor @ x,
        meta={"family": "gp", "c0": params.c0, "sigma": params.sigma},
    )


def sample_gp_matrix(params: GPParams, rng: np.random.Generator, count: int) -> np.ndarray:
    """``count`` independent realizations as rows; used by the statistics tests."""
    factor = _gp_factor(params)
    x = rng.standard_normal((factor.shape[0], count))
    return (factor @ x).T


def sample_gp_mixture(
    rng: np.random.Generator,
    dt: float = 0.1,
    horizon: float = 15.0,
    c0_range=GP_C0_RANGE,
    sigma_range=GP_SIGMA_RANGE,
) -> DrivingField:
    """GP sample with hyperparameters drawn uniformly per call.

    The default ranges keep typical field magnitudes below about 5.
    """
    c0 = rng.uniform(*c0_range)
    sigma = rng.uniform(*sigma_range)
    return sample_gp(GPParams(c0=c0, sigma=sigma, dt=dt, horizon=horizon), rng)


def make_quench(steps, dt: float, horizon: float, t_start: float = 0.0) -> DrivingField:
    """Piecewise-constant field from (switch_time, height) pairs.

    Each grid point takes the height of the most recent switch at or before
    it (left-closed); points before the first switch take the first height.
    """
    steps = sorted(steps, key=lambda s: s[0])
    if not steps:
        raise ConfigError("quench needs at least one (time, height) step")
    times = uniform_grid(dt, horizon, t_start)
    switch_times = np.array([s[0] for s in steps])
    heights = np.array([s[1] for s in steps])
    idx = np.searchsorted(switch_times, times, side="right") - 1
    values = heights[np.maximum(idx, 0)]
    return DrivingField(times=times, values=values, meta={"family": "quench", "steps": [list(map(float, s)) for s in steps]})


def random_quench(
    rng: np.random.Generator,
    dt: float = 0.1,
    horizon: float = 15.0,
    t_start: float = 0.0,
    height_range=QUENCH_HEIGHT_RANGE,
    max_switches: int = 3,
) -> DrivingField:
    """Initial height plus 1 to ``max_switches`` switches uniform over the horizon."""
    n_switch = int(rng.integers(1, max_switches + 1))
    switch_times = np.sort(rng.uniform(t_start, t_start + horizon, size=n_switch))
    heights = rng.uniform(*height_range, size=n_switch + 1)
    steps = [(t_start, heights[0])] + list(zip(switch_times, heights[1:]))
    return make_quench(steps, dt, horizon, t_start)


def make_periodic(
    amplitude: float, omega: float, dt: float, horizon: float, t_start: float = 0.0, phase: float = 0.0
) -> DrivingField:
    """A cos(omega t + phase) sampled on the grid."""
    times = uniform_grid(dt, horizon, t_start)
    values = amplitude * np.cos(omega * times + phase)
    return DrivingField(
        times=times,
        values=values,
        meta={"family": "periodic", "amplitude": float(amplitude), "omega": float(omega), "phase": float(phase)},
    )


def random_periodic(
    rng: np.random.Generator,
    dt: float = 0.1,
    horizon: float = 15.0,
    t_start: float = 0.0,
    amp_range=PERIODIC_AMP_RANGE,
    omega_range=PERIODIC_OMEGA_RANGE,
) -> DrivingField:
    amplitude = rng.uniform(*amp_range)
    omega = rng.uniform(*omega_range)
    return make_periodic(amplitude, omega, dt, horizon, t_start)


def constant_field(value: float, dt: float, horizon: float, t_start: float = 0.0) -> DrivingField:
    times = uniform_grid(dt, horizon, t_start)
    return DrivingField(times=times, values=np.full(times.shape, float(value)), meta={"family": "constant"})
