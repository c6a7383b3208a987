"""Central finite-difference validation of analytic gradients."""

from __future__ import annotations

import numpy as np

# coordinates whose gradient is below this floor are compared absolutely;
# a relative test there would only measure finite-difference roundoff
GRAD_FLOOR = 1e-4


def gradient_check(
    fn,
    params: dict,
    rng: np.random.Generator,
    n_probes: int = 100,
    step: float = 1e-5,
) -> float:
    """Probe random parameter coordinates and return the worst mismatch.

    ``fn(params) -> (loss, grads)`` must be deterministic.  For each probe the
    analytic derivative is compared against (f(p+h) - f(p-h)) / 2h at the same
    coordinate; the score is |analytic - numeric| / max(|analytic|, |numeric|,
    GRAD_FLOOR), so the check is relative where the gradient is meaningful and
    absolute where it vanishes.
    """
    _, grads = fn(params)
    keys = sorted(params.keys())
    worst = 0.0
    for _ in range(n_probes):
        key = keys[int(rng.integers(len(keys)))]
        flat_index = int(rng.integers(params[key].size))
        idx = np.unravel_index(flat_index, params[key].shape)
        original = params[key][idx]
        params[key][idx] = original + step
        plus, _ = fn(params)
        params[key][idx] = original - step
        minus, _ = fn(params)
        params[key][idx] = original
        numeric = (plus - minus) / (2.0 * step)
        analytic = float(grads[key][idx])
        err = abs(analytic - numeric) / max(abs(analytic), abs(numeric), GRAD_FLOOR)
        worst = max(worst, err)
    return worst
