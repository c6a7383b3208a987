"""Adam optimizer over flat parameter dicts."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NumericalError


@dataclass
class AdamState:
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_init(params: dict) -> AdamState:
    return AdamState(
        step=0,
        m={k: np.zeros_like(p) for k, p in params.items()},
        v={k: np.zeros_like(p) for k, p in params.items()},
    )


def adam_step(
    params: dict,
    grads: dict,
    state: AdamState,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One update, in place, with the standard bias correction."""
    state.step += 1
    t = state.step
    for k in params:
        g = grads[k]
        if not np.all(np.isfinite(g)):
            raise NumericalError(f"non-finite gradient for {k} (training diverged)")
        state.m[k] = beta1 * state.m[k] + (1.0 - beta1) * g
        state.v[k] = beta2 * state.v[k] + (1.0 - beta2) * (g * g)
        m_hat = state.m[k] / (1.0 - beta1**t)
        v_hat = state.v[k] / (1.0 - beta2**t)
        params[k] -= lr * m_hat / (np.sqrt(v_hat) + eps)
