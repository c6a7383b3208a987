"""Hand-rolled sequence learning: LSTM stack, Adam, gradient checking, checkpoints."""

from .adam import AdamState, adam_init, adam_step
from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import gradient_check
from .model import (
    GATES,
    ModelConfig,
    encode_initial_state,
    init_params,
    lstm_cell_forward,
    model_backward,
    model_forward,
    mse_grad,
    mse_loss,
)

__all__ = [
    "AdamState",
    "adam_init",
    "adam_step",
    "load_checkpoint",
    "save_checkpoint",
    "gradient_check",
    "GATES",
    "ModelConfig",
    "encode_initial_state",
    "init_params",
    "lstm_cell_forward",
    "model_backward",
    "model_forward",
    "mse_grad",
    "mse_loss",
]
