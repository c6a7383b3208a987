"""Dataset generation, training, inference, protocols, and figure bundles."""

from .dataset import (
    DatasetConfig,
    dataset_preset,
    generate_dataset,
    load_dataset,
    split_records,
)
from .training import (
    DIRECTIONS,
    TrainedModel,
    TrainingConfig,
    build_arrays,
    dataset_loss,
    load_trained,
    model_config_for,
    train,
)
from .inference import (
    EvalReport,
    evaluate,
    infer_detunings,
    infer_field,
    predict_dynamics,
)
from .protocols import (
    draw_nmr_protocol_field,
    draw_sc_detunings,
    measure_swap_frequency,
    nmr_initial_blochs,
    run_nmr_protocol,
    run_sc_protocol,
    sc_initial_blochs,
    simulate_nmr,
    simulate_sc,
    swap_frequency_check,
)
