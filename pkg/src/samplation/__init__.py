"""Reverse-biased synthetic sampling for curing unfair classifier predictions.

The workflow: audit applicability, grow one synthetic reserve per value of
the discriminant attribute, draw a small fine-tuning sample whose group mix
inverts the observed prediction shares, fine-tune the pre-trained model,
and sweep the sample size to hit the target fairness ratio without flipping
the bias the other way.

Hot kernels run on a compiled backend when available, with a bit-identical
numpy fallback (see `samplation.kernels`).
"""

from .dataset import (Dataset, Instance, SynthConfig, concat,
                      generate_synthetic, read_csv, split, write_csv)
from .errors import (ApplicabilityError, CapacityError, ConfigError,
                     GenerationError, ParseError, SamplationError,
                     SchemaError, SizeError, TrainingError)
from .fairness import (ApplicabilityReport, Attestations, Condition,
                       FairnessReport, check_applicability, evaluate,
                       imbalance_ratio, prediction_shares)
from .generation import (Reserve, SmoteTrace, build_reserves, knn,
                         load_reserve, load_reserves, save_reserve,
                         smote_generate, smote_trace)
from .kernels import BACKEND
from .model import (Model, TrainConfig, finetune, load_model, loss_and_grad,
                    predict, pretrain, save_model)
from .pipeline import (SamplationConfig, ScenarioConfig, ScenarioResult,
                       SweepResult, SweepRow, TauSelection, desk_tau_grid,
                       emit_plot_csv, emit_report, full_scale_tau_grid,
                       run_scenario, samplate, select_tau, sweep)
from .rng import spawn_seed
from .sampling import (Allocation, ReservoirSample, draw_from_reserves,
                       inclusion_frequencies, reservoir_sample,
                       reverse_allocation, srs_without_replacement)

__version__ = "0.1.0"

__all__ = [
    "__version__", "BACKEND",
    # dataset
    "Dataset", "Instance", "SynthConfig", "concat", "generate_synthetic",
    "read_csv", "split", "write_csv",
    # sampling
    "Allocation", "ReservoirSample", "draw_from_reserves",
    "inclusion_frequencies", "reservoir_sample", "reverse_allocation",
    "srs_without_replacement", "spawn_seed",
    # generation
    "Reserve", "SmoteTrace", "build_reserves", "knn", "load_reserve",
    "load_reserves", "save_reserve", "smote_generate", "smote_trace",
    # model
    "Model", "TrainConfig", "finetune", "load_model", "loss_and_grad",
    "predict", "pretrain", "save_model",
    # fairness
    "ApplicabilityReport", "Attestations", "Condition", "FairnessReport",
    "check_applicability", "evaluate", "imbalance_ratio", "prediction_shares",
    # pipeline
    "SamplationConfig", "ScenarioConfig", "ScenarioResult", "SweepResult",
    "SweepRow", "TauSelection", "desk_tau_grid", "emit_plot_csv",
    "emit_report", "full_scale_tau_grid", "run_scenario", "samplate",
    "select_tau", "sweep",
    # errors
    "SamplationError", "ConfigError", "ParseError", "SchemaError",
    "SizeError", "CapacityError", "GenerationError", "TrainingError",
    "ApplicabilityError",
]
