"""Transfer a model-complexity prior from a labeled source task to a target task.

A Gaussian prior over hidden width is fitted from bootstrap sweeps of the
source; the target is labeled by margin-sampling active learning; the width
maximizing prior times a capacity-penalized exponential likelihood of the
in-sample error is then used for the target classifier.
"""

from .active import ActiveConfig, LabeledPool, LabelOracle, make_hidden_label_oracle, run_active_learning
from .adapt import (
    AdaptationResult,
    MAPComplexityClassifier,
    PosteriorRow,
    evaluate,
    likelihood,
    run_map_adaptation,
)
from .capacity import (
    CapacityParams,
    CapacityReport,
    capacity_report,
    deviation_term,
    lambda_of_theta,
    log_growth,
    vc_dimension,
    weight_count,
)
from .dataset import (
    LabeledTable,
    ShiftSpec,
    SplitSpec,
    UnlabeledTable,
    bootstrap_sample,
    load_csv,
    make_shifted_pair,
    save_csv,
    split,
)
from .harness import ExperimentSpec, RunReport, run_baseline_fixed_theta, run_experiment
from .learner import (
    NetConfig,
    ShallowNetClassifier,
    TrainedModel,
    load_model,
    margin,
    predict_proba,
    save_model,
    train,
    zero_one_error,
)
from .prior import (
    ComplexityPrior,
    ComplexityPriorEstimator,
    PriorConfig,
    estimate_prior,
    search_interval,
    sweep_sample,
)

__version__ = "0.1.0"
