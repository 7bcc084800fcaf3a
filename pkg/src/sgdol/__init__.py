"""SGD with online-learned stepsizes, baselines, oracles, and a run harness."""

from .core import RngStream, Trajectory, TrajectoryRecord, derive_stream_id, dot, gaussian, sq_norm, vector
from .online import (
    DEFAULT_ALPHA,
    CoordFtrlState,
    FtrlState,
    RegretLedger,
    SurrogateLoss,
    eval_surrogate,
    eval_surrogate_percoord,
)
from .optimizers import (
    Adam,
    AdaGradCoord,
    AdaGradGlobal,
    Optimizer,
    OptimizerConfig,
    RunResult,
    Sgd,
    SgdGhadimiLan,
    Sgdol,
    SgdolCoord,
    SgdolMomentum,
    StepReport,
    run,
)
from .oracles import (
    Dataset,
    GradientPair,
    LibsvmParseError,
    QuadraticOracle,
    RosenbrockOracle,
    SigmoidLossOracle,
    StochasticOracle,
    balance_subsample,
    load_libsvm,
    rosenbrock_f,
    rosenbrock_grad,
    save_libsvm,
    sigmoid_loss_f,
    sigmoid_loss_grad,
)
from .harness import (
    ConfigError,
    ExperimentSpec,
    OracleSpec,
    ResultTable,
    parse_config,
    run_experiment,
    write_csv,
)
from .diagnostics import (
    CheckResult,
    SurrogateBoundVerdict,
    finite_diff_grad,
    ftrl_argmin_oracle,
    run_verification,
    smoothness_probe,
    surrogate_bound_check,
)

__version__ = "0.1.0"
