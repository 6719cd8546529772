"""selpde: mesh-free least-squares PDE solving with adaptive point weighting.

A solution network is trained on Monte Carlo least-squares residuals of
the PDE, with derivatives taken by finite differences of network
evaluations. Training points can be reweighted adversarially by small
bounded selection networks trained by ascent on the same objective, or
by rank-based binary weights.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND
from .net import (ExactFunction, MlpNetwork, NetworkShape, SelectionNetwork,
                  SolutionAnsatz, init_network)
from .operators import OperatorConfig, OperatorKind
from .problems import PROBLEM_NAMES, ProblemSpec, make_problem
from .sampling import SampleBatch, SamplerConfig, make_streams, sample_batch
from .trainer import (RunResult, TrainConfig, TrainRecord, TrialStats,
                      evaluate_error, run_trials, train)

__all__ = [
    "KERNEL_BACKEND", "ExactFunction", "MlpNetwork", "NetworkShape",
    "SelectionNetwork", "SolutionAnsatz", "init_network", "OperatorConfig",
    "OperatorKind", "PROBLEM_NAMES", "ProblemSpec", "make_problem",
    "SampleBatch", "SamplerConfig", "make_streams", "sample_batch",
    "RunResult", "TrainConfig", "TrainRecord", "TrialStats",
    "evaluate_error", "run_trials", "train", "__version__",
]
