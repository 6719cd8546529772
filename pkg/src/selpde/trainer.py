"""Training loop: alternating ascent/descent on the weighted residual loss.

One outer iteration draws a fresh batch, runs n1 ascent updates of the
selection parameters (adversarial mode only), then n2 descent updates
of the solution parameters on the same batch. The solution rate follows
the staircase schedule; the selection rate stays constant.
"""

import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .grad import ParameterGradient, ansatz_gradient, selection_gradient
from .loss import (BinaryWeightConfig, basic_loss, batch_states,
                   binary_weighted_loss, selectnet_loss)
from .net import (NetworkShape, SelectionNetwork, SolutionAnsatz, init_network)
from .operators import OperatorConfig, apply_operator
from .optim import OPTIMIZERS, ScheduleSpec
from .problems import make_problem
from .sampling import (RNG_ALGORITHM, SamplerConfig, make_streams,
                       sample_batch, sample_interior)

METHODS = ("basic", "selectnet", "binary")


@dataclass
class TrainConfig:
    problem: str
    d: int
    method: str = "basic"
    N1: int = 10000
    N2: int = 10000
    n: int = 20000
    n1: int = 1
    n2: int = 1
    lam: float = 1.0
    epsilon: float = 1e-3
    m: int = 100
    L: int = 3
    m_s: int = 20
    L_s: int = 3
    m0: float = 0.8
    M0: float = 5.0
    h: float = 1e-4
    activation: str = "cubic_relu"
    sel_activation: str = "relu"
    optimizer: str = "adagrad"
    tau_s: float = 1e-4
    eval_every: int = 100
    n_test: int = 10000
    seed: int = 0
    boundary_mode: str = "penalty"
    strategy: str = "annular"
    annuli: int = 10
    p: float = 0.8
    w_large: float = 4.0 / 3.4
    w_small: float = 1.0 / 3.4
    lr_floor_after: int = 0
    lr_floor: float = 1e-6
    time_budget_seconds: float = 0.0

    def validate(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.n < 0 or self.n1 < 1 or self.n2 < 1:
            raise ValueError("need n >= 0 and n1, n2 >= 1")
        if self.N1 < 1:
            raise ValueError("need at least one interior point")
        if self.boundary_mode not in ("penalty", "conforming"):
            raise ValueError(f"unknown boundary mode {self.boundary_mode!r}")
        if self.boundary_mode == "penalty" and self.N2 < 1:
            raise ValueError("penalty boundary mode needs boundary points")
        if self.epsilon <= 0 or self.lam < 0 or self.tau_s <= 0 or self.eval_every < 1:
            raise ValueError("invalid training scalars")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {sorted(OPTIMIZERS)}")
        if self.method == "binary":
            self.binary_config()  # raises if the weights are inconsistent
        problem = make_problem(self.problem, self.d)
        if self.boundary_mode == "conforming" and not problem.homogeneous_dirichlet:
            raise ValueError(
                "conforming ansatz requires homogeneous Dirichlet data "
                f"({self.problem} has none)"
            )
        return self

    def binary_config(self):
        return BinaryWeightConfig(self.p, self.w_large, self.w_small)

    def sampler_config(self):
        return SamplerConfig(self.strategy, self.annuli)


@dataclass
class TrainRecord:
    iteration: int
    seconds: float
    loss_interior: float
    loss_boundary: float
    loss_penalty: float
    rel_l2_error: float
    lr: float


@dataclass
class RunResult:
    config: TrainConfig
    ansatz: SolutionAnsatz
    sel_interior: Optional[SelectionNetwork]
    sel_boundary: Optional[SelectionNetwork]
    records: list
    diverged: bool
    final_error: Optional[float]
    elapsed_seconds: float
    test_points: np.ndarray = field(repr=False)
    test_exact: np.ndarray = field(repr=False)
    rng_metadata: dict = field(default_factory=dict)

    @property
    def problem(self):
        return make_problem(self.config.problem, self.config.d)


def relative_l2_error(predicted, exact) -> float:
    denom = float(np.sum(exact * exact))
    if denom == 0.0:
        raise ValueError("exact solution vanishes on the test set")
    return float(np.sqrt(np.sum((predicted - exact) ** 2) / denom))


def evaluate_error(ansatz, test_points, test_exact) -> float:
    return relative_l2_error(ansatz.values(test_points), test_exact)


def _sum_entries(ansatz, entries) -> ParameterGradient:
    total = ParameterGradient.zeros_like(ansatz.core)
    for points, upstream in entries:
        total.accumulate(ansatz_gradient(ansatz, points, upstream))
    return total


def train(config: TrainConfig) -> RunResult:
    config.validate()
    problem = make_problem(config.problem, config.d)
    streams = make_streams(config.seed)
    opconfig = OperatorConfig(h=config.h)
    sampler = config.sampler_config()
    schedule = ScheduleSpec(config.n if config.n else 1,
                            config.lr_floor_after, config.lr_floor)
    make_state, step = OPTIMIZERS[config.optimizer]

    mask = "none"
    n_boundary = config.N2
    if config.boundary_mode == "conforming":
        mask = "ball" if problem.domain == "ball" else "cube"
        n_boundary = 0

    def spawn_seed():
        return int(streams.init.rng.integers(0, 2**63))

    shape = NetworkShape(problem.input_dim, config.m, config.L)
    ansatz = SolutionAnsatz(
        init_network(shape, config.activation, spawn_seed()), mask
    )
    sel_interior = sel_boundary = None
    sel_int_state = sel_bnd_state = None
    if config.method == "selectnet":
        sel_shape = NetworkShape(problem.input_dim, config.m_s, config.L_s)
        sel_interior = SelectionNetwork(
            init_network(sel_shape, config.sel_activation, spawn_seed()),
            config.m0, config.M0,
        )
        sel_int_state = make_state(sel_interior.core)
        if n_boundary:
            sel_boundary = SelectionNetwork(
                init_network(sel_shape, config.sel_activation, spawn_seed()),
                config.m0, config.M0,
            )
            sel_bnd_state = make_state(sel_boundary.core)
    sol_state = make_state(ansatz.core)

    test_points = sample_interior(problem, config.n_test, sampler, streams.test.rng)
    test_exact = problem.exact_u(test_points)

    bw = config.binary_config() if config.method == "binary" else None
    records = []
    diverged = False
    start = time.perf_counter()

    def checkpoint(k, components, lr):
        err = evaluate_error(ansatz, test_points, test_exact)
        records.append(TrainRecord(
            k, time.perf_counter() - start,
            components.interior, components.boundary, components.penalty,
            err, lr,
        ))

    k = 0
    while k < config.n:
        k += 1
        lr = schedule.rate(k)
        batch = sample_batch(problem, config.N1, n_boundary, sampler,
                             streams.interior.rng, streams.boundary.rng)

        if config.method == "selectnet":
            states = batch_states(ansatz, problem, batch, opconfig)
            for _ in range(config.n1):
                _, _, sel_up = selectnet_loss(
                    ansatz, sel_interior, sel_boundary, problem, batch,
                    config.lam, config.epsilon, opconfig, states=states,
                )
                pts, d_phi = sel_up.interior
                step(sel_interior.core,
                     selection_gradient(sel_interior, pts, d_phi),
                     sel_int_state, config.tau_s, ascent=True)
                if sel_boundary is not None and sel_up.boundary is not None:
                    pts, d_phi = sel_up.boundary
                    step(sel_boundary.core,
                         selection_gradient(sel_boundary, pts, d_phi),
                         sel_bnd_state, config.tau_s, ascent=True)
            for j in range(config.n2):
                if j > 0:
                    states = batch_states(ansatz, problem, batch, opconfig)
                components, entries, _ = selectnet_loss(
                    ansatz, sel_interior, sel_boundary, problem, batch,
                    config.lam, config.epsilon, opconfig, states=states,
                )
                if not np.isfinite(components.total):
                    break
                step(ansatz.core, _sum_entries(ansatz, entries), sol_state, lr)
        else:
            for j in range(config.n2):
                if config.method == "basic":
                    components, entries = basic_loss(
                        ansatz, problem, batch, config.lam, opconfig)
                else:
                    components, entries = binary_weighted_loss(
                        ansatz, problem, batch, config.lam, bw, opconfig)
                if not np.isfinite(components.total):
                    break
                step(ansatz.core, _sum_entries(ansatz, entries), sol_state, lr)

        if not np.isfinite(components.total):
            diverged = True
            checkpoint(k, components, lr)  # diagnostic record, then stop
            break
        out_of_time = (config.time_budget_seconds > 0
                       and time.perf_counter() - start >= config.time_budget_seconds)
        if k % config.eval_every == 0 or k == config.n or out_of_time:
            checkpoint(k, components, lr)
        if out_of_time:
            break

    final_error = records[-1].rel_l2_error if records else None
    return RunResult(
        config=config,
        ansatz=ansatz,
        sel_interior=sel_interior,
        sel_boundary=sel_boundary,
        records=records,
        diverged=diverged,
        final_error=final_error,
        elapsed_seconds=time.perf_counter() - start,
        test_points=test_points,
        test_exact=test_exact,
        rng_metadata={"algorithm": RNG_ALGORITHM, "seed": config.seed},
    )


@dataclass
class TrialStats:
    method: str
    errors: list
    mean: float
    stdev: float
    cv: float


def run_trials(config: TrainConfig, trials: int) -> TrialStats:
    """Independent runs seeded base, base+1, ...; sample statistics of the
    final relative l2 errors."""
    if trials < 1:
        raise ValueError("need at least one trial")
    errors = []
    for i in range(trials):
        result = train(replace(config, seed=config.seed + i))
        if result.final_error is None or result.diverged:
            raise RuntimeError(
                f"trial {i} (seed {config.seed + i}) did not produce a usable error"
            )
        errors.append(result.final_error)
    mean = float(np.mean(errors))
    stdev = float(np.std(errors, ddof=1)) if trials > 1 else 0.0
    cv = stdev / mean if mean else float("nan")
    return TrialStats(config.method, errors, mean, stdev, cv)


def selection_residual_stats(result: RunResult, points=None):
    """Mean selection value over the top and bottom |residual| deciles.

    Uses the run's test points by default. A working adversarial run
    weights large-residual regions up, so top should exceed bottom."""
    if result.sel_interior is None:
        raise ValueError("run has no selection network")
    problem = result.problem
    if points is None:
        points = result.test_points
    opconfig = OperatorConfig(h=result.config.h)
    du, _ = apply_operator(result.ansatz, problem.operator, points, opconfig)
    residual = np.abs(du - problem.f(points))
    phi = result.sel_interior.values(points)
    order = np.argsort(residual)
    decile = max(1, len(points) // 10)
    bottom = float(np.mean(phi[order[:decile]]))
    top = float(np.mean(phi[order[-decile:]]))
    return top, bottom
