"""Least-squares residual losses and their backprop upstreams.

All three training modes share one reduction: interior and boundary
mean squared residuals with per-point weights (identically 1 for the
basic mode, selection-network values for the adversarial mode, rank
step weights for the binary mode), so the weighted paths reduce exactly
to the basic one when every weight is 1.

Alongside each loss value the functions return the upstream
sensitivities: for the solution parameters, one flat dJ/d(evaluation)
array per stencil record; for the selection parameters, dJ/d(phi) per
sample point, including the normalization penalty

    penalty = (1/eps) [ (mean phi' - 1)^2 + (mean phi'' - 1)^2 ]

which is subtracted from the objective so the inner maximization cannot
inflate the weights wholesale.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .operators import apply_boundary_operator, apply_operator


@dataclass
class LossComponents:
    interior: float
    boundary: float
    penalty: float
    total: float
    interior_residual_sq: np.ndarray
    boundary_residual_sq: np.ndarray


@dataclass
class SelectionUpstreams:
    """dJ/d(phi) per sample point, for the ascent step on selection params."""

    interior: Optional[tuple] = None  # (points, d_phi)
    boundary: Optional[tuple] = None


@dataclass
class BinaryWeightConfig:
    p: float = 0.8
    w_large: float = 4.0 / 3.4
    w_small: float = 1.0 / 3.4

    def __post_init__(self):
        if not (0.0 < self.p < 1.0):
            raise ValueError(f"fraction p must be in (0, 1), got {self.p}")
        if not (self.w_large >= self.w_small >= 0.0):
            raise ValueError("binary weights need w_large >= w_small >= 0")
        norm = self.w_large * self.p + self.w_small * (1.0 - self.p)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"weights must average to 1: w_L p + w_S (1-p) = {norm}")


def binary_weights(residual_sq, p, w_large, w_small):
    """Step weights by residual rank; ties broken by point index."""
    n = len(residual_sq)
    count = int(round(p * n))
    order = np.argsort(-residual_sq, kind="stable")
    w = np.full(n, w_small)
    w[order[:count]] = w_large
    return w


@dataclass
class _BatchStates:
    """Residuals and stencil records of one batch at fixed solution params."""

    interior_residual: np.ndarray
    interior_stencil: object
    boundary_points: np.ndarray          # concatenated over components
    boundary_sq: np.ndarray              # condition-averaged squared residuals
    boundary_parts: list                 # (residuals, stencil, n_conditions) per condition

    @property
    def n_interior(self):
        return len(self.interior_residual)

    @property
    def n_boundary(self):
        return len(self.boundary_sq)


def batch_states(ansatz, problem, batch, config) -> _BatchStates:
    du, stencil = apply_operator(ansatz, problem.operator, batch.interior, config)
    r = du - problem.f(batch.interior)

    parts, sq_blocks, point_blocks = [], [], []
    for comp in batch.boundary:
        n_cond = len(comp.conditions)
        sq = np.zeros(len(comp.points))
        for tag in comp.conditions:
            vals, bstencil = apply_boundary_operator(ansatz, tag, comp.points, config)
            res = vals - problem.boundary_data(tag, comp.points)
            sq += res * res / n_cond
            parts.append((res, bstencil, n_cond, len(sq_blocks)))
        sq_blocks.append(sq)
        point_blocks.append(comp.points)
    if sq_blocks:
        boundary_sq = np.concatenate(sq_blocks)
        boundary_points = np.vstack(point_blocks)
    else:
        boundary_sq = np.zeros(0)
        boundary_points = np.zeros((0, batch.interior.shape[1]))
    # remember each part's offset into the concatenated boundary arrays
    offsets = np.cumsum([0] + [len(b) for b in sq_blocks])
    parts = [(res, st, n_cond, offsets[i]) for res, st, n_cond, i in parts]
    return _BatchStates(r, stencil, boundary_points, boundary_sq, parts)


def _reduce(states, lam, w_interior, w_boundary, penalty):
    """Weighted loss values plus solution-parameter upstream entries."""
    r = states.interior_residual
    n1 = states.n_interior
    r_sq = r * r
    interior = float(np.mean(w_interior * r_sq))

    entries = [
        (states.interior_stencil.points,
         states.interior_stencil.flat_upstream((2.0 / n1) * w_interior * r))
    ]
    n2 = states.n_boundary
    if n2:
        boundary = float(np.mean(w_boundary * states.boundary_sq))
        for res, stencil, n_cond, off in states.boundary_parts:
            w = w_boundary[off:off + len(res)]
            d_du = (2.0 * lam / (n2 * n_cond)) * w * res
            entries.append((stencil.points, stencil.flat_upstream(d_du)))
    else:
        boundary = 0.0
    total = interior + lam * boundary - penalty
    components = LossComponents(
        interior, boundary, penalty, total, r_sq, states.boundary_sq
    )
    return components, entries


def basic_loss(ansatz, problem, batch, lam, config):
    """Unweighted mean squared residuals; returns (components, upstream entries)."""
    states = batch_states(ansatz, problem, batch, config)
    return _reduce(
        states, lam,
        np.ones(states.n_interior), np.ones(states.n_boundary), 0.0,
    )


def binary_weighted_loss(ansatz, problem, batch, lam, bw: BinaryWeightConfig, config):
    states = batch_states(ansatz, problem, batch, config)
    w_int = binary_weights(states.interior_residual ** 2, bw.p, bw.w_large, bw.w_small)
    w_bnd = (
        binary_weights(states.boundary_sq, bw.p, bw.w_large, bw.w_small)
        if states.n_boundary else np.ones(0)
    )
    return _reduce(states, lam, w_int, w_bnd, 0.0)


def selectnet_loss(ansatz, sel_interior, sel_boundary, problem, batch, lam, eps, config,
                   states: _BatchStates = None):
    """Adversarially weighted loss.

    Returns (components, solution upstream entries, SelectionUpstreams).
    Pass precomputed states to re-weight the same batch after a
    selection-parameter update without re-running the stencils.
    """
    if states is None:
        states = batch_states(ansatz, problem, batch, config)
    phi_i = sel_interior.values(batch.interior)
    mean_i = float(np.mean(phi_i))
    penalty = (mean_i - 1.0) ** 2 / eps
    n1 = states.n_interior
    d_phi_i = states.interior_residual ** 2 / n1 - (2.0 / (eps * n1)) * (mean_i - 1.0)
    sel_up = SelectionUpstreams(interior=(batch.interior, d_phi_i))

    n2 = states.n_boundary
    if sel_boundary is not None and n2:
        phi_b = sel_boundary.values(states.boundary_points)
        mean_b = float(np.mean(phi_b))
        penalty += (mean_b - 1.0) ** 2 / eps
        d_phi_b = lam * states.boundary_sq / n2 - (2.0 / (eps * n2)) * (mean_b - 1.0)
        sel_up.boundary = (states.boundary_points, d_phi_b)
    else:
        phi_b = np.ones(n2)

    components, entries = _reduce(states, lam, phi_i, phi_b, penalty)
    return components, entries, sel_up
