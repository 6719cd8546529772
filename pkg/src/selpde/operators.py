"""Differential operators as finite-difference stencils of network evaluations.

Every operator value is assembled from plain forward evaluations of the
ansatz at stencil points, with step h (central differences in each
coordinate, half-point coefficient evaluations for the divergence form).
The record of those evaluations is kept: each stencil point later feeds
the parameter gradient with its partial derivative d(Du)/d(value) as the
upstream factor, so no automatic differentiation in x or t is needed.

Point layout per sample: slot 0 is the center, slots 1..d and d+1..2d
are x +/- h e_k, and time-dependent kinds append (x, t+h), (x, t-h).
The time coordinate is the last column.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

BOUNDARY_TAGS = ("dirichlet_trace", "initial_value", "initial_velocity")


@dataclass(frozen=True)
class OperatorConfig:
    h: float = 1e-4

    def __post_init__(self):
        if not (self.h > 0):
            raise ValueError(f"fd step must be positive, got {self.h}")


@dataclass(frozen=True)
class OperatorKind:
    """Interior operator tag plus its data.

    divergence_form_elliptic: Du = -div(a grad u) [+ |grad u|^2]
    heat:                     Du = du/dt - div(a grad u)
    allen_cahn:               Du = du/dt - lap u - u + u^3
    wave:                     Du = d2u/dt2 - lap u
    a = None means a == 1 identically.
    """

    tag: str
    a: Optional[Callable] = None
    nonlinear_grad_sq: bool = False

    def __post_init__(self):
        if self.tag not in ("divergence_form_elliptic", "heat", "allen_cahn", "wave"):
            raise ValueError(f"unknown operator tag {self.tag!r}")

    @property
    def time_dependent(self):
        return self.tag in ("heat", "allen_cahn", "wave")


@dataclass
class StencilEvals:
    """Flattened stencil evaluations with their gradient coefficients.

    points:    (n*S, dim) every network evaluation point
    values:    (n, S) ansatz values at those points
    lin_coeff: (n, S) coefficients of the linear part of Du
    du_dvalue: (n, S) d(Du_i)/d(value at slot s), the backprop upstream factor
    """

    points: np.ndarray
    values: np.ndarray
    lin_coeff: np.ndarray
    du_dvalue: np.ndarray
    spatial_dim: int
    h: float
    grad_sq: bool = False
    cubic: bool = False

    @property
    def n_points(self):
        return self.values.shape[0]

    @property
    def n_stencil(self):
        return self.values.shape[1]

    def reduce(self) -> np.ndarray:
        """Recompute Du from the stored values; this is the one reduction
        used to produce operator values, so replaying it is bitwise stable."""
        out = (self.lin_coeff * self.values).sum(axis=1)
        d = self.spatial_dim
        if self.grad_sq:
            g = (self.values[:, 1:d + 1] - self.values[:, d + 1:2 * d + 1]) / (2.0 * self.h)
            out = out + (g * g).sum(axis=1)
        if self.cubic:
            u0 = self.values[:, 0]
            out = out + (u0 * u0 * u0 - u0)
        return out

    def flat_upstream(self, d_loss_d_du) -> np.ndarray:
        """Per-evaluation upstream for a loss with gradient d_loss_d_du w.r.t. Du."""
        return (np.asarray(d_loss_d_du)[:, None] * self.du_dvalue).ravel()


def _as_points(points):
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] == 0:
        raise ValueError(f"points must be a nonempty (n, dim) array, got {points.shape}")
    return points


def _stencil_points(points, spatial_dim, h, with_time):
    """Build the flattened stencil point array in slot order."""
    n, dim = points.shape
    slots = [points]
    for k in range(spatial_dim):
        p = points.copy()
        p[:, k] += h
        slots.append(p)
    for k in range(spatial_dim):
        p = points.copy()
        p[:, k] -= h
        slots.append(p)
    if with_time:
        for sign in (+1.0, -1.0):
            p = points.copy()
            p[:, dim - 1] += sign * h
            slots.append(p)
    return np.stack(slots, axis=1).reshape(n * len(slots), dim)


def _elliptic_coeffs(points_spatial, a, h):
    """Divergence-form coefficients: returns (n, 2d+1) for +div(a grad u)."""
    n, d = points_spatial.shape
    coeff = np.empty((n, 2 * d + 1))
    center = np.zeros(n)
    for k in range(d):
        if a is None:
            ap = am = np.ones(n)
        else:
            p = points_spatial.copy()
            p[:, k] += 0.5 * h
            ap = np.asarray(a(p), dtype=np.float64)
            p = points_spatial.copy()
            p[:, k] -= 0.5 * h
            am = np.asarray(a(p), dtype=np.float64)
        coeff[:, 1 + k] = ap / (h * h)
        coeff[:, 1 + d + k] = am / (h * h)
        center -= (ap + am) / (h * h)
    coeff[:, 0] = center
    return coeff


def apply_elliptic_fd(ansatz, points, a, config: OperatorConfig):
    """+div(a grad u) by the half-point flux stencil; 2d+1 network
    evaluations and 2d coefficient evaluations per point."""
    points = _as_points(points)
    h = config.h
    n, d = points.shape
    flat = _stencil_points(points, d, h, with_time=False)
    values = ansatz.values(flat).reshape(n, 2 * d + 1)
    coeff = _elliptic_coeffs(points, a, h)
    stencil = StencilEvals(flat, values, coeff, coeff.copy(), spatial_dim=d, h=h)
    return stencil.reduce(), stencil


def apply_gradient_fd(ansatz, points, config: OperatorConfig):
    """Central-difference spatial gradient, (n, d); shares no state."""
    points = _as_points(points)
    h = config.h
    n, d = points.shape
    flat = _stencil_points(points, d, h, with_time=False)
    values = ansatz.values(flat).reshape(n, 2 * d + 1)
    return (values[:, 1:d + 1] - values[:, d + 1:2 * d + 1]) / (2.0 * h)


def apply_operator(ansatz, kind: OperatorKind, points, config: OperatorConfig):
    """Interior operator values plus the stencil evaluation record."""
    points = _as_points(points)
    h = config.h
    n, dim = points.shape
    if kind.time_dependent:
        if dim < 2:
            raise ValueError(f"{kind.tag} needs (x, t) points, got dim={dim}")
        d = dim - 1
        S = 2 * d + 3
    else:
        d = dim
        S = 2 * d + 1
    flat = _stencil_points(points, d, h, with_time=kind.time_dependent)
    values = ansatz.values(flat).reshape(n, S)

    lin = np.zeros((n, S))
    spatial = points[:, :d]
    if kind.tag in ("divergence_form_elliptic", "heat"):
        lin[:, :2 * d + 1] = -_elliptic_coeffs(spatial, kind.a, h)
    else:  # plain -laplacian
        lin[:, 0] = 2.0 * d / (h * h)
        lin[:, 1:2 * d + 1] = -1.0 / (h * h)
    if kind.tag in ("heat", "allen_cahn"):
        lin[:, 2 * d + 1] = +1.0 / (2.0 * h)
        lin[:, 2 * d + 2] = -1.0 / (2.0 * h)
    elif kind.tag == "wave":
        lin[:, 2 * d + 1] = 1.0 / (h * h)
        lin[:, 2 * d + 2] = 1.0 / (h * h)
        lin[:, 0] += -2.0 / (h * h)

    stencil = StencilEvals(
        flat, values, lin, lin.copy(), spatial_dim=d, h=h,
        grad_sq=(kind.tag == "divergence_form_elliptic" and kind.nonlinear_grad_sq),
        cubic=(kind.tag == "allen_cahn"),
    )
    if stencil.grad_sq:
        g = (values[:, 1:d + 1] - values[:, d + 1:2 * d + 1]) / (2.0 * h)
        stencil.du_dvalue[:, 1:d + 1] += g / h
        stencil.du_dvalue[:, d + 1:2 * d + 1] -= g / h
    if stencil.cubic:
        u0 = values[:, 0]
        stencil.du_dvalue[:, 0] += 3.0 * u0 * u0 - 1.0
    return stencil.reduce(), stencil


def apply_boundary_operator(ansatz, tag: str, points, config: OperatorConfig):
    """Boundary/initial condition operator values plus evaluation record.

    dirichlet_trace and initial_value are point evaluations (the sampler
    already puts t=0 on bottom points); initial_velocity is a central
    time difference straddling t=0, which is fine since the network is
    defined on all of R^{d+1}.
    """
    points = _as_points(points)
    if tag not in BOUNDARY_TAGS:
        raise ValueError(f"unknown boundary operator {tag!r}")
    n, dim = points.shape
    h = config.h
    if tag == "initial_velocity":
        plus = points.copy()
        plus[:, dim - 1] += h
        minus = points.copy()
        minus[:, dim - 1] -= h
        flat = np.stack([plus, minus], axis=1).reshape(2 * n, dim)
        values = ansatz.values(flat).reshape(n, 2)
        coeff = np.empty((n, 2))
        coeff[:, 0] = 1.0 / (2.0 * h)
        coeff[:, 1] = -1.0 / (2.0 * h)
        spatial = dim - 1
    else:
        flat = points.copy()
        values = ansatz.values(flat).reshape(n, 1)
        coeff = np.ones((n, 1))
        spatial = dim
    stencil = StencilEvals(flat, values, coeff, coeff.copy(), spatial_dim=spatial, h=h)
    return stencil.reduce(), stencil
