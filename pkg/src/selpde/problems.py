"""Benchmark problems: domains, exact solutions, and manufactured data.

Each problem fixes an interior operator Du = f on its domain plus
Dirichlet/initial data read off the exact solution. The radial exact
solutions give f in closed form through

    lap u = phi''(r) + (d-1) phi'(r)/r,
    div(a grad u) = a(r) lap u + a'(r) phi'(r)      (radial a),

with the r -> 0 limit of phi'(r)/r replaced by phi''(0) below r = 1e-8.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .operators import OperatorKind

PROBLEM_NAMES = ("poisson2d", "elliptic_nl", "parabolic", "allen_cahn", "wave")

_R_GUARD = 1e-8


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    d: int                       # spatial dimension
    domain: str                  # cube | ball | cylinder (ball x (0, T))
    operator: OperatorKind
    f: Callable                  # interior data, on (n, dim) points
    exact_u: Callable
    T: float = 0.0               # final time, 0 for stationary problems
    bottom_conditions: tuple = ()
    homogeneous_dirichlet: bool = False

    @property
    def time_dependent(self):
        return self.domain == "cylinder"

    @property
    def input_dim(self):
        return self.d + (1 if self.time_dependent else 0)

    def boundary_data(self, tag: str, points) -> np.ndarray:
        """Target values of the boundary operator at the given points."""
        points = np.asarray(points, dtype=np.float64)
        if tag in ("dirichlet_trace", "initial_value"):
            return self.exact_u(points)
        if tag == "initial_velocity":
            # only the wave problem carries this condition; du/dt(x, 0) = 0
            return np.zeros(len(points))
        raise ValueError(f"unknown boundary condition {tag!r}")


def _radius(points_spatial):
    return np.sqrt((points_spatial * points_spatial).sum(axis=1))


def _bump(r):
    """phi = sin(pi/2 (1-r)^2.5) and two derivatives; r in [0, 1]."""
    w = np.maximum(1.0 - r, 0.0)
    w_half = np.sqrt(w)
    w_15 = w * w_half
    psi = 0.5 * np.pi * w * w_15           # (pi/2) w^2.5
    dpsi = -1.25 * np.pi * w_15
    ddpsi = 1.875 * np.pi * w_half
    sin_psi = np.sin(psi)
    cos_psi = np.cos(psi)
    phi = sin_psi
    dphi = dpsi * cos_psi
    ddphi = ddpsi * cos_psi - dpsi * dpsi * sin_psi
    return phi, dphi, ddphi


_BUMP_DDPHI0 = -25.0 * np.pi * np.pi / 16.0  # phi''(0) of the bump profile


def _radial_laplacian(r, dphi, ddphi, ddphi0, d):
    """phi'' + (d-1) phi'/r with the near-origin replacement."""
    near = r < _R_GUARD
    safe_r = np.where(near, 1.0, r)
    return ddphi + (d - 1) * np.where(near, ddphi0, dphi / safe_r)


# --- poisson2d: -lap u = 1 on (-1,1)^2, u = 0 on the boundary ---------------

POISSON2D_SERIES_TERMS = 99


def poisson2d_exact(points, terms: int = POISSON2D_SERIES_TERMS) -> np.ndarray:
    """Cosine double series for the square; terms = largest odd index."""
    points = np.asarray(points, dtype=np.float64)
    n = np.arange(1, terms + 1, 2, dtype=np.float64)
    sgn = np.where(((n - 1) // 2) % 2 == 0, 1.0, -1.0)  # folds (-1)^((n+m)/2)
    nn, mm = np.meshgrid(n, n, indexing="ij")
    amp = 1.0 / (nn * mm * (nn * nn + mm * mm))
    c1 = sgn * np.cos(np.outer(points[:, 0], n) * (np.pi / 2))
    c2 = sgn * np.cos(np.outer(points[:, 1], n) * (np.pi / 2))
    return (64.0 / np.pi**4) * np.einsum("bi,ij,bj->b", c1, amp, c2)


def _make_poisson2d(d):
    if d != 2:
        raise ValueError(f"poisson2d is two-dimensional, got d={d}")
    return ProblemSpec(
        name="poisson2d",
        d=2,
        domain="cube",
        operator=OperatorKind("divergence_form_elliptic"),
        f=lambda points: np.ones(len(points)),
        exact_u=poisson2d_exact,
        homogeneous_dirichlet=True,
    )


# --- elliptic_nl: -div(a grad u) + |grad u|^2 = f on the unit ball ----------

def _elliptic_a(points_spatial):
    return 1.0 + 0.5 * (points_spatial * points_spatial).sum(axis=1)


def _make_elliptic_nl(d):
    def exact(points):
        return _bump(_radius(points))[0]

    def f(points):
        r = _radius(points)
        phi, dphi, ddphi = _bump(r)
        lap = _radial_laplacian(r, dphi, ddphi, _BUMP_DDPHI0, d)
        a = 1.0 + 0.5 * r * r
        return -(a * lap + r * dphi) + dphi * dphi

    return ProblemSpec(
        name="elliptic_nl",
        d=d,
        domain="ball",
        operator=OperatorKind(
            "divergence_form_elliptic", a=_elliptic_a, nonlinear_grad_sq=True
        ),
        f=f,
        exact_u=exact,
        homogeneous_dirichlet=True,
    )


# --- parabolic: du/dt - div(a grad u) = f on ball x (0,1) -------------------

def _parabolic_a(points_spatial):
    return 1.0 + 0.5 * _radius(points_spatial)


def _make_parabolic(d):
    def exact(points):
        points = np.asarray(points, dtype=np.float64)
        r = _radius(points[:, :d])
        s = np.sqrt(np.maximum(1.0 - points[:, d], 0.0))
        return np.exp(r * s)

    def f(points):
        # singular at t=1 (ds/dt) and along r=0 (cone tip of exp(r s));
        # both are measure-zero in the training distribution
        points = np.asarray(points, dtype=np.float64)
        r = _radius(points[:, :d])
        t = points[:, d]
        s = np.sqrt(np.maximum(1.0 - t, 0.0))
        e = np.exp(r * s)
        dphi = s * e
        ddphi = s * s * e
        with np.errstate(divide="ignore"):
            du_dt = -r * e / (2.0 * s)
        lap = _radial_laplacian(r, dphi, ddphi, s * s, d)
        a = 1.0 + 0.5 * r
        return du_dt - (a * lap + 0.5 * dphi)

    return ProblemSpec(
        name="parabolic",
        d=d,
        domain="cylinder",
        operator=OperatorKind("heat", a=_parabolic_a),
        f=f,
        exact_u=exact,
        T=1.0,
        bottom_conditions=("initial_value",),
    )


# --- allen_cahn: du/dt - lap u - u + u^3 = f on ball x (0,1) ----------------

def _make_allen_cahn(d):
    def exact(points):
        points = np.asarray(points, dtype=np.float64)
        phi = _bump(_radius(points[:, :d]))[0]
        return np.exp(-points[:, d]) * phi

    def f(points):
        points = np.asarray(points, dtype=np.float64)
        r = _radius(points[:, :d])
        t = points[:, d]
        phi, dphi, ddphi = _bump(r)
        lap = _radial_laplacian(r, dphi, ddphi, _BUMP_DDPHI0, d)
        et = np.exp(-t)
        u = et * phi
        return -et * phi - et * lap - u + u * u * u

    return ProblemSpec(
        name="allen_cahn",
        d=d,
        domain="cylinder",
        operator=OperatorKind("allen_cahn"),
        f=f,
        exact_u=exact,
        T=1.0,
        bottom_conditions=("initial_value",),
    )


# --- wave: d2u/dt2 - lap u = f on ball x (0,1), u(.,0) = du/dt(.,0) = 0 -----

def _make_wave(d):
    def exact(points):
        points = np.asarray(points, dtype=np.float64)
        phi = _bump(_radius(points[:, :d]))[0]
        t = points[:, d]
        return (np.exp(t * t) - 1.0) * phi

    def f(points):
        points = np.asarray(points, dtype=np.float64)
        r = _radius(points[:, :d])
        t = points[:, d]
        phi, dphi, ddphi = _bump(r)
        lap = _radial_laplacian(r, dphi, ddphi, _BUMP_DDPHI0, d)
        ett = np.exp(t * t)
        return (2.0 + 4.0 * t * t) * ett * phi - (ett - 1.0) * lap

    return ProblemSpec(
        name="wave",
        d=d,
        domain="cylinder",
        operator=OperatorKind("wave"),
        f=f,
        exact_u=exact,
        T=1.0,
        bottom_conditions=("initial_value", "initial_velocity"),
    )


_MAKERS = {
    "poisson2d": _make_poisson2d,
    "elliptic_nl": _make_elliptic_nl,
    "parabolic": _make_parabolic,
    "allen_cahn": _make_allen_cahn,
    "wave": _make_wave,
}


def make_problem(name: str, d: int) -> ProblemSpec:
    if name not in _MAKERS:
        raise ValueError(f"unknown problem {name!r}; expected one of {PROBLEM_NAMES}")
    if d < 1:
        raise ValueError(f"spatial dimension must be positive, got {d}")
    return _MAKERS[name](d)
