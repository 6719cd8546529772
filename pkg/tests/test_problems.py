import numpy as np
import pytest

from selpde.net import ExactFunction
from selpde.operators import OperatorConfig, apply_operator
from selpde.problems import (PROBLEM_NAMES, make_problem, poisson2d_exact,
                             _bump, _BUMP_DDPHI0)


def interior_points(problem, n, rng, r_lo=0.1, r_hi=0.9):
    """Random points bounded away from the singular sets of the exact
    solutions (origin cone tips, boundary bump tails, the parabolic t=1)."""
    x = rng.standard_normal((n, problem.d))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    x *= rng.uniform(r_lo, r_hi, (n, 1))
    if problem.time_dependent:
        return np.hstack([x, rng.uniform(0.1, 0.9, (n, 1))])
    return x


class TestPoissonSeries:
    # reference values from a direct double-sum oracle, pinned to 12 digits
    FROZEN = [
        ((0.0, 0.0), 99, 0.2946848982316012),
        ((0.0, 0.0), 999, 0.2946854126101161),
        ((0.0, 0.0), 1999, 0.2946854130615574),
        ((0.5, 0.25), 999, 0.21779930423508917),
        ((-0.9, 0.1), 999, 0.062254198499820224),
    ]

    def test_frozen_values(self):
        for (x, y), terms, want in self.FROZEN:
            got = poisson2d_exact(np.array([[x, y]]), terms)[0]
            assert abs(got - want) < 1e-12, (x, y, terms, got)

    def test_truncation_settles(self, rng):
        pts = rng.uniform(-0.95, 0.95, (50, 2))
        dev = np.abs(poisson2d_exact(pts, 999) - poisson2d_exact(pts, 1999))
        assert dev.max() <= 1e-8

    def test_zero_on_square_boundary(self):
        # odd-index cosines vanish identically on x = +-1
        pts = np.array([[1.0, 0.3], [-1.0, -0.7], [0.2, 1.0], [0.9, -1.0],
                        [1.0, 1.0], [-1.0, 1.0]])
        assert np.abs(poisson2d_exact(pts, 99)).max() < 1e-15

    def test_default_terms(self):
        pt = np.array([[0.1, -0.2]])
        assert poisson2d_exact(pt)[0] == poisson2d_exact(pt, 99)[0]


class TestBumpProfile:
    def test_endpoint_values(self):
        r = np.array([0.0, 1.0])
        phi, dphi, ddphi = _bump(r)
        assert phi[0] == pytest.approx(1.0, abs=1e-15)  # sin(pi/2)
        assert phi[1] == 0.0
        assert abs(dphi[0]) < 1e-15  # cos(pi/2) rounds to ~6e-17, not 0
        assert dphi[1] == 0.0
        assert ddphi[0] == pytest.approx(_BUMP_DDPHI0, rel=1e-14)

    def test_derivatives_by_differencing(self, rng):
        r = rng.uniform(0.05, 0.9, 30)
        step = 1e-6
        phi_p = _bump(r + step)[0]
        phi_m = _bump(r - step)[0]
        _, dphi, ddphi = _bump(r)
        np.testing.assert_allclose((phi_p - phi_m) / (2 * step), dphi,
                                   rtol=1e-7, atol=1e-9)
        phi0 = _bump(r)[0]
        np.testing.assert_allclose((phi_p - 2 * phi0 + phi_m) / step**2, ddphi,
                                   rtol=1e-3, atol=1e-3)


class TestManufacturedConsistency:
    # the FD operator applied to exact_u must reproduce f; deviations are
    # stencil truncation at h=1e-4 and 1/h^2 rounding at h=1e-5 (measured
    # 6.7e-6 and 7.9e-5 worst case over these four problems)
    CASES = [("elliptic_nl", 10), ("parabolic", 4), ("allen_cahn", 3), ("wave", 3)]

    @pytest.mark.parametrize("name,d", CASES)
    def test_operator_on_exact_matches_f(self, name, d, rng):
        problem = make_problem(name, d)
        pts = interior_points(problem, 200, rng)
        u = ExactFunction(problem.exact_u)
        for h, tol in ((1e-4, 2e-5), (1e-5, 2e-4)):
            du, _ = apply_operator(u, problem.operator, pts, OperatorConfig(h=h))
            dev = np.abs(du - problem.f(pts)).max()
            assert dev < tol, f"{name} h={h}: {dev:.3e}"

    def test_elliptic_f_at_origin(self):
        # r -> 0 limit: f(0) = d * 25 pi^2 / 16 (a=1, grad term vanishes)
        p = make_problem("elliptic_nl", 10)
        want = 10 * 25 * np.pi**2 / 16
        assert p.f(np.zeros((1, 10)))[0] == pytest.approx(want, rel=1e-14)
        # guarded formula is continuous through the switch radius
        near = np.full((1, 10), 1e-9 / np.sqrt(10))
        assert abs(p.f(near)[0] - want) < 1e-6

    def test_allen_cahn_f_on_axis(self):
        p = make_problem("allen_cahn", 4)
        pt = np.zeros((1, 5))
        pt[0, 4] = 0.3
        et = np.exp(-0.3)
        want = -et - et * 4 * _BUMP_DDPHI0 - et + et**3
        assert p.f(pt)[0] == pytest.approx(want, rel=1e-13)


class TestProblemSpecs:
    def test_names_and_construction(self):
        assert set(PROBLEM_NAMES) == {"poisson2d", "elliptic_nl", "parabolic",
                                      "allen_cahn", "wave"}
        for name in PROBLEM_NAMES:
            d = 2 if name == "poisson2d" else 5
            p = make_problem(name, d)
            assert p.name == name and p.d == d

    def test_domains_and_dims(self):
        assert make_problem("poisson2d", 2).domain == "cube"
        assert make_problem("elliptic_nl", 10).domain == "ball"
        for name in ("parabolic", "allen_cahn", "wave"):
            p = make_problem(name, 7)
            assert p.domain == "cylinder"
            assert p.time_dependent and p.input_dim == 8 and p.T == 1.0
        p = make_problem("elliptic_nl", 10)
        assert not p.time_dependent and p.input_dim == 10

    def test_dirichlet_flags(self):
        assert make_problem("poisson2d", 2).homogeneous_dirichlet
        assert make_problem("elliptic_nl", 4).homogeneous_dirichlet
        assert not make_problem("parabolic", 4).homogeneous_dirichlet

    def test_bottom_conditions(self):
        assert make_problem("parabolic", 3).bottom_conditions == ("initial_value",)
        assert make_problem("wave", 3).bottom_conditions == (
            "initial_value", "initial_velocity")
        assert make_problem("elliptic_nl", 3).bottom_conditions == ()

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            make_problem("poisson2d", 3)
        with pytest.raises(ValueError):
            make_problem("biharmonic", 2)
        with pytest.raises(ValueError):
            make_problem("wave", 0)

    def test_boundary_data(self, rng):
        p = make_problem("wave", 3)
        pts = interior_points(p, 20, rng)
        pts[:, -1] = 0.0
        np.testing.assert_array_equal(p.boundary_data("initial_value", pts),
                                      p.exact_u(pts))
        np.testing.assert_array_equal(p.boundary_data("initial_velocity", pts),
                                      np.zeros(20))
        # wave starts from rest: value data is identically zero too
        np.testing.assert_allclose(p.exact_u(pts), 0.0, atol=1e-15)
        with pytest.raises(ValueError):
            p.boundary_data("neumann", pts)

    def test_sphere_trace_zero(self, rng):
        p = make_problem("elliptic_nl", 6)
        x = rng.standard_normal((30, 6))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        np.testing.assert_allclose(p.exact_u(x), 0.0, atol=1e-15)

    def test_parabolic_terminal_singularity(self):
        # f blows up on the t=1 slice; it is evaluated as computed, not fudged
        p = make_problem("parabolic", 3)
        pt = np.array([[0.5, 0.0, 0.0, 1.0]])
        assert np.isinf(p.f(pt)[0])
        assert np.isfinite(p.exact_u(pt)[0])
