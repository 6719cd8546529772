"""Random point generation for training, boundary, and test batches.

Ball interiors use annular stratification: the ball is cut into
shells {k/K < |x| < (k+1)/K}, each receiving an equal share of points,
with directions from normalized Gaussians and radii from the
shell-uniform inverse CDF r = (r_in^d + U (r_out^d - r_in^d))^(1/d).
In high dimension this keeps points away from the |x|=1 concentration
that plain uniform ball sampling produces.

Streams are numpy Philox generators (counter-based) spawned from one
SeedSequence, so interior/boundary/test/init draws are independent.
"""

from dataclasses import dataclass, field

import numpy as np

RNG_ALGORITHM = "philox"
STREAM_NAMES = ("interior", "boundary", "test", "init")


@dataclass
class RngStream:
    name: str
    seed: int
    rng: np.random.Generator = field(repr=False)

    @property
    def algorithm(self):
        return RNG_ALGORITHM


@dataclass
class Streams:
    interior: RngStream
    boundary: RngStream
    test: RngStream
    init: RngStream
    seed: int


def make_streams(seed: int) -> Streams:
    children = np.random.SeedSequence(seed).spawn(len(STREAM_NAMES))
    return Streams(
        *(
            RngStream(name, seed, np.random.Generator(np.random.Philox(child)))
            for name, child in zip(STREAM_NAMES, children)
        ),
        seed=seed,
    )


@dataclass(frozen=True)
class SamplerConfig:
    strategy: str = "annular"  # annular | uniform, for ball-shaped domains
    annuli: int = 10

    def __post_init__(self):
        if self.strategy not in ("annular", "uniform"):
            raise ValueError(f"unknown sampling strategy {self.strategy!r}")
        if self.annuli < 1:
            raise ValueError(f"annulus count must be positive, got {self.annuli}")


def sample_sphere(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    """Uniform on the unit sphere |x| = 1."""
    x = rng.standard_normal((n, d))
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    # a zero draw of all d Gaussians has probability 0; guard anyway
    norms[norms == 0] = 1.0
    return x / norms


def sample_ball_uniform(rng, n, d):
    dirs = sample_sphere(rng, n, d)
    return dirs * (rng.random(n) ** (1.0 / d))[:, None]


def sample_ball_annular(rng, n, d, annuli):
    """Equal point counts per shell; n must divide by the shell count."""
    if n % annuli != 0:
        raise ValueError(f"annular sampling needs annuli | n, got n={n}, annuli={annuli}")
    per = n // annuli
    out = np.empty((n, d))
    for k in range(annuli):
        r_in, r_out = k / annuli, (k + 1) / annuli
        dirs = sample_sphere(rng, per, d)
        radii = (r_in**d + rng.random(per) * (r_out**d - r_in**d)) ** (1.0 / d)
        out[k * per:(k + 1) * per] = dirs * radii[:, None]
    return out


def _sample_ball(rng, n, d, config: SamplerConfig):
    if config.strategy == "annular":
        return sample_ball_annular(rng, n, d, config.annuli)
    return sample_ball_uniform(rng, n, d)


def sample_cube_interior(rng, n, d):
    return rng.uniform(-1.0, 1.0, size=(n, d))


def sample_cube_boundary(rng, n, d):
    """Uniform over the faces: pick a face, fix that coordinate at +/-1."""
    pts = rng.uniform(-1.0, 1.0, size=(n, d))
    face = rng.integers(0, 2 * d, size=n)
    pts[np.arange(n), face % d] = np.where(face < d, 1.0, -1.0)
    return pts


@dataclass
class BoundaryComponent:
    points: np.ndarray
    conditions: tuple  # operator tags applied to every point of the component


@dataclass
class SampleBatch:
    interior: np.ndarray
    boundary: list  # of BoundaryComponent

    @property
    def n_boundary(self):
        return sum(len(c.points) for c in self.boundary)


def sample_interior(problem, n, config, rng):
    """Interior/test points of the problem's space(-time) domain."""
    if problem.domain == "cube":
        return sample_cube_interior(rng, n, problem.d)
    if problem.domain == "ball":
        return _sample_ball(rng, n, problem.d, config)
    x = _sample_ball(rng, n, problem.d, config)
    t = rng.uniform(0.0, problem.T, size=(n, 1))
    return np.hstack([x, t])


def sample_boundary(problem, n, config, rng):
    if problem.domain == "cube":
        return [BoundaryComponent(sample_cube_boundary(rng, n, problem.d), ("dirichlet_trace",))]
    if problem.domain == "ball":
        return [BoundaryComponent(sample_sphere(rng, n, problem.d), ("dirichlet_trace",))]
    # cylinder: lateral side gets the ceil half, the t=0 bottom the rest
    n_side = (n + 1) // 2
    n_bottom = n - n_side
    side_x = sample_sphere(rng, n_side, problem.d)
    side_t = rng.uniform(0.0, problem.T, size=(n_side, 1))
    comps = [BoundaryComponent(np.hstack([side_x, side_t]), ("dirichlet_trace",))]
    if n_bottom:
        bottom_x = _sample_ball(rng, n_bottom, problem.d, config)
        bottom = np.hstack([bottom_x, np.zeros((n_bottom, 1))])
        comps.append(BoundaryComponent(bottom, problem.bottom_conditions))
    return comps


def sample_batch(problem, n_interior, n_boundary, config, interior_rng, boundary_rng) -> SampleBatch:
    interior = sample_interior(problem, n_interior, config, interior_rng)
    boundary = sample_boundary(problem, n_boundary, config, boundary_rng) if n_boundary else []
    return SampleBatch(interior, boundary)
