"""Shared mathematical objects used by every model representation.

This module hosts the phenotype grid, the smooth cutoff (mollifier), the net
proliferation rate, the scaled phenotype-change kernel, the initial datum and
the grid-sampled distribution state.  Everything here is immutable after
construction except the value array of :class:`DistributionState`, so the
objects can be shared freely across parallel parameter sweeps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

SQRT_2PI = math.sqrt(2.0 * math.pi)


def _as_float_array(v):
    """Return (array, was_scalar) so callables accept scalars and arrays."""
    arr = np.asarray(v, dtype=float)
    return np.atleast_1d(arr), arr.ndim == 0


@dataclass(frozen=True)
class PhenotypeGrid:
    """Uniform 1-D discretisation of the truncated phenotype interval."""

    v_min: float
    v_max: float
    n_points: int

    def __post_init__(self):
        if not self.v_min < self.v_max:
            raise ValueError(f"grid needs v_min < v_max, got [{self.v_min}, {self.v_max}]")
        if self.n_points < 3:
            raise ValueError(f"grid needs at least 3 points, got {self.n_points}")

    @classmethod
    def from_spacing(cls, v_min: float, v_max: float, dv: float) -> "PhenotypeGrid":
        """Build a grid from a target spacing; dv must divide the interval."""
        if dv <= 0:
            raise ValueError(f"dv must be positive, got {dv}")
        span = v_max - v_min
        n_cells = span / dv
        if abs(n_cells - round(n_cells)) > 1e-9 * max(1.0, n_cells):
            raise ValueError(f"dv={dv} does not divide the interval [{v_min}, {v_max}]")
        return cls(v_min, v_max, int(round(n_cells)) + 1)

    @property
    def dv(self) -> float:
        return (self.v_max - self.v_min) / (self.n_points - 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.v_min, self.v_max, self.n_points)

    @cached_property
    def trapezium_weights(self) -> np.ndarray:
        """Quadrature weights: dv on interior nodes, dv/2 at the two ends."""
        w = np.full(self.n_points, self.dv)
        w[0] = 0.5 * self.dv
        w[-1] = 0.5 * self.dv
        return w


def trapezium(grid: PhenotypeGrid, values: np.ndarray) -> float:
    """Trapezium-rule integral of grid-sampled values."""
    return float(grid.trapezium_weights @ values)


def smoothstep(u):
    """C-infinity ramp from 0 at u <= -1 to 1 at u >= 1.

    Inside (-1, 1) the value is (1 + tanh(2u / (1 - u^2))) / 2; the endpoint
    values are the two-sided limits, which keeps the ramp continuous.
    """
    arr, scalar = _as_float_array(u)
    out = np.zeros_like(arr)
    out[arr >= 1.0] = 1.0
    mid = (arr > -1.0) & (arr < 1.0)
    um = arr[mid]
    out[mid] = 0.5 * (1.0 + np.tanh(2.0 * um / (1.0 - um * um)))
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class Mollifier:
    """Smooth even cutoff: 1 on [-R, R], 0 outside [-(R+delta), R+delta].

    The transition layers of width delta carry a tanh-based C-infinity ramp.
    """

    R: float
    delta: float

    def __post_init__(self):
        if self.R <= 0 or self.delta <= 0:
            raise ValueError(f"mollifier needs R > 0 and delta > 0, got R={self.R}, delta={self.delta}")

    def __call__(self, v):
        # Equivalent to the piecewise ramp definition: the smoothstep argument
        # falls below -1 on the plateau and above 1 outside the support.
        arr, scalar = _as_float_array(v)
        out = 1.0 - smoothstep(2.0 * (np.abs(arr) - self.R) / self.delta - 1.0)
        return float(out[0]) if scalar else out


@dataclass(frozen=True)
class NetProliferationRate:
    """Fitness landscape: parabolic profile peaking at the fittest trait v_m,
    cut off by the mollifier so the rate vanishes outside a bounded set.

    The death rate of the agent model is 1 - r(v); r <= 1 everywhere keeps it
    non-negative.
    """

    v_m: float
    mollifier: Mollifier

    def __call__(self, v):
        arr, scalar = _as_float_array(v)
        d = arr - self.v_m
        out = (1.0 - d * d) * self.mollifier(arr)
        return float(out[0]) if scalar else out

    def death_rate(self, v):
        return 1.0 - self(v)


@dataclass(frozen=True)
class MollifiedConstantRate:
    """Constant-level rate under the same cutoff; used by the logistic oracles."""

    level: float
    mollifier: Mollifier

    def __post_init__(self):
        if self.level > 1.0:
            raise ValueError(f"rate level must be <= 1 so the death rate stays non-negative, got {self.level}")

    def __call__(self, v):
        arr, scalar = _as_float_array(v)
        out = self.level * self.mollifier(arr)
        return float(out[0]) if scalar else out

    def death_rate(self, v):
        return 1.0 - self(v)


@dataclass(frozen=True)
class KernelFamily:
    """Base two-parameter jump distribution (unit scale) of the change kernel.

    A family must report its mean/variance behaviour exactly so that the
    kernel-moment identity tests can run against any user-supplied family.
    ``pdf(z, mean, var)`` and ``sample(rng, mean, var, size)`` operate on the
    unscaled variable; ``abs_third_moment(mean, var)`` must be finite.
    """

    name: str
    pdf: callable = field(repr=False)
    sample: callable = field(repr=False)
    abs_third_moment: callable = field(repr=False)


def _gauss_pdf(z, mean, var):
    return np.exp(-0.5 * (z - mean) ** 2 / var) / math.sqrt(var) / SQRT_2PI


def _gauss_sample(rng, mean, var, size):
    return mean + math.sqrt(var) * rng.standard_normal(size)


def _gauss_abs_third_moment(mean, var):
    # E|Z|^3 for Z ~ N(mean, var); exact via the folded-normal moments.
    s = math.sqrt(var)
    m = mean / s
    phi = math.exp(-0.5 * m * m) / SQRT_2PI
    big_phi = 0.5 * (1.0 + math.erf(m / math.sqrt(2.0)))
    e3 = (m * m * m + 3 * m) * (2 * big_phi - 1) + (m * m + 2) * 2 * phi
    return s ** 3 * e3


GAUSSIAN_FAMILY = KernelFamily("gaussian", _gauss_pdf, _gauss_sample, _gauss_abs_third_moment)


@dataclass(frozen=True)
class MutationKernel:
    """Phenotype-change kernel scaled for the small-but-frequent-change regime.

    For a parent phenotype w the new phenotype is distributed with mean
    w + alpha * epsilon^2 and variance beta * epsilon^2; the default base
    family is Gaussian, which satisfies the unit-mass / mean / variance /
    finite-third-moment requirements exactly and supports exact sampling.
    """

    alpha: float
    beta: float
    epsilon: float
    family: KernelFamily = GAUSSIAN_FAMILY

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError(f"kernel needs beta > 0, got {self.beta}")
        if self.epsilon <= 0:
            raise ValueError(f"kernel needs epsilon > 0, got {self.epsilon}")

    @property
    def mean_shift(self) -> float:
        return self.alpha * self.epsilon ** 2

    @property
    def std(self) -> float:
        return math.sqrt(self.beta) * self.epsilon

    def pdf(self, v, w):
        """Density in the new phenotype v given the parent phenotype w."""
        arr, scalar = _as_float_array(v)
        # 1/eps * family((v - w)/eps; alpha*eps, beta)
        z = (arr - np.asarray(w, dtype=float)) / self.epsilon
        out = self.family.pdf(z, self.alpha * self.epsilon, self.beta) / self.epsilon
        return float(out[0]) if scalar else out

    def sample(self, w, rng: np.random.Generator, size=None):
        """Draw new phenotypes given parent phenotypes w (scalar or array)."""
        z = self.family.sample(rng, self.alpha * self.epsilon, self.beta, size)
        return np.asarray(w, dtype=float) + self.epsilon * z


@dataclass(frozen=True)
class GaussianInitialDatum:
    """Initial phenotype distribution: a Gaussian bump of given total mass."""

    mass: float = 0.3
    mean: float = 0.0
    variance: float = 0.5

    def __call__(self, v):
        arr, scalar = _as_float_array(v)
        out = self.mass * np.exp(-0.5 * (arr - self.mean) ** 2 / self.variance) \
            / math.sqrt(self.variance) / SQRT_2PI
        return float(out[0]) if scalar else out

    def sample(self, rng: np.random.Generator, size):
        """Draw from the normalised profile (mass divided out)."""
        return self.mean + math.sqrt(self.variance) * rng.standard_normal(size)


#: The default initial condition: mass 0.3, zero mean, variance 1/2, i.e.
#: f0(v) = 3/(10 sqrt(pi)) exp(-v^2).
DEFAULT_INITIAL_DATUM = GaussianInitialDatum()


@dataclass
class DistributionState:
    """Grid-sampled phenotype distribution function at one instant."""

    grid: PhenotypeGrid
    values: np.ndarray
    time: float = 0.0

    def copy(self) -> "DistributionState":
        return DistributionState(self.grid, self.values.copy(), self.time)

    @property
    def density(self) -> float:
        return trapezium(self.grid, self.values)


def initial_distribution(grid: PhenotypeGrid, datum=DEFAULT_INITIAL_DATUM) -> DistributionState:
    """Sample the initial datum on the grid at time 0."""
    return DistributionState(grid, np.asarray(datum(grid.nodes), dtype=float), 0.0)
