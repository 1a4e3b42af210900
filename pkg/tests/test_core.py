import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phenokinetics import (
    GaussianInitialDatum,
    Mollifier,
    MutationKernel,
    NetProliferationRate,
    PhenotypeGrid,
    initial_distribution,
    moments,
    smoothstep,
    trapezium,
)

STANDARD = dict(R=5.0, delta=0.5, v_m=1.5)


class TestGrid:
    def test_nodes_hit_endpoints(self):
        grid = PhenotypeGrid(-15.0, 15.0, 601)
        assert grid.nodes[0] == -15.0
        assert abs(grid.nodes[-1] - 15.0) <= 1e-12 * 15.0
        assert grid.dv == pytest.approx(0.05)

    def test_from_spacing_requires_divisibility(self):
        grid = PhenotypeGrid.from_spacing(-15.0, 15.0, 0.05)
        assert grid.n_points == 601
        with pytest.raises(ValueError):
            PhenotypeGrid.from_spacing(-15.0, 15.0, 0.07)

    def test_invalid_bounds(self):
        with pytest.raises(ValueError):
            PhenotypeGrid(1.0, -1.0, 10)
        with pytest.raises(ValueError):
            PhenotypeGrid(0.0, 1.0, 2)

    def test_trapezium_weights(self):
        grid = PhenotypeGrid(0.0, 1.0, 11)
        w = grid.trapezium_weights
        assert w[0] == w[-1] == pytest.approx(0.05)
        assert np.all(w[1:-1] == pytest.approx(0.1))
        assert trapezium(grid, np.ones(11)) == pytest.approx(1.0)


class TestMollifier:
    def test_plateau_layer_and_support(self):
        psi = Mollifier(5.0, 0.5)
        assert psi(0.0) == 1.0
        assert psi(5.0) == 1.0
        assert psi(6.0) == 0.0
        # layer midpoint: the ramp argument vanishes, tanh(0) = 0
        assert psi(5.25) == pytest.approx(0.5, abs=1e-15)
        assert psi(-5.25) == pytest.approx(0.5, abs=1e-15)

    def test_smoothstep_limits(self):
        assert smoothstep(-1.0) == 0.0
        assert smoothstep(1.0) == 1.0
        assert smoothstep(0.0) == pytest.approx(0.5)

    @given(v=st.floats(-20, 20), scale=st.floats(0.1, 8.0))
    @settings(max_examples=200, deadline=None)
    def test_even_and_bounded(self, v, scale):
        psi = Mollifier(scale, 0.5)
        val = psi(v)
        assert 0.0 <= val <= 1.0
        assert val == psi(-v)

    @pytest.mark.parametrize("edge", [5.0, -5.0, 5.5, -5.5])
    def test_continuity_at_layer_edges(self, edge):
        psi = Mollifier(5.0, 0.5)
        jumps = [abs(psi(edge + h) - psi(edge)) for h in (1e-3, 1e-6)]
        # flatter-than-polynomial contact: the jump shrinks (to exactly 0
        # within double precision at the edges themselves)
        assert jumps[1] <= jumps[0]
        assert jumps[1] < 1e-6
        inner = [abs(psi(5.25 + h) - psi(5.25)) for h in (1e-3, 1e-6)]
        assert inner[1] < inner[0]


class TestNetProliferationRate:
    def test_peak_at_fittest_trait(self):
        rate = NetProliferationRate(1.5, Mollifier(5.0, 0.5))
        assert rate(1.5) == 1.0

    def test_plateau_value(self):
        rate = NetProliferationRate(1.5, Mollifier(5.0, 0.5))
        # on the plateau the cutoff is 1, so the parabola applies directly
        assert rate(0.0) == pytest.approx(-1.25)
        assert rate(-5.0) == pytest.approx(-41.25)

    def test_vanishes_outside_support(self):
        rate = NetProliferationRate(1.5, Mollifier(5.0, 0.5))
        assert rate(10.0) == 0.0
        v = np.linspace(5.5, 15.0, 1000)
        assert np.all(rate(v) == 0.0)
        assert np.all(rate(-v) == 0.0)

    def test_bounded_by_one_and_death_rate_nonnegative(self, rng):
        rate = NetProliferationRate(1.5, Mollifier(5.0, 0.5))
        v = rng.uniform(-15, 15, 100_000)
        rv = rate(v)
        assert np.all(rv <= 1.0)
        assert np.all(rate.death_rate(v) >= 0.0)


class TestMutationKernel:
    def test_gaussian_peak_value(self):
        kernel = MutationKernel(0.0, 0.4, 1.0)
        assert kernel.pdf(2.0, 2.0) == pytest.approx(1.0 / math.sqrt(2 * math.pi * 0.4), rel=1e-12)

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            MutationKernel(0.0, -0.4, 1.0)
        with pytest.raises(ValueError):
            MutationKernel(0.0, 0.4, 0.0)

    @given(alpha=st.floats(-0.3, 0.3), beta=st.floats(0.1, 1.0),
           eps=st.floats(0.1, 1.0))
    @settings(max_examples=60, deadline=None)
    def test_moment_identities_under_quadrature(self, alpha, beta, eps):
        kernel = MutationKernel(alpha, beta, eps)
        w = 0.7
        centre = w + kernel.mean_shift
        half = 8.5 * kernel.std
        v = np.linspace(centre - half, centre + half, 2001)
        dv = v[1] - v[0]
        row = kernel.pdf(v, w)
        mass = np.trapezoid(row, dx=dv)
        mean = np.trapezoid(v * row, dx=dv)
        var = np.trapezoid((v - centre) ** 2 * row, dx=dv)
        assert mass == pytest.approx(1.0, abs=1e-6)
        assert mean == pytest.approx(w + alpha * eps ** 2, abs=1e-6)
        assert var == pytest.approx(beta * eps ** 2, abs=1e-6)

    def test_sampling_mean(self):
        kernel = MutationKernel(0.0, 0.4, 0.1)
        rng = np.random.default_rng(42)
        draws = kernel.sample(2.0, rng, size=1_000_000)
        tol = 3.0 * kernel.std / 1000.0
        assert abs(draws.mean() - 2.0) < tol

    def test_sampling_variance(self):
        kernel = MutationKernel(0.3, 0.4, 1.0)
        rng = np.random.default_rng(43)
        draws = kernel.sample(0.0, rng, size=1_000_000)
        assert abs(draws.var(ddof=1) - 0.4) < 0.005

    def test_vanishing_scale_pins_samples(self):
        kernel = MutationKernel(0.5, 0.4, 1e-6)
        rng = np.random.default_rng(44)
        draws = kernel.sample(0.0, rng, size=1000)
        assert np.all(np.abs(draws) < 1e-5)

    def test_scaled_mean_shift(self):
        kernel = MutationKernel(0.3, 0.4, 0.1)
        assert kernel.mean_shift == pytest.approx(0.003)


class TestInitialDatum:
    def test_reference_moments(self):
        grid = PhenotypeGrid.from_spacing(-15.0, 15.0, 0.05)
        state = initial_distribution(grid)
        m = moments(state)
        assert m.rho == pytest.approx(0.3, abs=1e-6)
        assert abs(m.p) < 1e-9
        assert m.E == pytest.approx(0.15, abs=1e-6)
        assert m.variance == pytest.approx(0.5, abs=1e-6)

    def test_matches_closed_form(self):
        datum = GaussianInitialDatum()
        # 3/(10 sqrt(pi)) e^{-v^2}
        for v in (0.0, 0.5, -1.3):
            assert datum(v) == pytest.approx(0.3 / math.sqrt(math.pi) * math.exp(-v * v), rel=1e-12)

    def test_sampler_statistics(self):
        datum = GaussianInitialDatum()
        rng = np.random.default_rng(7)
        draws = datum.sample(rng, 200_000)
        assert abs(draws.mean()) < 0.01
        assert draws.var() == pytest.approx(0.5, abs=0.01)
