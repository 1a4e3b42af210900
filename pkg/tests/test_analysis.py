import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phenokinetics import (
    MomentSeries,
    desk_profile,
    epsilon_sweep,
    fit_convergence_orders,
    ide_run,
    initial_distribution,
    l2_distance,
    l2_norm,
    logistic_oracle,
    moment_ode_residual,
    moments,
    series_from_snapshots,
)
from phenokinetics.core import DistributionState, GaussianInitialDatum


@pytest.fixture(scope="module")
def grid():
    return desk_profile().grid()


class TestMoments:
    def test_reference_datum(self, grid):
        m = moments(initial_distribution(grid))
        assert m == pytest.approx((0.3, 0.0, 0.15, 0.0, 0.5), abs=1e-6)

    def test_zero_state_flags_undefined(self, grid):
        m = moments(DistributionState(grid, np.zeros(grid.n_points)))
        assert (m.rho, m.p, m.E) == (0.0, 0.0, 0.0)
        assert math.isnan(m.mean) and math.isnan(m.variance)

    def test_narrow_bump_recovers_parameters(self, grid):
        datum = GaussianInitialDatum(mass=0.5, mean=2.0, variance=0.04)
        m = moments(initial_distribution(grid, datum))
        assert m.rho == pytest.approx(0.5, abs=1e-9)
        assert m.mean == pytest.approx(2.0, abs=1e-9)
        assert m.variance == pytest.approx(0.04, abs=1e-4)

    @given(a=st.floats(0.1, 3.0), b=st.floats(0.1, 3.0))
    @settings(max_examples=30, deadline=None)
    def test_linearity(self, grid, a, b):
        rng = np.random.default_rng(0)
        f = rng.random(grid.n_points)
        g = rng.random(grid.n_points)
        mf = moments(DistributionState(grid, f))
        mg = moments(DistributionState(grid, g))
        m = moments(DistributionState(grid, a * f + b * g))
        for name in ("rho", "p", "E"):
            combined = a * getattr(mf, name) + b * getattr(mg, name)
            assert getattr(m, name) == pytest.approx(combined, rel=1e-12, abs=1e-12)


class TestL2:
    def test_identical_states(self, grid):
        state = initial_distribution(grid)
        assert l2_distance(state, state) == 0.0

    def test_norm_of_reference_datum(self, grid):
        """Closed form: ||f0||_L2 = 0.3 (2 pi)^{-1/4} from the Gaussian
        square integral."""
        state = initial_distribution(grid)
        zero = DistributionState(grid, np.zeros(grid.n_points))
        closed = 0.3 / (2.0 * math.pi) ** 0.25
        assert l2_distance(state, zero) == pytest.approx(closed, rel=1e-12)
        assert l2_norm(state) == pytest.approx(closed, rel=1e-12)

    def test_grid_mismatch_is_usage_error(self, grid):
        from phenokinetics import PhenotypeGrid
        other = PhenotypeGrid(-15.0, 15.0, 301)
        with pytest.raises(ValueError, match="grid"):
            l2_distance(initial_distribution(grid), initial_distribution(other))

    @given(seed=st.integers(0, 2 ** 16))
    @settings(max_examples=40, deadline=None)
    def test_metric_properties(self, grid, seed):
        rng = np.random.default_rng(seed)
        f, g, h = (DistributionState(grid, rng.random(grid.n_points)) for _ in range(3))
        assert l2_distance(f, g) == l2_distance(g, f)
        assert l2_distance(f, h) <= l2_distance(f, g) + l2_distance(g, h) + 1e-12


class TestLogisticOracle:
    def test_reference_value(self):
        expected = 0.3 * math.e / (0.7 + 0.3 * math.e)
        assert logistic_oracle(1.0, 0.3, 1.0) == pytest.approx(expected, rel=1e-14)

    def test_saturates_at_rate(self):
        assert logistic_oracle(1.0, 0.3, 200.0) == pytest.approx(1.0, abs=1e-12)

    def test_equilibrium_start_is_constant(self):
        for t in (0.0, 0.7, 5.0):
            assert logistic_oracle(1.0, 1.0, t) == pytest.approx(1.0, rel=1e-14)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            logistic_oracle(-1.0, 0.3, 1.0)
        with pytest.raises(ValueError):
            logistic_oracle(1.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            logistic_oracle(0.5, 0.7, 1.0)

    @given(r0=st.floats(0.2, 2.0), frac=st.floats(0.05, 1.0), t=st.floats(0.1, 5.0))
    @settings(max_examples=80, deadline=None)
    def test_satisfies_logistic_ode(self, r0, frac, t):
        rho0 = frac * r0
        h = 1e-5
        lhs = (logistic_oracle(r0, rho0, t + h) - logistic_oracle(r0, rho0, t - h)) / (2 * h)
        rho = logistic_oracle(r0, rho0, t)
        assert lhs == pytest.approx((r0 - rho) * rho, abs=1e-8)


class TestOrderFitting:
    def test_recovers_exact_power_law(self):
        eps = np.array([1.0, 0.5, 0.1])
        metrics = {"m": 3.7 * eps ** 1.8}
        orders, diag = fit_convergence_orders(eps, metrics)
        assert diag == ""
        slope, resid = orders["m"]
        assert slope == pytest.approx(1.8, abs=1e-12)
        assert resid < 1e-12

    def test_degenerate_sweep_rejected_with_message(self):
        orders, diag = fit_convergence_orders([0.5, 0.5], {"m": [1.0, 1.0]})
        assert orders is None
        assert "distinct epsilon" in diag

    def test_nonpositive_metric_rejected(self):
        orders, diag = fit_convergence_orders([1.0, 0.5], {"m": [1.0, 0.0]})
        assert orders is None
        assert "non-positive" in diag

    def test_sweep_requires_two_epsilons(self):
        with pytest.raises(ValueError, match="two epsilon"):
            epsilon_sweep(desk_profile(t_final=0.1), [1.0])

    def test_degenerate_epsilon_sweep(self):
        report = epsilon_sweep(desk_profile(t_final=0.1), [0.5, 0.5])
        assert report.fitted_orders is None
        assert "distinct epsilon" in report.fit_diagnostics
        assert len(report.epsilons) == 1


@pytest.fixture(scope="module")
def stride_run():
    times = tuple(np.round(np.arange(0.0, 1.0 + 1e-9, 0.01), 10))
    cfg = desk_profile(alpha=0.3, epsilon=1.0, t_final=1.0,
                       record_dt=0.01, snapshot_times=times)
    return cfg, ide_run(cfg)


class TestMomentOdeResidual:
    def test_fine_stride_residuals_are_small(self, stride_run):
        """At snapshot stride 0.01 all three moment equations close within
        5e-3, including the alpha^2 eps^2 energy contribution."""
        cfg, run = stride_run
        res = moment_ode_residual(run.series, run.snapshots, cfg.rate(),
                                  cfg.alpha, cfg.beta, cfg.epsilon, "ide")
        assert max(res.values()) <= 5e-3

    def test_dropping_kernel_variance_term_breaks_energy_equation(self, stride_run):
        """Scoring the kernel-model run with the limit equation's energy
        budget (beta only) must blow the residual past the bound: the
        missing term is alpha^2 eps^2 rho ~ 0.09 rho."""
        cfg, run = stride_run
        good = moment_ode_residual(run.series, run.snapshots, cfg.rate(),
                                   cfg.alpha, cfg.beta, cfg.epsilon, "ide")
        bad = moment_ode_residual(run.series, run.snapshots, cfg.rate(),
                                  cfg.alpha, cfg.beta, cfg.epsilon, "pde")
        assert bad["E"] > 5e-3
        assert bad["E"] > 5.0 * good["E"]

    def test_zero_state_has_zero_residuals(self, grid):
        snaps = [DistributionState(grid, np.zeros(grid.n_points), t) for t in (0.0, 0.5, 1.0)]
        series = series_from_snapshots(snaps)
        res = moment_ode_residual(series, snaps, desk_profile().rate(), 0.3, 0.4, 1.0, "ide")
        assert res == {"rho": 0.0, "p": 0.0, "E": 0.0}

    def test_needs_three_snapshots(self, grid):
        snaps = [DistributionState(grid, np.zeros(grid.n_points), t) for t in (0.0, 1.0)]
        with pytest.raises(ValueError, match="3 snapshots"):
            moment_ode_residual(series_from_snapshots(snaps), snaps,
                                desk_profile().rate(), 0.3, 0.4, 1.0, "ide")

    def test_unknown_model_tag(self, grid):
        snaps = [DistributionState(grid, np.zeros(grid.n_points), t) for t in (0.0, 0.5, 1.0)]
        with pytest.raises(ValueError, match="model_tag"):
            moment_ode_residual(series_from_snapshots(snaps), snaps,
                                desk_profile().rate(), 0.3, 0.4, 1.0, "abm")


def test_series_from_snapshots_matches_run_series():
    cfg = desk_profile(t_final=0.2, snapshot_times=(0.0, 0.1, 0.2))
    run = ide_run(cfg)
    series = series_from_snapshots(run.snapshots)
    for t_s, rho in zip(series.times, series.rho):
        i = int(np.argmin(np.abs(run.series.times - t_s)))
        assert rho == pytest.approx(run.series.rho[i], rel=1e-12)


def test_moment_series_from_rows():
    rows = [(0.0, (0.3, 0.0, 0.15, 0.0, 0.5)), (1.0, (0.5, 0.1, 0.3, 0.2, 0.56))]
    series = MomentSeries.from_rows(rows)
    assert len(series) == 2
    assert series.rho[1] == 0.5
    assert series.metric("E")[0] == 0.15
