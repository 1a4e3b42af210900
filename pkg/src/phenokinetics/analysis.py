"""Statistical moments, norms, analytic oracles and convergence metrics.

Pure functions over immutable inputs; the sweep driver runs the grid solvers
but owns no state of its own, so everything here is safe to parallelise over
parameter combinations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import DistributionState, trapezium

#: Density below which the mean and variance of a distribution are reported
#: as undefined (NaN) instead of dividing by a vanishing mass.
DENSITY_FLOOR = 1e-8


class Moments(NamedTuple):
    rho: float
    p: float
    E: float
    mean: float
    variance: float


def moments(state: DistributionState) -> Moments:
    """Trapezium moments (density, momentum, bulk energy, mean, variance).

    The mean and variance are NaN whenever the density is below
    ``DENSITY_FLOOR``; this signals "undefined" without raising.
    """
    w = state.grid.trapezium_weights
    v = state.grid.nodes
    f = state.values
    rho = float(w @ f)
    p = float(w @ (v * f))
    energy = float(w @ (v * v * f))
    if rho > DENSITY_FLOOR:
        mean = p / rho
        variance = energy / rho - mean * mean
    else:
        mean = math.nan
        variance = math.nan
    return Moments(rho, p, energy, mean, variance)


def l2_norm(state: DistributionState) -> float:
    return math.sqrt(max(0.0, trapezium(state.grid, state.values ** 2)))


def l2_distance(f: DistributionState, g: DistributionState) -> float:
    """Trapezium L2 distance between two states on the same grid."""
    if f.grid != g.grid:
        raise ValueError("l2_distance needs states on the same grid")
    diff = f.values - g.values
    return math.sqrt(max(0.0, trapezium(f.grid, diff * diff)))


def logistic_oracle(r0: float, rho0: float, t) -> float:
    """Closed-form density for a constant net proliferation rate r0.

    Solves d(rho)/dt = (r0 - rho) rho from rho(0) = rho0.
    """
    if r0 <= 0:
        raise ValueError(f"logistic oracle needs r0 > 0, got {r0}")
    if not 0 < rho0 <= r0:
        raise ValueError(f"logistic oracle needs 0 < rho0 <= r0, got rho0={rho0}, r0={r0}")
    t = np.asarray(t, dtype=float)
    out = r0 * rho0 / ((r0 - rho0) * np.exp(-r0 * t) + rho0)
    return float(out) if out.ndim == 0 else out


@dataclass
class MomentSeries:
    """Time series of (rho, p, E, mean, variance) for one model run."""

    times: np.ndarray
    rho: np.ndarray
    p: np.ndarray
    E: np.ndarray
    mean: np.ndarray
    variance: np.ndarray

    @classmethod
    def from_rows(cls, rows) -> "MomentSeries":
        """rows: iterable of (t, Moments)."""
        times = np.array([t for t, _ in rows])
        cols = np.array([list(m) for _, m in rows])
        return cls(times, cols[:, 0], cols[:, 1], cols[:, 2], cols[:, 3], cols[:, 4])

    def __len__(self):
        return len(self.times)

    def metric(self, name: str) -> np.ndarray:
        return getattr(self, name)


def series_from_snapshots(snapshots) -> MomentSeries:
    """Moment series evaluated at the snapshot instants themselves."""
    return MomentSeries.from_rows([(s.time, moments(s)) for s in snapshots])


@dataclass
class RunDiagnostics:
    """Structural-property monitors collected during a run."""

    min_excursion: float = 0.0         # most negative pre-clamp value seen
    clamped_mass: float = 0.0          # cumulative mass removed by clamping
    max_f: float = 0.0
    rho_min: float = math.inf
    rho_max: float = -math.inf
    max_l2_growth_ratio: float = 0.0   # max_t ||f(t)|| / (||f0|| e^t)
    boundary_max: float = 0.0          # max |f| on the 10 nodes nearest each end
    outside_support_mass: float = 0.0  # max mass beyond the rate support
    kernel_mass_defect: float = 0.0    # interior column-mass deviation of the band


@dataclass
class RunResult:
    """A model run: moment series, distribution snapshots and diagnostics."""

    model: str
    series: MomentSeries
    snapshots: list
    diagnostics: RunDiagnostics
    config: object = None


@dataclass
class ConvergenceReport:
    """Scaling-parameter sweep metrics against the limit-equation reference."""

    epsilons: np.ndarray
    l2_final: np.ndarray
    rho_sup: np.ndarray
    p_sup: np.ndarray
    E_sup: np.ndarray
    fitted_orders: dict | None
    fit_diagnostics: str = ""
    l2_ref_final: float = 0.0
    reference_final: DistributionState | None = None

    METRICS = ("l2_final", "rho_sup", "p_sup", "E_sup")


def fit_convergence_orders(epsilons, metrics: dict):
    """Least-squares slope of log(metric) against log(epsilon) per metric.

    Returns (orders, diagnostics): ``orders`` maps metric name to
    (slope, fit_residual), or is None when the fit is rejected (fewer than
    two distinct epsilon values, or a non-positive metric value).
    """
    eps = np.asarray(epsilons, dtype=float)
    if np.unique(eps).size < 2:
        return None, "fit rejected: need at least two distinct epsilon values"
    log_eps = np.log(eps)
    orders = {}
    for name, vals in metrics.items():
        vals = np.asarray(vals, dtype=float)
        if np.any(vals <= 0):
            return None, f"fit rejected: metric {name} has non-positive values"
        slope, intercept = np.polyfit(log_eps, np.log(vals), 1)
        resid = np.log(vals) - (slope * log_eps + intercept)
        orders[name] = (float(slope), float(np.sqrt(np.mean(resid ** 2))))
    return orders, ""


def epsilon_sweep(base_config, epsilons, pde_scheme: str = "central",
                  rate=None, datum=None, collect=None) -> ConvergenceReport:
    """Run the integral-kernel model per epsilon against one limit-PDE run.

    The limit equation is epsilon-free, so it is solved once per
    (alpha, beta) pair.  The PDE reference defaults to central advection:
    the sweep is an order study and the first-order upwind bias would put a
    resolution floor under the distances being measured.  ``collect``, if
    given, receives every RunResult (reference first).
    """
    from .ide import ide_run
    from .pde import PdeScheme, pde_run

    eps_list = [float(e) for e in epsilons]
    if len(eps_list) < 2:
        raise ValueError("epsilon_sweep needs at least two epsilon values")
    eps_sorted = sorted(set(eps_list), reverse=True)

    ref = pde_run(base_config, rate=rate, datum=datum, scheme=PdeScheme(advection=pde_scheme))
    g_final = ref.snapshots[-1]
    if collect is not None:
        collect(ref)

    metrics = {name: [] for name in ConvergenceReport.METRICS}
    for eps in eps_sorted:
        run = ide_run(base_config.with_overrides(epsilon=eps), rate=rate, datum=datum)
        if collect is not None:
            collect(run)
        if not np.allclose(run.series.times, ref.series.times):
            raise ValueError("sweep runs must share the record grid")
        metrics["l2_final"].append(l2_distance(run.snapshots[-1], g_final))
        metrics["rho_sup"].append(float(np.max(np.abs(run.series.rho - ref.series.rho))))
        metrics["p_sup"].append(float(np.max(np.abs(run.series.p - ref.series.p))))
        metrics["E_sup"].append(float(np.max(np.abs(run.series.E - ref.series.E))))

    if len(eps_sorted) < len(eps_list):
        orders, diag = None, "fit rejected: need at least two distinct epsilon values"
    else:
        orders, diag = fit_convergence_orders(eps_sorted, metrics)
    return ConvergenceReport(
        epsilons=np.array(eps_sorted),
        l2_final=np.array(metrics["l2_final"]),
        rho_sup=np.array(metrics["rho_sup"]),
        p_sup=np.array(metrics["p_sup"]),
        E_sup=np.array(metrics["E_sup"]),
        fitted_orders=orders,
        fit_diagnostics=diag,
        l2_ref_final=l2_norm(g_final),
        reference_final=g_final,
    )


def moment_ode_residual(series: MomentSeries, snapshots, rate, alpha: float,
                        beta: float, epsilon: float, model_tag: str) -> dict:
    """Max deviation of the centred time-derivative of each moment from the
    moment evolution equations.

    For the integral-kernel model the energy equation carries the exact
    kernel-variance contribution (beta + alpha^2 epsilon^2) rho; the limit
    PDE carries beta rho only.
    """
    if model_tag not in ("ide", "pde"):
        raise ValueError(f"model_tag must be 'ide' or 'pde', got {model_tag!r}")
    if len(snapshots) < 3:
        raise ValueError("moment_ode_residual needs at least 3 snapshots")
    times = np.array([s.time for s in snapshots])
    idx = []
    for t_s in times:
        j = int(np.argmin(np.abs(series.times - t_s)))
        if abs(series.times[j] - t_s) > 1e-9 * max(1.0, abs(t_s)):
            raise ValueError(f"series has no record at snapshot time {t_s}")
        idx.append(j)
    idx = np.array(idx)

    grid = snapshots[0].grid
    w = grid.trapezium_weights
    v = grid.nodes
    rv = np.asarray(rate(v), dtype=float)
    energy_coeff = beta + (alpha * epsilon) ** 2 if model_tag == "ide" else beta

    rho = series.rho[idx]
    p = series.p[idx]
    energy = series.E[idx]
    rhs = {"rho": [], "p": [], "E": []}
    for i, snap in enumerate(snapshots):
        f = snap.values
        int_r = float(w @ (rv * f))
        int_vr = float(w @ (v * rv * f))
        int_v2r = float(w @ (v * v * rv * f))
        rhs["rho"].append(int_r - rho[i] ** 2)
        rhs["p"].append(int_vr - rho[i] * p[i] + alpha * rho[i])
        rhs["E"].append(int_v2r - rho[i] * energy[i] + 2.0 * alpha * p[i] + energy_coeff * rho[i])

    out = {}
    dt2 = times[2:] - times[:-2]
    for name, vals in (("rho", rho), ("p", p), ("E", energy)):
        lhs = (vals[2:] - vals[:-2]) / dt2
        out[name] = float(np.max(np.abs(lhs - np.asarray(rhs[name])[1:-1])))
    return out
