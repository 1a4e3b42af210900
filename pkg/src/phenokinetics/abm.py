"""Direct Monte Carlo simulation of the stochastic agent model.

A fixed ensemble of N indistinguishable agents carries a compartment index
(1 = living population member, 0 = reservoir) and a phenotype.  Per step and
per agent, independent Bernoulli variables with probability x dt / (1 + x dt)
decide interaction-driven switching into the population (proliferation:
a reservoir agent copies the phenotype of a uniformly sampled living
partner), spontaneous switching back to the reservoir (death), and phenotype
resampling from the change kernel.  All draws read a frozen pre-step
snapshot and commit simultaneously.

The per-agent scheme below is the reference path: event draws are vectorised
but each agent keeps its own independent Bernoulli variables, so the
marginal law per agent is exactly the microscopic system's.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import backends
from .analysis import Moments, MomentSeries, RunDiagnostics, RunResult
from .config import ConfigError, InvariantViolation, SimConfig
from .core import DEFAULT_INITIAL_DATUM, DistributionState, MutationKernel, PhenotypeGrid

#: Phenotype shared by every reservoir agent.  It plays no quantitative role
#: in the dynamics; 0 is an arbitrary representative value.
RESERVOIR_PHENOTYPE = 0.0


def switch_probability(rate, dt: float):
    """Per-step Bernoulli probability x dt / (1 + x dt) for event rate x."""
    x = np.asarray(rate, dtype=float) * dt
    out = x / (1.0 + x)
    return float(out) if out.ndim == 0 else out


@dataclass
class AgentPopulation:
    """Mutable ensemble state; arrays have one entry per agent."""

    compartments: np.ndarray    # uint8, values in {0, 1}
    phenotypes: np.ndarray      # float64
    v0: float
    time: float
    rng: np.random.Generator

    @property
    def n_agents(self) -> int:
        return len(self.compartments)

    @property
    def living(self) -> np.ndarray:
        return self.compartments == 1

    def moments(self) -> Moments:
        n = self.n_agents
        live = self.living
        n1 = int(np.count_nonzero(live))
        rho = n1 / n
        vs = self.phenotypes[live]
        p = float(vs.sum()) / n
        energy = float((vs * vs).sum()) / n
        if rho > 1e-8:
            mean = p / rho
            variance = energy / rho - mean * mean
        else:
            mean = math.nan
            variance = math.nan
        return Moments(rho, p, energy, mean, variance)

    def histogram(self, grid: PhenotypeGrid) -> DistributionState:
        """Distribution-function estimate: cell counts / (N dv), node-centred."""
        half = 0.5 * grid.dv
        edges = np.linspace(grid.v_min - half, grid.v_max + half, grid.n_points + 1)
        counts, _ = np.histogram(self.phenotypes[self.living], bins=edges)
        return DistributionState(grid, counts / (self.n_agents * grid.dv), self.time)


@dataclass(frozen=True)
class AbmStepRates:
    """Event rates of one step: proliferation p0, phenotype-change mu and the
    death rate d(v) = 1 - r(v) derived from the net proliferation rate."""

    rate: object                # callable net proliferation rate r(v)
    mu: float
    p0: float = 1.0

    def death_rate(self, v):
        return 1.0 - np.asarray(self.rate(v), dtype=float)


def abm_init(config: SimConfig, datum=DEFAULT_INITIAL_DATUM,
             v0: float = RESERVOIR_PHENOTYPE) -> AgentPopulation:
    """Draw the initial ensemble: round(mass * N) living agents sampled
    i.i.d. from the normalised initial profile, the rest in the reservoir."""
    if datum.mass > 1.0:
        raise ConfigError(f"initial mass must be <= 1, got {datum.mass}")
    n = config.n_agents
    rng = np.random.Generator(np.random.PCG64(config.seed))
    n1 = int(round(datum.mass * n))
    comp = np.zeros(n, dtype=np.uint8)
    phen = np.full(n, float(v0))
    comp[:n1] = 1
    if n1 > 0:
        phen[:n1] = datum.sample(rng, n1)
    return AgentPopulation(comp, phen, float(v0), 0.0, rng)


_arange_cache = {}


def _agent_index(n: int) -> np.ndarray:
    if n not in _arange_cache:
        _arange_cache[n] = np.arange(n)
    return _arange_cache[n]


def abm_step(pop: AgentPopulation, rates: AbmStepRates, kernel: MutationKernel,
             dt: float) -> AgentPopulation:
    """Advance the ensemble by one synchronous step.

    A fixed pattern of random draws per step (uniforms, partner indices and
    one standard normal per agent) keeps runs bit-reproducible for a given
    seed regardless of the event outcomes; unused draws are discarded, which
    leaves every agent's marginal law unchanged.
    """
    n = pop.n_agents
    rng = pop.rng
    u = rng.random(3 * n)
    u_prolif, u_death, u_mut = u[:n], u[n:2 * n], u[2 * n:]
    raw = rng.integers(0, n - 1, size=n)
    z = rng.standard_normal(n)

    # uniform partner among the N-1 other agents
    partner = (raw + (raw >= _agent_index(n))).astype(np.int64)

    p_prolif = switch_probability(rates.p0, dt)
    p_mut = switch_probability(rates.mu, dt)
    death_prob = switch_probability(rates.death_rate(pop.phenotypes), dt)

    comp_new, phen_new = backends.abm_resolve(
        pop.compartments, pop.phenotypes, partner,
        u_prolif, u_death, u_mut, z,
        p_prolif, np.asarray(death_prob, dtype=float), p_mut,
        kernel.mean_shift, kernel.std, pop.v0)
    return AgentPopulation(comp_new, phen_new, pop.v0, pop.time + dt, rng)


def abm_run(config: SimConfig, rate=None, datum=None, rates=None) -> RunResult:
    """Simulate the ensemble over [0, t_final].

    Moments come from the agent phenotypes directly; snapshots are histogram
    estimates of the distribution function on the configured grid.
    """
    config.validate("abm")
    grid = config.grid()
    rate = rate if rate is not None else config.rate()
    datum = datum if datum is not None else DEFAULT_INITIAL_DATUM
    rates = rates if rates is not None else AbmStepRates(rate=rate, mu=config.mu)
    kernel = config.kernel()
    dt = config.dt

    pop = abm_init(config, datum)
    diag = RunDiagnostics()

    record_every = int(round(config.record_dt / dt))
    snap_steps = {int(round(t_s / dt)): t_s for t_s in config.resolved_snapshot_times()}
    n_steps = config.n_steps

    def check(pop):
        if pop.n_agents != config.n_agents:
            raise InvariantViolation("agent-count conservation violated")
        reservoir = ~pop.living
        if not np.all(pop.phenotypes[reservoir] == pop.v0):
            raise InvariantViolation("reservoir purity violated: a reservoir agent "
                                     "carries a phenotype other than v0")

    rows = [(0.0, pop.moments())]
    snapshots = [pop.histogram(grid)] if 0 in snap_steps else []
    check(pop)
    diag.rho_min = min(diag.rho_min, rows[0][1].rho)
    diag.rho_max = max(diag.rho_max, rows[0][1].rho)

    for step in range(1, n_steps + 1):
        pop = abm_step(pop, rates, kernel, dt)
        if step % record_every == 0 or step == n_steps:
            pop.time = step * dt
            m = pop.moments()
            rows.append((pop.time, m))
            check(pop)
            diag.rho_min = min(diag.rho_min, m.rho)
            diag.rho_max = max(diag.rho_max, m.rho)
        if step in snap_steps:
            pop.time = step * dt
            snapshots.append(pop.histogram(grid))

    return RunResult("abm", MomentSeries.from_rows(rows), snapshots, diag, config)
