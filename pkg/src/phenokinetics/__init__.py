"""Three cross-validated representations of selection-mutation dynamics in a
phenotype-structured population: a stochastic agent ensemble, its
integro-differential mean-field description, and the limit non-local
Fokker-Planck equation for small but frequent phenotype changes.
"""

__version__ = "0.1.0"

from .abm import AbmStepRates, AgentPopulation, abm_init, abm_run, abm_step, switch_probability
from .analysis import (
    ConvergenceReport,
    Moments,
    MomentSeries,
    RunResult,
    epsilon_sweep,
    fit_convergence_orders,
    l2_distance,
    l2_norm,
    logistic_oracle,
    moment_ode_residual,
    moments,
    series_from_snapshots,
)
from .backends import BACKEND, available_backends
from .config import (
    ConfigError,
    InvariantViolation,
    SimConfig,
    config_from_file,
    desk_profile,
    paper_profile,
    parse_config_file,
)
from .core import (
    DEFAULT_INITIAL_DATUM,
    DistributionState,
    GaussianInitialDatum,
    Mollifier,
    MollifiedConstantRate,
    MutationKernel,
    NetProliferationRate,
    PhenotypeGrid,
    initial_distribution,
    smoothstep,
    trapezium,
)
from .ide import KernelBand, build_kernel_band, ide_run, ide_step
from .pde import PdeScheme, pde_run, pde_step
