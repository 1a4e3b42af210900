"""Simulation configuration, stability guards and the flat config-file format.

Defaults follow the reference parameter set used for the headline runs
(domain [-15, 15], R = 5, delta = 0.5, v_m = 1.5, beta = 0.4); the ``desk``
profile shrinks the run to a scale suited for test suites while the ``paper``
profile keeps the full-size values.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np

from .core import (
    Mollifier,
    MutationKernel,
    NetProliferationRate,
    PhenotypeGrid,
)


class ConfigError(ValueError):
    """A configuration value or stability guard was violated."""


class InvariantViolation(RuntimeError):
    """A runtime check derived from a structural property of the models failed."""


#: Keys accepted in the flat ``key = value`` configuration file.
CONFIG_FILE_KEYS = (
    "n_agents", "dv", "dt", "t_final", "v_min", "v_max",
    "R", "delta", "v_m", "alpha", "beta", "epsilon", "seed",
)
_INT_KEYS = {"n_agents", "seed"}

MODELS = ("abm", "ide", "pde")

#: Upper bound on per-event probability mass in one agent-model step, so the
#: grouped higher-order event combinations stay quantitatively negligible.
ABM_STEP_BUDGET = 0.1


@dataclass(frozen=True)
class SimConfig:
    """One fully-resolved simulation setup, shared by the three models."""

    n_agents: int = 100_000
    dv: float = 2.5e-2
    dt: float = 1e-4
    t_final: float = 10.0
    v_min: float = -15.0
    v_max: float = 15.0
    R: float = 5.0
    delta: float = 0.5
    v_m: float = 1.5
    alpha: float = 0.0
    beta: float = 0.4
    epsilon: float = 1.0
    seed: int = 0
    model_selector: str = "ide"
    snapshot_times: tuple = ()          # () means "final time only"
    record_dt: float = 0.05             # moment-series output stride

    def with_overrides(self, **kwargs) -> "SimConfig":
        return replace(self, **kwargs)

    # -- derived objects ---------------------------------------------------

    def grid(self) -> PhenotypeGrid:
        return PhenotypeGrid.from_spacing(self.v_min, self.v_max, self.dv)

    def mollifier(self) -> Mollifier:
        return Mollifier(self.R, self.delta)

    def rate(self) -> NetProliferationRate:
        return NetProliferationRate(self.v_m, self.mollifier())

    def kernel(self) -> MutationKernel:
        return MutationKernel(self.alpha, self.beta, self.epsilon)

    @property
    def mu(self) -> float:
        """Phenotype-change rate coupled to the scaling parameter."""
        return 1.0 / self.epsilon ** 2

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))

    def resolved_snapshot_times(self) -> tuple:
        return self.snapshot_times if self.snapshot_times else (self.t_final,)

    # -- guards ------------------------------------------------------------

    def max_abs_rate(self) -> float:
        return float(np.max(np.abs(self.rate()(self.grid().nodes))))

    def max_death_rate(self) -> float:
        return float(np.max(self.rate().death_rate(self.grid().nodes)))

    def guard_values(self, model: str | None = None) -> dict:
        """Stability/consistency guard numbers echoed into run manifests."""
        model = model or self.model_selector
        vals = {"dt_mu": self.dt * self.mu}
        if model == "abm":
            vals["abm_event_budget"] = self.dt * max(1.0, self.max_death_rate(), self.mu)
        if model == "ide":
            vals["ide_euler_guard"] = self.dt * (self.max_abs_rate() + 1.0 + self.mu)
        if model == "pde":
            vals["cfl"] = self.dt * (self.beta / self.dv ** 2 + abs(self.alpha) / self.dv
                                     + self.max_abs_rate() + 1.0)
        return vals

    def validate(self, model: str | None = None) -> None:
        """Raise ConfigError naming the offending key or guard."""
        model = model or self.model_selector
        if model not in MODELS:
            raise ConfigError(f"model_selector must be one of {MODELS}, got {model!r}")
        if self.dt <= 0:
            raise ConfigError(f"dt must be positive, got dt={self.dt}")
        if self.t_final <= 0:
            raise ConfigError(f"t_final must be positive, got t_final={self.t_final}")
        if self.n_agents <= 0:
            raise ConfigError(f"n_agents must be positive, got n_agents={self.n_agents}")
        if self.epsilon <= 0:
            raise ConfigError(f"epsilon must be positive, got epsilon={self.epsilon}")
        if self.beta <= 0:
            raise ConfigError(f"beta must be positive, got beta={self.beta}")
        n_steps = self.t_final / self.dt
        if n_steps > 2 ** 53:
            raise ConfigError(f"t_final/dt={n_steps:g} is not integer-representable")
        if abs(n_steps - round(n_steps)) > 1e-9 * max(1.0, n_steps):
            raise ConfigError(f"dt={self.dt} does not divide t_final={self.t_final}")
        rec = self.record_dt / self.dt
        if abs(rec - round(rec)) > 1e-9 * max(1.0, rec):
            raise ConfigError(f"dt={self.dt} does not divide record_dt={self.record_dt}")
        for t_s in self.resolved_snapshot_times():
            k = t_s / self.dt
            if t_s < 0 or t_s > self.t_final * (1 + 1e-12):
                raise ConfigError(f"snapshot_times entry {t_s} outside [0, t_final]")
            if abs(k - round(k)) > 1e-6:
                raise ConfigError(f"dt={self.dt} does not divide snapshot time {t_s}")
        self.grid()          # validates dv / domain
        self.mollifier()     # validates R, delta
        guards = self.guard_values(model)
        if model == "abm" and guards["abm_event_budget"] > ABM_STEP_BUDGET * (1 + 1e-9):
            raise ConfigError(
                "abm step guard violated: dt*max(p0, max death rate, mu) = "
                f"{guards['abm_event_budget']:.4g} > {ABM_STEP_BUDGET}")
        if model == "ide" and guards["ide_euler_guard"] >= 1.0:
            raise ConfigError(
                "ide positivity guard violated: dt*(max|r| + 1 + mu) = "
                f"{guards['ide_euler_guard']:.4g} >= 1")
        if model == "pde" and guards["cfl"] >= 1.0:
            raise ConfigError(
                "pde CFL guard violated: dt*(beta/dv^2 + |alpha|/dv + max|r| + 1) = "
                f"{guards['cfl']:.4g} >= 1")


def paper_profile(**overrides) -> SimConfig:
    """Full-size reference setup: N = 1e5, dv = 2.5e-2, dt = 1e-4, T = 10."""
    return SimConfig().with_overrides(**overrides)


def desk_profile(**overrides) -> SimConfig:
    """Suite-scale setup: N = 1e4, dv = 0.05, dt = 1e-3, T = 5."""
    cfg = SimConfig(n_agents=10_000, dv=0.05, dt=1e-3, t_final=5.0)
    return cfg.with_overrides(**overrides)


PROFILES = {"paper": paper_profile, "desk": desk_profile}


def parse_config_file(path) -> dict:
    """Read the flat ``key = value`` file; unknown keys are an error."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, _, text = line.partition("=")
            key = key.strip()
            text = text.strip()
            if key not in CONFIG_FILE_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                values[key] = int(text) if key in _INT_KEYS else float(text)
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: could not parse value for {key!r}: {text!r}")
    return values


def config_from_file(path, base: SimConfig | None = None) -> SimConfig:
    base = base if base is not None else desk_profile()
    return base.with_overrides(**parse_config_file(path))


def echo_config(config: SimConfig) -> dict:
    """All resolved parameter values, for manifests."""
    out = {}
    for f in fields(config):
        val = getattr(config, f.name)
        out[f.name] = list(val) if isinstance(val, tuple) else val
    return out
