"""Simulation laboratory for many-server queues with i.i.d. random
service rates under square-root heavy-traffic staffing: routing
policies, idleness fairness measures, and the limiting diffusion."""

__version__ = "0.1.0"

from .distributions import (
    InterarrivalLaw,
    RateDistribution,
    sample_interarrival,
    sample_rates,
)
from .rng import RngStream, sample_exponential
from .measures import (
    BorelSet,
    DiscreteMeasure,
    average_measures,
    blind_limit_measure,
    mean_of_measure,
    wasserstein1,
)
from .policies import is_totally_blind, select_server
from .simulation import (
    SystemConfig,
    Trajectory,
    init,
    simulate,
    simulate_per_server,
    step,
)
from .fairness import (
    FairnessPath,
    cumulative_idleness,
    default_zeta,
    fairness_measure,
    fairness_path,
    limit_mean_rate,
    predicted_limit_measure,
    shift_epsilon,
    tau_epsilon,
    uniform_grid,
)
from .ladder import LadderSpec, ScaledPath, build_ladder, idleness_scaling_report, scale
from .diffusion import SdeParams, SdePath, integrate_sde, sample_beta, terminal_law
from .stats import (
    MartingaleDiagnostic,
    erlang_a_stationary,
    ks_distance,
    lisf_martingale_residual,
    summarize,
)
from .config import ConfigError, emit_config, parse_config

__all__ = [
    "BorelSet",
    "ConfigError",
    "DiscreteMeasure",
    "FairnessPath",
    "InterarrivalLaw",
    "LadderSpec",
    "MartingaleDiagnostic",
    "RateDistribution",
    "RngStream",
    "ScaledPath",
    "SdeParams",
    "SdePath",
    "SystemConfig",
    "Trajectory",
    "average_measures",
    "blind_limit_measure",
    "build_ladder",
    "cumulative_idleness",
    "default_zeta",
    "emit_config",
    "erlang_a_stationary",
    "fairness_measure",
    "fairness_path",
    "idleness_scaling_report",
    "init",
    "integrate_sde",
    "is_totally_blind",
    "ks_distance",
    "limit_mean_rate",
    "lisf_martingale_residual",
    "mean_of_measure",
    "parse_config",
    "predicted_limit_measure",
    "sample_beta",
    "sample_exponential",
    "sample_interarrival",
    "sample_rates",
    "scale",
    "select_server",
    "shift_epsilon",
    "simulate",
    "simulate_per_server",
    "step",
    "summarize",
    "tau_epsilon",
    "terminal_law",
    "uniform_grid",
    "wasserstein1",
]
