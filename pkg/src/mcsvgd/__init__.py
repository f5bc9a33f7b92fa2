"""Stein variational inference for models with intractable normalizing functions."""

from .baselines import McmcChain, dmh_step, exchange_step, run_chain, tune_proposal
from .diagnostics import SummaryRow, finite_diff_score, hpd_interval, ksd_vstat, summarize
from .harness import RunConfig, RunReport, run_experiment, simulate_dataset, sweep
from .kernel import KernelConfig, kernel_eval, kernel_grad, median_bandwidth
from .svgd import (CacheEntry, GradientEstimate, NumericalError, ParticleSet, RunTrace, SnisCache,
                   SvgdConfig, init_particles, map_estimate, mc_gradient, run_mcsvgd,
                   select_cache_entry, snis_gradient, stopping_check, svgd_direction, svgd_step)

__version__ = "0.1.0"
