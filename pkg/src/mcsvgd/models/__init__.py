from .base import ExpFamilyModel, FlatPrior, GaussianPrior, SimulationError, make_prior
from .comp import (COMPModel, CountRegressionData, comp_pmf, comp_sample, comp_sample_one,
                   comp_simulate, comp_suffstats, poisson_regression)
from .ergm import (ERGMModel, Network, ergm_change_stats, ergm_gibbs_cycle, ergm_simulate,
                   ergm_suffstats, mple, mple_cov)
from .potts import (Lattice, PottsModel, categorize_thickness, potts_mple, potts_simulate,
                    potts_suffstat, swendsen_wang_step)

__all__ = [
    "ExpFamilyModel", "FlatPrior", "GaussianPrior", "SimulationError", "make_prior",
    "COMPModel", "CountRegressionData", "comp_pmf", "comp_sample", "comp_sample_one",
    "comp_simulate", "comp_suffstats", "poisson_regression",
    "ERGMModel", "Network", "ergm_change_stats", "ergm_gibbs_cycle", "ergm_simulate",
    "ergm_suffstats", "mple", "mple_cov",
    "Lattice", "PottsModel", "categorize_thickness", "potts_mple", "potts_simulate",
    "potts_suffstat", "swendsen_wang_step",
]
