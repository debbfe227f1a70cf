"""reflectcost: comparison diffusions, reflection-coupling costs, and exact
discrete optimal transport on model spaces."""

from .comparison import (MixtureSamples, PathEnsemble, SdeConfig,
                         constancy_statistic, default_config, sample_zeta,
                         sample_zeta_hyperbolic, simulate_rho,
                         survival_probability)
from .cost import (CostQuery, PhiResult, kappa, phi, phi_closed, phi_mixture,
                   phi_prime_zero, phi_series, phi_survival, theta_limit)
from .specfun import (CurvatureDimension, chi, comparison_fns, eta, gegenbauer,
                      interval_survival, psi, series_coefficient)
from .transport import (CostMatrix, DiscreteMeasure, TransportPlan,
                        brute_force_uniform, kr_dual_value, total_variation,
                        transport_cost)

__version__ = "0.1.0"

__all__ = [
    "CurvatureDimension", "chi", "comparison_fns", "eta", "gegenbauer",
    "interval_survival", "psi", "series_coefficient",
    "SdeConfig", "PathEnsemble", "MixtureSamples", "default_config",
    "simulate_rho", "survival_probability", "sample_zeta",
    "sample_zeta_hyperbolic", "constancy_statistic",
    "CostQuery", "PhiResult", "phi", "phi_closed", "phi_series", "phi_mixture",
    "phi_survival", "phi_prime_zero", "theta_limit", "kappa",
    "DiscreteMeasure", "CostMatrix", "TransportPlan", "transport_cost",
    "brute_force_uniform", "total_variation", "kr_dual_value",
]
