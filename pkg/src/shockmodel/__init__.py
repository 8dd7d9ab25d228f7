"""Generalized extreme shock models with strengthening and weakening thresholds."""

from .asymptotics import (LimitParams, Regime, Schedule, exponential_schedule, limit_pmf, limit_survival_H,
                          limit_survival_T, limit_tail, limit_tail_l0, regime_at)
from .distributions import DiscreteFinite, DistributionSpec, Exponential, Pareto, Uniform, Weibull, distribution_from_dict
from .errors import (ConfigError, DegenerateModelError, DegenerateUrnError, IncrementRangeError,
                     InternalConsistencyError, QuadratureError, StateBudgetExceeded)
from .exact import (SurvivalTriple, joint_pmf, joint_survival, nplus_nminus_table, pmf_nplus_nminus, pmf_nu,
                    survival_nu, survival_nu_table)
from .model import (AffineIncrements, Censored, FiniteIncrements, GeometricIncrements, ModelParams, ShockEffect,
                    ShockRealization, classify_shock, simulate_realization, stats_from_trace, threshold_at)
from .simulate import BatchSummary, simulate_batch
from .urn import (ReinforcementMatrix, UrnState, exact_urn_distribution, factorial_moment_3, factorial_moment_4,
                  first_failure_probability, simulate_urn_batch, step_urn)

__version__ = "0.1.0"
