"""Collective target tracking mean-field games for populations of space heaters."""

from .errors import (
    BracketError, ConfigError, CTTError, DegenerateScenarioError, DomainError, InvalidParameterError,
    NumericInstabilityError,
)
from .lqg import CostParams, TimeGrid
from .nearfp import Algo1Params, NearFixedPoint, algorithm1, q_inf_star
from .operators import MeanFieldSolution, delta_op, m_op, picard_iterate, t_op
from .population import ComfortBand, GFunction, HeaterType, InitialDistribution, TypeDistribution, derive_rates
from .scenario import Scenario, reference_scenario

__version__ = "0.1.0"
