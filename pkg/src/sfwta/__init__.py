"""Social-optimum traffic assignment under random link flows."""
from .cost_model import CostParams
from .fw_solver import FwConfig, solve_deterministic, solve_expected
from .network import Network, build_network, load_network, example_network, parse_network
from .sfwta_solver import PowerLaw, StopRule, solve_sfwta
from .stochastic_env import NoiseModel

__all__ = [
    "CostParams",
    "FwConfig",
    "Network",
    "NoiseModel",
    "PowerLaw",
    "StopRule",
    "build_network",
    "load_network",
    "example_network",
    "parse_network",
    "solve_deterministic",
    "solve_expected",
    "solve_sfwta",
]
