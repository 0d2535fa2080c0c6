"""Geometric Maxwell-Vlasov toolkit: brackets, dynamics, constraints and stability."""
from .bracket import hamiltonian_vector_field, jacobi_residual, mv_bracket
from .config import ConfigError, RunConfig, parse_config
from .dynamics import DiagnosticSeries, ScenarioParams, rhs, run, step_rk4
from .energy_casimir import CasimirConstructionError, energy_casimir_report
from .gnh import ConstraintChain, PresymplecticSystem, gnh_iterate, solve_vector_field
from .grid import Config, PhaseGrid
from .linear import Equilibrium, build_linear_operator, mode_operator, spectrum
from .state import FunctionalDerivative, State, StateTangent

__version__ = "0.1.0"

__all__ = [
    "CasimirConstructionError", "Config", "ConfigError", "ConstraintChain", "DiagnosticSeries",
    "Equilibrium", "FunctionalDerivative", "PhaseGrid", "PresymplecticSystem", "RunConfig",
    "ScenarioParams", "State", "StateTangent", "build_linear_operator", "energy_casimir_report",
    "gnh_iterate", "hamiltonian_vector_field", "jacobi_residual", "mode_operator", "mv_bracket",
    "parse_config", "rhs", "run", "solve_vector_field", "spectrum", "step_rk4",
]
