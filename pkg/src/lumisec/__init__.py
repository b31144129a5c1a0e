"""IRS-assisted VLC secrecy simulation and element-allocation optimisation."""
from .allocation import Allocation, Evaluator, ObjectiveMode, baseline, brute_force, evaluate_objective
from .channel import PathSet, cfr, cfr_power_expanded, path_set, scenario_paths
from .ppo import PpoConfig, train
from .scene import Scenario, build_scenario, load_scenario, preset
from .secrecy import Quadrature, rate_approx, rate_exact, snr_prefix

__version__ = "0.1.0"

__all__ = [
    "Allocation", "Evaluator", "ObjectiveMode", "PathSet", "PpoConfig", "Quadrature", "Scenario",
    "baseline", "brute_force", "build_scenario", "cfr", "cfr_power_expanded", "evaluate_objective",
    "load_scenario", "path_set", "preset", "rate_approx", "rate_exact", "scenario_paths", "snr_prefix", "train",
]
