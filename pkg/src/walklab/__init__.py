"""Random walks on sparse random graphs: cover times, mixing, return profiles and structural audits."""
from ._version import __version__
from .chain import (DenseLimitError, avoidance_from_all, birth_death_E0, birth_death_bound, conductance,
                    empirical_mixing_time, exact_avoidance, exact_avoidance_window, first_visit_prediction,
                    return_profile, return_profiles, second_eigenvalue, spectral_report, stationary,
                    BirthDeathParams)
from .experiments import ExperimentConfig, ResultRecord, run_experiment
from .graph import Graph, GnpParams, GraphError, contract_pair, gnp_sample, structured_graph
from .typicality import TypicalityReport, audit, classify_vertices
from .walk import (CapExceeded, WalkPolicy, build_transitions, cover_time_once, estimate_cover_time,
                   first_visit_tail, first_visit_tails)

__all__ = [
    "__version__", "Graph", "GnpParams", "GraphError", "gnp_sample", "structured_graph", "contract_pair",
    "WalkPolicy", "build_transitions", "cover_time_once", "estimate_cover_time", "first_visit_tail",
    "first_visit_tails", "CapExceeded", "stationary", "empirical_mixing_time", "second_eigenvalue",
    "conductance", "spectral_report", "return_profile", "return_profiles", "first_visit_prediction",
    "exact_avoidance", "exact_avoidance_window", "avoidance_from_all", "BirthDeathParams",
    "birth_death_E0", "birth_death_bound", "DenseLimitError", "TypicalityReport", "audit",
    "classify_vertices", "ExperimentConfig", "ResultRecord", "run_experiment",
]
