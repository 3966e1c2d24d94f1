"""Scenario-compressed chance-constrained economic dispatch with risk certificates."""
from .compress import (Box, Polytope, box_compression_set, box_hull, compression_complexity,
                       compression_function, contains, convex_hull, estimate_compression_risk)
from .grid import GridCase, PtdfPartition, compute_ptdf, line_flows, load_case, make_case, parse_case
from .lp import LPProblem, LPSolution, remove_rows, solve_lp, solve_lp_rowgen
from .pipeline import RunConfig, bounds_table, run, tune
from .risk import (ComplexityReport, RiskCertificate, certify, classical_epsilon, epsilon_bounds,
                   psi, solution_complexity)
from .scenario import (AffineMap, ScenarioSet, load_scenarios_csv, project_to_farms, region_map,
                       sample_gaussian_regions, sample_uniform_regions, split_holdout)
from .sced import (DispatchSolution, RobustCounterpart, build_box_counterpart, build_deterministic,
                   build_hull_dual_counterpart, build_scenario_program, build_vertex_program,
                   estimate_solution_risk, select_key_lines, solve_dispatch)

__version__ = "0.1.0"

__all__ = ["AffineMap", "Box", "ComplexityReport", "DispatchSolution", "GridCase", "LPProblem",
           "LPSolution", "Polytope", "PtdfPartition", "RiskCertificate", "RobustCounterpart",
           "RunConfig", "ScenarioSet", "bounds_table", "box_compression_set", "box_hull",
           "build_box_counterpart", "build_deterministic", "build_hull_dual_counterpart",
           "build_scenario_program", "build_vertex_program", "certify", "classical_epsilon",
           "compression_complexity", "compression_function", "compute_ptdf", "contains",
           "convex_hull", "epsilon_bounds", "estimate_compression_risk",
           "estimate_solution_risk", "line_flows", "load_case", "load_scenarios_csv",
           "make_case", "parse_case", "project_to_farms", "psi", "region_map", "remove_rows",
           "run", "sample_gaussian_regions", "sample_uniform_regions", "select_key_lines",
           "solution_complexity", "solve_dispatch", "solve_lp", "solve_lp_rowgen",
           "split_holdout", "tune"]
