"""Adaptive P1 finite elements for 2D elliptic obstacle problems."""

from .adapt import (LoopRecord, MarkingResult, RunResult, dorfler_mark,
                    run_adaptive, run_uniform)
from .boundary import (BoundaryTrace, DiscreteTrace, apx_indicator,
                       apx_total, check_trace_continuity,
                       interpolate_boundary)
from .estimator import (IndicatorSet, assemble_indicators,
                        boundary_residual, interior_osc, jump_indicator)
from .fem import (assemble_load, assemble_stiffness, energy,
                  energy_norm_diff, h1_error, prolong)
from .mesh import (LShape, Mesh, Square, build_initial_mesh, dump_mesh,
                   edge_patch, refine, shape_regularity)
from .problems import (Obstacle, ProblemSpec, TransformedProblem, example1,
                       example1_exact_energy, example2, load_custom,
                       reference_energy, to_zero_obstacle)
from .vi import (DiscreteSolution, KKTReport, PdasError, check_kkt,
                 projected_sor_solve, solve_obstacle)

__version__ = "0.1.0"

__all__ = [
    "LoopRecord", "MarkingResult", "RunResult", "dorfler_mark",
    "run_adaptive", "run_uniform",
    "BoundaryTrace", "DiscreteTrace", "apx_indicator", "apx_total",
    "check_trace_continuity", "interpolate_boundary",
    "IndicatorSet", "assemble_indicators", "boundary_residual",
    "interior_osc", "jump_indicator",
    "assemble_load", "assemble_stiffness", "energy", "energy_norm_diff",
    "h1_error", "prolong",
    "LShape", "Mesh", "Square", "build_initial_mesh", "dump_mesh",
    "edge_patch", "refine", "shape_regularity",
    "Obstacle", "ProblemSpec", "TransformedProblem", "example1",
    "example1_exact_energy", "example2", "load_custom", "reference_energy",
    "to_zero_obstacle",
    "DiscreteSolution", "KKTReport", "PdasError", "check_kkt",
    "projected_sor_solve", "solve_obstacle",
    "__version__",
]
