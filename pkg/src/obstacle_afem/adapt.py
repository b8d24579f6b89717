"""Doerfler marking and the Solve-Estimate-Mark-Refine loop."""

import time
from dataclasses import dataclass, field

import numpy as np

from .boundary import interpolate_boundary
from .estimator import assemble_indicators
from .fem import (assemble_load, assemble_stiffness, energy,
                  energy_norm_diff, prolong)
from .mesh import build_initial_mesh, refine
from .problems import to_zero_obstacle
from .vi import solve_obstacle

__all__ = [
    "MarkingResult",
    "LoopRecord",
    "RunResult",
    "dorfler_mark",
    "run_adaptive",
    "run_uniform",
]


@dataclass
class MarkingResult:
    marked: np.ndarray
    theta: float
    achieved_fraction: float


@dataclass
class LoopRecord:
    """Per-level convergence history entry."""

    level: int
    n_elements: int
    n_nodes: int
    rho: float
    rho_tilde: float
    apx: float
    energy: float
    eps: float = None           # |J(U_l) - J_ref| when a reference is known
    du_norm: float = None       # |||U_l - U_{l-1}||| on the current mesh
    pdas_iters: int = 0
    wall_ms: float = 0.0


@dataclass
class RunResult:
    records: list
    mesh: object = None
    solution: object = None
    indicators: object = None
    history: list = field(default_factory=list)


def dorfler_mark(indicators, theta):
    """Minimal edge set carrying at least a theta-fraction of rho^2.

    Edges are sorted by contribution descending (ties by edge id
    ascending) and the shortest prefix reaching the threshold is marked.
    """
    if not 0.0 < theta < 1.0:
        raise ValueError("theta must lie in (0, 1)")
    contrib = indicators.contributions
    total = float(contrib.sum())
    if total <= 0.0:
        raise ValueError("total estimator vanishes; nothing to mark")
    order = np.lexsort((np.arange(len(contrib)), -contrib))
    cum = np.cumsum(contrib[order])
    threshold = theta * total * (1.0 - 1e-12)
    k = int(np.searchsorted(cum, threshold))
    marked = order[:k + 1]
    return MarkingResult(marked=np.sort(marked), theta=theta,
                         achieved_fraction=float(cum[k] / total))


def _run(problem, mark_fn, max_elements, max_level, reference_energy=None,
         keep_history=False):
    tp = to_zero_obstacle(problem)
    ref = reference_energy
    if ref is None:
        ref = problem.exact_energy

    mesh = build_initial_mesh(problem.domain)
    prev = None  # (mesh, solution values, active mask)
    records = []
    result = RunResult(records=records)
    level = 0
    try:
        while True:
            t0 = time.perf_counter()
            gl = interpolate_boundary(tp.g, mesh)
            stiffness = assemble_stiffness(mesh)
            load = assemble_load(mesh, tp.f)
            warm = None
            if prev is not None:
                warm = np.zeros(mesh.num_nodes, dtype=bool)
                warm[:len(prev[2])] = prev[2]
            sol = solve_obstacle(mesh, stiffness, load, gl,
                                 warm_active=warm)
            indicators = assemble_indicators(mesh, sol.values, tp.f, tp.g,
                                             gl)
            value = energy(stiffness, load, sol.values)
            du = None
            if prev is not None:
                du = energy_norm_diff(stiffness, sol.values,
                                      prolong(prev[1], prev[0], mesh))
            wall_ms = (time.perf_counter() - t0) * 1e3
            records.append(LoopRecord(
                level=level,
                n_elements=mesh.num_triangles,
                n_nodes=mesh.num_nodes,
                rho=indicators.rho,
                rho_tilde=indicators.rho_tilde,
                apx=float(np.sqrt(indicators.apx2_total)),
                energy=value,
                eps=None if ref is None else abs(value - ref),
                du_norm=du,
                pdas_iters=sol.iterations,
                wall_ms=wall_ms,
            ))
            if keep_history:
                result.history.append((mesh, sol, indicators))
            result.mesh, result.solution, result.indicators = \
                mesh, sol, indicators
            if (indicators.rho2 <= 0.0
                    or mesh.num_triangles >= max_elements
                    or level >= max_level):
                return result
            marked = mark_fn(indicators)
            prev = (mesh, sol.values, sol.active)
            mesh = refine(mesh, marked)
            level += 1
    except Exception as exc:
        exc.partial_records = records
        raise


def run_adaptive(problem, theta, max_elements=50000, max_level=40,
                 reference_energy=None, keep_history=False):
    """Algorithm loop with Doerfler marking; one record per level.

    Terminates when the estimator vanishes, the element budget is
    reached, or ``max_level`` levels were computed.  Solver failures
    propagate with the records collected so far attached as
    ``partial_records``.
    """
    return _run(problem, lambda ind: dorfler_mark(ind, theta).marked,
                max_elements, max_level, reference_energy, keep_history)


def run_uniform(problem, max_elements=50000, max_level=40,
                reference_energy=None, keep_history=False):
    """Same loop with every edge marked (uniform refinement)."""
    return _run(problem, lambda ind: np.arange(ind.mesh.num_edges),
                max_elements, max_level, reference_energy, keep_history)
