"""Problem definitions and data transformations.

The solver pipeline only handles zero obstacles; general smooth obstacles
are shifted away by replacing the data (chi, g, f) with
(0, g - chi|_Gamma, f + Laplace(chi)) and adding chi back to the solution.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .boundary import BoundaryTrace, interpolate_boundary
from .fem import assemble_load, assemble_stiffness, energy
from .mesh import LShape, Square, boundary_polygon, build_initial_mesh, refine
from .vi import solve_obstacle

__all__ = [
    "Obstacle",
    "ProblemSpec",
    "TransformedProblem",
    "to_zero_obstacle",
    "example1",
    "example2",
    "example1_exact_energy",
    "reference_energy",
    "load_custom",
]


@dataclass
class Obstacle:
    """Smooth obstacle with analytically supplied Laplacian.

    ``gradient`` is optional and only used for arclength derivatives of
    the shifted boundary trace.
    """

    value: callable
    laplacian: callable
    gradient: callable = None


@dataclass
class ProblemSpec:
    """Data triple (chi, g, f) plus domain and optional exact reference."""

    name: str
    domain: object
    g: BoundaryTrace
    f: callable
    chi: Obstacle = None
    exact_solution: callable = None
    exact_gradient: callable = None
    exact_energy: float = None


@dataclass
class TransformedProblem:
    """Zero-obstacle data with the shift needed to recover the solution."""

    g: BoundaryTrace
    f: callable
    chi: Obstacle = None

    def recover(self, mesh, values):
        """Add the obstacle back to a transformed nodal solution."""
        if self.chi is None:
            return values
        x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
        return values + np.asarray(self.chi.value(x, y), dtype=float)


def _sample_boundary(domain, per_side=50):
    poly = boundary_polygon(domain)
    pts = []
    for i in range(len(poly)):
        p, q = poly[i], poly[(i + 1) % len(poly)]
        s = np.linspace(0.0, 1.0, per_side, endpoint=False)[:, None]
        pts.append(p[None, :] + s * (q - p)[None, :])
    return np.vstack(pts)


def to_zero_obstacle(problem):
    """Shift the data so the obstacle becomes identically zero.

    Requires an analytic Laplacian of chi; raises if the shifted boundary
    data g - chi|_Gamma turn negative beyond tolerance.
    """
    if problem.chi is None:
        return TransformedProblem(g=problem.g, f=problem.f, chi=None)
    chi = problem.chi
    if chi.laplacian is None:
        raise ValueError("obstacle transformation requires an analytic "
                         "Laplacian of chi")

    base_f = problem.f

    def f(x, y):
        return np.asarray(base_f(x, y), dtype=float) \
            + np.asarray(chi.laplacian(x, y), dtype=float)

    g = problem.g.shifted(chi.value, chi.gradient)
    pts = _sample_boundary(problem.domain)
    vals = np.asarray(g(pts[:, 0], pts[:, 1]), dtype=float)
    if np.min(vals, initial=0.0) < -1e-10:
        raise ValueError("chi > g on the boundary: shifted Dirichlet data "
                         "negative")
    return TransformedProblem(g=g, f=f, chi=chi)


# -- Example 1: constant obstacle on the square -------------------------

def _example1_solution(x, y):
    r = np.hypot(x, y)
    rs = np.maximum(r, 1.0)
    return np.where(r >= 1.0, 0.5 * rs ** 2 - np.log(rs) - 0.5, 0.0)


def _example1_gradient(x, y):
    r = np.hypot(x, y)
    rs = np.maximum(r, 1.0)
    fac = np.where(r >= 1.0, 1.0 - 1.0 / rs ** 2, 0.0)
    return fac * x, fac * y


@lru_cache(maxsize=1)
def example1_exact_energy(half_width=1.5, n_quad=80):
    """Energy of the closed-form solution by radial quadrature.

    The integrand is radially symmetric and vanishes for r < 1; by
    8-fold symmetry of the square the energy is an integral over the
    wedge 0 <= phi <= pi/4, 1 <= r <= half_width / cos(phi).
    """
    xg, wg = np.polynomial.legendre.leggauss(n_quad)

    def radial(phi):
        rmax = half_width / np.cos(phi)
        r = 0.5 * (rmax - 1.0) * (xg + 1.0) + 1.0
        dens = 1.5 * r ** 2 + 0.5 / r ** 2 - 2.0 - 2.0 * np.log(r)
        return 0.5 * (rmax - 1.0) * np.sum(wg * dens * r)

    phis = 0.5 * (np.pi / 4) * (xg + 1.0)
    inner = np.array([radial(p) for p in phis])
    return float(8.0 * 0.5 * (np.pi / 4) * np.sum(wg * inner))


def example1():
    """Constant zero obstacle on (-1.5, 1.5)^2 with f = -2 and boundary
    data given by the trace of the known radial solution."""
    g = BoundaryTrace(_example1_solution, _example1_gradient)
    return ProblemSpec(
        name="example1",
        domain=Square(-1.5, -1.5, 1.5, 1.5),
        g=g,
        f=lambda x, y: np.full_like(np.asarray(x, dtype=float), -2.0),
        chi=None,
        exact_solution=_example1_solution,
        exact_gradient=_example1_gradient,
        exact_energy=example1_exact_energy(),
    )


# -- Example 2: sinusoidal obstacle on the L-shape ----------------------

_SHIFT = 1.0 - np.pi / 10.0


def _chi_value(x, y):
    x = np.asarray(x, dtype=float)
    val = 0.1 * (np.sin(5.0 * (x + _SHIFT)) + 1.0)
    return np.where(x < -1.0, val, 0.0) + 0.0 * np.asarray(y, dtype=float)


def _chi_laplacian(x, y):
    x = np.asarray(x, dtype=float)
    val = -2.5 * np.sin(5.0 * (x + _SHIFT))
    return np.where(x < -1.0, val, 0.0) + 0.0 * np.asarray(y, dtype=float)


def _chi_gradient(x, y):
    x = np.asarray(x, dtype=float)
    gx = np.where(x < -1.0, 0.5 * np.cos(5.0 * (x + _SHIFT)), 0.0)
    return gx, np.zeros_like(gx + 0.0 * np.asarray(y, dtype=float))


def _gamma1_derivatives(r):
    """First and second radial derivatives of the quintic cutoff."""
    rb = 2.0 * (r - 0.25)
    inside = (rb >= 0.0) & (rb < 1.0)
    rb = np.where(inside, rb, 0.0)
    d1 = 2.0 * (-30.0 * rb ** 4 + 60.0 * rb ** 3 - 30.0 * rb ** 2)
    d2 = 4.0 * (-120.0 * rb ** 3 + 180.0 * rb ** 2 - 60.0 * rb)
    return np.where(inside, d1, 0.0), np.where(inside, d2, 0.0)


def _example2_f(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = np.hypot(x, y)
    # polar angle measured from the reentrant edge (negative y-axis),
    # counterclockwise over the interior angle 3*pi/2
    phi = np.arctan2(y, x) + 0.5 * np.pi
    s = np.sin(2.0 * phi / 3.0)
    d1, d2 = _gamma1_derivatives(r)
    rs = np.where(r > 0.0, r, 1.0)
    gamma2 = np.where(r > 1.25, 1.0, 0.0)
    singular = -rs ** (2.0 / 3.0) * s * (d1 / rs + d2) \
        - (4.0 / 3.0) * rs ** (-1.0 / 3.0) * d1 * s
    return np.where(r >= 0.25, singular, 0.0) - gamma2


def example2():
    """Sinusoidal obstacle on the L-shape; boundary data are the trace of
    the obstacle, so the transformed problem has zero Dirichlet data."""
    chi = Obstacle(value=_chi_value, laplacian=_chi_laplacian,
                   gradient=_chi_gradient)
    g = BoundaryTrace(_chi_value, _chi_gradient)
    return ProblemSpec(
        name="example2",
        domain=LShape(),
        g=g,
        f=_example2_f,
        chi=chi,
    )


# -- reference energies -------------------------------------------------

def reference_energy(problem, n_target=200000, history=False):
    """Energy of the Galerkin solution on the finest uniform mesh with at
    most ``n_target`` elements.

    With ``history=True`` the per-level list of ``(n_elements, energy)``
    is returned alongside the final value.
    """
    tp = to_zero_obstacle(problem)
    mesh = build_initial_mesh(problem.domain)
    active = None
    levels = []
    while True:
        gl = interpolate_boundary(tp.g, mesh)
        stiffness = assemble_stiffness(mesh)
        load = assemble_load(mesh, tp.f)
        warm = None
        if active is not None:
            warm = np.zeros(mesh.num_nodes, dtype=bool)
            warm[:len(active)] = active
        sol = solve_obstacle(mesh, stiffness, load, gl, warm_active=warm)
        value = energy(stiffness, load, sol.values)
        levels.append((mesh.num_triangles, value))
        if mesh.num_triangles * 4 > n_target:
            break
        active = sol.active
        mesh = refine(mesh, np.arange(mesh.num_edges))
    if history:
        return value, levels
    return value


# -- custom problems ----------------------------------------------------

_EXPR_NAMES = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp,
    "log": np.log, "ln": np.log, "sqrt": np.sqrt, "abs": np.abs,
    "hypot": np.hypot, "arctan2": np.arctan2, "where": np.where,
    "maximum": np.maximum, "minimum": np.minimum, "pi": np.pi,
}


def _compile_expr(expr):
    code = compile(expr, "<problem config>", "eval")

    def fn(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        env = dict(_EXPR_NAMES, x=x, y=y, r=np.hypot(x, y))
        return np.asarray(eval(code, {"__builtins__": {}}, env), dtype=float)

    return fn


def load_custom(path):
    """Problem from a JSON config with expression-valued data.

    Expressions use ``x``, ``y``, ``r`` and elementary functions
    (polynomial, radial, and sinusoidal pieces via ``where``).  Layout::

        {"domain": {"type": "square", "xmin": 0, ...} | {"type": "lshape"},
         "f": "expr", "g": "expr",
         "chi": {"value": "expr", "laplacian": "expr"}}   # optional
    """
    import json

    with open(path) as fh:
        cfg = json.load(fh)
    dom = cfg["domain"]
    if dom["type"] == "square":
        domain = Square(dom.get("xmin", 0.0), dom.get("ymin", 0.0),
                        dom.get("xmax", 1.0), dom.get("ymax", 1.0))
    elif dom["type"] == "lshape":
        domain = LShape(dom.get("half_width", 2.0))
    else:
        raise ValueError(f"unknown domain type {dom['type']!r}")

    chi = None
    if "chi" in cfg:
        chi = Obstacle(value=_compile_expr(cfg["chi"]["value"]),
                       laplacian=_compile_expr(cfg["chi"]["laplacian"]))
    return ProblemSpec(
        name=cfg.get("name", "custom"),
        domain=domain,
        g=BoundaryTrace(_compile_expr(cfg["g"])),
        f=_compile_expr(cfg["f"]),
        chi=chi,
    )
