"""P1 finite element machinery.

Stiffness and load assembly, energy evaluation, prolongation between
nested meshes, and quadrature-based error norms.  Stiffness entries are
exact (piecewise-constant gradients); area integrals of data use the
order-5 triangle rule from :mod:`obstacle_afem.quadrature`.
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .quadrature import TRI_BARY, TRI_WEIGHTS, triangle_points

__all__ = [
    "hat_gradients",
    "assemble_stiffness",
    "assemble_load",
    "energy",
    "prolong",
    "energy_norm_diff",
    "solution_gradients",
    "h1_error",
]


def hat_gradients(mesh):
    """Gradients of the three nodal hat functions on each triangle.

    Returns ``(grads, areas)`` with grads of shape (M, 3, 2).
    """
    p = mesh.nodes[mesh.triangles]
    areas = mesh.areas()
    grads = np.empty((mesh.num_triangles, 3, 2))
    for i in range(3):
        # edge opposite vertex i, rotated by 90 degrees
        e = p[:, (i + 2) % 3] - p[:, (i + 1) % 3]
        grads[:, i, 0] = -e[:, 1]
        grads[:, i, 1] = e[:, 0]
    grads /= (2.0 * areas)[:, None, None]
    return grads, areas


def assemble_stiffness(mesh):
    """Sparse symmetric stiffness matrix of the Dirichlet form."""
    areas = mesh.areas()
    if (areas <= 0).any():
        raise ValueError("degenerate triangle in mesh")
    grads, areas = hat_gradients(mesh)
    local = np.einsum("mid,mjd,m->mij", grads, grads, areas)
    tri = mesh.triangles
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    k = sp.coo_matrix((local.ravel(), (rows, cols)),
                      shape=(mesh.num_nodes, mesh.num_nodes))
    return k.tocsr()


def assemble_load(mesh, f):
    """Load vector (f, phi_i) via the 7-point order-5 triangle rule."""
    pts = triangle_points(mesh)
    fvals = f(pts[..., 0], pts[..., 1])
    fvals = np.broadcast_to(np.asarray(fvals, dtype=float), pts.shape[:2])
    areas = mesh.areas()
    contrib = np.einsum("q,mq,qi,m->mi", TRI_WEIGHTS, fvals, TRI_BARY, areas)
    b = np.zeros(mesh.num_nodes)
    np.add.at(b, mesh.triangles, contrib)
    return b


def energy(stiffness, load, values):
    """Discrete energy 1/2 V'KV - b'V."""
    return float(0.5 * values @ (stiffness @ values) - load @ values)


def prolong(values, coarse, fine):
    """Represent a coarse P1 function exactly on the refined mesh.

    New nodes are edge midpoints of the coarse mesh; their values are the
    averages of the parent endpoint values.
    """
    if fine.node_parents is None or fine.level != coarse.level + 1:
        raise ValueError("meshes are not nested refinements")
    n_old = coarse.num_nodes
    if fine.num_nodes < n_old or not np.array_equal(
            fine.nodes[:n_old], coarse.nodes):
        raise ValueError("meshes are not nested refinements")
    values = np.asarray(values, dtype=float)
    out = np.empty(fine.num_nodes)
    out[:n_old] = values
    parents = fine.node_parents[n_old:]
    out[n_old:] = 0.5 * (out[parents[:, 0]] + out[parents[:, 1]])
    return out


def energy_norm_diff(stiffness, v, w):
    """Energy norm |||v - w||| via the stiffness quadratic form."""
    d = np.asarray(v, dtype=float) - np.asarray(w, dtype=float)
    return float(np.sqrt(max(0.0, d @ (stiffness @ d))))


def solution_gradients(mesh, values):
    """Constant gradient of a P1 function on each triangle, shape (M, 2)."""
    grads, _ = hat_gradients(mesh)
    return np.einsum("mid,mi->md", grads, values[mesh.triangles])


def h1_error(mesh, values, exact, exact_grad):
    """Full H1 norm of (exact - P1 function) by order-5 quadrature."""
    pts = triangle_points(mesh)
    x, y = pts[..., 0], pts[..., 1]
    areas = mesh.areas()

    bary = TRI_BARY  # (7, 3)
    uh = np.einsum("qi,mi->mq", bary, values[mesh.triangles])
    du = np.asarray(exact(x, y)) - uh

    gh = solution_gradients(mesh, values)
    gx, gy = exact_grad(x, y)
    dgx = np.asarray(gx) - gh[:, 0][:, None]
    dgy = np.asarray(gy) - gh[:, 1][:, None]

    sq = np.einsum("q,mq,m->", TRI_WEIGHTS, du ** 2 + dgx ** 2 + dgy ** 2,
                   areas)
    return float(np.sqrt(max(0.0, sq)))


def cg_solve(matrix, rhs, x0=None, rtol=1e-12):
    """Jacobi-preconditioned conjugate gradients."""
    diag = matrix.diagonal()
    precond = spla.LinearOperator(matrix.shape, matvec=lambda r: r / diag)
    x, info = spla.cg(matrix, rhs, x0=x0, rtol=rtol, M=precond, maxiter=10000)
    if info != 0:
        raise RuntimeError(f"CG failed to converge (info={info})")
    return x
