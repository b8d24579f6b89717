import numpy as np
import pytest

from obstacle_afem import (BoundaryTrace, LShape, Square, build_initial_mesh,
                           refine)

# One line per acceptance criterion, filled in by tests/test_acceptance.py
# and replayed after the test run (output capture would otherwise hide them).
CRITERION_LINES = []


def pytest_terminal_summary(terminalreporter):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERION_LINES:
            terminalreporter.write_line(line)


def random_refined_mesh(rng, domain, max_nodes=200):
    """Randomly refined mesh with at most ``max_nodes`` nodes."""
    mesh = build_initial_mesh(domain)
    while True:
        k = int(rng.integers(1, max(2, mesh.num_edges // 3)))
        marked = rng.choice(mesh.num_edges, size=min(k, mesh.num_edges),
                            replace=False)
        refined = refine(mesh, marked)
        if refined.num_nodes > max_nodes:
            return mesh
        mesh = refined


@pytest.fixture
def unit_square_mesh():
    return build_initial_mesh(Square(0.0, 0.0, 1.0, 1.0))


@pytest.fixture
def lshape_mesh():
    return build_initial_mesh(LShape())


@pytest.fixture
def zero_trace():
    return BoundaryTrace(lambda x, y: np.zeros_like(np.asarray(x, float)))
