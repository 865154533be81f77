import pathlib

import numpy as np
import pytest

from echograph.graphs import Graph, load_edge_list

DATA = pathlib.Path(__file__).parent / "data"


@pytest.fixture
def karate() -> Graph:
    return load_edge_list(DATA / "karate.edges")


@pytest.fixture
def two_triangles() -> Graph:
    edges = [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]
    return Graph.from_edges(6, edges)


def central_diff(f, x0: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central finite-difference gradient of scalar f at x0, element by element."""
    g = np.zeros_like(x0, dtype=np.float64)
    it = np.nditer(x0, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        x = x0.copy()
        x[i] = x0[i] + h
        fp = f(x)
        x[i] = x0[i] - h
        fm = f(x)
        g[i] = (fp - fm) / (2 * h)
    return g


def rel_err(a: np.ndarray, b: np.ndarray, floor: float = 1e-6) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return float(np.max(np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)))
