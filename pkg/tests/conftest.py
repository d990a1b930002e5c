import numpy as np

from graphpop.graphs import LabelledGraph


def relabel(g: LabelledGraph, perm) -> LabelledGraph:
    """Apply a vertex permutation: new vertex perm[i] takes old vertex i's edges."""
    edges = [(min(perm[i], perm[j]), max(perm[i], perm[j])) for i, j in g.edges()]
    return LabelledGraph.from_edges(g.n_vertices, edges)


def random_graph(n_vertices: int, rng: np.random.Generator, p: float = 0.5) -> LabelledGraph:
    vec = (rng.random(n_vertices * (n_vertices - 1) // 2) < p).astype(np.uint8)
    return LabelledGraph.from_vector(n_vertices, vec)


def tv_distance(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def graph_marginal_from_trace(trace, size: int) -> np.ndarray:
    counts = np.zeros(size)
    for g in trace.graphs:
        counts[g.edge_bits] += 1
    return counts / counts.sum()
