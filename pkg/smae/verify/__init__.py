"""Independent reference computations used to check the toolkit."""

from collections import deque
from typing import List, Optional

import numpy as np

from smae.graph import Graph


def random_graph(
    rng: np.random.Generator,
    n: int,
    p: float = 0.3,
    connected: bool = False,
    feature_dim: int = 0,
) -> Graph:
    """Draw an Erdos-Renyi graph, optionally with a spanning tree added.

    :param rng: Random stream
    :param n: Node count
    :param p: Edge probability
    :param connected: Add a random spanning tree first
    :param feature_dim: Width of standard normal node features
    :return: The graph
    """
    edges = set()
    if connected:
        for node in range(1, n):
            parent = int(rng.integers(node))
            edges.add((parent, node))
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                edges.add((i, j))
    features = None
    if feature_dim:
        features = rng.standard_normal((n, feature_dim))
    return Graph(n, sorted(edges), features)


def dense_adjacency(graph: Graph) -> np.ndarray:
    """Get the n x n adjacency matrix."""
    n = graph.node_count
    adj = np.zeros((n, n))
    for i, j in graph.edges:
        adj[i, j] = adj[j, i] = 1.0
    return adj


def pagerank_oracle(
    graph: Graph, damping: float = 0.85, tol: float = 1e-12
) -> np.ndarray:
    """PageRank by dense power iteration with uniform dangling mass."""
    n = graph.node_count
    adj = dense_adjacency(graph)
    degree = adj.sum(axis=1)
    transition = np.zeros((n, n))
    for j in range(n):
        if degree[j] > 0:
            transition[:, j] = adj[:, j] / degree[j]
        else:
            transition[:, j] = 1.0 / n
    scores = np.full(n, 1.0 / n)
    for _ in range(100000):
        updated = (1.0 - damping) / n + damping * transition @ scores
        if np.abs(updated - scores).sum() < tol:
            return updated
        scores = updated
    return scores


def distance_matrix(graph: Graph) -> np.ndarray:
    """All-pairs hop distances by repeated BFS; -1 when unreachable."""
    n = graph.node_count
    adjacency = graph.adjacency()
    dist = np.full((n, n), -1, dtype=int)
    for source in range(n):
        dist[source, source] = 0
        queue = deque([source])
        while queue:
            v = queue.popleft()
            for w in adjacency[v]:
                if dist[source, w] < 0:
                    dist[source, w] = dist[source, v] + 1
                    queue.append(w)
    return dist


def path_counts(graph: Graph, dist: np.ndarray) -> np.ndarray:
    """Number of shortest paths between every node pair."""
    n = graph.node_count
    adjacency = graph.adjacency()
    sigma = np.zeros((n, n))
    for source in range(n):
        sigma[source, source] = 1.0
        for v in np.argsort(dist[source], kind="stable"):
            if dist[source, v] <= 0:
                continue
            sigma[source, v] = sum(
                sigma[source, u]
                for u in adjacency[v]
                if dist[source, u] == dist[source, v] - 1
            )
    return sigma


def betweenness_oracle(graph: Graph) -> np.ndarray:
    """Betweenness by enumerating every pair's shortest paths."""
    n = graph.node_count
    dist = distance_matrix(graph)
    sigma = path_counts(graph, dist)
    values = np.zeros(n)
    for s in range(n):
        for t in range(s + 1, n):
            if dist[s, t] <= 0:
                continue
            for v in range(n):
                if v in (s, t) or dist[s, v] < 0 or dist[v, t] < 0:
                    continue
                if dist[s, v] + dist[v, t] == dist[s, t]:
                    values[v] += sigma[s, v] * sigma[v, t] / sigma[s, t]
    return values


def closeness_oracle(graph: Graph) -> np.ndarray:
    """Reachable-fraction closeness from the distance matrix."""
    n = graph.node_count
    dist = distance_matrix(graph)
    values = np.zeros(n)
    for i in range(n):
        reach = dist[i][dist[i] > 0]
        if reach.size:
            values[i] = (reach.size / (n - 1)) * (reach.size / reach.sum())
    return values


def gin_oracle(
    graph: Graph,
    h: np.ndarray,
    eps: float,
    w1: np.ndarray,
    b1: np.ndarray,
    gamma: np.ndarray,
    beta: np.ndarray,
    w2: np.ndarray,
    b2: np.ndarray,
    bn_eps: float = 1e-5,
    running: Optional[List[np.ndarray]] = None,
) -> np.ndarray:
    """GIN layer with dense matrices; batch statistics unless ``running``."""
    agg = (1.0 + eps) * h + dense_adjacency(graph) @ h
    z = agg @ w1 + b1
    if running is None:
        mean, var = z.mean(axis=0), z.var(axis=0)
    else:
        mean, var = running
    z = gamma * (z - mean) / np.sqrt(var + bn_eps) + beta
    return np.maximum(z, 0.0) @ w2 + b2


def gcn_oracle(
    graph: Graph, h: np.ndarray, weight: np.ndarray, activation: bool = True
) -> np.ndarray:
    """GCN layer with dense matrices."""
    a_hat = dense_adjacency(graph) + np.eye(graph.node_count)
    d_inv = 1.0 / np.sqrt(a_hat.sum(axis=1))
    out = (d_inv[:, None] * a_hat * d_inv[None, :]) @ h @ weight
    return np.maximum(out, 0.0) if activation else out
