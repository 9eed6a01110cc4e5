"""Structure-based node importance scores."""

import logging
from collections import deque
from typing import Callable, Dict, Optional

import numpy as np

from smae.errors import (
    ConfigError,
    ErrorDescriptor,
    ErrorGeneratorMixin,
    NumericError,
)
from smae.graph import Graph
from smae.tensor import Tensor
from smae.tensor.ops import sum_propagator

logger = logging.getLogger(__name__)

PREDEFINED_METRICS = ("pagerank", "degree", "closeness", "betweenness")
SCORE_METRICS = PREDEFINED_METRICS + ("learnable",)

PAGERANK_DAMPING = 0.85
PAGERANK_TOL = 1e-10
PAGERANK_MAX_ITER = 200


class ScoreVector:
    """Per-node importance scores of one graph."""

    __slots__ = ("values", "metric", "converged", "tensor")

    def __init__(
        self,
        values: np.ndarray,
        metric: str,
        converged: bool = True,
        tensor: Optional[Tensor] = None,
    ):
        """Initialize.

        :param values: One score per node
        :param metric: Metric that produced the scores
        :param converged: False when an iterative metric hit its cap
        :param tensor: Differentiable handle (learnable scores only)
        """
        self.values = np.asarray(values, dtype=np.float64)
        self.metric = metric
        self.converged = converged
        self.tensor = tensor

    def __len__(self):
        """Get node count."""
        return self.values.shape[0]

    def __repr__(self):
        """Get representation."""
        return "ScoreVector({}, n={})".format(self.metric, len(self))


class Scoring(ErrorGeneratorMixin):
    """Error table of the scorers."""

    SCORE_ERR_METRIC = 500
    SCORE_ERR_DAMPING = 501
    SCORE_ERR_NONFINITE = 502
    _ERRORS = {
        SCORE_ERR_METRIC: ErrorDescriptor(
            SCORE_ERR_METRIC,
            "Unknown metric",
            'unknown score metric "{metric}"',
            ConfigError,
        ),
        SCORE_ERR_DAMPING: ErrorDescriptor(
            SCORE_ERR_DAMPING,
            "Invalid damping",
            "damping must lie in (0, 1), got {damping}",
            ConfigError,
        ),
        SCORE_ERR_NONFINITE: ErrorDescriptor(
            SCORE_ERR_NONFINITE,
            "Non-finite PageRank",
            "PageRank produced non-finite values at iteration {it}",
            NumericError,
        ),
    }


def pagerank(
    graph: Graph,
    damping: float = PAGERANK_DAMPING,
    tol: float = PAGERANK_TOL,
    max_iter: int = PAGERANK_MAX_ITER,
) -> ScoreVector:
    """Compute PageRank by power iteration.

    Isolated nodes spread their mass uniformly over all nodes.

    :param graph: The graph
    :param damping: Damping factor in (0, 1)
    :param tol: L1 change below which iteration stops
    :param max_iter: Iteration cap
    :return: Scores summing to one
    """
    if not 0.0 < damping < 1.0:
        raise Scoring.get_error_from_code(
            Scoring.SCORE_ERR_DAMPING, damping=damping
        )
    n = graph.node_count
    degree = graph.degrees().astype(np.float64)
    dangling = degree == 0
    inv_degree = np.where(dangling, 0.0, 1.0 / np.where(dangling, 1.0, degree))
    operator = sum_propagator(graph)
    scores = np.full(n, 1.0 / n)
    converged = False
    for it in range(1, max_iter + 1):
        spread = operator.apply((scores * inv_degree)[:, None])[:, 0]
        dangling_mass = scores[dangling].sum()
        updated = (1.0 - damping) / n + damping * (spread + dangling_mass / n)
        if not np.all(np.isfinite(updated)):
            raise Scoring.get_error_from_code(
                Scoring.SCORE_ERR_NONFINITE, it=it
            )
        change = np.abs(updated - scores).sum()
        scores = updated
        if change < tol:
            converged = True
            break
    if not converged:
        logger.warning(
            "PageRank did not reach tolerance %g within %d iterations",
            tol,
            max_iter,
        )
    return ScoreVector(scores, "pagerank", converged=converged)


def degree_scores(graph: Graph) -> ScoreVector:
    """Score each node by its degree."""
    return ScoreVector(graph.degrees().astype(np.float64), "degree")


def _bfs_distances(adjacency, source: int) -> Dict[int, int]:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for w in adjacency[v]:
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def closeness_scores(graph: Graph) -> ScoreVector:
    """Closeness centrality scaled by the reachable fraction.

    Node ``i`` reaching ``r`` nodes (itself included) at total distance
    ``D`` scores ``((r - 1) / (n - 1)) * ((r - 1) / D)``, and 0 when it
    reaches nothing.
    """
    n = graph.node_count
    adjacency = graph.adjacency()
    values = np.zeros(n)
    for i in range(n):
        dist = _bfs_distances(adjacency, i)
        reached = len(dist) - 1
        total = sum(dist.values())
        if reached > 0 and total > 0:
            values[i] = (reached / (n - 1)) * (reached / total)
    return ScoreVector(values, "closeness")


def betweenness_scores(graph: Graph) -> ScoreVector:
    """Unnormalized shortest-path betweenness (Brandes accumulation).

    Every unordered endpoint pair is counted once.
    """
    n = graph.node_count
    adjacency = graph.adjacency()
    values = np.zeros(n)
    for source in range(n):
        order = []
        preds = [[] for _ in range(n)]
        sigma = np.zeros(n)
        dist = np.full(n, -1, dtype=int)
        sigma[source] = 1.0
        dist[source] = 0
        queue = deque([source])
        while queue:
            v = queue.popleft()
            order.append(v)
            for w in adjacency[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = np.zeros(n)
        for w in reversed(order):
            for v in preds[w]:
                delta[v] += (sigma[v] / sigma[w]) * (1.0 + delta[w])
            if w != source:
                values[w] += delta[w]
    return ScoreVector(values / 2.0, "betweenness")


SCORERS: Dict[str, Callable[[Graph], ScoreVector]] = {
    "pagerank": pagerank,
    "degree": degree_scores,
    "closeness": closeness_scores,
    "betweenness": betweenness_scores,
}


def score_graph(graph: Graph, metric: str) -> ScoreVector:
    """Score a graph with a predefined metric.

    :param graph: The graph
    :param metric: One of pagerank, degree, closeness, betweenness
    :return: Scores
    """
    scorer = SCORERS.get(metric)
    if scorer is None:
        raise Scoring.get_error_from_code(
            Scoring.SCORE_ERR_METRIC, metric=metric
        )
    return scorer(graph)
