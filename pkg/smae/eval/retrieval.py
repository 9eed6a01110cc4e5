"""Cosine-similarity retrieval over graph embeddings."""

import logging
from typing import List, Tuple

import numpy as np

from smae.errors import DataError
from smae.eval import EmbeddingMatrix

logger = logging.getLogger(__name__)


def cosine_similarities(emb: EmbeddingMatrix, query_index: int) -> np.ndarray:
    """Get the cosine similarity of every row to the query row.

    Rows of zero norm have similarity 0.
    """
    rows = emb.rows
    norms = np.linalg.norm(rows, axis=1)
    zero = norms == 0
    if np.any(zero):
        logger.warning(
            "%d embedding row(s) have zero norm; similarity set to 0",
            int(zero.sum()),
        )
    safe = np.where(zero, 1.0, norms)
    sims = (rows @ rows[query_index]) / (safe * safe[query_index])
    sims[zero] = 0.0
    if zero[query_index]:
        sims[:] = 0.0
    return sims


def nearest_neighbors(
    emb: EmbeddingMatrix, query_index: int, k: int
) -> List[Tuple[int, float]]:
    """Rank the graphs most similar to a query graph.

    :param emb: Embeddings
    :param query_index: Query row
    :param k: Number of neighbors, less than the row count
    :return: (index, similarity) pairs by descending similarity, then index
    """
    count = len(emb)
    if not 0 <= query_index < count:
        raise DataError(
            "query index {} outside [0, {})".format(query_index, count)
        )
    if not 0 < k < count:
        raise DataError(
            "k must lie in [1, {}), got {}".format(count, k)
        )
    sims = cosine_similarities(emb, query_index)
    others = np.array([i for i in range(count) if i != query_index])
    order = np.lexsort((others, -sims[others]))
    return [(int(others[i]), float(sims[others[i]])) for i in order[:k]]
