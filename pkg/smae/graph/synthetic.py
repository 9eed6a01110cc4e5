"""Planted-motif corpus generator."""

from itertools import combinations
from typing import List, Tuple

import numpy as np

from smae.errors import DataError
from smae.graph import Featurization, Graph
from smae.graph.corpus import featurize
from smae.seeding import stream

MOTIF_SIZE = 5
MOTIFS = ("cycle", "clique")
SYNTHETIC_MAX_DEGREE = 8


class SyntheticSpec:
    """Size and motif choice of a synthetic corpus."""

    __slots__ = ("graphs_per_class", "base_size", "motif")

    def __init__(
        self, graphs_per_class: int, base_size: int, motif: str = "cycle"
    ):
        """Initialize.

        :param graphs_per_class: Graphs generated for each of the two classes
        :param base_size: Node count of the random tree backbone
        :param motif: Motif planted in class 0; class 1 gets the other one
        """
        if graphs_per_class < 1:
            raise DataError("graphs_per_class must be >= 1")
        if base_size < 6:
            raise DataError("base_size must be >= 6")
        if motif not in MOTIFS:
            raise DataError("unknown motif: {}".format(motif))
        self.graphs_per_class = int(graphs_per_class)
        self.base_size = int(base_size)
        self.motif = motif


def motif_edges(motif: str, offset: int) -> List[Tuple[int, int]]:
    """Get edges of a motif placed at consecutive node indices.

    :param motif: cycle or clique
    :param offset: Index of the first motif node
    :return: Edge list
    """
    nodes = range(offset, offset + MOTIF_SIZE)
    if motif == "clique":
        return list(combinations(nodes, 2))
    return [
        (offset + k, offset + (k + 1) % MOTIF_SIZE) for k in range(MOTIF_SIZE)
    ]


def _planted_graph(
    rng: np.random.Generator, base_size: int, motif: str, label: int
) -> Graph:
    # random recursive tree: node k hangs off an earlier node
    edges = [(int(rng.integers(0, k)), k) for k in range(1, base_size)]
    edges.extend(motif_edges(motif, base_size))
    anchor = int(rng.integers(0, base_size))
    port = base_size + int(rng.integers(0, MOTIF_SIZE))
    edges.append((anchor, port))
    return Graph(base_size + MOTIF_SIZE, edges, label=label)


def generate_synthetic_corpus(spec: SyntheticSpec, seed: int):
    """Generate a labeled two-class corpus.

    Each graph is a random tree with one planted motif; the motif determines
    the class. Features are degree one-hot.

    :param spec: Corpus size and motif choice
    :param seed: Master seed
    :return: GraphCorpus
    """
    rng = stream(seed, "synthetic")
    other = MOTIFS[1 - MOTIFS.index(spec.motif)]
    graphs = []
    for label, motif in enumerate((spec.motif, other)):
        for _ in range(spec.graphs_per_class):
            graphs.append(_planted_graph(rng, spec.base_size, motif, label))
    order = rng.permutation(len(graphs))
    graphs = [graphs[i] for i in order]
    return featurize(
        graphs,
        Featurization(
            Featurization.DEGREE_ONEHOT, max_degree=SYNTHETIC_MAX_DEGREE
        ),
    )
