"""Shared builders for small labeled dynamic graphs used across tests."""

import numpy as np

from sild.graphstore import DynamicGraph, EdgeList


def toy_node_graph(N=10, T=8, C=2, feature_dim=4, seed=0, edge_prob=0.3,
                   group_sizes=(0.6, 0.2, 0.2)):
    """Random labeled dynamic graph; label timestamps encode split groups."""
    rng = np.random.default_rng(seed)
    snaps = []
    for _ in range(T):
        draw = np.triu(rng.random((N, N)) < edge_prob, k=1)
        u, v = np.nonzero(draw)
        snaps.append(EdgeList(np.stack([u, v], axis=1)))
    labels = rng.integers(0, C, size=N)
    n_tr = int(round(group_sizes[0] * N))
    n_va = int(round(group_sizes[1] * N))
    groups = np.zeros(N, dtype=np.int64)
    groups[n_tr:n_tr + n_va] = 1
    groups[n_tr + n_va:] = 2
    return DynamicGraph(num_nodes=N, snapshots=tuple(snaps),
                        features=rng.standard_normal((N, feature_dim)),
                        node_labels=labels, label_timestamps=groups,
                        num_classes=C)


def toy_link_graph(N=12, T=8, feature_dim=4, seed=0, edge_prob=0.25):
    rng = np.random.default_rng(seed)
    snaps = []
    for _ in range(T):
        draw = np.triu(rng.random((N, N)) < edge_prob, k=1)
        u, v = np.nonzero(draw)
        snaps.append(EdgeList(np.stack([u, v], axis=1)))
    return DynamicGraph(num_nodes=N, snapshots=tuple(snaps),
                        features=rng.standard_normal((N, feature_dim)))
