"""Generators for the two synthetic distribution-shift benchmark families.

Node benchmark: class-conditioned stochastic block models whose within-class
link probability oscillates at a class frequency. Every node carries a
high-band frequency perfectly aligned with its class and a low-band
frequency aligned only with probability ``shift`` (0 for the test group), so
the low band is the tempting-but-unstable signal.

Link benchmark: an evolving base graph gains extra per-timestamp features
trained to reconstruct a corrupted view of the next snapshot's links; the
corruption level follows the shift schedule, so the extra features are
spuriously predictive during training and useless at test time.

Generation is a pure function of (config, seed): per-snapshot generators are
seeded from (master seed, t), so identical configs give byte-identical
datasets.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import graphstore as gs
from .graphstore import DynamicGraph, EdgeList


@dataclass
class NodeSynthConfig:
    num_nodes: int = 500            # paper-scale value: 5000
    num_timestamps: int = 50        # paper-scale value: 100
    num_classes: int = 5
    f_low: tuple = (0.02, 0.04, 0.08, 0.10, 0.12)
    f_high: tuple = (0.22, 0.24, 0.28, 0.30, 0.32)
    shift: float = 0.8              # low-band/label correlation, train+val groups
    test_shift: float = 0.0         # same correlation for the test group
    p_out: float = 1e-3
    s_low: float = 1e-2             # amplitude of the low-band (variant) schedule
    s_high: float = 5e-3            # amplitude of the high-band (invariant) schedule
    p_noise: float = 1e-3
    feature_dim: int = 4
    split_fractions: tuple = (0.5, 0.1, 0.4)
    seed: int = 0

    def validate(self):
        if not 0.0 <= self.shift <= 1.0 or not 0.0 <= self.test_shift <= 1.0:
            raise ValueError(f"shift levels must be in [0, 1], got "
                             f"{self.shift}/{self.test_shift}")
        for f in tuple(self.f_low) + tuple(self.f_high):
            if not 0.0 <= f < 0.5:
                raise ValueError(f"frequency {f} at or above Nyquist (0.5)")
        if len(self.f_low) != self.num_classes or len(self.f_high) != self.num_classes:
            raise ValueError("need one frequency per class in each band")
        for s in (self.s_low, self.s_high):
            link_prob_schedule(0, 0.0, s)  # amplitude check
        if abs(sum(self.split_fractions) - 1.0) > 1e-9:
            raise ValueError("split fractions must sum to 1")
        return self


@dataclass
class LinkSynthConfig:
    shift: float = 0.8
    sigma: float = 0.1              # cosine modulation amplitude, t in snapshot units
    spurious_dim: int = 8
    inner_steps: int = 300
    inner_lr: float = 0.05
    split_counts: tuple = (10, 1, 5)
    seed: int = 0
    # defaults of the synthetic base graph (used when no base is supplied)
    base_nodes: int = 200
    base_timestamps: int = 16
    base_classes: int = 4
    base_p_in: float = 0.06
    base_p_out: float = 0.005
    base_feature_dim: int = 8

    def schedule(self, t, in_shift_range):
        p_bar = self.shift if in_shift_range else 0.0
        return float(np.clip(p_bar + self.sigma * np.cos(t), 0.0, 1.0))


def link_prob_schedule(t, f, amplitude):
    """Oscillating link probability amplitude*(2 + cos(2 pi f t))."""
    if 3.0 * amplitude > 1.0:
        raise ValueError(
            f"amplitude {amplitude} gives peak probability {3.0 * amplitude} > 1")
    return amplitude * (2.0 + np.cos(2.0 * np.pi * f * t))


# ---------------------------------------------------------------------------
# stochastic block model snapshots
# ---------------------------------------------------------------------------

def _sbm_adjacency(labels, p_same, p_out, rng):
    """Upper-triangular boolean adjacency draw.

    ``p_same`` is per node; a same-class pair links with the mean of its two
    nodes' probabilities (which collapses to the shared class schedule when
    both carry the class frequency).
    """
    labels = np.asarray(labels)
    n = labels.size
    p_same = np.asarray(p_same, dtype=np.float64)
    prob = np.where(labels[:, None] == labels[None, :],
                    0.5 * (p_same[:, None] + p_same[None, :]),
                    float(p_out))
    draw = rng.random((n, n)) < prob
    return np.triu(draw, k=1)


def sbm_snapshot(labels, p_in, p_out, seed):
    """One SBM snapshot; ``p_in`` is per class (length C) or per node (length N)."""
    labels = np.asarray(labels, dtype=np.int64)
    p_in = np.asarray(p_in, dtype=np.float64)
    p_same = p_in[labels] if p_in.size != labels.size else p_in
    if np.any(p_same < 0) or np.any(p_same > 1) or not 0 <= p_out <= 1:
        raise ValueError("link probabilities must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    upper = _sbm_adjacency(labels, p_same, p_out, rng)
    u, v = np.nonzero(upper)
    return EdgeList(np.stack([u, v], axis=1), directed=False)


def _noise_adjacency(n, p_noise, rng):
    # Erdos-Renyi stand-in for the unstructured noise graph at density p_noise
    return np.triu(rng.random((n, n)) < p_noise, k=1)


# ---------------------------------------------------------------------------
# node-classification benchmark
# ---------------------------------------------------------------------------

def gen_node_synthetic(cfg):
    """Node-classification benchmark graph with a per-group shift level.

    Train/val groups get the configured low-band alignment probability; the
    test group's low band is always independent of the class. Group
    membership is recorded in the label timestamps (0=train, 1=val, 2=test),
    so a (1, 1, 1) chronological split recovers it.
    """
    cfg.validate()
    n, t_total, c = cfg.num_nodes, cfg.num_timestamps, cfg.num_classes
    root = np.random.SeedSequence(cfg.seed)
    setup_rng = np.random.default_rng(root.spawn(1)[0])

    labels = setup_rng.integers(0, c, size=n)
    counts = [int(round(f * n)) for f in cfg.split_fractions[:2]]
    counts.append(n - sum(counts))
    groups = np.zeros(n, dtype=np.int64)
    perm = setup_rng.permutation(n)
    groups[perm[counts[0]:counts[0] + counts[1]]] = 1
    groups[perm[counts[0] + counts[1]:]] = 2

    align_prob = np.where(groups == 2, cfg.test_shift, cfg.shift)
    aligned = setup_rng.random(n) < align_prob
    random_choice = setup_rng.integers(0, c, size=n)
    variant_class = np.where(aligned, labels, random_choice)

    f_low = np.asarray(cfg.f_low)[variant_class]
    f_high = np.asarray(cfg.f_high)[labels]   # alignment 1, independent of shift
    features = setup_rng.standard_normal((n, cfg.feature_dim))

    # Two overlaid block models with different partitions: the high band
    # groups nodes by their true class, the low band by the q-noised class.
    # Every block is homogeneous in its own partition, so a node's low-band
    # degree oscillates at its own assigned frequency; partitioning the low
    # band by true labels instead would leak the class frequency to every
    # node through its aligned neighbors and erase the shift.
    snapshots = []
    for t in range(t_total):
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, t]))
        p_low = link_prob_schedule(t, f_low, cfg.s_low)
        p_high = link_prob_schedule(t, f_high, cfg.s_high)
        adj = _sbm_adjacency(labels, p_high, cfg.p_out, rng)
        adj |= _sbm_adjacency(variant_class, p_low, cfg.p_out, rng)
        adj |= _noise_adjacency(n, cfg.p_noise, rng)
        u, v = np.nonzero(adj)
        snapshots.append(EdgeList(np.stack([u, v], axis=1), directed=False))

    g = DynamicGraph(num_nodes=n, snapshots=tuple(snapshots), features=features,
                     node_labels=labels, label_timestamps=groups,
                     num_classes=c, directed=False)
    return g.validate()


# ---------------------------------------------------------------------------
# link-prediction benchmark
# ---------------------------------------------------------------------------

def gen_link_base(cfg):
    """Evolving-SBM base graph: fixed communities, edges redrawn per snapshot."""
    n, t_total = cfg.base_nodes, cfg.base_timestamps
    root_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0xBA5E]))
    labels = np.repeat(np.arange(cfg.base_classes), n // cfg.base_classes + 1)[:n]
    features = root_rng.standard_normal((n, cfg.base_feature_dim))
    snapshots = []
    for t in range(t_total):
        snapshots.append(sbm_snapshot(labels,
                                      np.full(cfg.base_classes, cfg.base_p_in),
                                      cfg.base_p_out,
                                      np.random.SeedSequence([cfg.seed, 0xBA5E, t])))
    g = DynamicGraph(num_nodes=n, snapshots=tuple(snapshots), features=features,
                     directed=False)
    return g.validate()


def _fit_reconstruction(n, target_pairs, background_pairs, dim, steps, lr, rng):
    """Fit embeddings so inner products separate target pairs from background.

    Adaptive-moment gradient descent on the logistic loss; returns
    (embeddings, AUC of the final scores on target-vs-background).
    """
    x = 0.1 * rng.standard_normal((n, dim))
    pairs = np.concatenate([target_pairs, background_pairs])
    y = np.concatenate([np.ones(len(target_pairs)), np.zeros(len(background_pairs))])
    m = len(pairs)
    mom = np.zeros_like(x)
    sq = np.zeros_like(x)
    for step in range(1, steps + 1):
        s = np.einsum("ij,ij->i", x[pairs[:, 0]], x[pairs[:, 1]])
        p = 1.0 / (1.0 + np.exp(-s))
        resid = (p - y) / m
        grad = np.zeros_like(x)
        np.add.at(grad, pairs[:, 0], resid[:, None] * x[pairs[:, 1]])
        np.add.at(grad, pairs[:, 1], resid[:, None] * x[pairs[:, 0]])
        mom = 0.9 * mom + 0.1 * grad
        sq = 0.999 * sq + 0.001 * grad * grad
        m_hat = mom / (1 - 0.9 ** step)
        v_hat = sq / (1 - 0.999 ** step)
        x -= lr * m_hat / (np.sqrt(v_hat) + 1e-8)
        if not np.all(np.isfinite(x)):
            raise FloatingPointError("reconstruction embedding training diverged")
    s = np.einsum("ij,ij->i", x[pairs[:, 0]], x[pairs[:, 1]])
    from .training import auc
    return x, auc(s, y)


def gen_link_synthetic(cfg, base=None):
    """Attach shift-controlled spurious features to a base dynamic graph.

    For each t, a target pair set mixes a ``p(t)`` fraction of the true
    t+1 links with uniformly sampled non-edges, and per-timestamp embeddings
    are fit to reconstruct it; output features are base || embeddings.
    """
    if base is None:
        base = gen_link_base(cfg)
    n, t_total = base.num_nodes, base.num_timestamps
    tr, va, te = cfg.split_counts
    if tr + va + te > t_total:
        raise ValueError(f"split counts {cfg.split_counts} exceed {t_total} snapshots")
    shift_end = tr + va

    base_feat = base.features if not base.evolving_features else None
    out = np.zeros((t_total, n, base.feature_dim + cfg.spurious_dim))
    aucs = []
    for t in range(t_total - 1):
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0x51, t]))
        edges_next = base.snapshots[t + 1].edges
        p = cfg.schedule(t, t + 1 < shift_end)
        n_pos = int(round(p * len(edges_next)))
        n_neg = len(edges_next) - n_pos
        pos = edges_next[rng.choice(len(edges_next), size=n_pos, replace=False)] \
            if n_pos else np.zeros((0, 2), dtype=np.int64)
        neg = gs.negative_sample(base, t + 1, n_neg,
                                 np.random.SeedSequence([cfg.seed, 0x52, t])).edges \
            if n_neg else np.zeros((0, 2), dtype=np.int64)
        targets = np.concatenate([pos, neg]).astype(np.int64)
        background = np.stack([rng.integers(0, n, size=4 * max(len(targets), 1)),
                               rng.integers(0, n, size=4 * max(len(targets), 1))], axis=1)
        x2, fit_auc = _fit_reconstruction(n, targets, background, cfg.spurious_dim,
                                          cfg.inner_steps, cfg.inner_lr, rng)
        aucs.append(fit_auc)
        feat_t = base_feat if base_feat is not None else base.features[t]
        out[t] = np.concatenate([feat_t, x2], axis=1)
    out[t_total - 1] = out[t_total - 2]  # final snapshot never feeds a prediction

    g = DynamicGraph(num_nodes=n, snapshots=base.snapshots, features=out,
                     evolving_features=True, directed=base.directed)
    return g.validate(), aucs


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------

def save_generated(g, path, config):
    """Dataset directory plus gen_config.json capturing config and seed."""
    gs.save_dataset(g, path)
    doc = asdict(config) if not isinstance(config, dict) else dict(config)
    doc["generator"] = type(config).__name__ if not isinstance(config, dict) else "custom"
    (Path(path) / "gen_config.json").write_text(
        json.dumps(doc, indent=2, sort_keys=True, default=list) + "\n")
    return path
