"""Immutable dynamic-graph data model, CSV/JSON dataset format, splits, sampling.

A dataset directory holds ``meta.json``, ``edges.csv`` (header ``t,u,v``),
``features.csv`` (static) or ``features_t{t}.csv`` (evolving), and optionally
``labels.csv`` (header ``node,class,t``). Serialization is canonical: edges
sorted by (t, u, v) with u < v for undirected graphs, floats written with
full round-trip precision, so save-then-load is the identity.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np


class ValidationError(ValueError):
    """A structural invariant of the data model is violated."""


@dataclass(frozen=True)
class EdgeList:
    """Edges of one snapshot as an (E, 2) int array.

    Undirected graphs store each pair once with u < v.
    """

    edges: np.ndarray
    directed: bool = False

    def __post_init__(self):
        arr = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        object.__setattr__(self, "edges", arr)

    def __len__(self):
        return self.edges.shape[0]

    def __iter__(self):
        return iter(map(tuple, self.edges))

    def validate(self, num_nodes, allow_self_loops=False):
        e = self.edges
        if e.size == 0:
            return
        if e.min() < 0 or e.max() >= num_nodes:
            bad = int(np.argmax((e.min(axis=1) < 0) | (e.max(axis=1) >= num_nodes)))
            raise ValidationError(
                f"edge row {bad} = {tuple(e[bad])} references a node outside [0, {num_nodes})")
        if not allow_self_loops and np.any(e[:, 0] == e[:, 1]):
            bad = int(np.argmax(e[:, 0] == e[:, 1]))
            raise ValidationError(f"edge row {bad} = {tuple(e[bad])} is a self-loop")
        key = e[:, 0] * num_nodes + e[:, 1]
        if np.unique(key).size != key.size:
            raise ValidationError("duplicate edge pair in snapshot")


@dataclass(frozen=True)
class DynamicGraph:
    """T snapshots of edges over a fixed node set, plus features and labels."""

    num_nodes: int
    snapshots: tuple            # length-T tuple of EdgeList
    features: np.ndarray        # (N, F) static or (T, N, F) evolving
    evolving_features: bool = False
    node_labels: np.ndarray | None = None      # (N,) class ids in [0, C)
    label_timestamps: np.ndarray | None = None  # (N,) time index per labeled node
    num_classes: int = 0
    directed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "snapshots", tuple(self.snapshots))
        object.__setattr__(self, "features", np.asarray(self.features, dtype=np.float64))
        if self.node_labels is not None:
            object.__setattr__(self, "node_labels", np.asarray(self.node_labels, dtype=np.int64))
        if self.label_timestamps is not None:
            object.__setattr__(self, "label_timestamps",
                               np.asarray(self.label_timestamps, dtype=np.int64))

    @property
    def num_timestamps(self):
        return len(self.snapshots)

    @property
    def feature_dim(self):
        return self.features.shape[-1]

    def features_at(self, t):
        return self.features[t] if self.evolving_features else self.features

    def validate(self):
        T, N = self.num_timestamps, self.num_nodes
        for t, snap in enumerate(self.snapshots):
            try:
                snap.validate(N)
            except ValidationError as err:
                raise ValidationError(f"snapshot {t}: {err}") from None
        if self.evolving_features:
            if self.features.shape[:2] != (T, N):
                raise ValidationError(
                    f"evolving features shaped {self.features.shape}, expected ({T}, {N}, F)")
        elif self.features.shape[0] != N:
            raise ValidationError(
                f"features shaped {self.features.shape}, expected ({N}, F)")
        if self.node_labels is not None:
            if self.node_labels.shape != (N,):
                raise ValidationError("node_labels must have one entry per node")
            if self.num_classes <= 0:
                raise ValidationError("labeled graph requires num_classes > 0")
            bad = (self.node_labels < 0) | (self.node_labels >= self.num_classes)
            if np.any(bad):
                raise ValidationError(
                    f"node {int(np.argmax(bad))} has label outside [0, {self.num_classes})")
        return self


@dataclass(frozen=True)
class Split:
    """Chronological train/val/test ranges, each a half-open [t0, t1)."""

    train_range: tuple
    val_range: tuple
    test_range: tuple

    def ranges(self):
        return {"train": self.train_range, "val": self.val_range, "test": self.test_range}

    def node_indices(self, g):
        """Node membership per split, derived from label timestamps."""
        if g.label_timestamps is None:
            raise ValidationError("node split requested but graph has no label timestamps")
        ts = g.label_timestamps
        out = {}
        for name, (lo, hi) in self.ranges().items():
            out[name] = np.flatnonzero((ts >= lo) & (ts < hi))
        return out


def chronological_split(g, counts):
    """Split the first sum(counts) timestamps into consecutive disjoint ranges."""
    a, b, c = (int(x) for x in counts)
    if min(a, b, c) < 0 or a + b + c > g.num_timestamps:
        raise ValidationError(
            f"split counts {counts} do not fit into {g.num_timestamps} timestamps")
    return Split(train_range=(0, a), val_range=(a, a + b), test_range=(a + b, a + b + c))


# ---------------------------------------------------------------------------
# negative sampling
# ---------------------------------------------------------------------------

def _pair_key(u, v, num_nodes, directed):
    if not directed:
        u, v = np.minimum(u, v), np.maximum(u, v)
    return u * num_nodes + v


def negative_sample(g, t, count, seed):
    """Uniformly sample ``count`` distinct node pairs absent from snapshot ``t``.

    Rejection sampling against the positive-edge hash set; graphs denser than
    half of all pairs fall back to explicitly enumerating non-edges so the
    draw stays uniform at any density.
    """
    if not 0 <= t < g.num_timestamps:
        raise ValidationError(f"timestamp {t} outside [0, {g.num_timestamps})")
    N, directed = g.num_nodes, g.directed
    edges = g.snapshots[t].edges
    pos = set(_pair_key(edges[:, 0], edges[:, 1], N, directed).tolist())
    total_pairs = N * (N - 1) if directed else N * (N - 1) // 2
    available = total_pairs - len(pos)
    if count > available:
        raise ValidationError(
            f"requested {count} negative pairs but only {available} non-edges exist at t={t}")

    rng = np.random.default_rng(seed)
    out, seen = [], set()
    if len(pos) > total_pairs / 2:
        # dense snapshot: enumerate all non-edges and choose without replacement
        uu, vv = np.triu_indices(N, k=1)
        if directed:
            uu, vv = np.concatenate([uu, vv]), np.concatenate([vv, uu])
        keys = _pair_key(uu, vv, N, directed)
        keep = np.array([k not in pos for k in keys.tolist()])
        cand = np.stack([uu[keep], vv[keep]], axis=1)
        pick = rng.choice(cand.shape[0], size=count, replace=False)
        out = [tuple(p) for p in cand[pick]]
    else:
        while len(out) < count:
            m = max(64, 2 * (count - len(out)))
            u = rng.integers(0, N, size=m)
            v = rng.integers(0, N, size=m)
            for ui, vi in zip(u.tolist(), v.tolist()):
                if ui == vi:
                    continue
                if not directed and ui > vi:
                    ui, vi = vi, ui
                k = ui * N + vi
                if k in pos or k in seen:
                    continue
                seen.add(k)
                out.append((ui, vi))
                if len(out) == count:
                    break
    return EdgeList(np.array(out, dtype=np.int64).reshape(-1, 2), directed=directed)


# ---------------------------------------------------------------------------
# on-disk format
# ---------------------------------------------------------------------------

def _fmt(x):
    # repr keeps full round-trip precision (well past 9 significant digits)
    return repr(float(x))


def _canonical_edges(snap, directed):
    e = snap.edges
    if e.size == 0:
        return e.reshape(0, 2)
    if not directed:
        e = np.stack([e.min(axis=1), e.max(axis=1)], axis=1)
    order = np.lexsort((e[:, 1], e[:, 0]))
    return e[order]


def save_dataset(g, path):
    """Write the canonical dataset directory for ``g``; returns the path."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    meta = {
        "num_nodes": g.num_nodes,
        "num_timestamps": g.num_timestamps,
        "feature_dim": g.feature_dim,
        "num_classes": g.num_classes,
        "directed": g.directed,
        "evolving_features": g.evolving_features,
    }
    (path / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")

    with open(path / "edges.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "u", "v"])
        for t, snap in enumerate(g.snapshots):
            for u, v in _canonical_edges(snap, g.directed):
                w.writerow([t, int(u), int(v)])

    def write_features(fname, mat):
        with open(path / fname, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["node"] + [f"f{i}" for i in range(mat.shape[1])])
            for n in range(mat.shape[0]):
                w.writerow([n] + [_fmt(x) for x in mat[n]])

    if g.evolving_features:
        for t in range(g.num_timestamps):
            write_features(f"features_t{t}.csv", g.features[t])
    else:
        write_features("features.csv", g.features)

    if g.node_labels is not None:
        ts = g.label_timestamps
        if ts is None:
            ts = np.zeros(g.num_nodes, dtype=np.int64)
        with open(path / "labels.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["node", "class", "t"])
            for n in range(g.num_nodes):
                w.writerow([n, int(g.node_labels[n]), int(ts[n])])
    return path


def _read_rows(path, expected_header):
    if not path.exists():
        raise FileNotFoundError(f"dataset file missing: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:len(expected_header)] != expected_header:
            raise ValidationError(f"{path.name}: expected header {expected_header}, got {header}")
        return list(reader)


def load_dataset(path):
    """Load and validate a dataset directory into a DynamicGraph."""
    path = Path(path)
    meta_path = path / "meta.json"
    if not meta_path.exists():
        raise FileNotFoundError(f"dataset file missing: {meta_path}")
    meta = json.loads(meta_path.read_text())
    N = int(meta["num_nodes"])
    T = int(meta["num_timestamps"])
    F = int(meta["feature_dim"])
    directed = bool(meta["directed"])

    per_t = [[] for _ in range(T)]
    for i, row in enumerate(_read_rows(path / "edges.csv", ["t", "u", "v"])):
        t, u, v = (int(x) for x in row[:3])
        if not 0 <= t < T:
            raise ValidationError(f"edges.csv row {i + 1}: timestamp {t} outside [0, {T})")
        if not (0 <= u < N and 0 <= v < N):
            raise ValidationError(f"edges.csv row {i + 1}: edge ({u}, {v}) outside [0, {N})")
        per_t[t].append((u, v))
    snapshots = tuple(EdgeList(np.array(e, dtype=np.int64).reshape(-1, 2), directed=directed)
                      for e in per_t)

    def read_features(fname):
        rows = _read_rows(path / fname, ["node"])
        mat = np.zeros((N, F), dtype=np.float64)
        for i, row in enumerate(rows):
            n = int(row[0])
            if not 0 <= n < N:
                raise ValidationError(f"{fname} row {i + 1}: node {n} outside [0, {N})")
            mat[n] = [float(x) for x in row[1:F + 1]]
        return mat

    evolving = bool(meta["evolving_features"])
    if evolving:
        features = np.stack([read_features(f"features_t{t}.csv") for t in range(T)])
    else:
        features = read_features("features.csv")

    node_labels = label_timestamps = None
    num_classes = int(meta.get("num_classes", 0))
    labels_path = path / "labels.csv"
    if labels_path.exists():
        node_labels = np.full(N, -1, dtype=np.int64)
        label_timestamps = np.zeros(N, dtype=np.int64)
        for i, row in enumerate(_read_rows(labels_path, ["node", "class", "t"])):
            n, cls, t = (int(x) for x in row[:3])
            if not 0 <= n < N:
                raise ValidationError(f"labels.csv row {i + 1}: node {n} outside [0, {N})")
            node_labels[n] = cls
            label_timestamps[n] = t

    g = DynamicGraph(num_nodes=N, snapshots=snapshots, features=features,
                     evolving_features=evolving, node_labels=node_labels,
                     label_timestamps=label_timestamps, num_classes=num_classes,
                     directed=directed)
    return g.validate()


def graphs_equal(a, b):
    """Field-by-field structural equality; oracle for save/load round trips."""
    if (a.num_nodes, a.num_timestamps, a.directed, a.evolving_features, a.num_classes) != \
       (b.num_nodes, b.num_timestamps, b.directed, b.evolving_features, b.num_classes):
        return False
    for sa, sb in zip(a.snapshots, b.snapshots):
        ea = _canonical_edges(sa, a.directed)
        eb = _canonical_edges(sb, b.directed)
        if ea.shape != eb.shape or not np.array_equal(ea, eb):
            return False
    if not np.array_equal(a.features, b.features):
        return False
    for x, y in ((a.node_labels, b.node_labels), (a.label_timestamps, b.label_timestamps)):
        if (x is None) != (y is None):
            return False
        if x is not None and not np.array_equal(x, y):
            return False
    return True
