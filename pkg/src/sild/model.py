"""Forward pipeline: snapshot message passing, disentangled frequency masks,
invariant/variant spectrum filtering, node classifiers and link decoder.

Parameters are partitioned into three disjoint groups: ``theta`` (message
passing plus the mask network), ``f_i`` (invariant classifier) and ``f_v``
(variant classifier); the training objective routes gradients per group.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from . import autograd as ag
from .autograd import ShapeError, Tensor
from .spectral import SpectrumTensor

GROUPS = ("theta", "f_i", "f_v")
AGGREGATORS = ("attention", "sum", "mean")


class ModelParams:
    """Named parameter tensors with a group label each; insertion-ordered."""

    def __init__(self, dtype=np.float64):
        self.dtype = np.dtype(dtype)
        self._tensors = {}
        self._group_of = {}

    def add(self, name, array, group):
        if group not in GROUPS:
            raise ValueError(f"unknown parameter group {group!r}")
        if name in self._tensors:
            raise ValueError(f"duplicate parameter name {name!r}")
        t = Tensor(np.asarray(array, dtype=self.dtype), requires_grad=True)
        self._tensors[name] = t
        self._group_of[name] = group
        return t

    def __getitem__(self, name):
        return self._tensors[name]

    def __contains__(self, name):
        return name in self._tensors

    def names(self):
        return list(self._tensors)

    def items(self):
        return list(self._tensors.items())

    def group_items(self, group):
        return [(n, t) for n, t in self._tensors.items() if self._group_of[n] == group]

    def group_of(self, name):
        return self._group_of[name]

    def zero_grad(self):
        for t in self._tensors.values():
            t.grad = None

    def swap(self, name, tensor):
        """Replace a parameter tensor in place; returns the old one.

        Lets probing code route an externally-built tensor through the
        pipeline (finite-difference checks of the full objective).
        """
        old = self._tensors[name]
        self._tensors[name] = tensor
        return old

    def state(self):
        """Snapshot of all values (copied arrays)."""
        return {n: t.data.copy() for n, t in self._tensors.items()}

    def load_state(self, state):
        for n, t in self._tensors.items():
            t.data = state[n].astype(self.dtype, copy=True)

    def num_values(self):
        return sum(t.size for t in self._tensors.values())


def _glorot(rng, fan_in, fan_out, shape):
    s = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-s, s, size=shape)


def init_params(feature_dim, hidden_dim, num_layers=2, aggregator="attention",
                task="node", num_bins=None, num_classes=None, seed=0,
                dtype=np.float64):
    """Build freshly initialized parameters for the full pipeline.

    Linear weights are Glorot-uniform, biases start at zero (in particular
    the mask-network output bias, so both mask branches start balanced).
    Node task additionally needs ``num_bins`` (spectrum length) and
    ``num_classes`` for the two classifier heads; the link decoder is a
    parameter-free inner product.
    """
    if aggregator not in AGGREGATORS:
        raise ValueError(f"aggregator must be one of {AGGREGATORS}, got {aggregator!r}")
    if num_layers < 1:
        raise ValueError("need at least one message-passing layer")
    rng = np.random.default_rng(seed)
    p = ModelParams(dtype=dtype)
    d = hidden_dim
    in_dim = feature_dim
    for layer in range(num_layers):
        p.add(f"mp{layer}.weight", _glorot(rng, in_dim, d, (in_dim, d)), "theta")
        p.add(f"mp{layer}.bias", np.zeros(d), "theta")
        if aggregator == "attention":
            p.add(f"mp{layer}.att_src", _glorot(rng, d, 1, (d, 1)), "theta")
            p.add(f"mp{layer}.att_dst", _glorot(rng, d, 1, (d, 1)), "theta")
        in_dim = d

    p.add("mask.w1", _glorot(rng, 2 * d, d, (2 * d, d)), "theta")
    p.add("mask.b1", np.zeros(d), "theta")
    # zero output layer: logits start at exactly 0, so both mask branches
    # open balanced at 0.5 instead of randomly gating the spectrum
    p.add("mask.w2", np.zeros((d, 1)), "theta")
    p.add("mask.b2", np.zeros(1), "theta")

    if task == "node":
        if num_bins is None or num_classes is None:
            raise ValueError("node task requires num_bins and num_classes")
        flat = 2 * num_bins * d
        for group, prefix in (("f_i", "clf_i"), ("f_v", "clf_v")):
            p.add(f"{prefix}.w1", _glorot(rng, flat, d, (flat, d)), group)
            p.add(f"{prefix}.b1", np.zeros(d), group)
            p.add(f"{prefix}.w2", _glorot(rng, d, num_classes, (d, num_classes)), group)
            p.add(f"{prefix}.b2", np.zeros(num_classes), group)
    return p


# ---------------------------------------------------------------------------
# message passing
# ---------------------------------------------------------------------------

def complement_trajectories(g, t_pred, task="node"):
    """Augmented per-snapshot edge sets: each t <= t_pred also sees the
    t_pred neighborhoods (virtual past structure for short trajectories).

    Only meaningful for node classification; link prediction would leak the
    prediction-time structure, so it is rejected there.
    """
    if task != "node":
        raise ValueError("trajectory complementation applies to node classification only")
    if not 0 <= t_pred < g.num_timestamps:
        raise ValueError(f"t_pred {t_pred} outside [0, {g.num_timestamps})")
    anchor = g.snapshots[t_pred].edges
    out = []
    for t, snap in enumerate(g.snapshots):
        if t <= t_pred:
            merged = np.concatenate([snap.edges.reshape(-1, 2), anchor.reshape(-1, 2)])
            if merged.size:
                key = merged[:, 0] * g.num_nodes + merged[:, 1]
                _, keep = np.unique(key, return_index=True)
                merged = merged[np.sort(keep)]
            out.append(merged)
        else:
            out.append(snap.edges.reshape(-1, 2))
    return out


def _directed_arcs(edges, directed, num_nodes):
    """Expand one snapshot into message arcs (src, dst) including self loops."""
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if directed:
        src, dst = e[:, 0], e[:, 1]
    else:
        src = np.concatenate([e[:, 0], e[:, 1]])
        dst = np.concatenate([e[:, 1], e[:, 0]])
    loops = np.arange(num_nodes, dtype=np.int64)
    return np.concatenate([src, loops]), np.concatenate([dst, loops])


def _aggregate(p, src, dst, num_nodes, aggregator, params, layer):
    msg = ag.gather(p, src)
    if aggregator == "sum":
        return ag.scatter_add(msg, dst, num_nodes)
    if aggregator == "mean":
        counts = np.bincount(dst, minlength=num_nodes).astype(p.dtype)
        total = ag.scatter_add(msg, dst, num_nodes)
        return total / Tensor(counts[:, None])
    # single-head additive attention, softmax-normalized per destination
    score = ag.matmul(msg, params[f"mp{layer}.att_src"]) + \
        ag.matmul(ag.gather(p, dst), params[f"mp{layer}.att_dst"])
    score = ag.leaky_relu(score)
    shift = np.zeros((num_nodes, 1), dtype=p.dtype)
    np.maximum.at(shift, dst, score.data)
    w = ag.exp(score - ag.gather(Tensor(shift), dst))
    denom = ag.scatter_add(w, dst, num_nodes)
    alpha = w / ag.gather(denom, dst)
    return ag.scatter_add(alpha * msg, dst, num_nodes)


def message_passing(g, params, num_layers=2, aggregator="attention",
                    edge_override=None, time_range=None):
    """Per-snapshot ego-graph aggregation stacked into a (T, N, d) tensor.

    Snapshots are processed independently with shared weights; the
    destination node itself joins the aggregation via a self loop, so with
    the sum aggregator and identity transform a star center aggregates its
    own feature plus every leaf.
    """
    N = g.num_nodes
    dtype = params.dtype
    times = range(g.num_timestamps) if time_range is None else range(*time_range)
    rows = []
    for t in times:
        edges = g.snapshots[t].edges if edge_override is None else edge_override[t]
        src, dst = _directed_arcs(edges, g.directed, N)
        h = Tensor(np.ascontiguousarray(g.features_at(t), dtype=dtype))
        if h.shape[1] != params["mp0.weight"].shape[0]:
            raise ShapeError(
                f"message_passing: feature dim {h.shape[1]} != "
                f"layer-0 input dim {params['mp0.weight'].shape[0]}")
        for layer in range(num_layers):
            p = ag.matmul(h, params[f"mp{layer}.weight"]) + params[f"mp{layer}.bias"]
            h = _aggregate(p, src, dst, N, aggregator, params, layer)
            if layer < num_layers - 1:
                h = ag.relu(h)
        rows.append(ag.reshape(h, (1, N, h.shape[1])))
    return ag.concat(rows, axis=0)


# ---------------------------------------------------------------------------
# disentangled masks and spectrum filtering
# ---------------------------------------------------------------------------

class DisentangledMasks:
    """Per-(frequency, node) invariant/variant gates; complements by design."""

    def __init__(self, m_logit, tau):
        self.m_logit = m_logit          # (K, N) tensor
        self.tau = float(tau)
        self.invariant = ag.sigmoid(m_logit / Tensor(np.asarray(tau, dtype=m_logit.dtype)))
        self.variant = ag.sigmoid(-m_logit / Tensor(np.asarray(tau, dtype=m_logit.dtype)))


def compute_masks(Z, params, tau=1.0, symmetrize=True):
    """Mask logits from an MLP taking concatenated re/im per (bin, node).

    Logits for bins k and T-k are averaged so masked spectra of real
    trajectories stay conjugate-symmetric and invert to real signals.
    """
    K, N, d = Z.shape
    x = ag.reshape(ag.concat([Z.re, Z.im], axis=-1), (K * N, 2 * d))
    hidden = ag.relu(ag.matmul(x, params["mask.w1"]) + params["mask.b1"])
    logit = ag.reshape(ag.matmul(hidden, params["mask.w2"]) + params["mask.b2"], (K, N))
    if symmetrize:
        perm = (K - np.arange(K)) % K
        logit = (logit + ag.gather(logit, perm)) / Tensor(np.asarray(2.0, dtype=logit.dtype))
    return DisentangledMasks(logit, tau)


def fixed_masks(Z, value=0.5):
    """Frozen masks (both branches at ``value``); the no-mask ablation."""
    K, N, _ = Z.shape
    dt = Z.re.dtype
    logit = Tensor(np.zeros((K, N), dtype=dt))
    masks = DisentangledMasks.__new__(DisentangledMasks)
    masks.m_logit = logit
    masks.tau = 1.0
    masks.invariant = Tensor(np.full((K, N), value, dtype=dt))
    masks.variant = Tensor(np.full((K, N), 1.0 - value, dtype=dt))
    return masks


def filter_spectrum(Z, masks):
    """Split a spectrum into invariant and variant parts by amplitude gating.

    Scaling (re, im) jointly by the nonnegative gate equals scaling the
    amplitude with the phase kept, and avoids the polar form's undefined
    gradient at zero amplitude.
    """
    K, N, _ = Z.shape
    mi = ag.reshape(masks.invariant, (K, N, 1))
    mv = ag.reshape(masks.variant, (K, N, 1))
    z_i = SpectrumTensor(re=Z.re * mi, im=Z.im * mi)
    z_v = SpectrumTensor(re=Z.re * mv, im=Z.im * mv)
    return z_i, z_v


# ---------------------------------------------------------------------------
# heads
# ---------------------------------------------------------------------------

def flatten_spectrum(Z):
    """Per-node feature vector: all real parts then all imaginary parts."""
    K, N, d = Z.shape
    re = ag.reshape(ag.transpose(Z.re, (1, 0, 2)), (N, K * d))
    im = ag.reshape(ag.transpose(Z.im, (1, 0, 2)), (N, K * d))
    return ag.concat([re, im], axis=-1)


def classify_nodes(Z_part, params, head):
    """Two-layer perceptron logits per node from a flattened spectrum."""
    x = flatten_spectrum(Z_part)
    w1 = params[f"{head}.w1"]
    if x.shape[1] != w1.shape[0]:
        raise ShapeError(
            f"classify_nodes: flattened spectrum dim {x.shape[1]} != "
            f"classifier input dim {w1.shape[0]}")
    hidden = ag.relu(ag.matmul(x, w1) + params[f"{head}.b1"])
    return ag.matmul(hidden, params[f"{head}.w2"]) + params[f"{head}.b2"]


def decode_links(H_prime, pairs, t):
    """Inner-product logit per (u, v) pair at timestamp ``t``."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    T, N, d = H_prime.shape
    if not 0 <= t < T:
        raise ShapeError(f"decode_links: timestamp {t} outside [0, {T})")
    if pairs.size and pairs.max() >= N:
        raise ShapeError(f"decode_links: pair index {int(pairs.max())} outside [0, {N})")
    ht = ag.reshape(ag.slice_axis0(H_prime, t, t + 1), (N, d))
    u = ag.gather(ht, pairs[:, 0])
    v = ag.gather(ht, pairs[:, 1])
    return ag.sum_(u * v, axis=1)


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

def config_hash(config):
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def save_checkpoint(path, params, config=None):
    """JSON header line + flat little-endian float payloads per parameter."""
    dtype_code = "<f4" if params.dtype == np.float32 else "<f8"
    header = {
        "format": "sild-checkpoint-v1",
        "dtype": dtype_code,
        "config_hash": config_hash(config or {}),
        "params": [{"name": n, "shape": list(t.shape), "group": params.group_of(n)}
                   for n, t in params.items()],
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        for _, t in params.items():
            fh.write(np.ascontiguousarray(t.data, dtype=dtype_code).tobytes())


def load_checkpoint(path):
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        if header.get("format") != "sild-checkpoint-v1":
            raise ValueError(f"unrecognized checkpoint header in {path}")
        dtype = np.dtype(header["dtype"])
        params = ModelParams(dtype=np.float32 if dtype.itemsize == 4 else np.float64)
        for spec in header["params"]:
            shape = tuple(spec["shape"])
            n = int(np.prod(shape)) if shape else 1
            buf = fh.read(n * dtype.itemsize)
            if len(buf) != n * dtype.itemsize:
                raise ValueError(f"truncated checkpoint payload in {path}")
            arr = np.frombuffer(buf, dtype=dtype).reshape(shape)
            params.add(spec["name"], arr, spec["group"])
    return params, header
