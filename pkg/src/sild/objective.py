"""Training objective: task losses, variant-pattern pool, mixed losses,
invariance (variance) penalty, and the partitioned total.

Gradient routing follows the parameter partition: the invariant branch and
the mask/encoder minimize L_I + lambda * L_INV, while the variant classifier
minimizes L_V on a detached copy of the variant spectrum. Sampled variant
patterns act as fixed interventions: both the pattern and the variant
classifier are held constant inside the mixed loss, so each modulation is a
plain constant vector and the variance penalty only shapes the invariant
branch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from . import model as md
from . import spectral as sp
from .autograd import Tensor


@dataclass
class LossBundle:
    """Scalar loss values of one objective evaluation (for logging)."""

    l_i: float
    l_v: float
    l_inv: float
    lam: float

    @property
    def total(self):
        return self.l_i + self.lam * self.l_inv + self.l_v


@dataclass
class VariantPool:
    """Sampled variant node spectra, detached from the graph."""

    indices: np.ndarray   # (S,) node ids
    re: np.ndarray        # (S, K, d)
    im: np.ndarray        # (S, K, d)

    def __len__(self):
        return self.indices.shape[0]


# ---------------------------------------------------------------------------
# elementary losses
# ---------------------------------------------------------------------------

def softmax_cross_entropy(logits, labels):
    """Mean cross-entropy of row-wise softmax logits against integer labels."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        raise ValueError("cross-entropy over an empty subset")
    n, c = logits.shape
    shift = Tensor(logits.data.max(axis=1, keepdims=True))
    z = logits - shift
    lse = ag.log(ag.sum_(ag.exp(z), axis=1))
    onehot = np.zeros((n, c), dtype=logits.dtype)
    onehot[np.arange(n), labels] = 1.0
    true_logit = ag.sum_(z * Tensor(onehot), axis=1)
    return ag.mean(lse - true_logit)


def binary_cross_entropy(logits, targets):
    """Mean logistic loss of logits against {0,1} targets (overflow-safe)."""
    targets = np.asarray(targets, dtype=logits.dtype)
    if targets.size == 0:
        raise ValueError("cross-entropy over an empty subset")
    absx = ag.relu(logits) + ag.relu(-logits)
    softplus = ag.relu(logits) + ag.log(1.0 + ag.exp(-absx))
    return ag.mean(softplus - Tensor(targets) * logits)


# ---------------------------------------------------------------------------
# spec'd operations
# ---------------------------------------------------------------------------

def task_losses(Z_I, Z_V, params, labels, train_idx, variant_backprop_theta=False):
    """(L_I, L_V) for node classification on the training subset.

    L_V reaches only the variant classifier unless ``variant_backprop_theta``
    lets it flow back through the variant spectrum into the encoder.
    """
    train_idx = np.asarray(train_idx, dtype=np.int64)
    if train_idx.size == 0:
        raise ValueError("empty training subset")
    labels = np.asarray(labels, dtype=np.int64)
    logits_i = ag.gather(md.classify_nodes(Z_I, params, "clf_i"), train_idx)
    zv = Z_V if variant_backprop_theta else Z_V.detach()
    logits_v = ag.gather(md.classify_nodes(zv, params, "clf_v"), train_idx)
    y = labels[train_idx]
    return softmax_cross_entropy(logits_i, y), softmax_cross_entropy(logits_v, y)


def sample_variant_pool(Z_V, count, seed):
    """Draw ``count`` node spectra from the variant branch, uniformly without
    replacement (with replacement once count exceeds the node count)."""
    K, N, d = Z_V.shape
    if N == 0:
        raise ValueError("variant pool is empty")
    if count < 1:
        raise ValueError("need at least one variant sample")
    rng = np.random.default_rng(seed)
    idx = rng.choice(N, size=count, replace=count > N)
    re = np.transpose(Z_V.re.data, (1, 0, 2))[idx].copy()
    im = np.transpose(Z_V.im.data, (1, 0, 2))[idx].copy()
    return VariantPool(indices=idx, re=re, im=im)


def _variant_head(params, x):
    """Frozen-weight forward of the variant classifier on plain arrays."""
    h = x @ params["clf_v.w1"].data + params["clf_v.b1"].data
    h = np.maximum(h, 0.0)
    return h @ params["clf_v.w2"].data + params["clf_v.b2"].data


def variant_modulations(pool, params):
    """sigmoid(f_V(pattern)) per sampled pattern, as an (S, C) constant.

    Layout matches ``flatten_spectrum``: real block then imaginary block.
    """
    s = len(pool)
    flat = np.concatenate([pool.re.reshape(s, -1), pool.im.reshape(s, -1)], axis=1)
    logits = _variant_head(params, flat)
    return 1.0 / (1.0 + np.exp(-logits))


def mixed_loss(Z_I, pattern_re, pattern_im, params, labels, train_idx):
    """Task loss with invariant logits modulated by one variant pattern.

    The pattern and the variant classifier are constants here; only the
    invariant path carries gradient.
    """
    pool = VariantPool(indices=np.zeros(1, dtype=np.int64),
                       re=pattern_re[None], im=pattern_im[None])
    w = variant_modulations(pool, params)[0]
    logits_i = ag.gather(md.classify_nodes(Z_I, params, "clf_i"),
                         np.asarray(train_idx, dtype=np.int64))
    return mixed_loss_from_logits(logits_i, w, np.asarray(labels)[train_idx])


def mixed_loss_from_logits(train_logits, modulation, train_labels):
    mixed = train_logits * Tensor(np.asarray(modulation, dtype=train_logits.dtype))
    return softmax_cross_entropy(mixed, train_labels)


def invariance_loss(mixed_losses):
    """Population variance of the sampled mixed losses."""
    if len(mixed_losses) == 0:
        raise ValueError("invariance loss needs at least one mixed loss")
    stacked = ag.concat([ag.reshape(m, (1,)) for m in mixed_losses], axis=0)
    return ag.variance(stacked)


def total_objective(l_i, l_v, l_inv, lam):
    """(loss for {theta, f_I}, loss for {f_V}); lambda weighs the penalty."""
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    if lam == 0 or l_inv is None:
        return l_i, l_v
    return l_i + float(lam) * l_inv, l_v


# ---------------------------------------------------------------------------
# full objectives (one evaluation = one epoch's loss surface)
# ---------------------------------------------------------------------------

@dataclass
class NodeForward:
    """Everything one node-task forward pass produces."""

    loss_main: Tensor          # updates theta and f_I
    loss_fv: Tensor            # updates f_V
    bundle: LossBundle
    logits: np.ndarray         # (N, C) invariant-branch logits, constant view
    frozen: dict               # detached intermediates, replayable


def node_objective(g, params, train_idx, cfg, sample_seed, edge_override=None,
                   frozen=None):
    """Forward pass + partitioned losses for node classification.

    ``frozen`` replays the detached intermediates (sampled modulations and
    the variant spectrum fed to f_V) of an earlier evaluation, which makes
    the returned scalar a fixed function of the live parameters; that is the
    function finite differences can check.
    """
    labels = g.node_labels
    H = md.message_passing(g, params, num_layers=cfg.layers,
                           aggregator=cfg.aggregator, edge_override=edge_override)
    Z = sp.fft_time(H)
    if cfg.no_mask:
        masks = md.fixed_masks(Z)
    else:
        masks = md.compute_masks(Z, params, tau=cfg.tau)
    Z_I, Z_V = md.filter_spectrum(Z, masks)

    train_idx = np.asarray(train_idx, dtype=np.int64)
    if train_idx.size == 0:
        raise ValueError("empty training subset")
    logits_all = md.classify_nodes(Z_I, params, "clf_i")
    train_logits = ag.gather(logits_all, train_idx)
    y = labels[train_idx]
    l_i = softmax_cross_entropy(train_logits, y)

    if frozen is not None:
        zv_in = sp.SpectrumTensor(Tensor(frozen["zv_re"]), Tensor(frozen["zv_im"]))
    elif cfg.variant_backprop_theta:
        zv_in = Z_V
    else:
        zv_in = Z_V.detach()
    l_v = softmax_cross_entropy(
        ag.gather(md.classify_nodes(zv_in, params, "clf_v"), train_idx), y)

    lam = 0.0 if cfg.no_invariance else cfg.lam
    l_inv = None
    frozen_out = {"zv_re": Z_V.re.data.copy(), "zv_im": Z_V.im.data.copy()}
    if lam > 0:
        if frozen is not None:
            mods = frozen["modulations"]
        else:
            pool = sample_variant_pool(Z_V, cfg.sample_count, sample_seed)
            mods = variant_modulations(pool, params)
        mixed = [mixed_loss_from_logits(train_logits, w, y) for w in mods]
        l_inv = invariance_loss(mixed)
        frozen_out["modulations"] = mods

    loss_main, loss_fv = total_objective(l_i, l_v, l_inv, lam)
    bundle = LossBundle(l_i=float(l_i.data), l_v=float(l_v.data),
                        l_inv=0.0 if l_inv is None else float(l_inv.data), lam=lam)
    return NodeForward(loss_main=loss_main, loss_fv=loss_fv, bundle=bundle,
                       logits=logits_all.data, frozen=frozen_out)


@dataclass
class LinkForward:
    loss_main: Tensor
    loss_fv: Tensor
    bundle: LossBundle
    scores: np.ndarray  # invariant-branch logits for the evaluated pairs


def link_objective_at(g, params, target_time, pos_pairs, neg_pairs, cfg,
                      sample_seed):
    """Losses for predicting the links of ``target_time`` from the strictly
    earlier window [0, target_time); decoding reads the last observed step.
    """
    if target_time < 1 or target_time > g.num_timestamps - 1:
        raise ValueError(f"target time {target_time} has no preceding window")
    H = md.message_passing(g, params, num_layers=cfg.layers,
                           aggregator=cfg.aggregator,
                           time_range=(0, target_time))
    Z = sp.fft_time(H)
    if cfg.no_mask:
        masks = md.fixed_masks(Z)
    else:
        masks = md.compute_masks(Z, params, tau=cfg.tau)
    Z_I, Z_V = md.filter_spectrum(Z, masks)
    last = target_time - 1

    pairs = np.concatenate([np.asarray(pos_pairs).reshape(-1, 2),
                            np.asarray(neg_pairs).reshape(-1, 2)])
    y = np.concatenate([np.ones(len(pos_pairs)), np.zeros(len(neg_pairs))])

    h_i = sp.ifft_time(Z_I)
    logits_i = md.decode_links(h_i, pairs, last)
    l_i = binary_cross_entropy(logits_i, y)

    zv_in = Z_V if cfg.variant_backprop_theta else Z_V.detach()
    h_v = sp.ifft_time(zv_in)
    logits_v = md.decode_links(h_v, pairs, last)
    l_v = binary_cross_entropy(logits_v, y)

    lam = 0.0 if cfg.no_invariance else cfg.lam
    l_inv = None
    if lam > 0:
        rng = np.random.default_rng(sample_seed)
        endpoints = rng.integers(0, g.num_nodes, size=(cfg.sample_count, 2))
        hv_last = h_v.data[last]
        raw = np.einsum("ij,ij->i", hv_last[endpoints[:, 0]], hv_last[endpoints[:, 1]])
        mods = 1.0 / (1.0 + np.exp(-raw))
        mixed = [binary_cross_entropy(logits_i * Tensor(np.asarray(w, dtype=params.dtype)), y)
                 for w in mods]
        l_inv = invariance_loss(mixed)

    loss_main, loss_fv = total_objective(l_i, l_v, l_inv, lam)
    bundle = LossBundle(l_i=float(l_i.data), l_v=float(l_v.data),
                        l_inv=0.0 if l_inv is None else float(l_inv.data), lam=lam)
    return LinkForward(loss_main=loss_main, loss_fv=loss_fv, bundle=bundle,
                       scores=logits_i.data)
