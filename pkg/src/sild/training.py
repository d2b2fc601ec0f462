"""Full-batch training loop, Adam optimizer, evaluation metrics, sweeps.

One run is single-threaded and fully deterministic for a fixed seed: every
random draw (init, variant sampling, training negatives) derives from the
config seed, while validation/test negatives for link tasks derive from the
timestamp alone so all runs score against identical pairs.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import autograd as ag
from . import graphstore as gs
from . import model as md
from . import objective as obj


class ConfigError(ValueError):
    """Invalid or unknown configuration value."""


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss; carries the epoch index."""

    def __init__(self, epoch, message=None):
        super().__init__(message or f"non-finite loss at epoch {epoch}")
        self.epoch = epoch


@dataclass
class TrainConfig:
    hidden_dim: int = 16
    layers: int = 2
    learning_rate: float = 1e-2
    weight_decay: float = 5e-7
    epochs: int = 50
    lam: float = 1e-2
    tau: float = 1.0
    sample_count: int = 100
    seed: int = 0
    task: str = "node"
    precision: int = 64
    aggregator: str = "attention"
    no_invariance: bool = False
    no_mask: bool = False
    complement_trajectories: bool = False
    variant_backprop_theta: bool = False

    def __post_init__(self):
        if self.task not in ("node", "link"):
            raise ConfigError(f"task must be 'node' or 'link', got {self.task!r}")
        if self.precision not in (32, 64):
            raise ConfigError(f"precision must be 32 or 64, got {self.precision}")
        if self.aggregator not in md.AGGREGATORS:
            raise ConfigError(f"aggregator must be one of {md.AGGREGATORS}")
        for name in ("hidden_dim", "layers", "learning_rate", "epochs",
                     "tau", "sample_count"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.lam < 0 or self.weight_decay < 0:
            raise ConfigError("lam and weight_decay must be nonnegative")

    @property
    def dtype(self):
        return np.float32 if self.precision == 32 else np.float64

    def effective_lam(self):
        return 0.0 if self.no_invariance else self.lam

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def config_from_dict(doc, **overrides):
    """Build a TrainConfig from a JSON-style dict; unknown keys are rejected."""
    known = {f.name for f in fields(TrainConfig)}
    aliases = {"lambda": "lam"}
    merged = {}
    for key, value in dict(doc).items():
        key = aliases.get(key, key)
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        merged[key] = value
    merged.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return TrainConfig(**merged)
    except TypeError as err:
        raise ConfigError(str(err)) from None


# ---------------------------------------------------------------------------
# optimizer
# ---------------------------------------------------------------------------

class Adam:
    """Bias-corrected adaptive moments with classic L2-in-gradient decay."""

    def __init__(self, params, lr=1e-2, weight_decay=0.0, beta1=0.9,
                 beta2=0.999, eps=1e-8):
        self.params = params
        self.lr = lr
        self.weight_decay = weight_decay
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = {n: np.zeros_like(t.data) for n, t in params.items()}
        self.v = {n: np.zeros_like(t.data) for n, t in params.items()}

    def step(self):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for name, tensor in self.params.items():
            g = tensor.grad if tensor.grad is not None else np.zeros_like(tensor.data)
            if self.weight_decay:
                g = g + self.weight_decay * tensor.data
            self.m[name] = b1 * self.m[name] + (1 - b1) * g
            self.v[name] = b2 * self.v[name] + (1 - b2) * (g * g)
            m_hat = self.m[name] / (1 - b1 ** self.t)
            v_hat = self.v[name] / (1 - b2 ** self.t)
            tensor.data = tensor.data - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def adam_step(params, lr=1e-2, weight_decay=0.0, state=None):
    """Single functional Adam step over a ModelParams holding fresh grads."""
    opt = state or Adam(params, lr=lr, weight_decay=weight_decay)
    opt.step()
    return opt


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def accuracy(predictions, labels):
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.size == 0:
        raise ValueError("accuracy over an empty set")
    return float(np.mean(predictions == labels))


def auc(scores, labels):
    """Probability a random positive outranks a random negative, ties at 0.5.

    Rank-based O(n log n) evaluation; must agree with the quadratic pairwise
    count exactly, which the test suite enforces.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both positive and negative examples")
    order = np.argsort(scores, kind="mergesort")
    sorted_scores = scores[order]
    ranks = np.empty(labels.size, dtype=np.float64)
    i = 0
    while i < labels.size:
        j = i
        while j + 1 < labels.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0  # average 1-based rank
        i = j + 1
    pos_rank_sum = ranks[labels].sum()
    return float((pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass
class MetricsReport:
    task: str
    metric_name: str
    epochs: list = field(default_factory=list)  # per-epoch dicts
    best_epoch: int = -1
    val_metric: float = 0.0
    test_metric: float = 0.0
    wallclock_s: float = 0.0

    def epoch_log(self):
        return self.epochs


def aggregate_reports(reports):
    """Mean and standard deviation of val/test metrics over seeds."""
    val = np.array([r.val_metric for r in reports])
    test = np.array([r.test_metric for r in reports])
    return {
        "val_mean": float(val.mean()), "val_std": float(val.std()),
        "test_mean": float(test.mean()), "test_std": float(test.std()),
        "seeds": len(reports),
    }


# ---------------------------------------------------------------------------
# deterministic seed derivation
# ---------------------------------------------------------------------------

def _derived_seed(*parts):
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def eval_negative_seed(t):
    """Seed for validation/test negatives: fixed per timestamp, shared by
    every run so all methods score the same pairs."""
    return _derived_seed(0xE7A1, t)


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------

def _link_targets(g, split):
    out = {}
    for name, (lo, hi) in split.ranges().items():
        out[name] = [s for s in range(max(lo, 1), hi)]
    return out


def _fixed_negatives(g, times):
    return {s: gs.negative_sample(g, s, len(g.snapshots[s]), eval_negative_seed(s)).edges
            for s in times if len(g.snapshots[s]) > 0}


def _link_eval_auc(g, params, cfg, times, fixed_negs):
    """Mean AUC over target times, scoring positives against fixed negatives
    with the invariant branch only."""
    eval_cfg = replace(cfg, no_invariance=True)
    scores = []
    for s in times:
        pos = g.snapshots[s].edges
        if len(pos) == 0 or s not in fixed_negs:
            continue
        fw = obj.link_objective_at(g, params, s, pos, fixed_negs[s], eval_cfg,
                                   sample_seed=0)
        y = np.concatenate([np.ones(len(pos)), np.zeros(len(fixed_negs[s]))])
        scores.append(auc(fw.scores, y))
    if not scores:
        raise ValueError("no evaluable target times in range")
    return float(np.mean(scores)), scores


def node_logits(g, params, cfg):
    """Invariant-branch logits for every node (inference path)."""
    edge_override = None
    if cfg.complement_trajectories:
        edge_override = md.complement_trajectories(g, g.num_timestamps - 1)
    H = md.message_passing(g, params, num_layers=cfg.layers,
                           aggregator=cfg.aggregator, edge_override=edge_override)
    from . import spectral as sp
    Z = sp.fft_time(H)
    masks = md.fixed_masks(Z) if cfg.no_mask else md.compute_masks(Z, params, tau=cfg.tau)
    Z_I, _ = md.filter_spectrum(Z, masks)
    return md.classify_nodes(Z_I, params, "clf_i").data


def evaluate(params, g, split, cfg, which="test"):
    """Metric of the queried split: accuracy (node) or mean AUC (link).

    Only labels of the queried split's members are read.
    """
    if cfg.task == "node":
        nodes = split.node_indices(g)[which]
        if nodes.size == 0:
            raise ValueError(f"{which} split is empty")
        logits = node_logits(g, params, cfg)
        preds = np.argmax(logits[nodes], axis=1)
        return accuracy(preds, g.node_labels[nodes])
    times = _link_targets(g, split)[which]
    if not times:
        raise ValueError(f"{which} split is empty")
    metric, _ = _link_eval_auc(g, params, cfg, times, _fixed_negatives(g, times))
    return metric


def train(g, split, cfg):
    """Run the training pipeline and return (best params, metrics report).

    Per epoch: message passing, time-axis DFT, disentangled masks, spectrum
    filtering, task losses, variant sampling with the variance penalty, one
    partitioned optimizer update. The checkpoint with the best validation
    metric is returned; inference uses the invariant branch only.

    Epoch e's validation metric describes the parameters entering that
    epoch (the candidate pool is the states after 0..epochs-1 updates), so
    the returned checkpoint always reproduces its recorded metric exactly.
    """
    g.validate()
    start = time.perf_counter()
    dtype = cfg.dtype
    metric_name = "acc" if cfg.task == "node" else "auc"
    report = MetricsReport(task=cfg.task, metric_name=metric_name)

    if cfg.task == "node":
        if g.node_labels is None:
            raise ConfigError("node task requires labeled graph")
        idx = split.node_indices(g)
        train_idx, val_idx = idx["train"], idx["val"]
        if train_idx.size == 0 or val_idx.size == 0:
            raise ConfigError("node task requires nonempty train and val splits")
        params = md.init_params(g.feature_dim, cfg.hidden_dim, cfg.layers,
                                cfg.aggregator, task="node",
                                num_bins=g.num_timestamps,
                                num_classes=g.num_classes, seed=cfg.seed,
                                dtype=dtype)
        edge_override = None
        if cfg.complement_trajectories:
            edge_override = md.complement_trajectories(g, g.num_timestamps - 1)
    else:
        params = md.init_params(g.feature_dim, cfg.hidden_dim, cfg.layers,
                                cfg.aggregator, task="link", seed=cfg.seed,
                                dtype=dtype)
        targets = _link_targets(g, split)
        if not targets["train"] or not targets["val"]:
            raise ConfigError("link task requires nonempty train and val ranges")
        val_negs = _fixed_negatives(g, targets["val"])

    optimizer = Adam(params, lr=cfg.learning_rate, weight_decay=cfg.weight_decay)
    best = {"metric": -np.inf, "epoch": -1, "state": params.state()}

    for epoch in range(cfg.epochs):
        params.zero_grad()
        sample_seed = _derived_seed(cfg.seed, 1, epoch)

        if cfg.task == "node":
            try:
                fw = obj.node_objective(g, params, train_idx, cfg, sample_seed,
                                        edge_override=edge_override)
            except FloatingPointError as err:
                raise DivergenceError(epoch, f"epoch {epoch}: {err}") from None
            total = fw.loss_main + fw.loss_fv
            if not np.isfinite(total.data):
                raise DivergenceError(epoch)

            val_logits = fw.logits[val_idx]
            val_metric = accuracy(np.argmax(val_logits, axis=1),
                                  g.node_labels[val_idx])
            val_loss = _np_softmax_ce(val_logits, g.node_labels[val_idx])
            entry = {"epoch": epoch, "train_loss": fw.bundle.total,
                     "l_i": fw.bundle.l_i, "l_v": fw.bundle.l_v,
                     "l_inv": fw.bundle.l_inv, "val_loss": val_loss,
                     "val_metric": val_metric}
        else:
            losses, bundles = [], []
            for s in targets["train"]:
                pos = g.snapshots[s].edges
                if len(pos) == 0:
                    continue
                neg = gs.negative_sample(g, s, len(pos),
                                         _derived_seed(cfg.seed, 2, epoch, s)).edges
                try:
                    fw = obj.link_objective_at(g, params, s, pos, neg, cfg,
                                               sample_seed=_derived_seed(cfg.seed, 3, epoch, s))
                except FloatingPointError as err:
                    raise DivergenceError(epoch, f"epoch {epoch}: {err}") from None
                losses.append(fw.loss_main + fw.loss_fv)
                bundles.append(fw.bundle)
            if not losses:
                raise ConfigError("no training targets with edges")
            count = ag.Tensor(np.asarray(float(len(losses)), dtype=dtype))
            total = losses[0]
            for extra in losses[1:]:
                total = total + extra
            total = total / count
            if not np.isfinite(total.data):
                raise DivergenceError(epoch)

            val_metric, _ = _link_eval_auc(g, params, cfg, targets["val"], val_negs)
            entry = {"epoch": epoch, "train_loss": float(total.data),
                     "l_i": float(np.mean([b.l_i for b in bundles])),
                     "l_v": float(np.mean([b.l_v for b in bundles])),
                     "l_inv": float(np.mean([b.l_inv for b in bundles])),
                     "val_loss": None, "val_metric": val_metric}

        # the metric belongs to the pre-step parameters; snapshot those, so
        # reloading the best checkpoint reproduces its recorded number
        report.epochs.append(entry)
        if entry["val_metric"] > best["metric"]:
            best = {"metric": entry["val_metric"], "epoch": epoch,
                    "state": params.state()}
        ag.backward(total)
        optimizer.step()

    params.load_state(best["state"])
    report.best_epoch = best["epoch"]
    report.val_metric = evaluate(params, g, split, cfg, which="val")
    report.test_metric = evaluate(params, g, split, cfg, which="test")
    report.wallclock_s = time.perf_counter() - start
    return params, report


def _np_softmax_ce(logits, labels):
    z = logits - logits.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1))
    return float(np.mean(lse - z[np.arange(len(labels)), labels]))


def run_seeds(g, split, cfg, seeds):
    """Independent training runs, one per seed."""
    results = []
    for s in seeds:
        results.append(train(g, split, replace(cfg, seed=int(s))))
    return results


def lambda_sweep(g, split, cfg, lambdas, seeds=(0, 1, 2)):
    """Train/evaluate per (lambda, seed); rows of per-seed and summary stats."""
    rows = []
    for lam in lambdas:
        runs = run_seeds(g, split, replace(cfg, lam=float(lam)), seeds)
        reports = [r for _, r in runs]
        summary = aggregate_reports(reports)
        for seed, rep in zip(seeds, reports):
            rows.append({"lambda": float(lam), "seed": int(seed),
                         "val_metric": rep.val_metric,
                         "test_metric": rep.test_metric,
                         "test_mean": summary["test_mean"],
                         "test_std": summary["test_std"]})
    return rows


# ---------------------------------------------------------------------------
# result files
# ---------------------------------------------------------------------------

def write_results_csv(path, rows):
    """results.csv: dataset,task,shift,lambda,seed,split,metric,epochs,wallclock_s"""
    cols = ["dataset", "task", "shift", "lambda", "seed", "split", "metric",
            "epochs", "wallclock_s"]
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(str(row.get(c, "")) for c in cols) + "\n")


def write_train_log(path, report):
    with open(path, "w") as fh:
        for entry in report.epochs:
            fh.write(json.dumps(entry) + "\n")
