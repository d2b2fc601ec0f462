"""Scikit-learn style estimators wrapping the training pipeline.

``X`` is a DynamicGraph rather than a feature matrix, but the surface is the
usual one: constructor hyperparameters stored verbatim, ``fit`` returning
self, ``predict``/``predict_proba``/``decision_function``, and
``get_params``/``set_params`` for cloning and grid search.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from . import training as tr
from .graphstore import chronological_split
from .validation import check_graph, check_is_fitted, check_split


class _SildBase(BaseEstimator):
    _task = None

    def _config(self, seed):
        return tr.TrainConfig(
            hidden_dim=self.hidden_dim, layers=self.layers,
            learning_rate=self.learning_rate, weight_decay=self.weight_decay,
            epochs=self.epochs, lam=self.lam, tau=self.tau,
            sample_count=self.sample_count, seed=seed, task=self._task,
            precision=self.precision, aggregator=self.aggregator,
            no_invariance=self.no_invariance, no_mask=self.no_mask,
            complement_trajectories=self.complement_trajectories,
            variant_backprop_theta=self.variant_backprop_theta)

    def _resolve_split(self, g, split):
        if split is None:
            split = chronological_split(g, self.split_counts)
        return check_split(split)

    def fit(self, X, y=None, split=None):
        g = check_graph(X, task=self._task)
        split = self._resolve_split(g, split)
        cfg = self._config(self.seed)
        self.params_, self.report_ = tr.train(g, split, cfg)
        self.split_ = split
        self.config_ = cfg
        return self


class SildNodeClassifier(_SildBase, ClassifierMixin):
    """Shift-robust node classifier over dynamic-graph snapshots.

    Trains the spectral-invariance pipeline on the label-timestamp split of
    the given graph and predicts classes from the invariant branch.
    """

    _task = "node"

    def __init__(self, hidden_dim=16, layers=2, learning_rate=1e-2,
                 weight_decay=5e-7, epochs=100, lam=1e-2, tau=1.0,
                 sample_count=100, aggregator="sum", precision=64,
                 no_invariance=False, no_mask=False,
                 complement_trajectories=False, variant_backprop_theta=False,
                 split_counts=(1, 1, 1), seed=0):
        self.hidden_dim = hidden_dim
        self.layers = layers
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.epochs = epochs
        self.lam = lam
        self.tau = tau
        self.sample_count = sample_count
        self.aggregator = aggregator
        self.precision = precision
        self.no_invariance = no_invariance
        self.no_mask = no_mask
        self.complement_trajectories = complement_trajectories
        self.variant_backprop_theta = variant_backprop_theta
        self.split_counts = split_counts
        self.seed = seed

    def fit(self, X, y=None, split=None):
        super().fit(X, y=y, split=split)
        self.classes_ = np.arange(X.num_classes)
        return self

    def decision_function(self, X):
        check_is_fitted(self)
        g = check_graph(X, task="node")
        return tr.node_logits(g, self.params_, self.config_)

    def predict_proba(self, X):
        logits = self.decision_function(X)
        z = logits - logits.max(axis=1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=1, keepdims=True)

    def predict(self, X):
        return np.argmax(self.decision_function(X), axis=1)


class SildLinkPredictor(_SildBase):
    """Future-link scorer over dynamic-graph snapshots.

    Scores a pair at target time t by the inner product of the invariant
    time-domain embeddings from the window strictly before t.
    """

    _task = "link"

    def __init__(self, hidden_dim=16, layers=2, learning_rate=1e-2,
                 weight_decay=5e-7, epochs=50, lam=1e-2, tau=1.0,
                 sample_count=100, aggregator="attention", precision=64,
                 no_invariance=False, no_mask=False,
                 complement_trajectories=False, variant_backprop_theta=False,
                 split_counts=(10, 1, 5), seed=0):
        self.hidden_dim = hidden_dim
        self.layers = layers
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.epochs = epochs
        self.lam = lam
        self.tau = tau
        self.sample_count = sample_count
        self.aggregator = aggregator
        self.precision = precision
        self.no_invariance = no_invariance
        self.no_mask = no_mask
        self.complement_trajectories = complement_trajectories
        self.variant_backprop_theta = variant_backprop_theta
        self.split_counts = split_counts
        self.seed = seed

    def decision_function(self, X, pairs, t):
        check_is_fitted(self)
        g = check_graph(X)
        from . import objective as obj
        from dataclasses import replace
        cfg = replace(self.config_, no_invariance=True)
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        fw = obj.link_objective_at(g, self.params_, t, pairs,
                                   np.zeros((0, 2), dtype=np.int64), cfg,
                                   sample_seed=0)
        return fw.scores

    def score(self, X, y=None, which="test"):
        """Mean AUC over the queried split's target times."""
        check_is_fitted(self)
        g = check_graph(X)
        return tr.evaluate(self.params_, g, self.split_, self.config_, which=which)
