"""Input validation helpers shared by the estimators and the CLI."""

from __future__ import annotations

from .graphstore import DynamicGraph, Split


def check_graph(g, task=None):
    """Validate a DynamicGraph and its fitness for the given task."""
    if not isinstance(g, DynamicGraph):
        raise TypeError(f"expected a DynamicGraph, got {type(g).__name__}")
    g.validate()
    if task == "node":
        if g.node_labels is None:
            raise ValueError("node classification requires node labels")
        if g.label_timestamps is None:
            raise ValueError("node classification requires label timestamps for splitting")
    return g


def check_split(split):
    if not isinstance(split, Split):
        raise TypeError(f"expected a Split, got {type(split).__name__}")
    ranges = [split.train_range, split.val_range, split.test_range]
    flat = [b for r in ranges for b in r]
    if flat != sorted(flat):
        raise ValueError(f"split ranges must be chronological, got {ranges}")
    return split


def check_is_fitted(estimator, attr="params_"):
    if not hasattr(estimator, attr):
        raise RuntimeError(
            f"{type(estimator).__name__} is not fitted yet; call fit first")
