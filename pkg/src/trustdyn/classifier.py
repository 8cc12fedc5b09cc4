"""Entropy decision tree predicting the trust-dynamics archetype from profiles."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import tables

CLASSES = tables.ARCHETYPES
GAIN_TOL = 1e-12
DEFAULT_GRID = tuple(itertools.product(range(2, 9), (1, 2, 4, 8)))


class EmptyDataset(ValueError):
    pass


class MissingFeature(KeyError):
    pass


@dataclass
class TreeNode:
    """Leaf when ``feature`` is None; otherwise ``value <= threshold`` goes left."""

    class_counts: tuple[int, ...]
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    gain: float = 0.0
    feature_names: tuple[str, ...] = tables.PREDICTIVE_DIMENSIONS

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    @property
    def predicted_label(self) -> str:
        return CLASSES[int(np.argmax(self.class_counts))]

    @property
    def feature_name(self) -> str | None:
        return None if self.feature is None else self.feature_names[self.feature]

    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(self.left.depth(), self.right.depth())

    def leaves(self):
        if self.is_leaf:
            yield self
        else:
            yield from self.left.leaves()
            yield from self.right.leaves()


@dataclass(frozen=True)
class EvalReport:
    confusion_matrix: np.ndarray  # rows true class, columns predicted
    accuracy: float
    weighted_f1: float
    per_class_recall: tuple[float, ...]


def entropy(counts) -> float:
    counts = np.asarray(counts, dtype=float)
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts[counts > 0] / n
    return float(-(p * np.log2(p)).sum())


def encode_labels(labels: Sequence[str]) -> np.ndarray:
    index = {c: i for i, c in enumerate(CLASSES)}
    try:
        return np.array([index[y] for y in labels], dtype=int)
    except KeyError as e:
        raise ValueError(f"unknown archetype label {e.args[0]!r}") from None


def _counts(y) -> np.ndarray:
    return np.bincount(y, minlength=len(CLASSES))


def candidate_thresholds(values) -> np.ndarray:
    u = np.unique(values)
    return (u[:-1] + u[1:]) / 2.0


def information_gain(x_col, y, threshold) -> float:
    mask = x_col <= threshold
    n = len(y)
    left, right = y[mask], y[~mask]
    return (
        entropy(_counts(y))
        - len(left) / n * entropy(_counts(left))
        - len(right) / n * entropy(_counts(right))
    )


def best_split(x: np.ndarray, y: np.ndarray, min_samples_leaf: int = 1):
    """(feature, threshold, gain) of the highest-gain admissible split, or None.

    Scans features in index order and thresholds ascending, so ties keep the
    lowest feature index and then the lowest threshold.
    """
    n = len(y)
    parent = entropy(_counts(y))
    best = None
    for j in range(x.shape[1]):
        order = np.argsort(x[:, j], kind="stable")
        xs, ys = x[order, j], y[order]
        left = np.zeros(len(CLASSES), dtype=int)
        total = _counts(ys)
        for i in range(n - 1):
            left[ys[i]] += 1
            if xs[i] == xs[i + 1]:
                continue
            nl = i + 1
            nr = n - nl
            if nl < min_samples_leaf or nr < min_samples_leaf:
                continue
            gain = parent - nl / n * entropy(left) - nr / n * entropy(total - left)
            if best is None or gain > best[2] + GAIN_TOL:
                best = (j, (xs[i] + xs[i + 1]) / 2.0, gain)
    return best


def default_feature_names(n_features: int) -> tuple[str, ...]:
    if n_features == len(tables.PREDICTIVE_DIMENSIONS):
        return tables.PREDICTIVE_DIMENSIONS
    return tuple(f"x{j}" for j in range(n_features))


def train_tree(
    x,
    y,
    max_depth: int | None = 6,
    min_samples_leaf: int = 1,
    feature_names: Sequence[str] | None = None,
) -> TreeNode:
    """Greedy recursive partitioning on information gain (bits).

    ``y`` may be archetype names or their integer codes.
    """
    x = np.asarray(x, dtype=float)
    if len(x) == 0:
        raise EmptyDataset("cannot train on an empty dataset")
    y = np.asarray(y)
    if y.dtype.kind in "USO":
        y = encode_labels(list(y))
    if x.ndim != 2:
        raise ValueError(f"x must be 2-d, got shape {x.shape}")
    names = default_feature_names(x.shape[1]) if feature_names is None else tuple(feature_names)
    if x.shape[1] != len(names) or len(y) != len(x):
        raise ValueError(f"shape mismatch: x {x.shape}, y {y.shape}, {len(names)} feature names")
    return _grow(x, y, 0, max_depth, min_samples_leaf, names)


def _grow(x, y, depth, max_depth, min_leaf, names) -> TreeNode:
    counts = tuple(int(c) for c in _counts(y))
    node = TreeNode(counts, feature_names=names)
    if (max_depth is not None and depth >= max_depth) or len(y) < 2 * min_leaf or max(counts) == len(y):
        return node
    split = best_split(x, y, min_leaf)
    if split is None or split[2] <= GAIN_TOL:
        return node
    j, threshold, gain = split
    mask = x[:, j] <= threshold
    node.feature, node.threshold, node.gain = j, float(threshold), float(gain)
    node.left = _grow(x[mask], y[mask], depth + 1, max_depth, min_leaf, names)
    node.right = _grow(x[~mask], y[~mask], depth + 1, max_depth, min_leaf, names)
    return node


def predict_tree(tree: TreeNode, profile) -> str:
    """Descend from the root; a mapping is looked up by feature name, a sequence by index."""
    node = tree
    while not node.is_leaf:
        if isinstance(profile, Mapping):
            if node.feature_name not in profile:
                raise MissingFeature(node.feature_name)
            value = profile[node.feature_name]
        else:
            value = profile[node.feature]
        node = node.left if value <= node.threshold else node.right
    return node.predicted_label


def predict_many(tree: TreeNode, x) -> list[str]:
    return [predict_tree(tree, row) for row in np.asarray(x, dtype=float)]


def evaluate_predictions(y_true: Sequence[str], y_pred: Sequence[str]) -> EvalReport:
    if len(y_true) == 0:
        raise EmptyDataset("cannot evaluate on an empty test set")
    t, p = encode_labels(y_true), encode_labels(y_pred)
    k = len(CLASSES)
    cm = np.zeros((k, k), dtype=int)
    np.add.at(cm, (t, p), 1)
    support = cm.sum(axis=1)
    predicted = cm.sum(axis=0)
    diag = np.diag(cm).astype(float)
    recall = np.divide(diag, support, out=np.zeros(k), where=support > 0)
    precision = np.divide(diag, predicted, out=np.zeros(k), where=predicted > 0)
    denom = precision + recall
    f1 = np.divide(2 * precision * recall, denom, out=np.zeros(k), where=denom > 0)
    total = int(support.sum())
    return EvalReport(
        confusion_matrix=cm,
        accuracy=float(diag.sum() / total),
        weighted_f1=float((f1 * support).sum() / total),
        per_class_recall=tuple(float(r) for r in recall),
    )


def evaluate(tree: TreeNode, x, y) -> EvalReport:
    return evaluate_predictions(list(y), predict_many(tree, x))


def kfold_indices(n: int, seed: int, n_folds: int = 5) -> list[np.ndarray]:
    order = np.random.default_rng(seed).permutation(n)
    return [np.sort(f) for f in np.array_split(order, n_folds)]


def train_test_split(labels: Sequence[str], seed: int, test_fraction: float = 0.2, stratify: bool = False):
    """(train indices, test indices), plain shuffle unless ``stratify``."""
    n = len(labels)
    rng = np.random.default_rng(seed)
    if not stratify:
        order = rng.permutation(n)
        n_test = int(round(test_fraction * n))
        return np.sort(order[n_test:]), np.sort(order[:n_test])
    labels = np.asarray(labels)
    test = []
    for c in CLASSES:
        idx = np.flatnonzero(labels == c)
        idx = rng.permutation(idx)
        test.extend(idx[: int(round(test_fraction * len(idx)))])
    test = np.sort(np.array(test, dtype=int))
    train = np.setdiff1d(np.arange(n), test)
    return train, test


def cross_validate(x, y, grid=DEFAULT_GRID, seed: int = 0, n_folds: int = 5):
    """Grid point with the highest mean weighted F1 over seeded folds.

    Ties prefer smaller depth, then larger minimum leaf size. Returns
    ((max_depth, min_samples_leaf), {grid point: mean F1}).
    """
    x = np.asarray(x, dtype=float)
    y = list(y)
    if len(y) < n_folds:
        raise ValueError(f"need at least {n_folds} samples for {n_folds}-fold cross-validation")
    folds = kfold_indices(len(y), seed, n_folds)
    y_arr = np.asarray(y)
    scores = {}
    for depth, min_leaf in grid:
        f1s = []
        for fold in folds:
            train = np.setdiff1d(np.arange(len(y)), fold)
            tree = train_tree(x[train], y_arr[train], depth, min_leaf)
            f1s.append(evaluate(tree, x[fold], y_arr[fold]).weighted_f1)
        scores[(depth, min_leaf)] = float(np.mean(f1s))
    best_score = max(scores.values())
    tied = [g for g, s in scores.items() if s >= best_score - GAIN_TOL]
    best = min(tied, key=lambda g: (g[0] if g[0] is not None else math.inf, -g[1]))
    return best, scores


@dataclass
class ClassifierRun:
    hyperparameters: tuple[int, int]
    cv_scores: dict
    tree: TreeNode
    report: EvalReport
    train_index: np.ndarray
    test_index: np.ndarray


def run_classifier(
    x, y, seed: int, grid=DEFAULT_GRID, test_fraction: float = 0.2, stratify: bool = False
) -> ClassifierRun:
    """Split, tune on the training part, refit, and score on the held-out part."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(list(y))
    ss = np.random.SeedSequence(seed).generate_state(2)
    train, test = train_test_split(y, int(ss[0]), test_fraction, stratify)
    best, scores = cross_validate(x[train], y[train], grid, int(ss[1]))
    tree = train_tree(x[train], y[train], *best)
    report = evaluate(tree, x[test], y[test])
    return ClassifierRun(best, scores, tree, report, train, test)


def dump_tree(tree: TreeNode) -> str:
    """One line per node in preorder.

    internal: ``<id> split <feature> <threshold> <left id> <right id>``
    leaf:     ``<id> leaf <count BDM> <count Disbeliever> <count Oscillator> <label>``
    """
    lines = []

    def visit(node) -> int:
        nid = len(lines)
        lines.append(None)
        if node.is_leaf:
            counts = " ".join(str(c) for c in node.class_counts)
            lines[nid] = f"{nid} leaf {counts} {node.predicted_label}"
        else:
            left = visit(node.left)
            right = visit(node.right)
            lines[nid] = f"{nid} split {node.feature_name} {node.threshold!r} {left} {right}"
        return nid

    visit(tree)
    return "\n".join(lines) + "\n"


def load_tree(text: str, feature_names: Sequence[str] = tables.PREDICTIVE_DIMENSIONS) -> TreeNode:
    names = tuple(feature_names)
    rows = {}
    for line in text.strip().splitlines():
        parts = line.split()
        rows[int(parts[0])] = parts[1:]

    def build(nid) -> TreeNode:
        kind, *rest = rows[nid]
        if kind == "leaf":
            return TreeNode(tuple(int(c) for c in rest[: len(CLASSES)]), feature_names=names)
        feature, threshold, left, right = rest
        left_node, right_node = build(int(left)), build(int(right))
        counts = tuple(a + b for a, b in zip(left_node.class_counts, right_node.class_counts))
        return TreeNode(counts, names.index(feature), float(threshold), left_node, right_node, feature_names=names)

    return build(0)
