"""CART decision tree (Gini) with grid search over leave-one-out accuracy.

Split search is exhaustive over midpoints between consecutive distinct
feature values.  Ties go to the lowest feature index, then the lowest
threshold, so fitting is reproducible across runs and platforms.
Samples with ``value <= threshold`` go left.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .errors import InputError, InvariantError, ModelFormatError
from .metrics import FEATURE_NAMES, FeatureVector

_GAIN_TOL = 1e-12


@dataclass
class Leaf:
    class_counts: dict[str, int]
    prediction: str


@dataclass
class Split:
    feature_index: int
    threshold: float
    left: "Leaf | Split"
    right: "Leaf | Split"


TreeNode = Leaf | Split


@dataclass(frozen=True)
class Hyperparameters:
    max_depth: int | None = None
    min_samples_leaf: int = 1
    min_samples_split: int = 2


@dataclass(frozen=True)
class GridSpec:
    max_depth: tuple[int | None, ...] = (2, 3, 4, 5, 6)
    min_samples_leaf: tuple[int, ...] = (1, 2, 5)
    min_samples_split: tuple[int, ...] = (2, 5)

    def __post_init__(self) -> None:
        if not (self.max_depth and self.min_samples_leaf and self.min_samples_split):
            raise ValueError("every grid dimension needs at least one candidate")

    def points(self) -> list[Hyperparameters]:
        return [
            Hyperparameters(d, leaf, split)
            for d, leaf, split in itertools.product(self.max_depth, self.min_samples_leaf, self.min_samples_split)
        ]


@dataclass
class TrainedTree:
    root: TreeNode
    hyperparameters: Hyperparameters
    classes: tuple[str, ...]
    feature_names: tuple[str, ...] = FEATURE_NAMES
    importances: tuple[float, ...] = field(default=(0.0,) * len(FEATURE_NAMES))
    loocv_accuracy: float | None = None

    def depth(self) -> int:
        def walk(node: TreeNode) -> int:
            return 0 if isinstance(node, Leaf) else 1 + max(walk(node.left), walk(node.right))
        return walk(self.root)

    def n_splits(self) -> int:
        def walk(node: TreeNode) -> int:
            return 0 if isinstance(node, Leaf) else 1 + walk(node.left) + walk(node.right)
        return walk(self.root)


# --------------------------------------------------------------------------
# fitting


def gini(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - np.dot(p, p))


def _make_leaf(y: np.ndarray, classes: Sequence[str]) -> Leaf:
    counts = np.bincount(y, minlength=len(classes))
    # argmax returns the first maximum, i.e. the lexicographically smallest class
    return Leaf({c: int(k) for c, k in zip(classes, counts) if k}, classes[int(np.argmax(counts))])


def _best_split(X: np.ndarray, y: np.ndarray, n_classes: int, min_leaf: int) -> tuple[int, float, float] | None:
    n = len(y)
    onehot = np.eye(n_classes)[y]
    parent = gini(onehot.sum(axis=0))
    best: tuple[int, float, float] | None = None
    for f in range(X.shape[1]):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        left = np.cumsum(onehot[order], axis=0)[:-1]  # left counts after position p
        right = onehot.sum(axis=0) - left
        n_left = np.arange(1, n)
        n_right = n - n_left
        valid = (xs[:-1] < xs[1:]) & (n_left >= min_leaf) & (n_right >= min_leaf)
        if not valid.any():
            continue
        g_left = 1.0 - ((left / n_left[:, None]) ** 2).sum(axis=1)
        g_right = 1.0 - ((right / n_right[:, None]) ** 2).sum(axis=1)
        gain = parent - (n_left * g_left + n_right * g_right) / n
        gain = np.where(valid, gain, -np.inf)
        # lowest threshold among gains equal to the best within tolerance
        p = int(np.argmax(gain >= gain.max() - _GAIN_TOL))
        if best is None or gain[p] > best[2] + _GAIN_TOL:
            threshold = (xs[p] + xs[p + 1]) / 2.0
            if not threshold < xs[p + 1]:  # midpoint rounded onto the upper value
                threshold = xs[p]
            best = (f, float(threshold), float(gain[p]))
    return best


def _grow(X, y, classes, params: Hyperparameters, depth: int) -> TreeNode:
    counts = np.bincount(y, minlength=len(classes))
    stop = (
        (params.max_depth is not None and depth >= params.max_depth)
        or len(y) < params.min_samples_split
        or np.count_nonzero(counts) <= 1
    )
    if stop:
        return _make_leaf(y, classes)
    found = _best_split(X, y, len(classes), params.min_samples_leaf)
    if found is None:
        return _make_leaf(y, classes)
    f, threshold, _ = found
    mask = X[:, f] <= threshold
    return Split(
        f, threshold,
        _grow(X[mask], y[mask], classes, params, depth + 1),
        _grow(X[~mask], y[~mask], classes, params, depth + 1),
    )


def _as_arrays(vectors: Sequence[FeatureVector]) -> tuple[np.ndarray, list[str | None]]:
    X = np.array([v.values() for v in vectors], dtype=np.float64).reshape(len(vectors), len(FEATURE_NAMES))
    return X, [v.label for v in vectors]


def fit_arrays(X: np.ndarray, labels: Sequence[str], params: Hyperparameters = Hyperparameters(),
               classes: Sequence[str] | None = None) -> TrainedTree:
    X = np.asarray(X, dtype=np.float64)
    if len(labels) < 2 or X.shape[0] != len(labels):
        raise ValueError("fit needs at least two labelled samples")
    if not np.isfinite(X).all():
        raise InputError("non-finite feature value in training data")
    classes = tuple(sorted(set(labels))) if classes is None else tuple(classes)
    index = {c: k for k, c in enumerate(classes)}
    y = np.array([index[c] for c in labels], dtype=np.intp)
    names = FEATURE_NAMES if X.shape[1] == len(FEATURE_NAMES) else tuple(f"x{k}" for k in range(X.shape[1]))
    tree = TrainedTree(_grow(X, y, classes, params, 0), params, classes, names)
    tree.importances = tuple(gini_importance_arrays(tree, X, labels))
    return tree


def fit_tree(vectors: Sequence[FeatureVector], params: Hyperparameters = Hyperparameters()) -> TrainedTree:
    X, labels = _as_arrays(vectors)
    unlabeled = [v.document_id for v, lab in zip(vectors, labels) if lab is None]
    if unlabeled:
        raise InputError(f"unlabeled feature rows: {', '.join(unlabeled)}")
    return fit_arrays(X, labels, params)


# --------------------------------------------------------------------------
# importances


def gini_importance_arrays(tree: TrainedTree, X: np.ndarray, labels: Sequence[str]) -> list[float]:
    """Mean decrease in Gini impurity per feature, normalized to sum to 1.

    When every split has zero impurity decrease (possible for XOR-like
    data cut short by ``max_depth``) the split features share the mass in
    proportion to the samples they route.
    """
    index = {c: k for k, c in enumerate(tree.classes)}
    y = np.array([index[c] for c in labels], dtype=np.intp)
    n_total = len(y)
    n_features = len(tree.feature_names)
    gain = np.zeros(n_features)
    routed = np.zeros(n_features)

    def walk(node: TreeNode, rows: np.ndarray) -> None:
        if isinstance(node, Leaf) or len(rows) == 0:
            return
        mask = X[rows, node.feature_index] <= node.threshold
        left, right = rows[mask], rows[~mask]
        k = len(tree.classes)
        parent = gini(np.bincount(y[rows], minlength=k))
        children = (len(left) * gini(np.bincount(y[left], minlength=k))
                    + len(right) * gini(np.bincount(y[right], minlength=k))) / len(rows)
        gain[node.feature_index] += len(rows) / n_total * (parent - children)
        routed[node.feature_index] += len(rows) / n_total
        walk(node.left, left)
        walk(node.right, right)

    walk(tree.root, np.arange(n_total))
    gain[gain < _GAIN_TOL] = 0.0  # float noise from zero-gain splits
    total = gain.sum()
    if total > 0:
        return list(gain / total)
    if routed.sum() > 0:
        return list(routed / routed.sum())
    return [0.0] * n_features


def gini_importance(tree: TrainedTree, vectors: Sequence[FeatureVector]) -> list[float]:
    X, labels = _as_arrays(vectors)
    return gini_importance_arrays(tree, X, labels)


# --------------------------------------------------------------------------
# prediction


def predict_values(tree: TrainedTree, values: Sequence[float]) -> str:
    values = [float(v) for v in values]
    if len(values) != len(tree.feature_names):
        raise InputError(f"expected {len(tree.feature_names)} features, got {len(values)}")
    if not all(math.isfinite(v) for v in values):
        raise InputError(f"non-finite feature value in {values}")
    node = tree.root
    while isinstance(node, Split):
        node = node.left if values[node.feature_index] <= node.threshold else node.right
    return node.prediction


def predict(tree: TrainedTree, vector: FeatureVector) -> str:
    return predict_values(tree, vector.values())


# --------------------------------------------------------------------------
# model selection


def loocv_accuracy(X: np.ndarray, labels: Sequence[str], params: Hyperparameters) -> float:
    classes = tuple(sorted(set(labels)))
    index = {c: k for k, c in enumerate(classes)}
    y = np.array([index[c] for c in labels], dtype=np.intp)
    n = len(labels)
    correct = 0
    for k in range(n):
        keep = np.arange(n) != k
        node = _grow(X[keep], y[keep], classes, params, 0)
        while isinstance(node, Split):
            node = node.left if X[k, node.feature_index] <= node.threshold else node.right
        correct += node.prediction == labels[k]
    return correct / n


def _selection_key(params: Hyperparameters) -> tuple:
    depth = math.inf if params.max_depth is None else params.max_depth
    return (depth, -params.min_samples_leaf, params.min_samples_split)


def loocv_arrays(X: np.ndarray, labels: Sequence[str], grid: GridSpec = GridSpec()) -> TrainedTree:
    X = np.asarray(X, dtype=np.float64)
    if len(labels) < 3:
        raise InputError("leave-one-out model selection needs at least three samples")
    points = grid.points()
    if not points:
        raise ValueError("empty grid")
    scored = [(loocv_accuracy(X, labels, p), p) for p in points]
    best_score = max(score for score, _ in scored)
    # max accuracy, then smallest depth, then largest min_samples_leaf
    best = min((p for score, p in scored if score == best_score), key=_selection_key)
    tree = fit_arrays(X, labels, best)
    tree.loocv_accuracy = best_score
    return tree


def loocv(vectors: Sequence[FeatureVector], grid: GridSpec = GridSpec()) -> TrainedTree:
    X, labels = _as_arrays(vectors)
    unlabeled = [v.document_id for v, lab in zip(vectors, labels) if lab is None]
    if unlabeled:
        raise InputError(f"unlabeled feature rows: {', '.join(unlabeled)}")
    return loocv_arrays(X, labels, grid)


# --------------------------------------------------------------------------
# persistence


def _node_to_json(node: TreeNode) -> dict[str, Any]:
    if isinstance(node, Leaf):
        return {"class_counts": dict(node.class_counts), "prediction": node.prediction}
    return {
        "feature_index": node.feature_index,
        "threshold": node.threshold,
        "left": _node_to_json(node.left),
        "right": _node_to_json(node.right),
    }


def _node_from_json(raw: Any, n_features: int, classes: Sequence[str]) -> TreeNode:
    if not isinstance(raw, dict):
        raise ModelFormatError("tree node must be an object")
    if "prediction" in raw:
        counts = raw.get("class_counts")
        if not isinstance(counts, dict) or not counts or raw["prediction"] not in classes:
            raise ModelFormatError("leaf needs non-empty class_counts and a known prediction")
        return Leaf({str(k): int(v) for k, v in counts.items()}, raw["prediction"])
    try:
        f, threshold = raw["feature_index"], float(raw["threshold"])
        left, right = raw["left"], raw["right"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed split node: {exc}") from None
    if not isinstance(f, int) or not 0 <= f < n_features:
        raise ModelFormatError(f"split feature_index {f!r} out of range")
    return Split(f, threshold, _node_from_json(left, n_features, classes), _node_from_json(right, n_features, classes))


def save_model(tree: TrainedTree) -> bytes:
    p = tree.hyperparameters
    payload = {
        "hyperparameters": {
            "max_depth": p.max_depth,
            "min_samples_leaf": p.min_samples_leaf,
            "min_samples_split": p.min_samples_split,
        },
        "classes": list(tree.classes),
        "feature_names": list(tree.feature_names),
        "importances": [float(x) for x in tree.importances],
        "loocv_accuracy": tree.loocv_accuracy,
        "root": _node_to_json(tree.root),
    }
    return (json.dumps(payload, indent=2) + "\n").encode("utf-8")


def load_model(data: bytes) -> TrainedTree:
    try:
        raw = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ModelFormatError(f"model file is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ModelFormatError("model file must hold a JSON object")
    try:
        hp = raw["hyperparameters"]
        params = Hyperparameters(hp["max_depth"], int(hp["min_samples_leaf"]), int(hp["min_samples_split"]))
        names = tuple(raw["feature_names"])
        importances = tuple(float(x) for x in raw["importances"])
        classes = tuple(raw["classes"])
        accuracy = raw["loocv_accuracy"]
        root = raw["root"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"model file does not match the schema: {exc!r}") from None
    if len(importances) != len(names):
        raise ModelFormatError("importances and feature_names differ in length")
    tree = TrainedTree(_node_from_json(root, len(names), classes), params, classes, names, importances,
                       None if accuracy is None else float(accuracy))
    return tree


def check_importances(tree: TrainedTree) -> None:
    total = math.fsum(tree.importances)
    if any(x < 0 for x in tree.importances):
        raise InvariantError("negative feature importance")
    if tree.n_splits() and abs(total - 1.0) > 1e-9:
        raise InvariantError(f"importances sum to {total!r}, not 1")
