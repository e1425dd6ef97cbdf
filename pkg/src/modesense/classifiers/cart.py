"""Classification tree (CART) with weakest-link cost-complexity pruning."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._treekernels import build_tree, leaf_ids


@dataclass
class Tree:
    """Flat array representation of one grown tree.

    feature[v] == -1 marks a leaf; counts[v] are per-class training counts
    at node v (internal nodes keep theirs for pruning and diagnostics).
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray
    importances: np.ndarray
    total_decrease: float

    def n_nodes(self) -> int:
        return len(self.feature)

    def n_internal(self) -> int:
        return int(np.sum(self.feature >= 0))

    def depth(self) -> int:
        depths = np.zeros(self.n_nodes(), dtype=np.int64)
        best = 0
        for v in range(self.n_nodes()):
            if self.feature[v] >= 0:
                depths[self.left[v]] = depths[v] + 1
                depths[self.right[v]] = depths[v] + 1
            else:
                best = max(best, int(depths[v]))
        return best

    def leaf_probabilities(self, X: np.ndarray) -> np.ndarray:
        ids = leaf_ids(np.ascontiguousarray(X, dtype=np.float64),
                       self.feature, self.threshold, self.left, self.right)
        cnt = self.counts[ids]
        return cnt / cnt.sum(axis=1, keepdims=True)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "counts": self.counts.tolist(),
            "importances": self.importances.tolist(),
            "total_decrease": self.total_decrease,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "Tree":
        return cls(
            feature=np.asarray(payload["feature"], dtype=np.int64),
            threshold=np.asarray(payload["threshold"], dtype=np.float64),
            left=np.asarray(payload["left"], dtype=np.int64),
            right=np.asarray(payload["right"], dtype=np.int64),
            counts=np.asarray(payload["counts"], dtype=np.float64),
            importances=np.asarray(payload["importances"], dtype=np.float64),
            total_decrease=float(payload["total_decrease"]),
        )


def grow_tree(X: np.ndarray, codes: np.ndarray, n_classes: int,
              min_leaf: int = 1, mtry: int | None = None, seed: int = 1) -> Tree:
    """Grow an unpruned tree; codes must be int64 class codes 0..n_classes-1."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    codes = np.ascontiguousarray(codes, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("training matrix must be 2-D and non-empty")
    d = X.shape[1]
    if mtry is None:
        mtry = d
    if not 1 <= mtry <= d:
        raise ValueError(f"mtry must be in [1, {d}], got {mtry}")
    if min_leaf < 1:
        raise ValueError(f"min_leaf must be >= 1, got {min_leaf}")
    feature, threshold, left, right, counts, n_nodes, imp, total = build_tree(
        X, codes, n_classes, min_leaf, mtry, np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    return Tree(feature.copy(), threshold.copy(), left.copy(), right.copy(),
                counts.copy(), imp, float(total))


def _subtree_stats(tree: Tree, node: int, n_root: float) -> tuple[float, int]:
    """(sum of leaf misclassification costs, number of leaves) under node."""
    if tree.feature[node] < 0:
        cnt = tree.counts[node]
        return (cnt.sum() - cnt.max()) / n_root, 1
    lc, ll = _subtree_stats(tree, int(tree.left[node]), n_root)
    rc, rl = _subtree_stats(tree, int(tree.right[node]), n_root)
    return lc + rc, ll + rl


def prune_weakest_links(tree: Tree, level: int) -> Tree:
    """Collapse the ``level`` weakest links (lowest cost-complexity alpha).

    Each round removes the internal node whose collapse raises training
    misclassification cost the least per removed leaf; ties go to the lowest
    node id. A level beyond the number of internal nodes prunes to the root.
    """
    if level < 0:
        raise ValueError(f"pruning level must be >= 0, got {level}")
    n_root = float(tree.counts[0].sum())
    for _ in range(level):
        internal = [v for v in range(tree.n_nodes()) if tree.feature[v] >= 0]
        if not internal:
            break
        best_node = -1
        best_alpha = np.inf
        for v in internal:
            cnt = tree.counts[v]
            own_cost = (cnt.sum() - cnt.max()) / n_root
            sub_cost, n_leaves = _subtree_stats(tree, v, n_root)
            alpha = (own_cost - sub_cost) / (n_leaves - 1)
            if alpha < best_alpha - 1e-15:
                best_alpha = alpha
                best_node = v
        tree.feature[best_node] = -1
    return tree


@dataclass
class CartModel:
    """Pruned classification tree over an arbitrary label set."""

    tree: Tree
    classes: np.ndarray
    pruning_level: int = 0
    min_leaf: int = 1

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        self._check_dim(X)
        return self.tree.leaf_probabilities(X)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.classes[np.argmax(self.predict_proba(X), axis=1)]

    def _check_dim(self, X: np.ndarray) -> None:
        d = len(self.tree.importances)
        if X.shape[1] != d:
            raise ValueError(f"expected {d} features, got {X.shape[1]}")

    def to_dict(self) -> dict:
        return {
            "kind": "cart",
            "classes": self.classes.tolist(),
            "pruning_level": self.pruning_level,
            "min_leaf": self.min_leaf,
            "tree": self.tree.to_dict(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "CartModel":
        return cls(tree=Tree.from_dict(payload["tree"]),
                   classes=np.asarray(payload["classes"], dtype=np.int64),
                   pruning_level=int(payload["pruning_level"]),
                   min_leaf=int(payload["min_leaf"]))


def cart_train(X: np.ndarray, y: np.ndarray, pruning_level: int = 0,
               min_leaf: int = 1) -> CartModel:
    """Grow to purity under min_leaf, then cut ``pruning_level`` weakest links."""
    y = np.asarray(y, dtype=np.int64)
    classes, codes = np.unique(y, return_inverse=True)
    tree = grow_tree(np.asarray(X, dtype=float), codes.astype(np.int64),
                     n_classes=len(classes), min_leaf=min_leaf)
    tree = prune_weakest_links(tree, pruning_level)
    return CartModel(tree=tree, classes=classes, pruning_level=pruning_level,
                     min_leaf=min_leaf)
