"""Random forest: bootstrapped CART trees with per-split feature subsets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..util import subseed
from .cart import CartModel, Tree, grow_tree


@dataclass
class RfModel:
    trees: list[Tree]
    tree_seeds: list[int]
    classes: np.ndarray
    mtry: int
    bootstrap: bool = True

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Vote fraction per class: each tree votes its leaf-majority class
        (leaf count ties to the lowest class id)."""
        X = np.atleast_2d(np.ascontiguousarray(X, dtype=np.float64))
        votes = np.zeros((X.shape[0], len(self.classes)))
        for tree in self.trees:
            winners = np.argmax(tree.leaf_probabilities(X), axis=1)
            votes[np.arange(X.shape[0]), winners] += 1.0
        return votes / self.n_trees

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.classes[np.argmax(self.predict_proba(X), axis=1)]

    def feature_importances(self) -> tuple[np.ndarray, float]:
        """(mean per-feature Gini decrease across trees, mean total decrease)."""
        imp = np.mean([t.importances for t in self.trees], axis=0)
        total = float(np.mean([t.total_decrease for t in self.trees]))
        return imp, total

    def to_dict(self) -> dict:
        return {
            "kind": "rf",
            "classes": self.classes.tolist(),
            "mtry": self.mtry,
            "bootstrap": self.bootstrap,
            "tree_seeds": [int(s) for s in self.tree_seeds],
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "RfModel":
        return cls(trees=[Tree.from_dict(t) for t in payload["trees"]],
                   tree_seeds=list(payload["tree_seeds"]),
                   classes=np.asarray(payload["classes"], dtype=np.int64),
                   mtry=int(payload["mtry"]),
                   bootstrap=bool(payload["bootstrap"]))


def rf_train(X: np.ndarray, y: np.ndarray, n_trees: int = 200,
             mtry: int | None = None, seed: int = 0,
             bootstrap: bool = True) -> RfModel:
    """Grow n_trees unpruned trees (min_leaf 1) on bootstrap resamples.

    mtry defaults to floor(sqrt(feature count)). Every tree derives its
    bootstrap sample and split randomness from (seed, tree index), so the
    forest is reproducible and trees can be rebuilt individually.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if n_trees < 1:
        raise ValueError(f"n_trees must be >= 1, got {n_trees}")
    n, d = X.shape
    if mtry is None:
        mtry = max(1, int(np.sqrt(d)))
    if not 1 <= mtry <= d:
        raise ValueError(f"mtry must be in [1, {d}], got {mtry}")
    classes, codes = np.unique(y, return_inverse=True)
    codes = codes.astype(np.int64)

    trees = []
    tree_seeds = []
    for t in range(n_trees):
        boot_seed = subseed(seed, "bootstrap", t)
        split_seed = subseed(seed, "split", t)
        if bootstrap:
            rows = np.random.default_rng(boot_seed).integers(0, n, n)
            Xb, cb = X[rows], codes[rows]
        else:
            Xb, cb = X, codes
        trees.append(grow_tree(Xb, cb, n_classes=len(classes), min_leaf=1,
                               mtry=mtry, seed=split_seed))
        tree_seeds.append(boot_seed)
    return RfModel(trees=trees, tree_seeds=tree_seeds, classes=classes,
                   mtry=mtry, bootstrap=bootstrap)


def rf_as_cart(model: RfModel) -> CartModel:
    """View a single-tree forest as a CartModel (diagnostics/tests)."""
    if model.n_trees != 1:
        raise ValueError("rf_as_cart needs a single-tree forest")
    return CartModel(tree=model.trees[0], classes=model.classes)
