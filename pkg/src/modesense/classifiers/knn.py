"""K-nearest-neighbor classifier (exhaustive Euclidean scan)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class KnnModel:
    train_x: np.ndarray
    train_y: np.ndarray
    k: int
    classes: np.ndarray

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Vote fractions over the K nearest training rows.

        Distance ties resolve to the lower training-row index (stable sort),
        so predictions are reproducible on gridded or duplicated data.
        """
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.train_x.shape[1]:
            raise ValueError(
                f"query has {X.shape[1]} features, model expects {self.train_x.shape[1]}")
        d2 = (
            np.sum(X * X, axis=1)[:, None]
            - 2.0 * X @ self.train_x.T
            + np.sum(self.train_x * self.train_x, axis=1)[None, :]
        )
        neighbors = np.argsort(d2, axis=1, kind="stable")[:, :self.k]
        votes = np.zeros((X.shape[0], len(self.classes)))
        codes = np.searchsorted(self.classes, self.train_y)
        for col in range(self.k):
            np.add.at(votes, (np.arange(X.shape[0]), codes[neighbors[:, col]]), 1.0)
        return votes / self.k

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.classes[np.argmax(self.predict_proba(X), axis=1)]

    def to_dict(self) -> dict:
        return {
            "kind": "knn",
            "k": self.k,
            "classes": self.classes.tolist(),
            "train_x": self.train_x.tolist(),
            "train_y": self.train_y.tolist(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "KnnModel":
        return cls(train_x=np.asarray(payload["train_x"], dtype=float),
                   train_y=np.asarray(payload["train_y"], dtype=np.int64),
                   k=int(payload["k"]),
                   classes=np.asarray(payload["classes"], dtype=np.int64))


def knn_train(X: np.ndarray, y: np.ndarray, k: int = 7) -> KnnModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("training matrix must be 2-D and non-empty")
    if not 1 <= k <= X.shape[0]:
        raise ValueError(f"k must be in [1, {X.shape[0]}], got {k}")
    return KnnModel(train_x=X.copy(), train_y=y.copy(), k=k, classes=np.unique(y))
