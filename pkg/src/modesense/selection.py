"""Per-task feature selection via random-forest Gini importance.

Each classification task (the 5-mode task, or one mode pair) gets its own
importance ranking and its own best-k subset, because the features that
separate all modes at once are generally not the ones that separate a
specific pair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classifiers import rf_train
from .datagen import ModeLabel
from .util import format_float

DEFAULT_RANKING_TREES = 200
DEFAULT_SUBSET_K = 100

ALL_MODES_TASK = "all-modes"


def pair_task_id(a: int, b: int) -> str:
    a, b = sorted((int(a), int(b)))
    return f"{ModeLabel(a).label.lower()}-{ModeLabel(b).label.lower()}"


@dataclass
class ImportanceRanking:
    """Mean decrease in Gini impurity per feature, for one task."""

    task: str
    scores: np.ndarray
    mean_total_decrease: float  # average per-tree total; equals scores.sum()

    def validate(self) -> None:
        if np.any(self.scores < 0):
            raise ValueError("importance scores must be non-negative")


@dataclass
class FeatureSubset:
    """The k best feature ids, sorted by descending score then ascending id."""

    task: str
    ids: np.ndarray

    def __post_init__(self):
        self.ids = np.asarray(self.ids, dtype=np.int64)
        if len(np.unique(self.ids)) != len(self.ids):
            raise ValueError("feature subset ids must be unique")


def rank_features(X: np.ndarray, y: np.ndarray, n_trees: int = DEFAULT_RANKING_TREES,
                  seed: int = 0, task: str = ALL_MODES_TASK) -> ImportanceRanking:
    """Train a forest and return its mean Gini-decrease importances.

    Features never chosen by any split score exactly 0. Scores sum to the
    average total impurity decrease of one tree.
    """
    y = np.asarray(y, dtype=np.int64)
    if len(np.unique(y)) < 2:
        raise ValueError("feature ranking needs at least 2 classes")
    forest = rf_train(X, y, n_trees=n_trees, seed=seed)
    scores, total = forest.feature_importances()
    ranking = ImportanceRanking(task=task, scores=scores, mean_total_decrease=total)
    ranking.validate()
    return ranking


def select_top_k(ranking: ImportanceRanking, k: int = DEFAULT_SUBSET_K) -> FeatureSubset:
    """Keep the k highest-scoring ids; score ties break to the lower id."""
    d = len(ranking.scores)
    if not 1 <= k <= d:
        raise ValueError(f"k must be in [1, {d}], got {k}")
    order = np.lexsort((np.arange(d), -ranking.scores))
    return FeatureSubset(task=ranking.task, ids=order[:k])


def ranking_csv(rankings: list[ImportanceRanking], names: list[str]) -> str:
    """Importance table `task,feature_id,feature_name,score` (descending score)."""
    lines = ["task,feature_id,feature_name,score"]
    for ranking in rankings:
        order = np.lexsort((np.arange(len(ranking.scores)), -ranking.scores))
        for fid in order:
            lines.append(
                f"{ranking.task},{fid},{names[fid]},{format_float(ranking.scores[fid])}")
    lines.append("")
    return "\n".join(lines)


def subsets_jsonable(subsets: list[FeatureSubset]) -> dict:
    return {s.task: [int(i) for i in s.ids] for s in subsets}
