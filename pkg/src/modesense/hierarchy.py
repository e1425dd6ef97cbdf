"""Two-layer classification with Bayes-rule fusion of the layers.

The first layer is one multiclass model over all five modes; its probability
vector acts as the prior and nominates the top-2 candidate modes. The second
layer is a pool of 10 binary specialists, one per unordered mode pair, each
trained on its own best-k feature subset and scaler; the matching
specialist's probabilities act as the likelihood. The fused posterior over
the two candidates is

    posterior(m) = p1(m) * q(m) / (p1(i) q(i) + p1(j) q(j)),   m in {i, j}

and the winner is the posterior argmax (ties stay with the first-layer
winner i). Modes outside the candidate pair get posterior 0 by construction.

Whether running the second layer is worth it is decided from held-out
outcomes: correctness indicators of each classifier are modeled as
Bernoulli draws with a conjugate Beta prior, giving posterior-mean estimates
of the first layer's top-1 accuracy (P1), the top-2 gain (delta), and each
specialist's accuracy (Pk). The second layer pays off when

    delta > P1 * (1 - c * sum(Pk)) / (c * sum(Pk)),   c = 1/10 (balanced data)
"""

from __future__ import annotations

import itertools
import json
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .classifiers import (cart_train, knn_train, model_from_jsonable,
                          model_to_jsonable, rf_train, svm_train)
from .datagen import ModeLabel
from .features import Scaler, fit_scaler
from .selection import (ALL_MODES_TASK, DEFAULT_RANKING_TREES, DEFAULT_SUBSET_K,
                        pair_task_id, rank_features, select_top_k)
from .util import atomic_write_text, parallel_map, subseed

ALGORITHMS = ("knn", "cart", "rf", "svm")

BUNDLE_MANIFEST = "manifest.json"
BUNDLE_FORMAT_VERSION = 1

#: tolerated relative deviation of a mode's share from perfect balance
_BALANCE_SLACK = 0.05


@dataclass(frozen=True)
class TrainerConfig:
    """Algorithms and hyperparameters for both layers.

    ``algorithm`` is the first layer (and the traditional single-layer
    model); ``second_algorithm`` defaults to the same algorithm, or names a
    heterogeneous variant such as rf first / svm second.
    """

    algorithm: str = "rf"
    second_algorithm: str | None = None
    knn_k: int = 7
    cart_pruning: int = 6
    min_leaf: int = 1
    rf_trees: int = 200
    svm_c: float = 10.0
    svm_gamma: float | None = None
    svm_tol: float = 1e-3
    ranking_trees: int = DEFAULT_RANKING_TREES
    subset_k: int = DEFAULT_SUBSET_K
    seed: int = 0
    threads: int = 1

    def validate(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        second = self.second_algorithm
        if second is not None and second not in ALGORITHMS:
            raise ValueError(f"unknown second-layer algorithm {second!r}")

    @property
    def layer2(self) -> str:
        return self.second_algorithm or self.algorithm


def _fit_algorithm(name: str, X: np.ndarray, y: np.ndarray, cfg: TrainerConfig,
                   seed: int):
    if name == "knn":
        return knn_train(X, y, k=cfg.knn_k)
    if name == "cart":
        return cart_train(X, y, pruning_level=cfg.cart_pruning, min_leaf=cfg.min_leaf)
    if name == "rf":
        return rf_train(X, y, n_trees=cfg.rf_trees, seed=seed)
    if name == "svm":
        return svm_train(X, y, C=cfg.svm_c, gamma=cfg.svm_gamma, tol=cfg.svm_tol)
    raise ValueError(f"unknown algorithm {name!r}")


@dataclass
class SubModel:
    """One task-specific unit: feature subset + scaler + trained model."""

    subset_ids: np.ndarray
    scaler: Scaler
    model: object

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.model.predict_proba(self.scaler.transform(X[:, self.subset_ids]))

    def predict(self, X: np.ndarray) -> np.ndarray:
        classes = self.model.classes
        return classes[np.argmax(self.predict_proba(X), axis=1)]

    def to_jsonable(self) -> dict:
        return {
            "subset_ids": [int(i) for i in self.subset_ids],
            "scaler": self.scaler.to_dict(),
            "model": model_to_jsonable(self.model),
        }

    @classmethod
    def from_jsonable(cls, payload: dict) -> "SubModel":
        return cls(subset_ids=np.asarray(payload["subset_ids"], dtype=np.int64),
                   scaler=Scaler.from_dict(payload["scaler"]),
                   model=model_from_jsonable(payload["model"]))


@dataclass
class HierarchicalModel:
    first: SubModel
    pairs: dict[tuple[int, int], SubModel]
    classes: np.ndarray
    config: TrainerConfig
    c: float = 0.1

    def pair_model(self, a: int, b: int) -> SubModel:
        return self.pairs[tuple(sorted((int(a), int(b))))]


@dataclass
class LayerOutcome:
    first_probs: np.ndarray  # over the 5 modes, class order = model.classes
    candidates: tuple[int, int]  # (i, j): first-layer top-1 and runner-up
    second_probs: tuple[float, float]  # specialist q over (i, j)
    posterior: tuple[float, float]  # fused posterior over (i, j)
    final: int


def _mode_counts(y: np.ndarray) -> np.ndarray:
    return np.bincount(y, minlength=len(ModeLabel))


def train_hierarchy(X: np.ndarray, y: np.ndarray,
                    config: TrainerConfig | None = None) -> HierarchicalModel:
    """Select features, fit scalers, and train the 1 + 10 sub-models.

    X holds unscaled feature columns (any domain restriction already
    applied); every sub-model learns its own subset and scaler from the
    training rows it sees, so nothing here leaks across tasks or rows.
    """
    config = config or TrainerConfig()
    config.validate()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    counts = _mode_counts(y)
    missing = [ModeLabel(m).label for m in range(len(ModeLabel)) if counts[m] == 0]
    if missing:
        raise ValueError(f"training data is missing mode(s): {', '.join(missing)}")
    share = counts / counts.sum()
    if np.any(np.abs(share - 0.2) > _BALANCE_SLACK * 0.2):
        warnings.warn(
            "training data is imbalanced (>5% deviation from equal shares); "
            "the balance constant stays c=1/10", stacklevel=2)

    def fit_task(task: str, rows: np.ndarray, algorithm: str) -> SubModel:
        Xt, yt = X[rows], y[rows]
        ranking = rank_features(Xt, yt, n_trees=config.ranking_trees,
                                seed=subseed(config.seed, "rank", task), task=task)
        subset = select_top_k(ranking, k=config.subset_k)
        scaler = fit_scaler(Xt[:, subset.ids])
        model = _fit_algorithm(algorithm, scaler.transform(Xt[:, subset.ids]), yt,
                               config, seed=subseed(config.seed, "model", task))
        return SubModel(subset_ids=subset.ids, scaler=scaler, model=model)

    first = fit_task(ALL_MODES_TASK, np.arange(len(y)), config.algorithm)

    pair_keys = list(itertools.combinations(range(len(ModeLabel)), 2))

    def fit_pair(key: tuple[int, int]) -> SubModel:
        a, b = key
        rows = np.nonzero((y == a) | (y == b))[0]
        return fit_task(pair_task_id(a, b), rows, config.layer2)

    fitted = parallel_map(fit_pair, pair_keys, threads=config.threads)
    pairs = dict(zip(pair_keys, fitted))
    return HierarchicalModel(first=first, pairs=pairs,
                             classes=np.arange(len(ModeLabel)), config=config,
                             c=1.0 / len(pair_keys))


def classify_batch(model: HierarchicalModel, X: np.ndarray) -> list[LayerOutcome]:
    """Run the two layers and fuse them, batched by candidate pair."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    p1 = model.first.predict_proba(X)
    # stable descending sort: probability ties resolve to the lower mode index
    order = np.argsort(-p1, axis=1, kind="stable")
    top_i = order[:, 0]
    top_j = order[:, 1]

    outcomes: list[LayerOutcome | None] = [None] * X.shape[0]
    for key in sorted({tuple(sorted(ij)) for ij in zip(top_i.tolist(), top_j.tolist())}):
        a, b = key
        rows = np.nonzero(((top_i == a) & (top_j == b)) | ((top_i == b) & (top_j == a)))[0]
        sub = model.pair_model(a, b)
        q = sub.predict_proba(X[rows])  # columns follow sub.model.classes == [a, b]
        for r, row in enumerate(rows):
            i, j = int(top_i[row]), int(top_j[row])
            qi, qj = (q[r, 0], q[r, 1]) if i == a else (q[r, 1], q[r, 0])
            wi = p1[row, i] * qi
            wj = p1[row, j] * qj
            total = wi + wj
            if total > 0:
                post = (wi / total, wj / total)
            else:
                post = (0.5, 0.5)
            final = i if post[0] >= post[1] else j
            outcomes[row] = LayerOutcome(
                first_probs=p1[row], candidates=(i, j),
                second_probs=(float(qi), float(qj)),
                posterior=(float(post[0]), float(post[1])), final=final)
    return outcomes  # type: ignore[return-value]


def classify(model: HierarchicalModel, features: np.ndarray) -> LayerOutcome:
    return classify_batch(model, np.atleast_2d(features))[0]


def predict_modes(model: HierarchicalModel, X: np.ndarray) -> np.ndarray:
    return np.array([o.final for o in classify_batch(model, X)], dtype=np.int64)


# ---------------------------------------------------------------------------
# Beta-Bernoulli reliability estimation and the layer-benefit criterion
# ---------------------------------------------------------------------------

@dataclass
class BetaPosterior:
    prior_a: float
    prior_b: float
    successes: int
    trials: int

    @property
    def post_a(self) -> float:
        return self.prior_a + self.successes

    @property
    def post_b(self) -> float:
        return self.prior_b + self.trials - self.successes

    @property
    def mean(self) -> float:
        return self.post_a / (self.prior_a + self.prior_b + self.trials)


def estimate_beta_posterior(outcomes, a: float = 1.0, b: float = 1.0) -> BetaPosterior:
    """Conjugate update for a Bernoulli success probability.

    Posterior mean is (sum(outcomes) + a) / (a + b + N); a = b = 1 encodes an
    indifferent prior with mean 0.5.
    """
    if a <= 0 or b <= 0:
        raise ValueError(f"prior parameters must be positive, got a={a}, b={b}")
    arr = np.asarray(outcomes)
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        raise ValueError("outcomes must be binary (0/1)")
    return BetaPosterior(prior_a=float(a), prior_b=float(b),
                         successes=int(arr.sum()), trials=int(arr.size))


@dataclass
class BenefitEstimate:
    p1: float  # first-layer top-1 correctness
    delta: float  # gain from accepting the top-2 candidates
    pk: dict[str, float]  # per-pair specialist correctness
    c: float
    threshold: float
    beneficial: bool

    @property
    def ek(self) -> dict[str, float]:
        return {task: 1.0 - p for task, p in self.pk.items()}

    def to_jsonable(self) -> dict:
        return {
            "P1": self.p1,
            "Delta": self.delta,
            "Pk": dict(self.pk),
            "c": self.c,
            "threshold": self.threshold,
            "beneficial": self.beneficial,
        }


def benefit_from_rates(p1: float, delta: float, pk: dict[str, float],
                       c: float | None = None) -> BenefitEstimate:
    """Benefit test on already-estimated rates.

    The two-layer framework is beneficial when delta exceeds
    p1 * (1 - c*sum(pk)) / (c*sum(pk)).
    """
    if c is None:
        c = 1.0 / len(pk)
    scaled = c * sum(pk.values())
    if scaled <= 0:
        raise ValueError("degenerate second layer: c * sum(Pk) must be positive")
    threshold = p1 * (1.0 - scaled) / scaled
    return BenefitEstimate(p1=float(p1), delta=float(delta), pk=dict(pk),
                           c=float(c), threshold=float(threshold),
                           beneficial=bool(delta > threshold))


def estimate_benefit(top1_outcomes, top2_outcomes,
                     pair_outcomes: dict[str, list],
                     a: float = 1.0, b: float = 1.0) -> BenefitEstimate:
    """Estimate all rates from held-out outcomes, then apply the benefit test.

    top1/top2 are per-sample indicators for "first-layer winner correct" and
    "truth within the top-2 candidates"; pair_outcomes holds per-specialist
    correctness indicators on validation rows of its own two modes.
    """
    p1 = estimate_beta_posterior(top1_outcomes, a, b).mean
    top2 = estimate_beta_posterior(top2_outcomes, a, b).mean
    delta = max(0.0, top2 - p1)
    pk = {task: estimate_beta_posterior(v, a, b).mean
          for task, v in pair_outcomes.items()}
    return benefit_from_rates(p1, delta, pk, c=1.0 / len(pair_outcomes))


def collect_validation_outcomes(model: HierarchicalModel, X: np.ndarray,
                                y: np.ndarray):
    """Per-classifier correctness indicators on a validation set."""
    y = np.asarray(y, dtype=np.int64)
    outcomes = classify_batch(model, X)
    top1 = [int(o.candidates[0] == t) for o, t in zip(outcomes, y)]
    top2 = [int(t in o.candidates) for o, t in zip(outcomes, y)]
    pair_outcomes: dict[str, list] = {}
    for key, sub in sorted(model.pairs.items()):
        a, b = key
        rows = np.nonzero((y == a) | (y == b))[0]
        task = pair_task_id(a, b)
        if len(rows):
            pred = sub.predict(X[rows])
            pair_outcomes[task] = [int(p == t) for p, t in zip(pred, y[rows])]
        else:
            pair_outcomes[task] = []
    return top1, top2, pair_outcomes


def total_probability_residual(p1: float, delta: float, pk, c: float) -> float:
    """Residual of the framework's success-probability identity.

    Expanding the framework's success probability two ways must agree:
    (p1 + delta)*c*sum(pk) versus p1 + delta - (p1 + delta)*c*sum(ek) with
    ek = 1 - pk, provided c = 1/len(pk). Returns LHS - RHS.
    """
    pk = np.asarray(list(pk), dtype=float)
    ek = 1.0 - pk
    lhs = (p1 + delta) * c * pk.sum()
    rhs = p1 + delta - (p1 + delta) * c * ek.sum()
    return float(lhs - rhs)


# ---------------------------------------------------------------------------
# Model bundle on disk: manifest + one JSON per sub-model
# ---------------------------------------------------------------------------

def save_bundle(model: HierarchicalModel, directory,
                fingerprint: dict | None = None) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files = {"first": "first.json"}
    atomic_write_text(directory / "first.json",
                      json.dumps(model.first.to_jsonable(), sort_keys=True) + "\n")
    for (a, b), sub in sorted(model.pairs.items()):
        task = pair_task_id(a, b)
        fname = f"pair_{task}.json"
        files[task] = fname
        atomic_write_text(directory / fname,
                          json.dumps(sub.to_jsonable(), sort_keys=True) + "\n")
    manifest = {
        "format_version": BUNDLE_FORMAT_VERSION,
        "kind": "hierarchical",
        "config": asdict(model.config),
        "c": model.c,
        "classes": [int(c) for c in model.classes],
        "files": files,
        "fingerprint": fingerprint or {},
    }
    path = directory / BUNDLE_MANIFEST
    atomic_write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def load_bundle(directory) -> HierarchicalModel:
    directory = Path(directory)
    with open(directory / BUNDLE_MANIFEST, "r") as handle:
        manifest = json.load(handle)
    if manifest.get("format_version") != BUNDLE_FORMAT_VERSION:
        raise ValueError(f"unsupported bundle format {manifest.get('format_version')!r}")
    with open(directory / manifest["files"]["first"], "r") as handle:
        first = SubModel.from_jsonable(json.load(handle))
    pairs = {}
    for key in itertools.combinations(range(len(ModeLabel)), 2):
        task = pair_task_id(*key)
        with open(directory / manifest["files"][task], "r") as handle:
            pairs[key] = SubModel.from_jsonable(json.load(handle))
    config = TrainerConfig(**manifest["config"])
    return HierarchicalModel(first=first, pairs=pairs,
                             classes=np.asarray(manifest["classes"], dtype=np.int64),
                             config=config, c=float(manifest["c"]))
