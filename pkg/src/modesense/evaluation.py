"""Stratified k-fold cross-validation, confusion matrices, parameter sweeps.

Everything a fold's models learn (feature ranking, subsets, scalers, model
parameters) comes from that fold's training rows only; test rows are never
touched before prediction. Folds are stratified: within each class, rows are
shuffled by the fold seed and dealt round-robin, so per-class fold counts
differ by at most one. An optional group mode deals whole traces instead of
windows for callers that track window provenance.
"""

from __future__ import annotations

import dataclasses
import itertools
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .datagen import ModeLabel
from .features import fit_scaler, get_catalog
from .hierarchy import (HierarchicalModel, SubModel, TrainerConfig,
                        _fit_algorithm, classify_batch, train_hierarchy)
from .selection import ALL_MODES_TASK, rank_features, select_top_k
from .util import sha256_hex, subseed

FRAMEWORKS = ("traditional", "hierarchical")
DOMAINS = ("time", "freq", "pooled")

SWEEP_AXES = {
    "knn_k": ("knn", "knn_k", list(range(1, 16))),
    "cart_pruning": ("cart", "cart_pruning", list(range(2, 21))),
    "rf_trees": ("rf", "rf_trees", list(range(200, 401, 50))),
}


@dataclass
class FoldPlan:
    k: int
    folds: list[np.ndarray]  # test-row indices per fold
    seed: int

    def validate(self, n_rows: int) -> None:
        joined = np.concatenate(self.folds) if self.folds else np.array([], dtype=int)
        if len(joined) != n_rows or len(np.unique(joined)) != n_rows:
            raise ValueError("folds must partition the rows exactly once")

    def plan_id(self) -> str:
        return sha256_hex(b"".join(np.sort(f).astype(np.int64).tobytes() for f in self.folds))[:16]


def stratified_kfold(labels: np.ndarray, k: int = 10, seed: int = 0,
                     groups: np.ndarray | None = None) -> FoldPlan:
    """Deal rows (or whole groups) of each class round-robin into k folds."""
    labels = np.asarray(labels, dtype=np.int64)
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    fold_rows: list[list[int]] = [[] for _ in range(k)]
    for cls in np.unique(labels):
        rows = np.nonzero(labels == cls)[0]
        rng = np.random.default_rng(subseed(seed, "stratify", int(cls)))
        if groups is None:
            if len(rows) < k:
                raise ValueError(
                    f"class {ModeLabel(int(cls)).label} has {len(rows)} rows, fewer than k={k}")
            for slot, row in enumerate(rows[rng.permutation(len(rows))]):
                fold_rows[slot % k].append(int(row))
        else:
            cls_groups = np.unique(np.asarray(groups)[rows])
            if len(cls_groups) < k:
                raise ValueError(
                    f"class {ModeLabel(int(cls)).label} has {len(cls_groups)} groups, "
                    f"fewer than k={k}")
            for slot, g in enumerate(cls_groups[rng.permutation(len(cls_groups))]):
                fold_rows[slot % k].extend(
                    int(r) for r in rows[np.asarray(groups)[rows] == g])
    plan = FoldPlan(k=k, folds=[np.array(sorted(rows), dtype=np.int64)
                                for rows in fold_rows], seed=seed)
    plan.validate(len(labels))
    return plan


@dataclass
class ConfusionMatrix:
    """Counts indexed [predicted, actual] plus per-mode precision/recall (%)."""

    counts: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    degenerate_predicted: np.ndarray  # modes never predicted (precision forced 0)
    degenerate_actual: np.ndarray  # modes absent from the truth (recall forced 0)

    def to_jsonable(self) -> dict:
        return {
            "counts": self.counts.tolist(),
            "precision": self.precision.tolist(),
            "recall": self.recall.tolist(),
            "degenerate_predicted": self.degenerate_predicted.tolist(),
            "degenerate_actual": self.degenerate_actual.tolist(),
        }


def confusion(predictions, truths, n_classes: int = len(ModeLabel)) -> ConfusionMatrix:
    predictions = np.asarray(predictions, dtype=np.int64)
    truths = np.asarray(truths, dtype=np.int64)
    if predictions.shape != truths.shape:
        raise ValueError(
            f"length mismatch: {len(predictions)} predictions vs {len(truths)} truths")
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(counts, (predictions, truths), 1)
    row = counts.sum(axis=1)
    col = counts.sum(axis=0)
    diag = np.diag(counts)
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(row > 0, 100.0 * diag / row, 0.0)
        recall = np.where(col > 0, 100.0 * diag / col, 0.0)
    return ConfusionMatrix(counts=counts, precision=precision, recall=recall,
                           degenerate_predicted=(row == 0),
                           degenerate_actual=(col == 0))


@dataclass(frozen=True)
class EvalConfig:
    trainer: TrainerConfig = TrainerConfig()
    framework: str = "traditional"
    domain: str = "pooled"
    folds: int = 10
    seed: int = 0

    def validate(self) -> None:
        self.trainer.validate()
        if self.framework not in FRAMEWORKS:
            raise ValueError(f"framework must be one of {FRAMEWORKS}, got {self.framework!r}")
        if self.domain not in DOMAINS:
            raise ValueError(f"domain must be one of {DOMAINS}, got {self.domain!r}")


@dataclass
class CvReport:
    fold_accuracies: list[float]  # percent, one per fold
    mean_accuracy: float
    fingerprint: dict
    confusion: ConfusionMatrix
    models: list = field(default_factory=list, repr=False)
    details: list = field(default_factory=list, repr=False)

    def to_jsonable(self) -> dict:
        return {
            "fingerprint": self.fingerprint,
            "fold_accuracies": self.fold_accuracies,
            "mean_accuracy": self.mean_accuracy,
            "confusion": self.confusion.to_jsonable(),
        }


def _train_traditional(X: np.ndarray, y: np.ndarray, cfg: TrainerConfig) -> SubModel:
    ranking = rank_features(X, y, n_trees=cfg.ranking_trees,
                            seed=subseed(cfg.seed, "rank", ALL_MODES_TASK),
                            task=ALL_MODES_TASK)
    subset = select_top_k(ranking, k=cfg.subset_k)
    scaler = fit_scaler(X[:, subset.ids])
    model = _fit_algorithm(cfg.algorithm, scaler.transform(X[:, subset.ids]), y,
                           cfg, seed=subseed(cfg.seed, "model", ALL_MODES_TASK))
    return SubModel(subset_ids=subset.ids, scaler=scaler, model=model)


def _domain_columns(ids: np.ndarray | None, n_cols: int, domain: str) -> np.ndarray:
    if ids is None:
        if domain != "pooled":
            raise ValueError("domain restriction needs the matrix's catalog ids")
        return np.arange(n_cols)
    wanted = set(get_catalog().domain_ids(domain).tolist())
    keep = np.array([pos for pos, fid in enumerate(ids) if int(fid) in wanted],
                    dtype=np.int64)
    if len(keep) == 0:
        raise ValueError(f"matrix has no {domain}-domain columns")
    return keep


def cross_validate(X: np.ndarray, y: np.ndarray, config: EvalConfig,
                   ids: np.ndarray | None = None, plan: FoldPlan | None = None,
                   groups: np.ndarray | None = None, keep_models: bool = False,
                   keep_details: bool = False) -> CvReport:
    """k-fold evaluation of one configuration; see module docstring for the
    leak-freedom guarantees."""
    config.validate()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if plan is None:
        plan = stratified_kfold(y, k=config.folds, seed=subseed(config.seed, "folds"),
                                groups=groups)
    plan.validate(len(y))
    keep = _domain_columns(ids, X.shape[1], config.domain)
    Xd = X[:, keep]

    fold_accuracies = []
    predictions = np.full(len(y), -1, dtype=np.int64)
    models = []
    details = []
    for f, test_rows in enumerate(plan.folds):
        train_mask = np.ones(len(y), dtype=bool)
        train_mask[test_rows] = False
        Xtr, ytr = Xd[train_mask], y[train_mask]
        Xte, yte = Xd[test_rows], y[test_rows]
        cfg = dataclasses.replace(config.trainer, seed=subseed(config.seed, "fold", f))
        try:
            if config.framework == "hierarchical":
                model: object = train_hierarchy(Xtr, ytr, cfg)
                outcomes = classify_batch(model, Xte)
                pred = np.array([o.final for o in outcomes], dtype=np.int64)
                if keep_details:
                    details.extend(
                        (int(r), int(t), o.candidates[0], o.candidates[1], o.final)
                        for r, t, o in zip(test_rows, yte, outcomes))
            else:
                model = _train_traditional(Xtr, ytr, cfg)
                proba = model.predict_proba(Xte)
                order = np.argsort(-proba, axis=1, kind="stable")
                pred = model.model.classes[order[:, 0]]
                if keep_details:
                    details.extend(
                        (int(r), int(t), int(model.model.classes[o[0]]),
                         int(model.model.classes[o[1]]), int(p))
                        for r, t, o, p in zip(test_rows, yte, order, pred))
        except Exception as exc:
            raise RuntimeError(f"training/evaluation failed in fold {f}: {exc}") from exc
        predictions[test_rows] = pred
        fold_accuracies.append(float(100.0 * np.mean(pred == yte)))
        if keep_models:
            models.append(model)

    fingerprint = {
        "framework": config.framework,
        "domain": config.domain,
        "folds": config.folds,
        "seed": config.seed,
        "trainer": asdict(config.trainer),
        "plan_id": plan.plan_id(),
        "n_rows": int(len(y)),
        "n_features": int(Xd.shape[1]),
        "data_sha256": sha256_hex(np.ascontiguousarray(Xd).tobytes()
                                  + y.tobytes()),
    }
    return CvReport(fold_accuracies=fold_accuracies,
                    mean_accuracy=float(np.mean(fold_accuracies)),
                    fingerprint=fingerprint,
                    confusion=confusion(predictions, y),
                    models=models, details=details)


def sweep(X: np.ndarray, y: np.ndarray, axis: str, config: EvalConfig,
          ids: np.ndarray | None = None, values: list | None = None,
          groups: np.ndarray | None = None) -> list[CvReport]:
    """One cross_validate per axis value on a shared fold plan."""
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; choose from {sorted(SWEEP_AXES)}")
    wanted_algo, attr, default_values = SWEEP_AXES[axis]
    involved = {config.trainer.algorithm, config.trainer.layer2}
    if wanted_algo not in involved:
        raise ValueError(
            f"axis {axis!r} applies to algorithm {wanted_algo!r}, but the "
            f"configuration uses {sorted(involved)}")
    values = list(values) if values is not None else list(default_values)
    y = np.asarray(y, dtype=np.int64)
    plan = stratified_kfold(y, k=config.folds, seed=subseed(config.seed, "folds"),
                            groups=groups)
    reports = []
    for value in values:
        trainer = dataclasses.replace(config.trainer, **{attr: value})
        cfg = dataclasses.replace(config, trainer=trainer)
        report = cross_validate(X, y, cfg, ids=ids, plan=plan)
        report.fingerprint["sweep_axis"] = axis
        report.fingerprint["sweep_value"] = value
        reports.append(report)
    return reports


# ---------------------------------------------------------------------------
# Plain-text tables
# ---------------------------------------------------------------------------

def accuracy_table(reports: list[CvReport], labels: list[str]) -> str:
    """Fold-by-configuration accuracy table with the average row last."""
    k = len(reports[0].fold_accuracies)
    if any(len(r.fold_accuracies) != k for r in reports):
        raise ValueError("reports have differing fold counts")
    width = max(12, *(len(lab) + 2 for lab in labels))
    head = "Fold".ljust(8) + "".join(lab.rjust(width) for lab in labels)
    lines = [head, "-" * len(head)]
    for f in range(k):
        row = f"{f + 1}".ljust(8)
        row += "".join(f"{r.fold_accuracies[f]:.2f}".rjust(width) for r in reports)
        lines.append(row)
    lines.append("-" * len(head))
    lines.append("Average".ljust(8)
                 + "".join(f"{r.mean_accuracy:.2f}".rjust(width) for r in reports))
    return "\n".join(lines) + "\n"


def confusion_table(cm: ConfusionMatrix) -> str:
    """Counts with actual modes as columns, predicted as rows, plus
    precision column and recall row (%)."""
    names = [m.label for m in ModeLabel]
    width = max(9, *(len(n) + 2 for n in names))
    head = "Predicted".ljust(12) + "".join(n.rjust(width) for n in names)
    head += "Precision".rjust(width + 2)
    lines = [head, "-" * len(head)]
    for p, name in enumerate(names):
        row = name.ljust(12)
        row += "".join(str(int(c)).rjust(width) for c in cm.counts[p])
        row += f"{cm.precision[p]:.2f}".rjust(width + 2)
        lines.append(row)
    lines.append("-" * len(head))
    recall_row = "Recall".ljust(12)
    recall_row += "".join(f"{r:.2f}".rjust(width) for r in cm.recall)
    lines.append(recall_row)
    return "\n".join(lines) + "\n"


def report_json(report: CvReport) -> str:
    return json.dumps(report.to_jsonable(), indent=2, sort_keys=True) + "\n"


def details_csv(details: list[tuple]) -> str:
    lines = ["row,truth,candidate_1,candidate_2,prediction"]
    for row, truth, c1, c2, pred in details:
        lines.append(f"{row},{ModeLabel(truth).label},{ModeLabel(c1).label},"
                     f"{ModeLabel(c2).label},{ModeLabel(pred).label}")
    lines.append("")
    return "\n".join(lines)


def sweep_csv(reports: list[CvReport]) -> str:
    """Sweep summary consumable by any plotting tool."""
    k = len(reports[0].fold_accuracies)
    header = ["axis", "value", "mean_accuracy"] + [f"fold_{f + 1}" for f in range(k)]
    lines = [",".join(header)]
    for r in reports:
        cells = [str(r.fingerprint.get("sweep_axis", "")),
                 str(r.fingerprint.get("sweep_value", "")),
                 f"{r.mean_accuracy!r}"]
        cells += [f"{a!r}" for a in r.fold_accuracies]
        lines.append(",".join(cells))
    lines.append("")
    return "\n".join(lines)
