"""Soft-margin SVM trained with sequential minimal optimization.

Kernel is RBF, k(u, v) = exp(-gamma * ||u - v||^2). Multiclass problems are
decomposed one-vs-one: each unordered class pair gets its own dual problem,
a Platt sigmoid is fitted to its training decision values, and pairwise
probabilities are averaged per class and normalized into the returned
probability vector.

The optimizer is Platt's two-loop SMO with an error cache and the
second-choice heuristic (maximize |E1 - E2|), made fully deterministic:
fallback scans run cyclically from the partner index instead of from a
random start. Convergence means a full sweep finds no KKT violation larger
than tol; exceeding max_passes sweeps raises SmoConvergenceError carrying
the residual.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class SmoConvergenceError(RuntimeError):
    def __init__(self, kkt_residual: float, passes: int):
        super().__init__(
            f"SMO did not converge after {passes} passes; KKT residual {kkt_residual:.3e}")
        self.kkt_residual = kkt_residual
        self.passes = passes


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    d2 = (
        np.sum(A * A, axis=1)[:, None]
        - 2.0 * A @ B.T
        + np.sum(B * B, axis=1)[None, :]
    )
    return np.exp(-gamma * np.maximum(d2, 0.0))


def _kkt_residual(alpha: np.ndarray, yE: np.ndarray, C: float) -> float:
    at_lo = alpha <= 0.0
    at_hi = alpha >= C
    viol = np.where(at_lo, np.maximum(0.0, -yE),
                    np.where(at_hi, np.maximum(0.0, yE), np.abs(yE)))
    return float(viol.max()) if len(viol) else 0.0


def smo_solve(K: np.ndarray, y: np.ndarray, C: float, tol: float = 1e-3,
              max_passes: int = 10_000, record_objective_every: int = 0):
    """Solve the soft-margin dual for labels y in {-1, +1}.

    Returns (alpha, b, kkt_residual, objective_history). The decision value
    convention is f(x) = sum_j alpha_j y_j k(x_j, x) + b.
    """
    n = len(y)
    y = np.asarray(y, dtype=float)
    alpha = np.zeros(n)
    b = 0.0
    E = -y.copy()  # f == 0 before any update
    history: list[float] = []
    steps = 0

    def objective() -> float:
        ay = alpha * y
        return float(alpha.sum() - 0.5 * ay @ (K @ ay))

    def take_step(i1: int, i2: int) -> bool:
        nonlocal b, steps
        if i1 == i2:
            return False
        a1o, a2o = alpha[i1], alpha[i2]
        y1, y2 = y[i1], y[i2]
        E1, E2 = E[i1], E[i2]
        s = y1 * y2
        if s > 0:
            L, H = max(0.0, a1o + a2o - C), min(C, a1o + a2o)
        else:
            L, H = max(0.0, a2o - a1o), min(C, C + a2o - a1o)
        if L >= H:
            return False
        k11, k12, k22 = K[i1, i1], K[i1, i2], K[i2, i2]
        eta = k11 + k22 - 2.0 * k12
        if eta > 0.0:
            a2 = a2o + y2 * (E1 - E2) / eta
            a2 = min(max(a2, L), H)
        else:
            # PSD kernel makes this the identical-rows case: the objective is
            # linear along the constraint line, so jump to the better end.
            slope = y2 * (E1 - E2)
            if slope > 0.0:
                a2 = H
            elif slope < 0.0:
                a2 = L
            else:
                return False
        if abs(a2 - a2o) < 1e-12 * (a2 + a2o + 1e-12):
            return False
        a1 = a1o + s * (a2o - a2)
        a1 = min(max(a1, 0.0), C)  # guard float dust at the box corners

        d1 = y1 * (a1 - a1o)
        d2 = y2 * (a2 - a2o)
        b1 = b - E1 - d1 * k11 - d2 * k12
        b2 = b - E2 - d1 * k12 - d2 * k22
        if 0.0 < a1 < C:
            b_new = b1
        elif 0.0 < a2 < C:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)

        E += d1 * K[:, i1] + d2 * K[:, i2] + (b_new - b)
        b = b_new
        alpha[i1] = a1
        alpha[i2] = a2
        steps += 1
        if record_objective_every and steps % record_objective_every == 0:
            history.append(objective())
        return True

    def examine(i2: int) -> int:
        y2, a2, E2 = y[i2], alpha[i2], E[i2]
        r2 = E2 * y2
        if not ((r2 < -tol and a2 < C) or (r2 > tol and a2 > 0)):
            return 0
        nb = np.nonzero((alpha > 0.0) & (alpha < C))[0]
        if len(nb) > 1:
            i1 = int(nb[np.argmax(np.abs(E[nb] - E2))])
            if take_step(i1, i2):
                return 1
        if len(nb):
            start = int(np.searchsorted(nb, i2 + 1)) % len(nb)
            for offset in range(len(nb)):
                if take_step(int(nb[(start + offset) % len(nb)]), i2):
                    return 1
        for offset in range(n):
            if take_step((i2 + 1 + offset) % n, i2):
                return 1
        return 0

    examine_all = True
    passes = 0
    while True:
        passes += 1
        if passes > max_passes:
            raise SmoConvergenceError(_kkt_residual(alpha, y * E, C), passes - 1)
        changed = 0
        if examine_all:
            for i2 in range(n):
                changed += examine(i2)
        else:
            for i2 in np.nonzero((alpha > 0.0) & (alpha < C))[0]:
                changed += examine(int(i2))
        if examine_all:
            if changed == 0:
                break
            examine_all = False
        elif changed == 0:
            examine_all = True

    if record_objective_every:
        history.append(objective())
    return alpha, b, _kkt_residual(alpha, y * E, C), history


def fit_platt_sigmoid(decision: np.ndarray, positive: np.ndarray,
                      max_iter: int = 100, min_step: float = 1e-10,
                      ridge: float = 1e-12) -> tuple[float, float]:
    """Fit P(positive | f) = 1 / (1 + exp(A f + B)) by penalized ML.

    Newton iterations with backtracking on the cross-entropy against Platt's
    smoothed targets; numerically stable for large |A f + B|.
    """
    f = np.asarray(decision, dtype=float)
    positive = np.asarray(positive, dtype=bool)
    n_pos = int(positive.sum())
    n_neg = len(f) - n_pos
    t = np.where(positive, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))

    def nll(a: float, b: float) -> float:
        z = a * f + b
        return float(np.sum(np.where(z >= 0, t * z + np.log1p(np.exp(-np.abs(z))),
                                     (t - 1.0) * z + np.log1p(np.exp(-np.abs(z))))))

    A = 0.0
    B = np.log((n_neg + 1.0) / (n_pos + 1.0))
    F = nll(A, B)
    for _ in range(max_iter):
        z = A * f + B
        p = np.where(z >= 0, np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))),
                     1.0 / (1.0 + np.exp(-np.abs(z))))
        pq = p * (1.0 - p)
        h11 = float(f @ (f * pq)) + ridge
        h22 = float(pq.sum()) + ridge
        h21 = float(f @ pq)
        d = t - p
        g1 = float(f @ d)
        g2 = float(d.sum())
        if abs(g1) < 1e-5 and abs(g2) < 1e-5:
            break
        det = h11 * h22 - h21 * h21
        dA = -(h22 * g1 - h21 * g2) / det
        dB = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * dA + g2 * dB
        step = 1.0
        while step >= min_step:
            newA, newB = A + step * dA, B + step * dB
            newF = nll(newA, newB)
            if newF < F + 1e-4 * step * gd:
                A, B, F = newA, newB, newF
                break
            step *= 0.5
        else:
            break
    return float(A), float(B)


def _sigmoid_prob(decision: np.ndarray, A: float, B: float) -> np.ndarray:
    z = A * np.asarray(decision, dtype=float) + B
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = np.exp(-z[pos]) / (1.0 + np.exp(-z[pos]))
    out[~pos] = 1.0 / (1.0 + np.exp(z[~pos]))
    return out


@dataclass
class PairSvm:
    """One binary subproblem: positive = lower class id of the pair."""

    pos_class: int
    neg_class: int
    support_x: np.ndarray
    dual_coef: np.ndarray  # alpha_j * y_j over support rows
    intercept: float
    gamma: float
    C: float
    platt_a: float
    platt_b: float
    kkt_residual: float
    objective_history: list = field(default_factory=list, repr=False)

    def decision(self, X: np.ndarray) -> np.ndarray:
        K = rbf_kernel(np.atleast_2d(X), self.support_x, self.gamma)
        return K @ self.dual_coef + self.intercept

    def prob_pos(self, X: np.ndarray) -> np.ndarray:
        return _sigmoid_prob(self.decision(X), self.platt_a, self.platt_b)

    def to_dict(self) -> dict:
        return {
            "pos_class": int(self.pos_class),
            "neg_class": int(self.neg_class),
            "support_x": self.support_x.tolist(),
            "dual_coef": self.dual_coef.tolist(),
            "intercept": self.intercept,
            "gamma": self.gamma,
            "C": self.C,
            "platt_a": self.platt_a,
            "platt_b": self.platt_b,
            "kkt_residual": self.kkt_residual,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "PairSvm":
        return cls(pos_class=int(payload["pos_class"]),
                   neg_class=int(payload["neg_class"]),
                   support_x=np.asarray(payload["support_x"], dtype=float),
                   dual_coef=np.asarray(payload["dual_coef"], dtype=float),
                   intercept=float(payload["intercept"]),
                   gamma=float(payload["gamma"]),
                   C=float(payload["C"]),
                   platt_a=float(payload["platt_a"]),
                   platt_b=float(payload["platt_b"]),
                   kkt_residual=float(payload["kkt_residual"]))


@dataclass
class SvmModel:
    classes: np.ndarray
    pairs: list[PairSvm]
    C: float
    gamma: float
    tol: float

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        scores = np.zeros((X.shape[0], len(self.classes)))
        index = {int(c): i for i, c in enumerate(self.classes)}
        for pair in self.pairs:
            p = pair.prob_pos(X)
            scores[:, index[pair.pos_class]] += p
            scores[:, index[pair.neg_class]] += 1.0 - p
        return scores / scores.sum(axis=1, keepdims=True)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.classes[np.argmax(self.predict_proba(X), axis=1)]

    def to_dict(self) -> dict:
        return {
            "kind": "svm",
            "classes": self.classes.tolist(),
            "C": self.C,
            "gamma": self.gamma,
            "tol": self.tol,
            "pairs": [p.to_dict() for p in self.pairs],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "SvmModel":
        return cls(classes=np.asarray(payload["classes"], dtype=np.int64),
                   pairs=[PairSvm.from_dict(p) for p in payload["pairs"]],
                   C=float(payload["C"]),
                   gamma=float(payload["gamma"]),
                   tol=float(payload["tol"]))


def svm_train(X: np.ndarray, y: np.ndarray, C: float = 10.0,
              gamma: float | None = None, tol: float = 1e-3,
              max_passes: int = 10_000,
              record_objective_every: int = 0) -> SvmModel:
    """One-vs-one RBF SVM with Platt-calibrated pairwise probabilities.

    gamma defaults to 1 / feature count. Support rows with alpha below 1e-12
    are dropped; that does not change the decision function.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    classes = np.unique(y)
    if len(classes) < 2:
        raise ValueError("SVM training needs at least 2 classes")
    if C <= 0:
        raise ValueError(f"C must be > 0, got {C}")
    if gamma is None:
        gamma = 1.0 / X.shape[1]
    if gamma <= 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")

    pairs = []
    for ai in range(len(classes)):
        for bi in range(ai + 1, len(classes)):
            pos, neg = int(classes[ai]), int(classes[bi])
            mask = (y == pos) | (y == neg)
            Xp = X[mask]
            yp = np.where(y[mask] == pos, 1.0, -1.0)
            K = rbf_kernel(Xp, Xp, gamma)
            alpha, b, residual, history = smo_solve(
                K, yp, C, tol=tol, max_passes=max_passes,
                record_objective_every=record_objective_every)
            support = alpha > 1e-12
            decision_train = (K[:, support] @ (alpha[support] * yp[support])) + b
            A, B = fit_platt_sigmoid(decision_train, yp > 0)
            pairs.append(PairSvm(
                pos_class=pos, neg_class=neg,
                support_x=Xp[support].copy(),
                dual_coef=(alpha[support] * yp[support]).copy(),
                intercept=float(b), gamma=float(gamma), C=float(C),
                platt_a=A, platt_b=B, kkt_residual=float(residual),
                objective_history=history))
    return SvmModel(classes=classes, pairs=pairs, C=float(C),
                    gamma=float(gamma), tol=float(tol))
