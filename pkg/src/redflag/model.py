"""From-scratch logistic risk classifier, rank AUC, and lift comparison.

Training is full-batch gradient descent on the mean L2-regularized logistic
loss with zero initialization, which keeps runs deterministic and makes the
loss-monotonicity property testable. The bias term is not regularized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonFiniteFeature, SingleClassData

Example = tuple[list[float], int]


@dataclass(frozen=True)
class ModelParams:
    weights: tuple[float, ...]
    bias: float

    def __post_init__(self) -> None:
        if not all(math.isfinite(w) for w in self.weights) or not math.isfinite(
            self.bias
        ):
            raise ValueError("model parameters must be finite")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 3000
    l2_lambda: float = 1e-4
    seed: int = 1234

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.l2_lambda < 0:
            raise ValueError("l2_lambda must be >= 0")


@dataclass(frozen=True)
class EvalReport:
    auc: float
    precision: float
    recall: float
    true_negatives: int
    false_positives: int
    false_negatives: int
    true_positives: int
    n_examples: int

    def __post_init__(self) -> None:
        cells = (
            self.true_negatives
            + self.false_positives
            + self.false_negatives
            + self.true_positives
        )
        if cells != self.n_examples:
            raise ValueError("confusion cells must sum to n_examples")

    def as_dict(self) -> dict:
        return {
            "auc": self.auc,
            "precision": self.precision,
            "recall": self.recall,
            "confusion": {
                "true_negatives": self.true_negatives,
                "false_positives": self.false_positives,
                "false_negatives": self.false_negatives,
                "true_positives": self.true_positives,
            },
            "n_examples": self.n_examples,
        }


def _as_matrices(examples: list[Example]) -> tuple[np.ndarray, np.ndarray]:
    if not examples:
        raise SingleClassData("no examples")
    width = len(examples[0][0])
    for features, _ in examples:
        if len(features) != width:
            raise DimensionMismatch(width, len(features))
    X = np.asarray([list(f) for f, _ in examples], dtype=np.float64)
    y = np.asarray([label for _, label in examples], dtype=np.float64)
    if not np.isfinite(X).all():
        raise NonFiniteFeature("feature matrix contains NaN or infinity")
    if y.min() == y.max():
        raise SingleClassData("need at least one example of each class")
    return X, y


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_loss(examples: list[Example], params: ModelParams, l2_lambda: float) -> float:
    """Mean logistic loss plus (lambda/2)*||w||^2; bias unpenalized."""
    X, y = _as_matrices(examples)
    w = np.asarray(params.weights)
    z = X @ w + params.bias
    data_term = float(np.mean(np.logaddexp(0.0, z) - y * z))
    return data_term + 0.5 * l2_lambda * float(w @ w)


def loss_gradient(
    examples: list[Example], params: ModelParams, l2_lambda: float
) -> tuple[np.ndarray, float]:
    """Analytic gradient of logistic_loss in (weights, bias)."""
    X, y = _as_matrices(examples)
    w = np.asarray(params.weights)
    residual = _sigmoid(X @ w + params.bias) - y
    grad_w = X.T @ residual / len(y) + l2_lambda * w
    grad_b = float(residual.mean())
    return grad_w, grad_b


def train_logreg(examples: list[Example], cfg: TrainConfig) -> ModelParams:
    """Run full-batch gradient descent from zero-initialized parameters."""
    X, y = _as_matrices(examples)
    n, d = X.shape
    w = np.zeros(d)
    b = 0.0
    for _ in range(cfg.epochs):
        residual = _sigmoid(X @ w + b) - y
        w = w - cfg.learning_rate * (X.T @ residual / n + cfg.l2_lambda * w)
        b = b - cfg.learning_rate * float(residual.mean())
    return ModelParams(weights=tuple(float(v) for v in w), bias=b)


def predict_proba(params: ModelParams, features: list[float]) -> float:
    if len(features) != len(params.weights):
        raise DimensionMismatch(len(params.weights), len(features))
    z = float(np.dot(params.weights, np.asarray(features, dtype=np.float64)))
    return float(_sigmoid(np.asarray([z + params.bias]))[0])


def auc(scored: list[tuple[float, int]]) -> float:
    """Probability a random positive outranks a random negative; ties count half.

    Computed from doubled tied ranks so the result is bit-identical to the
    brute-force pairwise statistic.
    """
    n_pos = sum(1 for _, label in scored if label == 1)
    n_neg = len(scored) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassData("auc needs both classes")
    ordered = sorted(scored, key=lambda pair: pair[0])
    doubled_rank_sum = 0
    i = 0
    while i < len(ordered):
        j = i
        while j < len(ordered) and ordered[j][0] == ordered[i][0]:
            j += 1
        # Ranks i+1..j share the average (i+1+j)/2; doubled it stays integral.
        doubled = i + 1 + j
        for k in range(i, j):
            if ordered[k][1] == 1:
                doubled_rank_sum += doubled
        i = j
    numerator = doubled_rank_sum - n_pos * (n_pos + 1)
    return numerator / (2 * n_pos * n_neg)


def evaluate(params: ModelParams, examples: list[Example]) -> EvalReport:
    """Score a held-out set; confusion uses the fixed 0.5 threshold."""
    scored = [
        (predict_proba(params, features), label) for features, label in examples
    ]
    tn = fp = fn = tp = 0
    for score, label in scored:
        predicted = score >= 0.5
        if label == 1:
            tp, fn = (tp + 1, fn) if predicted else (tp, fn + 1)
        else:
            fp, tn = (fp + 1, tn) if predicted else (fp, tn + 1)
    return EvalReport(
        auc=auc(scored),
        precision=tp / (tp + fp) if tp + fp else 0.0,
        recall=tp / (tp + fn) if tp + fn else 0.0,
        true_negatives=tn,
        false_positives=fp,
        false_negatives=fn,
        true_positives=tp,
        n_examples=len(examples),
    )


def compare(
    baseline_split: tuple[list[Example], list[Example]],
    enriched_split: tuple[list[Example], list[Example]],
    cfg: TrainConfig,
) -> tuple[EvalReport, EvalReport]:
    """Train and evaluate the legacy and enriched feature sets on one split."""
    baseline_train, baseline_test = baseline_split
    enriched_train, enriched_test = enriched_split
    baseline_report = evaluate(train_logreg(baseline_train, cfg), baseline_test)
    enriched_report = evaluate(train_logreg(enriched_train, cfg), enriched_test)
    return baseline_report, enriched_report
