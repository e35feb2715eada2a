"""Trainer correctness, AUC oracle equality, and evaluation accounting."""

from __future__ import annotations

import math
import random

import numpy as np
import pytest

from redflag.errors import DimensionMismatch, NonFiniteFeature, SingleClassData
from redflag.model import (
    EvalReport,
    ModelParams,
    TrainConfig,
    auc,
    compare,
    evaluate,
    logistic_loss,
    loss_gradient,
    predict_proba,
    train_logreg,
)


def random_examples(rng: random.Random, n: int, d: int = 6):
    examples = []
    for i in range(n):
        features = [rng.random() for _ in range(d)]
        examples.append((features, i % 2))
    return examples


def brute_force_auc(scored):
    wins = ties = 0
    positives = [s for s, label in scored if label == 1]
    negatives = [s for s, label in scored if label == 0]
    for p in positives:
        for q in negatives:
            if p > q:
                wins += 1
            elif p == q:
                ties += 1
    return (wins + 0.5 * ties) / (len(positives) * len(negatives))


class TestTrainLogreg:
    def test_separable_two_points(self):
        examples = [([0.0], 0), ([1.0], 1)]
        cfg = TrainConfig(learning_rate=0.5, epochs=500, l2_lambda=0.0)
        params = train_logreg(examples, cfg)
        assert params.weights[0] > 0
        assert predict_proba(params, [0.0]) < 0.5 <= predict_proba(params, [1.0])

    def test_huge_lambda_shrinks_weights(self):
        rng = random.Random(3)
        examples = random_examples(rng, 60)
        # Descent is stable only for lr * lambda < 2, so the huge-lambda run
        # uses a correspondingly small step.
        shrunk = train_logreg(
            examples, TrainConfig(learning_rate=1e-6, epochs=5000, l2_lambda=1e6)
        )
        free = train_logreg(
            examples, TrainConfig(learning_rate=1e-6, epochs=5000, l2_lambda=0.0)
        )
        assert all(abs(w) < 1e-2 for w in shrunk.weights)
        assert max(abs(w) for w in shrunk.weights) < max(abs(w) for w in free.weights)

    def test_single_class_rejected(self):
        with pytest.raises(SingleClassData):
            train_logreg([([0.1], 1), ([0.2], 1)], TrainConfig())

    def test_non_finite_rejected(self):
        with pytest.raises(NonFiniteFeature):
            train_logreg([([float("nan")], 0), ([0.2], 1)], TrainConfig())

    def test_ragged_features_rejected(self):
        with pytest.raises(DimensionMismatch):
            train_logreg([([0.1, 0.2], 0), ([0.2], 1)], TrainConfig())

    def test_deterministic(self):
        rng = random.Random(11)
        examples = random_examples(rng, 80)
        cfg = TrainConfig(learning_rate=0.2, epochs=250, l2_lambda=1e-3)
        assert train_logreg(examples, cfg) == train_logreg(examples, cfg)

    def test_gradient_matches_finite_differences(self):
        rng = random.Random(4759)
        examples = random_examples(rng, 100)
        h = 1e-5
        for _ in range(10):
            point = ModelParams(
                weights=tuple(rng.uniform(-2, 2) for _ in range(6)),
                bias=rng.uniform(-2, 2),
            )
            lam = rng.choice([0.0, 1e-3, 1e-1])
            grad_w, grad_b = loss_gradient(examples, point, lam)
            numeric = []
            for k in range(6):
                up = list(point.weights)
                down = list(point.weights)
                up[k] += h
                down[k] -= h
                numeric.append(
                    (
                        logistic_loss(examples, ModelParams(tuple(up), point.bias), lam)
                        - logistic_loss(examples, ModelParams(tuple(down), point.bias), lam)
                    )
                    / (2 * h)
                )
            numeric_b = (
                logistic_loss(examples, ModelParams(point.weights, point.bias + h), lam)
                - logistic_loss(examples, ModelParams(point.weights, point.bias - h), lam)
            ) / (2 * h)
            analytic = np.append(grad_w, grad_b)
            estimate = np.append(numeric, numeric_b)
            rel = np.linalg.norm(analytic - estimate) / max(
                np.linalg.norm(analytic), np.linalg.norm(estimate), 1e-12
            )
            assert rel < 1e-5

    def test_loss_non_increasing_at_small_rate(self):
        rng = random.Random(6)
        examples = random_examples(rng, 120)
        losses = []
        for epochs in range(1, 120, 5):
            cfg = TrainConfig(learning_rate=0.1, epochs=epochs, l2_lambda=0.0)
            losses.append(logistic_loss(examples, train_logreg(examples, cfg), 0.0))
        assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))


class TestPredictProba:
    def test_zero_params_give_half(self):
        params = ModelParams(weights=(0.0, 0.0), bias=0.0)
        assert predict_proba(params, [0.3, 0.9]) == 0.5

    def test_cancelling_logit_gives_half(self):
        params = ModelParams(weights=(2.0,), bias=-1.0)
        assert predict_proba(params, [0.5]) == 0.5

    def test_saturated_bias(self):
        params = ModelParams(weights=(0.0,), bias=100.0)
        assert predict_proba(params, [0.1]) > 0.9999

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            predict_proba(ModelParams(weights=(1.0, 2.0), bias=0.0), [0.1])


class TestAuc:
    def test_perfect_ranking(self):
        assert auc([(0.9, 1), (0.1, 0)]) == 1.0

    def test_all_tied(self):
        assert auc([(0.5, 1), (0.5, 0), (0.5, 1), (0.5, 0)]) == 0.5

    def test_single_class_rejected(self):
        with pytest.raises(SingleClassData):
            auc([(0.5, 1), (0.7, 1)])

    def test_matches_brute_force_with_ties(self):
        rng = random.Random(97)
        for _ in range(50):
            n = rng.randint(2, 60)
            scored = [
                (rng.choice([0.1, 0.25, 0.5, rng.random()]), rng.randint(0, 1))
                for _ in range(n)
            ]
            labels = {label for _, label in scored}
            if labels != {0, 1}:
                scored.extend([(0.3, 0), (0.6, 1)])
            assert auc(scored) == brute_force_auc(scored)

    def test_invariant_under_monotone_transform(self):
        rng = random.Random(53)
        scored = [(rng.random(), rng.randint(0, 1)) for _ in range(40)]
        scored.extend([(0.42, 0), (0.58, 1)])
        cubed = [(score**3, label) for score, label in scored]
        assert auc(cubed) == auc(scored)


class TestEvaluate:
    def test_constant_scores_give_half_auc(self):
        params = ModelParams(weights=(0.0, 0.0), bias=0.0)
        examples = [([0.2, 0.4], 0), ([0.9, 0.6], 1), ([0.5, 0.1], 0)]
        report = evaluate(params, examples)
        assert report.auc == 0.5
        # 0.5 meets the >= 0.5 threshold, so everything is predicted positive.
        assert report.false_positives == 2
        assert report.true_positives == 1

    def test_confusion_accounting(self):
        rng = random.Random(71)
        examples = random_examples(rng, 90, d=3)
        params = ModelParams(weights=(0.8, -1.2, 0.3), bias=-0.1)
        report = evaluate(params, examples)
        total = (
            report.true_negatives
            + report.false_positives
            + report.false_negatives
            + report.true_positives
        )
        assert total == report.n_examples == 90

    def test_report_rejects_bad_accounting(self):
        with pytest.raises(ValueError, match="sum to n_examples"):
            EvalReport(
                auc=0.5,
                precision=0.0,
                recall=0.0,
                true_negatives=1,
                false_positives=0,
                false_negatives=0,
                true_positives=0,
                n_examples=5,
            )


class TestCompare:
    def test_reports_come_from_matching_splits(self):
        rng = random.Random(19)
        full = random_examples(rng, 100)
        train, test = full[:70], full[70:]
        baseline = ([(f[:2], y) for f, y in train], [(f[:2], y) for f, y in test])
        cfg = TrainConfig(learning_rate=0.3, epochs=200, l2_lambda=1e-3)
        base_report, enriched_report = compare(baseline, (train, test), cfg)
        assert base_report.n_examples == enriched_report.n_examples == 30
        direct = evaluate(train_logreg(train, cfg), test)
        assert enriched_report == direct
