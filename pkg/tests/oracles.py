"""Independent brute-force reference implementations used to cross-check the library.

Everything here is written the slow, obvious way (plain Python loops, direct
softmax) so that agreement with the production code is meaningful.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Sequence

import numpy as np


def oracle_scs(
    probs: Sequence[Sequence[float]], ids: Sequence[str], p: float
) -> tuple[dict[str, tuple[int, float]], tuple[int, ...]]:
    """Group rows by argmax class, sort each group by confidence (desc) then id,
    keep floor(p * group size). Returns {id: (label, confidence)} and per-class takes."""
    num_classes = len(probs[0])
    selected: dict[str, tuple[int, float]] = {}
    counts = []
    for cls in range(num_classes):
        members = []
        for row_id, row in zip(ids, probs):
            best = max(row)
            if list(row).index(best) == cls:  # first max = lowest class index
                members.append((row_id, best))
        take = math.floor(p * len(members))
        members.sort(key=lambda m: (-m[1], m[0]))
        counts.append(take)
        for row_id, conf in members[:take]:
            selected[row_id] = (cls, conf)
    return selected, tuple(counts)


def oracle_majority(
    votes: Sequence[int], confidences: Sequence[float], num_classes: int
) -> tuple[int, int, bool]:
    """Count votes; break count ties by summed confidence, then lowest class."""
    tally = Counter(votes)
    top = max(tally.values())
    tied = sorted(cls for cls, count in tally.items() if count == top)
    if len(tied) == 1:
        return tied[0], top, False
    sums = {
        cls: sum(conf for vote, conf in zip(votes, confidences) if vote == cls) for cls in tied
    }
    best = max(sums.values())
    winner = min(cls for cls in tied if sums[cls] == best)
    return winner, top, True


def oracle_class_metrics(
    y_true: Sequence[int], y_pred: Sequence[int], num_classes: int
) -> dict[str, object]:
    """Per-class P/R/F1 from raw TP/FP/FN counting plus the three aggregates."""
    precision, recall, f1, support = [], [], [], []
    for cls in range(num_classes):
        tp = sum(1 for t, q in zip(y_true, y_pred) if t == cls and q == cls)
        fp = sum(1 for t, q in zip(y_true, y_pred) if t != cls and q == cls)
        fn = sum(1 for t, q in zip(y_true, y_pred) if t == cls and q != cls)
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / (tp + fn) if tp + fn else 0.0
        precision.append(p)
        recall.append(r)
        f1.append(2 * p * r / (p + r) if p + r else 0.0)
        support.append(sum(1 for t in y_true if t == cls))
    total = len(y_true)
    return {
        "precision": precision,
        "recall": recall,
        "f1": f1,
        "support": support,
        "micro_f1": sum(1 for t, q in zip(y_true, y_pred) if t == q) / total,
        "macro_f1": sum(f1) / num_classes,
        "weighted_f1": sum(f * s for f, s in zip(f1, support)) / total,
    }


def oracle_kappa(a: Sequence[int], b: Sequence[int]) -> float:
    """Cohen's kappa from an explicit contingency table."""
    labels = sorted(set(a) | set(b))
    n = len(a)
    table = {(x, y): 0 for x in labels for y in labels}
    for x, y in zip(a, b):
        table[(x, y)] += 1
    p_o = sum(table[(lab, lab)] for lab in labels) / n
    p_e = sum(
        (sum(table[(lab, y)] for y in labels) / n) * (sum(table[(x, lab)] for x in labels) / n)
        for lab in labels
    )
    if p_e == 1.0:
        return 1.0
    return (p_o - p_e) / (1 - p_e)


def oracle_loss(
    weights: np.ndarray, x: np.ndarray, y: np.ndarray, class_weights: np.ndarray
) -> float:
    """Weighted cross-entropy via direct (shifted) softmax, loop per sample."""
    total_weighted = 0.0
    total_weight = 0.0
    for i in range(x.shape[0]):
        logits = weights[0] + x[i] @ weights[1:]
        shifted = np.exp(logits - logits.max())
        prob = shifted[y[i]] / shifted.sum()
        total_weighted += class_weights[y[i]] * math.log(prob)
        total_weight += class_weights[y[i]]
    return -total_weighted / total_weight


def fd_gradient(
    weights: np.ndarray, x: np.ndarray, y: np.ndarray, class_weights: np.ndarray,
    step: float = 1e-5,
) -> np.ndarray:
    """Central finite differences of oracle_loss over every parameter."""
    grad = np.zeros_like(weights)
    for idx in np.ndindex(weights.shape):
        plus = weights.copy()
        plus[idx] += step
        minus = weights.copy()
        minus[idx] -= step
        grad[idx] = (
            oracle_loss(plus, x, y, class_weights) - oracle_loss(minus, x, y, class_weights)
        ) / (2 * step)
    return grad
