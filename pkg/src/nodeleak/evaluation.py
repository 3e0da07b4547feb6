"""Rank-based metrics and experiment-level aggregation.

All metrics are pure functions.  AUC uses the Mann-Whitney statistic (ties
credited 0.5), precision@k breaks score ties by ascending node id, and the
two F1 flavors differ in pooling: macro averages per-attack F1, micro pools
true/false positive counts across attacks first.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np


def _tied_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties averaged."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.shape[0], dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < values.shape[0]:
        j = i
        while j + 1 < values.shape[0] and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def auc(scores: Sequence[float] | np.ndarray, positive: Sequence[bool] | np.ndarray,
        attack_id=None) -> float:
    """Probability a random positive outscores a random negative (ties 0.5)."""
    s = np.asarray(scores, dtype=np.float64)
    pos = np.asarray(positive, dtype=bool)
    if s.shape != pos.shape:
        raise ValueError("scores and positive flags must align")
    n_pos = int(pos.sum())
    n_neg = int(pos.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        tag = f"attack {attack_id}: " if attack_id is not None else ""
        raise ValueError(f"{tag}degenerate truth: {n_pos} positives, {n_neg} negatives")
    ranks = _tied_ranks(s)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def precision_at_k(node_ids: Sequence[int] | np.ndarray,
                   scores: Sequence[float] | np.ndarray,
                   truth: Iterable[int], k: int = 10) -> float:
    """Fraction of the k best-scored nodes that are true neighbors.

    Score ties are broken by ascending node id, making the ranking total
    and deterministic.
    """
    ids = np.asarray(node_ids, dtype=np.int64)
    s = np.asarray(scores, dtype=np.float64)
    if ids.shape != s.shape:
        raise ValueError("node ids and scores must align")
    if ids.shape[0] < k:
        raise ValueError(f"need at least {k} scored nodes, got {ids.shape[0]}")
    top = ids[np.lexsort((ids, -s))][:k]
    truth_set = set(int(t) for t in truth)
    return sum(1 for n in top if int(n) in truth_set) / k


@dataclass(frozen=True)
class F1Counts:
    """Confusion counts of a predicted neighbor set against the truth."""

    tp: int
    fp: int
    fn: int
    degenerate: bool = False  # both prediction and truth were empty

    @property
    def f1(self) -> float:
        denom = 2 * self.tp + self.fp + self.fn
        return 2 * self.tp / denom if denom > 0 else 0.0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0


def f1_counts(predicted: Iterable[int], truth: Iterable[int]) -> F1Counts:
    pred = set(int(p) for p in predicted)
    true = set(int(t) for t in truth)
    tp = len(pred & true)
    return F1Counts(tp, len(pred) - tp, len(true) - tp,
                    degenerate=not pred and not true)


def micro_f1(counts: Iterable[F1Counts]) -> float:
    """F1 of the pooled confusion counts."""
    tp = fp = fn = 0
    for c in counts:
        tp += c.tp
        fp += c.fp
        fn += c.fn
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom > 0 else 0.0


def standard_error(values: Sequence[float]) -> float:
    """Standard error of the mean; 0.0 for fewer than two values."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size < 2:
        return 0.0
    return float(arr.std(ddof=1) / np.sqrt(arr.size))


@dataclass(frozen=True)
class AttackOutcome:
    """Metrics of one attack plus the labels it aggregates under."""

    keys: Mapping[str, object]  # e.g. network, algorithm, bucket, classifier
    target: int
    repetition: int
    auc: float
    precision_at_k: float
    counts: F1Counts
    null_auc: float | None = None  # mean AUC under permuted training labels

    def metric(self, name: str) -> float:
        if name == "f1":
            return self.counts.f1
        return float(getattr(self, name))


METRICS = ("auc", "precision_at_k", "f1")


@dataclass(frozen=True)
class GroupSummary:
    keys: dict
    n_attacks: int
    mean: dict          # metric -> mean over attacks
    se: dict            # metric -> standard error over repetition means
    macro_f1: float
    micro_f1: float
    mean_null_auc: float | None
    per_target: dict    # target -> metric -> {"mean": float, "se": float}


@dataclass(frozen=True)
class EvalReport:
    groups: list

    def group(self, **keys) -> GroupSummary:
        for g in self.groups:
            if all(g.keys.get(k) == v for k, v in keys.items()):
                return g
        raise KeyError(f"no group matching {keys}")


def aggregate(outcomes: Sequence[AttackOutcome],
              group_by: Sequence[str] = ()) -> EvalReport:
    """Group outcomes and summarize each group.

    The per-metric standard error is computed across repetition means (one
    value per repetition, averaged over the group's targets); per-target
    entries carry mean and standard error across that target's repetitions.
    """
    if not outcomes:
        raise ValueError("no attack outcomes to aggregate")
    grouped: dict[tuple, list[AttackOutcome]] = defaultdict(list)
    for o in outcomes:
        key = tuple((k, o.keys.get(k)) for k in group_by)
        grouped[key].append(o)
    summaries = []
    for key in sorted(grouped, key=repr):
        rows = grouped[key]
        mean = {m: float(np.mean([r.metric(m) for r in rows])) for m in METRICS}
        by_rep: dict[int, list[AttackOutcome]] = defaultdict(list)
        for r in rows:
            by_rep[r.repetition].append(r)
        se = {}
        for m in METRICS:
            rep_means = [float(np.mean([r.metric(m) for r in rep_rows]))
                         for _, rep_rows in sorted(by_rep.items())]
            se[m] = standard_error(rep_means)
        by_target: dict[int, list[AttackOutcome]] = defaultdict(list)
        for r in rows:
            by_target[r.target].append(r)
        per_target = {}
        for target, trows in sorted(by_target.items()):
            per_target[target] = {
                m: {"mean": float(np.mean([r.metric(m) for r in trows])),
                    "se": standard_error([r.metric(m) for r in trows])}
                for m in METRICS}
        nulls = [r.null_auc for r in rows if r.null_auc is not None]
        summaries.append(GroupSummary(
            keys=dict(key),
            n_attacks=len(rows),
            mean=mean,
            se=se,
            macro_f1=mean["f1"],
            micro_f1=micro_f1(r.counts for r in rows),
            mean_null_auc=float(np.mean(nulls)) if nulls else None,
            per_target=per_target,
        ))
    return EvalReport(summaries)
