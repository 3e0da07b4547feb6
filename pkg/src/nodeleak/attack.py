"""The neighbor-recovery pipeline.

Given the reduced graph and the pre-deletion embedding with the deleted
node's row dropped, the pipeline (1) retrains an embedding on the reduced
graph, (2) forms both pairwise cosine-distance matrices, (3) subtracts them,
(4) turns each node's row of distance changes into an equal-frequency
histogram plus a normalized degree, (5) builds labeled training rows the
same way from simulated second deletions, (6) fits a classifier, and
(7) scores every surviving node as a candidate neighbor of the deleted one.

Binning is per comparison matrix: the attack matrix and every shadow matrix
get their own equal-frequency boundaries, so features compare as
distribution shapes rather than raw magnitudes.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Sequence

import numpy as np

from . import classifiers
from .embeddings import EmbedSpec, Embedding, embed
from .graph import Graph, remove_node
from .matrices import (DiffMatrix, DistanceMatrix, abs_offdiagonal_difference,
                       average_matrices, cosine_distance_matrix, diff_matrix,
                       drop_node, offdiagonal_values, same_order)
from .seeds import derive_seed

logger = logging.getLogger(__name__)


# --------------------------------------------------------------------------
# features

@dataclass(frozen=True)
class BinBoundaries:
    """Ascending cut points splitting the real line into m bins.

    Bins are left-closed/right-open except the last, which is closed on
    both ends; values below the first cut fall into bin 0, values at or
    above the last cut into bin m-1.
    """

    cuts: np.ndarray

    def __post_init__(self):
        cuts = np.asarray(self.cuts, dtype=np.float64)
        if cuts.ndim != 1 or cuts.size < 1:
            raise ValueError("need at least one cut point")
        if np.any(np.diff(cuts) < 0):
            raise ValueError("cut points must be non-decreasing")
        object.__setattr__(self, "cuts", cuts)

    @property
    def n_bins(self) -> int:
        return self.cuts.shape[0] + 1

    @property
    def coincident_cuts(self) -> int:
        """Number of duplicated cut points (some bins are empty)."""
        return int(np.sum(np.diff(self.cuts) == 0))

    def assign(self, values: np.ndarray) -> np.ndarray:
        """Bin index per value."""
        return np.searchsorted(self.cuts, values, side="right")


def equal_frequency_bins(diff: DiffMatrix, m: int) -> BinBoundaries:
    """Cut points at the k/m quantiles (k = 1..m-1) of the off-diagonal
    entries, each unordered pair counted once, linearly interpolated."""
    if m < 2:
        raise ValueError(f"need at least 2 bins, got {m}")
    values = offdiagonal_values(diff)
    if values.size < m:
        raise ValueError(f"{values.size} off-diagonal values cannot fill {m} bins")
    cuts = np.quantile(values, np.arange(1, m) / m)
    bins = BinBoundaries(cuts)
    if bins.coincident_cuts:
        logger.debug("equal-frequency bins: %d coincident cut(s), some bins empty",
                     bins.coincident_cuts)
    return bins


@dataclass(frozen=True)
class FeatureTable:
    """Per-node feature rows: m normalized bin counts plus normalized degree.

    ``labels`` marks neighbor rows (1) in training tables and is None for
    attack-side tables.  ``node_ids`` may repeat when tables from several
    shadow deletions are pooled.
    """

    node_ids: np.ndarray
    features: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "node_ids", np.asarray(self.node_ids, dtype=np.int64))
        object.__setattr__(self, "features", np.asarray(self.features, dtype=np.float64))
        if self.features.ndim != 2 or self.features.shape[0] != self.node_ids.shape[0]:
            raise ValueError("features must be 2-D with one row per node id")
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=np.int8)
            if labels.shape[0] != self.node_ids.shape[0]:
                raise ValueError("labels must align with node ids")
            object.__setattr__(self, "labels", labels)

    @property
    def n_rows(self) -> int:
        return self.node_ids.shape[0]

    @property
    def n_bins(self) -> int:
        return self.features.shape[1] - 1


def concat_tables(tables: Sequence[FeatureTable]) -> FeatureTable:
    if not tables:
        raise ValueError("no tables to concatenate")
    widths = {t.features.shape[1] for t in tables}
    if len(widths) != 1:
        raise ValueError(f"mismatched feature widths {sorted(widths)}")
    labels = None
    if all(t.labels is not None for t in tables):
        labels = np.concatenate([t.labels for t in tables])
    return FeatureTable(np.concatenate([t.node_ids for t in tables]),
                        np.vstack([t.features for t in tables]), labels)


def node_features(diff: DiffMatrix, bins: BinBoundaries, g_reduced: Graph,
                  labels: np.ndarray | None = None) -> FeatureTable:
    """Histogram each node's row of distance changes, append its degree.

    Bin counts are divided by n-1 so they sum to one; the degree is divided
    by the maximum degree of ``g_reduced``.
    """
    if not same_order(diff.node_order, g_reduced.node_order):
        raise ValueError("diff matrix and graph cover different node sets")
    n = diff.n_nodes
    m = bins.n_bins
    assigned = bins.assign(diff.values)
    features = np.zeros((n, m + 1), dtype=np.float64)
    denom = max(n - 1, 1)
    for r in range(n):
        counts = np.bincount(assigned[r], minlength=m)
        counts[assigned[r, r]] -= 1  # diagonal excluded
        features[r, :m] = counts / denom
    degrees = g_reduced.degrees.astype(np.float64)
    max_degree = degrees.max() if n else 0.0
    if max_degree > 0:
        features[:, m] = degrees / max_degree
    return FeatureTable(diff.node_order.copy(), features, labels)


# --------------------------------------------------------------------------
# seed layout (shared by the direct pipeline and the study runners)

def seed_for_eprime(attack_seed: int) -> int:
    return derive_seed(attack_seed, "eprime")


def seed_for_shadow_pick(attack_seed: int) -> int:
    return derive_seed(attack_seed, "shadow-pick")


def seed_for_shadow_embed(attack_seed: int, shadow_node: int) -> int:
    return derive_seed(attack_seed, "shadow-embed", shadow_node)


def seed_for_classifier(attack_seed: int) -> int:
    return derive_seed(attack_seed, "classifier")


def candidate_seed(base_seed: int, k: int) -> int:
    """Seed of candidate embedding k on one network side; k=0 is the seed
    the plain pipeline uses, so count-1 strategies reproduce it exactly."""
    return derive_seed(base_seed, "cand", k)


# --------------------------------------------------------------------------
# reduced-side distance matrices under the three pipeline flavors

@dataclass(frozen=True)
class ReducedStrategy:
    """How the freshly trained side of each comparison is computed.

    single:       one embedding per network (the plain pipeline)
    average:      entry-wise mean of ``count`` embeddings' distance matrices
    most_similar: of ``count`` candidate embeddings, use the one whose
                  distance matrix is closest (absolute difference sum) to
                  the matrix it is compared against
    """

    kind: str = "single"
    count: int = 1

    def __post_init__(self):
        if self.kind not in ("single", "average", "most_similar"):
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if self.count < 1:
            raise ValueError("count must be >= 1")


SINGLE = ReducedStrategy()


def _reduced_matrix(g: Graph, spec: EmbedSpec, embed_fn, base_seed: int,
                    strategy: ReducedStrategy,
                    target: DistanceMatrix | None) -> DistanceMatrix:
    """Distance matrix of the reduced side, per strategy.

    Candidate k trains with the seed for index k, so every flavor at
    count=1 reproduces the plain pipeline exactly.
    """
    def matrix(k: int) -> DistanceMatrix:
        return cosine_distance_matrix(embed_fn(g, spec, candidate_seed(base_seed, k)))

    if strategy.kind == "single" or strategy.count == 1:
        return matrix(0)
    if strategy.kind == "average":
        return average_matrices([matrix(k) for k in range(strategy.count)])
    if target is None:
        raise ValueError("most_similar strategy needs a comparison target")
    best = None
    best_dist = np.inf
    for k in range(strategy.count):
        cand = matrix(k)
        dist = abs_offdiagonal_difference(target, cand)
        if dist < best_dist:  # strict: ties keep the lowest index
            best, best_dist = cand, dist
    return best


# --------------------------------------------------------------------------
# prepared attacks

@dataclass(frozen=True)
class ShadowComparison:
    """Distance-change matrix from one simulated second deletion."""

    shadow_node: int
    diff: DiffMatrix
    graph: Graph           # the doubly reduced graph (degree feature source)
    labels: np.ndarray     # 1 where the row's node neighbored the shadow node


@dataclass(frozen=True)
class PreparedAttack:
    """Everything expensive about one attack: embeddings already trained,
    diff matrices retained so features can be rebuilt for any bin count or
    shadow-count prefix (parameter sweeps reuse one preparation)."""

    g_prime: Graph
    attack_diff: DiffMatrix
    shadows: tuple[ShadowComparison, ...]

    def tables(self, bins: int, shadows: int | None = None) -> tuple[FeatureTable, FeatureTable]:
        """(attack features, pooled labeled training features) at a bin
        count and an optional prefix of the prepared shadow comparisons."""
        chosen = self.shadows if shadows is None else self.shadows[:shadows]
        if shadows is not None and shadows > len(self.shadows):
            raise ValueError(f"prepared {len(self.shadows)} shadows, asked for {shadows}")
        attack_table = node_features(self.attack_diff,
                                     equal_frequency_bins(self.attack_diff, bins),
                                     self.g_prime)
        rows = [node_features(s.diff, equal_frequency_bins(s.diff, bins),
                              s.graph, labels=s.labels) for s in chosen]
        return attack_table, concat_tables(rows)


def _shadow_comparison(g_prime: Graph, d_prime: DistanceMatrix, spec: EmbedSpec,
                       embed_fn, shadow_node: int, attack_seed: int,
                       strategy: ReducedStrategy) -> ShadowComparison:
    g_pp = remove_node(g_prime, shadow_node)
    original = drop_node(d_prime, shadow_node)
    reduced = _reduced_matrix(g_pp, spec, embed_fn,
                              seed_for_shadow_embed(attack_seed, shadow_node),
                              strategy, target=original)
    diff = diff_matrix(original, reduced)
    neighbors = np.asarray(g_prime.neighbors(shadow_node), dtype=np.int64)
    labels = np.isin(g_pp.node_order, neighbors).astype(np.int8)
    return ShadowComparison(shadow_node, diff, g_pp, labels)


def pick_shadow_nodes(g_prime: Graph, num_shadow: int, attack_seed: int) -> list[int]:
    """Uniform seeded choice of distinct shadow nodes, ascending order."""
    if num_shadow >= g_prime.n_nodes:
        raise ValueError(f"num_shadow={num_shadow} must be below the "
                         f"{g_prime.n_nodes} available nodes")
    if num_shadow < 1:
        raise ValueError("num_shadow must be >= 1")
    rng = np.random.default_rng(seed_for_shadow_pick(attack_seed))
    chosen = rng.choice(g_prime.n_nodes, size=num_shadow, replace=False)
    return sorted(int(g_prime.node_order[i]) for i in chosen)


def prepare_attack(g_prime: Graph, original: DistanceMatrix | Embedding,
                   spec: EmbedSpec, num_shadow: int, attack_seed: int, *,
                   strategy: ReducedStrategy = SINGLE, workers: int = 1,
                   embed_fn=None) -> PreparedAttack:
    """Run the embedding-heavy pipeline stages once.

    ``original`` is the pre-deletion distance view: either the surviving
    rows of the old embedding or their distance matrix directly.  Shadow
    comparisons are independent jobs; with ``workers`` > 1 they run on a
    thread pool and are merged in shadow order regardless of completion
    order.
    """
    embed_fn = embed_fn or embed
    if isinstance(original, Embedding):
        d_orig = cosine_distance_matrix(original)
    else:
        d_orig = original
    if not same_order(d_orig.node_order, g_prime.node_order):
        raise ValueError("original distance view does not match the reduced "
                         "graph's node set")
    d_prime = _reduced_matrix(g_prime, spec, embed_fn,
                              seed_for_eprime(attack_seed), strategy,
                              target=d_orig)
    attack_diff = diff_matrix(d_orig, d_prime)
    shadow_nodes = pick_shadow_nodes(g_prime, num_shadow, attack_seed)

    def job(v: int) -> ShadowComparison:
        return _shadow_comparison(g_prime, d_prime, spec, embed_fn, v,
                                  attack_seed, strategy)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            shadows = tuple(pool.map(job, shadow_nodes))
    else:
        shadows = tuple(job(v) for v in shadow_nodes)
    return PreparedAttack(g_prime, attack_diff, shadows)


def generate_training_data(g_prime: Graph, e_prime: Embedding, spec: EmbedSpec,
                           num_shadow: int, m_bins: int, seed: int, *,
                           workers: int = 1) -> FeatureTable:
    """Labeled training rows from ``num_shadow`` simulated second deletions.

    For each shadow node v the comparison is: distances of ``e_prime``
    without v's row, minus distances of a fresh embedding of the graph
    without v.  Rows are labeled 1 exactly for v's neighbors and pooled in
    (shadow, node id) order.
    """
    if not same_order(e_prime.node_order, g_prime.node_order):
        raise ValueError("embedding does not cover the graph's node set")
    d_prime = cosine_distance_matrix(e_prime)
    shadow_nodes = pick_shadow_nodes(g_prime, num_shadow, seed)

    def job(v: int) -> FeatureTable:
        comp = _shadow_comparison(g_prime, d_prime, spec, embed, v, seed, SINGLE)
        return node_features(comp.diff, equal_frequency_bins(comp.diff, m_bins),
                             comp.graph, labels=comp.labels)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            tables = list(pool.map(job, shadow_nodes))
    else:
        tables = [job(v) for v in shadow_nodes]
    return concat_tables(tables)


# --------------------------------------------------------------------------
# classification and reports

@dataclass(frozen=True)
class AttackConfig:
    bins: int = 10
    shadows: int = 10
    classifier: str = "gnb"

    def __post_init__(self):
        if self.bins < 2:
            raise ValueError("bins must be >= 2")
        if self.shadows < 1:
            raise ValueError("shadows must be >= 1")
        if self.classifier not in classifiers.KINDS:
            raise ValueError(f"unknown classifier {self.classifier!r}")


@dataclass(frozen=True)
class AttackReport:
    """Ranked neighbor candidates for one deleted node.

    ``ranking`` is (node id, score, predicted) sorted by descending score,
    ties by ascending node id.  ``truth`` is the deleted node's real
    neighbor set when the caller knows it (simulation), else None.
    """

    target: int | None
    ranking: tuple[tuple[int, float, bool], ...]
    truth: tuple[int, ...] | None
    config: dict
    seeds: dict

    @property
    def node_ids(self) -> np.ndarray:
        return np.asarray([r[0] for r in self.ranking], dtype=np.int64)

    @property
    def scores(self) -> np.ndarray:
        return np.asarray([r[1] for r in self.ranking], dtype=np.float64)

    @property
    def predicted(self) -> set[int]:
        return {r[0] for r in self.ranking if r[2]}

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "ranking": [{"node": n, "score": s, "predicted": bool(p)}
                        for n, s, p in self.ranking],
            "truth": sorted(self.truth) if self.truth is not None else None,
            "config": self.config,
            "seeds": self.seeds,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AttackReport":
        return cls(
            target=data["target"],
            ranking=tuple((int(r["node"]), float(r["score"]), bool(r["predicted"]))
                          for r in data["ranking"]),
            truth=tuple(data["truth"]) if data["truth"] is not None else None,
            config=data["config"],
            seeds=data["seeds"],
        )


def save_report(report: AttackReport, sink: str | Path | IO[str]) -> None:
    if isinstance(sink, (str, Path)):
        with open(sink, "w", encoding="utf-8") as fh:
            save_report(report, fh)
        return
    json.dump(report.to_dict(), sink, indent=2, sort_keys=True)
    sink.write("\n")


def load_report(source: str | Path | IO[str]) -> AttackReport:
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return load_report(fh)
    return AttackReport.from_dict(json.load(source))


def classify_candidates(attack_table: FeatureTable, training: FeatureTable,
                        kind: str, seed: int,
                        permute_labels_seed: int | None = None
                        ) -> tuple[np.ndarray, np.ndarray]:
    """Fit on the training table, score the attack table.

    ``permute_labels_seed`` shuffles the training labels first — the
    calibration null for "does the classifier learn anything real".
    Returns (scores, binary predictions) aligned with the attack table.
    """
    if training.labels is None:
        raise ValueError("training table is unlabeled")
    labels = training.labels
    if permute_labels_seed is not None:
        rng = np.random.default_rng(permute_labels_seed)
        labels = rng.permutation(labels)
    model = classifiers.fit(kind, training.features, labels, seed)
    scores = model.predict_proba(attack_table.features)
    return scores, model.predict(attack_table.features)


def _build_report(attack_table: FeatureTable, scores: np.ndarray,
                  predicted: np.ndarray, target, truth, config: dict,
                  seeds: dict) -> AttackReport:
    order = np.lexsort((attack_table.node_ids, -scores))
    ranking = tuple((int(attack_table.node_ids[i]), float(scores[i]),
                     bool(predicted[i])) for i in order)
    truth_tuple = tuple(sorted(int(t) for t in truth)) if truth is not None else None
    return AttackReport(target, ranking, truth_tuple, config, seeds)


def run_attack(g_prime: Graph, e_orig_minus: Embedding, spec: EmbedSpec,
               config: AttackConfig, seed: int, *,
               strategy: ReducedStrategy = SINGLE, workers: int = 1,
               target: int | None = None,
               truth: Sequence[int] | None = None) -> AttackReport:
    """End-to-end neighbor recovery for one deleted node.

    ``e_orig_minus`` must cover exactly the nodes of ``g_prime`` (the
    deleted node's vector is already absent).  ``target`` and ``truth`` are
    evaluation metadata stamped into the report when the caller knows them.
    """
    prepared = prepare_attack(g_prime, e_orig_minus, spec, config.shadows,
                              seed, strategy=strategy, workers=workers)
    attack_table, training = prepared.tables(config.bins)
    scores, predicted = classify_candidates(attack_table, training,
                                            config.classifier,
                                            seed_for_classifier(seed))
    echo = {"embedding": spec.to_dict(), "bins": config.bins,
            "shadows": config.shadows, "classifier": config.classifier,
            "strategy": {"kind": strategy.kind, "count": strategy.count}}
    return _build_report(attack_table, scores, predicted, target, truth,
                         echo, {"attack": seed})


# --------------------------------------------------------------------------
# embedding similarity tools

def embedding_distance(a: Embedding, b: Embedding) -> float:
    """Absolute sum of pairwise-distance changes between two embeddings
    (off-diagonal entries, each unordered pair once)."""
    if not same_order(a.node_order, b.node_order):
        raise ValueError("embeddings cover different node sets")
    return abs_offdiagonal_difference(cosine_distance_matrix(a),
                                      cosine_distance_matrix(b))


def select_most_similar_embedding(target: Embedding, g: Graph, spec: EmbedSpec,
                                  count: int, seed: int) -> Embedding:
    """Train ``count`` candidate embeddings of ``g`` and return the one
    closest to ``target`` (ties keep the lowest candidate index)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if not same_order(target.node_order, g.node_order):
        raise ValueError("target embedding does not cover the graph's node set")
    target_dm = cosine_distance_matrix(target)
    best = None
    best_dist = np.inf
    for k in range(count):
        cand = embed(g, spec, candidate_seed(seed, k))
        dist = abs_offdiagonal_difference(target_dm, cosine_distance_matrix(cand))
        if dist < best_dist:
            best, best_dist = cand, dist
    return best


def average_distance_matrix(g: Graph, spec: EmbedSpec, count: int,
                            seed: int) -> DistanceMatrix:
    """Entry-wise mean of ``count`` seeded embedding runs' distance matrices."""
    if count < 1:
        raise ValueError("count must be >= 1")
    return average_matrices([
        cosine_distance_matrix(embed(g, spec, candidate_seed(seed, k)))
        for k in range(count)])
