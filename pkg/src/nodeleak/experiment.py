"""Experiment orchestration: datasets, protocols, sweeps and studies.

A run is driven by a JSON config and a master seed.  Every stochastic call
site consumes a seed derived from the master seed via stable labels and
counters, so a finished run can be reproduced from its manifest; with a
deterministic embedding engine the metric files come back byte-identical.

Outputs per run directory: ``manifest.json`` (resolved config, seeds,
artifact paths, timings), one JSON report per attack under ``reports/``,
and aggregated metrics as ``eval.json`` and ``eval.csv``.  Timings live
only in the manifest, keeping the metric files reproducible.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from itertools import product
from pathlib import Path
from threading import Lock

import numpy as np

from . import __version__, evaluation
from .attack import (AttackConfig, AttackReport, _build_report, candidate_seed,
                     classify_candidates, concat_tables, equal_frequency_bins,
                     load_report, node_features, pick_shadow_nodes,
                     prepare_attack, save_report, seed_for_classifier,
                     seed_for_eprime, seed_for_shadow_embed)
from .embeddings import EmbedSpec, Embedding, embed
from .evaluation import AttackOutcome, EvalReport, aggregate, f1_counts
from .graph import (Graph, generate_barabasi, is_connected,
                    largest_connected_component, load_edge_list, remove_node,
                    snowball_sample, stratified_degree_sample)
from .matrices import (DistanceMatrix, cosine_distance_matrix, diff_matrix,
                       drop_node)
from .seeds import derive_seed

logger = logging.getLogger(__name__)

GROUP_KEYS = ("network", "algorithm", "classifier", "bins", "shadows",
              "count", "bucket")


# --------------------------------------------------------------------------
# configuration

@dataclass(frozen=True)
class DatasetConfig:
    kind: str = "barabasi"          # barabasi | edge_list
    n: int = 1000
    m: int = 5
    path: str | None = None         # edge_list source file
    snowball_n: int | None = None   # sample size for edge_list sources

    def __post_init__(self):
        if self.kind not in ("barabasi", "edge_list"):
            raise ValueError(f"unknown dataset kind {self.kind!r}")
        if self.kind == "edge_list" and not self.path:
            raise ValueError("edge_list dataset needs a path")
        if self.kind == "barabasi" and not (self.n > self.m >= 1):
            raise ValueError(f"barabasi needs n > m >= 1, got n={self.n}, m={self.m}")


@dataclass(frozen=True)
class ProtocolConfig:
    targets_per_bucket: int = 5
    buckets: tuple[str, ...] = ("low", "medium", "high")
    repetitions: int = 5
    precision_k: int = 10
    null_permutations: int = 0  # per-attack label-shuffle AUC baselines

    def __post_init__(self):
        if self.targets_per_bucket < 1 or self.repetitions < 1:
            raise ValueError("targets_per_bucket and repetitions must be >= 1")
        bad = set(self.buckets) - {"low", "medium", "high"}
        if bad or not self.buckets:
            raise ValueError(f"buckets must be drawn from low/medium/high, got {self.buckets}")
        object.__setattr__(self, "buckets", tuple(self.buckets))
        if self.precision_k < 1 or self.null_permutations < 0:
            raise ValueError("invalid protocol counts")


@dataclass(frozen=True)
class SweepConfig:
    """Optional sweep axes; None leaves the base value in place."""

    bins: tuple[int, ...] | None = None
    shadows: tuple[int, ...] | None = None
    classifiers: tuple[str, ...] | None = None
    sizes: tuple[int, ...] | None = None         # barabasi n values
    attachments: tuple[int, ...] | None = None   # barabasi m values

    def __post_init__(self):
        for name in ("bins", "shadows", "classifiers", "sizes", "attachments"):
            value = getattr(self, name)
            if value is not None:
                value = tuple(value)
                if not value:
                    raise ValueError(f"sweep axis {name} must be non-empty")
                object.__setattr__(self, name, value)


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    embedding: EmbedSpec = field(default_factory=lambda: EmbedSpec("line"))
    attack: AttackConfig = field(default_factory=AttackConfig)
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    sweeps: SweepConfig = field(default_factory=SweepConfig)
    seed: int = 0

    def to_dict(self) -> dict:
        def plain(obj):
            out = {}
            for f in fields(obj):
                v = getattr(obj, f.name)
                out[f.name] = list(v) if isinstance(v, tuple) else v
            return out

        return {"dataset": plain(self.dataset),
                "embedding": self.embedding.to_dict(),
                "attack": plain(self.attack),
                "protocol": plain(self.protocol),
                "sweeps": plain(self.sweeps),
                "seed": self.seed}

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {"dataset", "embedding", "attack", "protocol", "sweeps", "seed"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config sections: {sorted(unknown)}")

        def build(klass, section):
            payload = dict(data.get(section, {}))
            names = {f.name for f in fields(klass)}
            bad = set(payload) - names
            if bad:
                raise ValueError(f"unknown {section} options: {sorted(bad)}")
            return klass(**payload)

        return cls(dataset=build(DatasetConfig, "dataset"),
                   embedding=EmbedSpec.from_dict(
                       dict(data.get("embedding", {"algorithm": "line"}))),
                   attack=build(AttackConfig, "attack"),
                   protocol=build(ProtocolConfig, "protocol"),
                   sweeps=build(SweepConfig, "sweeps"),
                   seed=int(data.get("seed", 0)))


def load_config(path: str | Path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return ExperimentConfig.from_dict(json.load(fh))


# --------------------------------------------------------------------------
# shared infrastructure

class EmbeddingCache:
    """Bounded LRU cache keyed by (graph content, spec, seed).

    Deterministic engines ignore the seed, so their entries are keyed with
    seed 0 and shared across repetitions.
    """

    def __init__(self, capacity: int = 48):
        self.capacity = capacity
        self._store: OrderedDict = OrderedDict()
        self._lock = Lock()

    def get_or_train(self, g: Graph, spec: EmbedSpec, seed: int) -> Embedding:
        key = (g.content_hash, spec.key(), 0 if spec.deterministic else seed)
        with self._lock:
            if key in self._store:
                self._store.move_to_end(key)
                return self._store[key]
        result = embed(g, spec, seed)
        with self._lock:
            self._store[key] = result
            self._store.move_to_end(key)
            while len(self._store) > self.capacity:
                self._store.popitem(last=False)
        return result


def load_dataset(config: DatasetConfig, seed: int) -> tuple[Graph, str]:
    """Materialize the configured network; disconnected inputs are routed
    through their largest connected component with a logged warning."""
    if config.kind == "barabasi":
        g = generate_barabasi(config.n, config.m, derive_seed(seed, "dataset"))
        return g, f"barabasi-n{config.n}-m{config.m}"
    g = load_edge_list(config.path)
    name = Path(config.path).stem
    if not is_connected(g):
        logger.warning("dataset %s is disconnected; using its largest component", name)
        g = largest_connected_component(g)
    if config.snowball_n is not None:
        g = snowball_sample(g, config.snowball_n, derive_seed(seed, "snowball"))
        name = f"{name}-snowball{config.snowball_n}"
    return g, name


def original_embedding_seed(master_seed: int, rep: int) -> int:
    """Seed of the pre-deletion embedding for one repetition (candidate 0
    of the original network's seed stream, shared with the stability
    study's averaging candidates)."""
    return candidate_seed(derive_seed(master_seed, "emb-original", rep), 0)


def attack_seed_for(master_seed: int, network: str, target: int, rep: int) -> int:
    return derive_seed(master_seed, "attack", network, target, rep)


def _prepare_out_dir(out_dir: str | Path, force: bool) -> Path:
    out = Path(out_dir)
    if out.exists() and any(out.iterdir()):
        if not force:
            raise FileExistsError(f"output directory {out} is not empty "
                                  f"(pass force to overwrite)")
    out.mkdir(parents=True, exist_ok=True)
    (out / "reports").mkdir(exist_ok=True)
    return out


def _write_json(path: Path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _eval_payload(report: EvalReport, outcomes: list[AttackOutcome]) -> dict:
    return {
        "groups": [{
            "keys": g.keys, "n_attacks": g.n_attacks, "mean": g.mean,
            "se": g.se, "macro_f1": g.macro_f1, "micro_f1": g.micro_f1,
            "mean_null_auc": g.mean_null_auc,
            "per_target": {str(t): v for t, v in g.per_target.items()},
        } for g in report.groups],
        "attacks": [{
            "keys": dict(o.keys), "target": o.target, "repetition": o.repetition,
            "auc": o.auc, "precision_at_k": o.precision_at_k,
            "f1": o.counts.f1, "tp": o.counts.tp, "fp": o.counts.fp,
            "fn": o.counts.fn, "null_auc": o.null_auc,
        } for o in outcomes],
    }


def _write_eval(out: Path, outcomes: list[AttackOutcome]) -> EvalReport:
    outcomes = sorted(outcomes, key=lambda o: (repr(sorted(o.keys.items())),
                                               o.target, o.repetition))
    report = aggregate(outcomes, group_by=GROUP_KEYS)
    _write_json(out / "eval.json", _eval_payload(report, outcomes))
    with open(out / "eval.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["group", "metric", "mean", "se", "n_attacks"])
        for g in report.groups:
            label = ";".join(f"{k}={g.keys[k]}" for k in GROUP_KEYS)
            for metric in evaluation.METRICS:
                writer.writerow([label, metric, repr(g.mean[metric]),
                                 repr(g.se[metric]), g.n_attacks])
            writer.writerow([label, "macro_f1", repr(g.macro_f1), "", g.n_attacks])
            writer.writerow([label, "micro_f1", repr(g.micro_f1), "", g.n_attacks])
            if g.mean_null_auc is not None:
                writer.writerow([label, "null_auc", repr(g.mean_null_auc), "",
                                 g.n_attacks])
    return report


def _report_filename(network: str, target: int, rep: int, cell: dict) -> str:
    suffix = "".join(f"__{k}{v}" for k, v in sorted(cell.items()))
    return f"attack__{network}__t{target}__r{rep}{suffix}.json"


def _outcome(report: AttackReport, keys: dict, target: int, rep: int,
             k: int, null_auc: float | None) -> AttackOutcome:
    truth = np.asarray(report.truth, dtype=np.int64)
    positive = np.isin(report.node_ids, truth)
    return AttackOutcome(
        keys=keys, target=target, repetition=rep,
        auc=evaluation.auc(report.scores, positive,
                           attack_id=f"t{target}/r{rep}"),
        precision_at_k=evaluation.precision_at_k(report.node_ids,
                                                 report.scores,
                                                 report.truth, k=k),
        counts=f1_counts(report.predicted, report.truth),
        null_auc=null_auc)


def _null_auc(attack_table, training, kind: str, attack_seed: int,
              truth, permutations: int) -> float | None:
    """Mean AUC over label-permutation refits (the learning-nothing baseline)."""
    if permutations <= 0:
        return None
    truth_arr = np.asarray(sorted(truth), dtype=np.int64)
    positive = np.isin(attack_table.node_ids, truth_arr)
    values = []
    for p in range(permutations):
        scores, _ = classify_candidates(
            attack_table, training, kind, seed_for_classifier(attack_seed),
            permute_labels_seed=derive_seed(attack_seed, "null-permutation", p))
        values.append(evaluation.auc(scores, positive))
    return float(np.mean(values))


# --------------------------------------------------------------------------
# the main protocol

@dataclass(frozen=True)
class RunManifest:
    version: str
    config: dict
    networks: dict        # label -> {n_nodes, n_edges, targets per bucket}
    seeds: dict
    artifacts: tuple[str, ...]
    timings: dict

    def to_dict(self) -> dict:
        return {"version": self.version, "config": self.config,
                "networks": self.networks, "seeds": self.seeds,
                "artifacts": list(self.artifacts), "timings": self.timings}


def _dataset_variants(config: ExperimentConfig) -> list[DatasetConfig]:
    sweeps = config.sweeps
    base = config.dataset
    variants = [base]
    if sweeps.sizes:
        variants = [DatasetConfig("barabasi", n=n, m=base.m) for n in sweeps.sizes]
    if sweeps.attachments:
        extended = []
        for ds in variants:
            extended.extend(DatasetConfig("barabasi", n=ds.n, m=m)
                            for m in sweeps.attachments)
        variants = extended
    return variants


def _cells(config: ExperimentConfig) -> list[dict]:
    sweeps = config.sweeps
    bins_axis = sweeps.bins or (config.attack.bins,)
    shadows_axis = sweeps.shadows or (config.attack.shadows,)
    classifier_axis = sweeps.classifiers or (config.attack.classifier,)
    cells = []
    for b, s, c in product(bins_axis, shadows_axis, classifier_axis):
        cell = {}
        if sweeps.bins:
            cell["bins"] = b
        if sweeps.shadows:
            cell["shadows"] = s
        if sweeps.classifiers:
            cell["classifier"] = c
        cells.append({"bins": b, "shadows": s, "classifier": c, "label": cell})
    return cells


def _run_jobs(jobs, worker, threads: int):
    """Map ``worker`` over jobs, optionally on a thread pool.

    With several workers, BLAS pools are clamped to one thread each so the
    job-level parallelism is the only parallelism.
    """
    if threads <= 1:
        return [worker(job) for job in jobs]
    from threadpoolctl import threadpool_limits

    with threadpool_limits(limits=1):
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(worker, jobs))


def run_experiment(config: ExperimentConfig, out_dir: str | Path, *,
                   threads: int = 1, force: bool = False) -> RunManifest:
    """Full attack protocol: degree-stratified targets, repeated attacks,
    optional parameter sweeps; writes reports, eval files and a manifest."""
    t_start = time.time()
    out = _prepare_out_dir(out_dir, force)
    spec = config.embedding
    protocol = config.protocol
    cells = _cells(config)
    max_shadows = max(c["shadows"] for c in cells)
    cache = EmbeddingCache()
    master = config.seed

    outcomes: list[AttackOutcome] = []
    artifacts: list[str] = []
    networks_manifest: dict = {}
    seeds_manifest: dict = {"master": master, "original_embedding": {},
                            "attack": {}}
    timings: dict = {}

    for ds in _dataset_variants(config):
        t_ds = time.time()
        g, network = load_dataset(ds, master)
        sample = stratified_degree_sample(g, protocol.targets_per_bucket,
                                          derive_seed(master, "targets", network))
        buckets = {b: getattr(sample, b) for b in protocol.buckets}
        networks_manifest[network] = {
            "n_nodes": g.n_nodes, "n_edges": g.n_edges,
            "targets": {b: list(v) for b, v in buckets.items()}}

        rep_matrices: dict[int, DistanceMatrix] = {}
        for rep in range(protocol.repetitions):
            seed = original_embedding_seed(master, rep)
            seeds_manifest["original_embedding"][f"{network}/r{rep}"] = seed
            rep_matrices[rep] = cosine_distance_matrix(
                cache.get_or_train(g, spec, seed))

        jobs = [(bucket, target, rep)
                for bucket, targets in buckets.items()
                for target in targets
                for rep in range(protocol.repetitions)]

        def worker(job):
            bucket, target, rep = job
            aseed = attack_seed_for(master, network, target, rep)
            truth = g.neighbors(target)
            g_prime = remove_node(g, target)
            d_orig = drop_node(rep_matrices[rep], target)
            prepared = prepare_attack(g_prime, d_orig, spec, max_shadows, aseed)
            results = []
            for cell in cells:
                attack_table, training = prepared.tables(cell["bins"],
                                                         cell["shadows"])
                scores, predicted = classify_candidates(
                    attack_table, training, cell["classifier"],
                    seed_for_classifier(aseed))
                keys = {"network": network, "algorithm": spec.algorithm,
                        "classifier": cell["classifier"], "bins": cell["bins"],
                        "shadows": cell["shadows"], "count": 1,
                        "bucket": bucket}
                echo = {"embedding": spec.to_dict(), "keys": keys,
                        "repetition": rep, "precision_k": protocol.precision_k}
                report = _build_report(attack_table, scores, predicted,
                                       target, truth, echo,
                                       {"attack": aseed, "master": master})
                null = _null_auc(attack_table, training, cell["classifier"],
                                 aseed, truth, protocol.null_permutations)
                outcome = _outcome(report, keys, target, rep,
                                   protocol.precision_k, null)
                results.append((cell["label"], report, outcome))
            return job, results

        for (bucket, target, rep), results in _run_jobs(jobs, worker, threads):
            aseed = attack_seed_for(master, network, target, rep)
            seeds_manifest["attack"][f"{network}/t{target}/r{rep}"] = aseed
            for cell_label, report, outcome in results:
                name = _report_filename(network, target, rep, cell_label)
                save_report(report, out / "reports" / name)
                artifacts.append(f"reports/{name}")
                outcomes.append(outcome)
        timings[network] = round(time.time() - t_ds, 3)

    _write_eval(out, outcomes)
    artifacts.extend(["eval.json", "eval.csv"])
    timings["total"] = round(time.time() - t_start, 3)
    manifest = RunManifest(__version__, config.to_dict(), networks_manifest,
                           seeds_manifest, tuple(sorted(artifacts)), timings)
    _write_json(out / "manifest.json", manifest.to_dict())
    return manifest


# --------------------------------------------------------------------------
# stability study: averaged distance matrices on every network side

def run_stability_study(config: ExperimentConfig, counts: list[int],
                        out_dir: str | Path, *, threads: int = 1,
                        force: bool = False) -> RunManifest:
    """Re-run the protocol with every distance matrix in the pipeline
    replaced by an entry-wise average over 1..count embedding runs of the
    same network; reports metrics per count.

    Embeddings are shared across counts: count c uses candidates 0..c-1 of
    the same seed streams, so count=1 reproduces the plain pipeline.
    """
    counts = sorted(set(int(c) for c in counts))
    if not counts or counts[0] < 1:
        raise ValueError("averaging counts must be >= 1")
    t_start = time.time()
    out = _prepare_out_dir(out_dir, force)
    spec = config.embedding
    protocol = config.protocol
    attack_cfg = config.attack
    master = config.seed

    g, network = load_dataset(config.dataset, master)
    sample = stratified_degree_sample(g, protocol.targets_per_bucket,
                                      derive_seed(master, "targets", network))
    buckets = {b: getattr(sample, b) for b in protocol.buckets}

    # averaged original-network matrices, per repetition and count
    orig_avg: dict[int, dict[int, DistanceMatrix]] = {}
    for rep in range(protocol.repetitions):
        base = derive_seed(master, "emb-original", rep)
        running = None
        per_count = {}
        done = 0
        for c in counts:
            for k in range(done, c):
                dm = cosine_distance_matrix(
                    embed(g, spec, candidate_seed(base, k)))
                running = dm.values if running is None else running + dm.values
            done = c
            per_count[c] = DistanceMatrix(g.node_order, running / c)
        orig_avg[rep] = per_count

    jobs = [(bucket, target, rep)
            for bucket, targets in buckets.items()
            for target in targets
            for rep in range(protocol.repetitions)]

    def worker(job):
        bucket, target, rep = job
        aseed = attack_seed_for(master, network, target, rep)
        truth = g.neighbors(target)
        g_prime = remove_node(g, target)
        eprime_base = seed_for_eprime(aseed)
        shadow_nodes = pick_shadow_nodes(g_prime, attack_cfg.shadows, aseed)
        shadow_graphs = {v: remove_node(g_prime, v) for v in shadow_nodes}
        shadow_sums = {v: None for v in shadow_nodes}
        prime_sum = None
        done = 0
        results = []
        for c in counts:
            for k in range(done, c):
                dm = cosine_distance_matrix(
                    embed(g_prime, spec, candidate_seed(eprime_base, k)))
                prime_sum = dm.values if prime_sum is None else prime_sum + dm.values
                for v in shadow_nodes:
                    sdm = cosine_distance_matrix(
                        embed(shadow_graphs[v], spec,
                              candidate_seed(seed_for_shadow_embed(aseed, v), k)))
                    shadow_sums[v] = (sdm.values if shadow_sums[v] is None
                                      else shadow_sums[v] + sdm.values)
            done = c
            d_prime = DistanceMatrix(g_prime.node_order, prime_sum / c)
            attack_diff = diff_matrix(drop_node(orig_avg[rep][c], target), d_prime)
            attack_table = node_features(
                attack_diff, equal_frequency_bins(attack_diff, attack_cfg.bins),
                g_prime)
            rows = []
            for v in shadow_nodes:
                gpp = shadow_graphs[v]
                reduced = DistanceMatrix(gpp.node_order, shadow_sums[v] / c)
                sdiff = diff_matrix(drop_node(d_prime, v), reduced)
                labels = np.isin(gpp.node_order,
                                 np.asarray(g_prime.neighbors(v),
                                            dtype=np.int64)).astype(np.int8)
                rows.append(node_features(
                    sdiff, equal_frequency_bins(sdiff, attack_cfg.bins), gpp,
                    labels=labels))
            training = concat_tables(rows)
            scores, predicted = classify_candidates(
                attack_table, training, attack_cfg.classifier,
                seed_for_classifier(aseed))
            keys = {"network": network, "algorithm": spec.algorithm,
                    "classifier": attack_cfg.classifier,
                    "bins": attack_cfg.bins, "shadows": attack_cfg.shadows,
                    "count": c, "bucket": bucket}
            echo = {"embedding": spec.to_dict(), "keys": keys,
                    "repetition": rep, "precision_k": protocol.precision_k,
                    "study": "stability"}
            report = _build_report(attack_table, scores, predicted, target,
                                   truth, echo,
                                   {"attack": aseed, "master": master})
            results.append(({"count": c}, report,
                            _outcome(report, keys, target, rep,
                                     protocol.precision_k, None)))
        return job, results

    outcomes, artifacts = _collect(out, network, jobs, worker, threads)
    _write_eval(out, outcomes)
    artifacts.extend(["eval.json", "eval.csv"])
    manifest = RunManifest(
        __version__, config.to_dict(),
        {network: {"n_nodes": g.n_nodes, "n_edges": g.n_edges,
                   "targets": {b: list(v) for b, v in buckets.items()},
                   "counts": counts}},
        {"master": master}, tuple(sorted(artifacts)),
        {"total": round(time.time() - t_start, 3)})
    _write_json(out / "manifest.json", manifest.to_dict())
    return manifest


# --------------------------------------------------------------------------
# variation study: keep only the most similar of several embeddings

def run_variation_study(config: ExperimentConfig, counts: list[int],
                        out_dir: str | Path, *, threads: int = 1,
                        force: bool = False) -> RunManifest:
    """Re-run the protocol selecting, on each freshly embedded network, the
    candidate whose distance matrix is closest to the matrix it will be
    compared against; reports metrics per candidate count.

    Candidate embeddings are shared across counts (count c considers
    candidates 0..c-1), so count=1 reproduces the plain pipeline.
    """
    counts = sorted(set(int(c) for c in counts))
    if not counts or counts[0] < 1:
        raise ValueError("candidate counts must be >= 1")
    t_start = time.time()
    out = _prepare_out_dir(out_dir, force)
    spec = config.embedding
    protocol = config.protocol
    attack_cfg = config.attack
    master = config.seed
    c_max = counts[-1]

    g, network = load_dataset(config.dataset, master)
    sample = stratified_degree_sample(g, protocol.targets_per_bucket,
                                      derive_seed(master, "targets", network))
    buckets = {b: getattr(sample, b) for b in protocol.buckets}
    cache = EmbeddingCache()
    rep_matrices = {
        rep: cosine_distance_matrix(
            cache.get_or_train(g, spec, original_embedding_seed(master, rep)))
        for rep in range(protocol.repetitions)}

    jobs = [(bucket, target, rep)
            for bucket, targets in buckets.items()
            for target in targets
            for rep in range(protocol.repetitions)]

    def abs_diff(a: np.ndarray, b: np.ndarray) -> float:
        iu = np.triu_indices(a.shape[0], k=1)
        return float(np.abs(a[iu] - b[iu]).sum())

    def prefix_argmins(dists: list[float]) -> dict[int, int]:
        best = {}
        arg, val = 0, np.inf
        for k, d in enumerate(dists):
            if d < val:
                arg, val = k, d
            best[k + 1] = arg
        return best

    def worker(job):
        bucket, target, rep = job
        aseed = attack_seed_for(master, network, target, rep)
        truth = g.neighbors(target)
        g_prime = remove_node(g, target)
        d_orig = drop_node(rep_matrices[rep], target)
        eprime_base = seed_for_eprime(aseed)
        prime_dms = [cosine_distance_matrix(
            embed(g_prime, spec, candidate_seed(eprime_base, k))).values
            for k in range(c_max)]
        chosen = prefix_argmins([abs_diff(d_orig.values, dm)
                                 for dm in prime_dms])
        shadow_nodes = pick_shadow_nodes(g_prime, attack_cfg.shadows, aseed)
        rows_per_count: dict[int, list] = {c: [] for c in counts}
        for v in shadow_nodes:
            gpp = remove_node(g_prime, v)
            base_v = seed_for_shadow_embed(aseed, v)
            pp_dms = [cosine_distance_matrix(
                embed(gpp, spec, candidate_seed(base_v, k))).values
                for k in range(c_max)]
            labels = np.isin(gpp.node_order,
                             np.asarray(g_prime.neighbors(v),
                                        dtype=np.int64)).astype(np.int8)
            for c in counts:
                d_prime_c = DistanceMatrix(g_prime.node_order,
                                           prime_dms[chosen[c]])
                tgt = drop_node(d_prime_c, v)
                dists = [abs_diff(tgt.values, pp_dms[k]) for k in range(c)]
                pick = int(np.argmin(dists))
                sdiff = diff_matrix(tgt, DistanceMatrix(gpp.node_order,
                                                        pp_dms[pick]))
                rows_per_count[c].append(node_features(
                    sdiff, equal_frequency_bins(sdiff, attack_cfg.bins), gpp,
                    labels=labels))
        results = []
        for c in counts:
            d_prime_c = DistanceMatrix(g_prime.node_order, prime_dms[chosen[c]])
            attack_diff = diff_matrix(d_orig, d_prime_c)
            attack_table = node_features(
                attack_diff, equal_frequency_bins(attack_diff, attack_cfg.bins),
                g_prime)
            training = concat_tables(rows_per_count[c])
            scores, predicted = classify_candidates(
                attack_table, training, attack_cfg.classifier,
                seed_for_classifier(aseed))
            keys = {"network": network, "algorithm": spec.algorithm,
                    "classifier": attack_cfg.classifier,
                    "bins": attack_cfg.bins, "shadows": attack_cfg.shadows,
                    "count": c, "bucket": bucket}
            echo = {"embedding": spec.to_dict(), "keys": keys,
                    "repetition": rep, "precision_k": protocol.precision_k,
                    "study": "variation"}
            report = _build_report(attack_table, scores, predicted, target,
                                   truth, echo,
                                   {"attack": aseed, "master": master})
            results.append(({"count": c}, report,
                            _outcome(report, keys, target, rep,
                                     protocol.precision_k, None)))
        return job, results

    outcomes, artifacts = _collect(out, network, jobs, worker, threads)
    _write_eval(out, outcomes)
    artifacts.extend(["eval.json", "eval.csv"])
    manifest = RunManifest(
        __version__, config.to_dict(),
        {network: {"n_nodes": g.n_nodes, "n_edges": g.n_edges,
                   "targets": {b: list(v) for b, v in buckets.items()},
                   "counts": counts}},
        {"master": master}, tuple(sorted(artifacts)),
        {"total": round(time.time() - t_start, 3)})
    _write_json(out / "manifest.json", manifest.to_dict())
    return manifest


def _collect(out: Path, network: str, jobs, worker, threads: int):
    """Run jobs, persist reports in deterministic order, gather outcomes."""
    outcomes: list[AttackOutcome] = []
    artifacts: list[str] = []
    finished = _run_jobs(jobs, worker, threads)
    finished.sort(key=lambda item: (item[0][0], item[0][1], item[0][2]))
    for (bucket, target, rep), results in finished:
        for cell_label, report, outcome in results:
            name = _report_filename(network, target, rep, cell_label)
            save_report(report, out / "reports" / name)
            artifacts.append(f"reports/{name}")
            outcomes.append(outcome)
    return outcomes, artifacts


# --------------------------------------------------------------------------
# re-evaluation of stored reports

def evaluate_reports(reports_dir: str | Path, out_dir: str | Path) -> EvalReport:
    """Recompute metrics and aggregates from persisted attack reports."""
    reports_dir = Path(reports_dir)
    paths = sorted(reports_dir.glob("attack__*.json"))
    if not paths:
        raise ValueError(f"no attack reports under {reports_dir}")
    outcomes = []
    for path in paths:
        report = load_report(path)
        if report.truth is None:
            raise ValueError(f"{path.name}: report carries no truth set")
        keys = report.config["keys"]
        rep = int(report.config["repetition"])
        k = int(report.config.get("precision_k", 10))
        outcomes.append(_outcome(report, keys, int(report.target), rep, k, None))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return _write_eval(out, outcomes)
