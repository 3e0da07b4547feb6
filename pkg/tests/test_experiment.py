import io
import json
from pathlib import Path

import numpy as np
import pytest

from nodeleak.cli import main as cli_main
from nodeleak.embeddings import EmbedSpec
from nodeleak.experiment import (DatasetConfig, EmbeddingCache,
                                 ExperimentConfig, evaluate_reports,
                                 load_dataset, run_experiment,
                                 run_stability_study, run_variation_study)
from nodeleak.graph import generate_barabasi, save_edge_list


def tiny_config(**overrides):
    data = {
        "seed": 11,
        "dataset": {"kind": "barabasi", "n": 100, "m": 3},
        "embedding": {"algorithm": "hope", "dim": 8},
        "attack": {"bins": 4, "shadows": 3, "classifier": "gnb"},
        "protocol": {"targets_per_bucket": 1, "repetitions": 2,
                     "precision_k": 5},
    }
    for key, value in overrides.items():
        if isinstance(value, dict):
            data.setdefault(key, {}).update(value)
        else:
            data[key] = value
    return ExperimentConfig.from_dict(data)


def attacks_of(out_dir):
    return json.loads((Path(out_dir) / "eval.json").read_text())["attacks"]


class TestConfig:
    def test_defaults_echoed(self):
        cfg = ExperimentConfig.from_dict({"embedding": {"algorithm": "line"}})
        data = cfg.to_dict()
        assert data["attack"]["bins"] == 10
        assert data["attack"]["shadows"] == 10
        assert data["attack"]["classifier"] == "gnb"
        assert data["protocol"]["targets_per_bucket"] == 5
        assert data["protocol"]["repetitions"] == 5
        assert data["embedding"]["dim"] == 128

    def test_unknown_section_rejected(self):
        with pytest.raises(ValueError, match="unknown config"):
            ExperimentConfig.from_dict({"bogus": 1})

    def test_unknown_option_rejected(self):
        with pytest.raises(ValueError, match="unknown attack"):
            ExperimentConfig.from_dict({"attack": {"n_bins": 5}})

    def test_round_trip(self):
        cfg = tiny_config(sweeps={"bins": [4, 8]})
        assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg


class TestDatasets:
    def test_barabasi(self):
        g, name = load_dataset(DatasetConfig("barabasi", n=50, m=2), seed=1)
        assert g.n_nodes == 50 and name == "barabasi-n50-m2"

    def test_edge_list_routes_through_lcc(self, tmp_path, caplog):
        path = tmp_path / "g.edges"
        path.write_text("0 1\n1 2\n5 6\n")
        with caplog.at_level("WARNING"):
            g, _ = load_dataset(DatasetConfig("edge_list", path=str(path)), seed=0)
        assert g.nodes == (0, 1, 2)
        assert any("largest component" in r.message for r in caplog.records)

    def test_edge_list_snowball(self, tmp_path):
        path = tmp_path / "g.edges"
        save_edge_list(generate_barabasi(80, 3, seed=2), path)
        g, name = load_dataset(DatasetConfig("edge_list", path=str(path),
                                             snowball_n=30), seed=3)
        assert g.n_nodes == 30 and name.endswith("snowball30")

    def test_cache_shares_deterministic_entries(self):
        cache = EmbeddingCache()
        g = generate_barabasi(30, 2, seed=1)
        spec = EmbedSpec("hope", dim=8)
        a = cache.get_or_train(g, spec, seed=1)
        b = cache.get_or_train(g, spec, seed=2)  # different seed, same entry
        assert a is b
        line = EmbedSpec("line", dim=8, samples_per_edge=20)
        c = cache.get_or_train(g, line, seed=1)
        d = cache.get_or_train(g, line, seed=2)
        assert c is not d


class TestRunExperiment:
    def test_report_count_and_aggregation(self, tmp_path):
        out = tmp_path / "run"
        manifest = run_experiment(tiny_config(), out)
        # 3 buckets x 1 target x 2 repetitions
        reports = sorted((out / "reports").glob("attack__*.json"))
        assert len(reports) == 6
        payload = json.loads((out / "eval.json").read_text())
        assert len(payload["attacks"]) == 6
        assert (out / "eval.csv").exists()
        assert set(manifest.networks) == {"barabasi-n100-m3"}
        targets = manifest.networks["barabasi-n100-m3"]["targets"]
        assert set(targets) == {"low", "medium", "high"}

    def test_refuses_nonempty_output(self, tmp_path):
        out = tmp_path / "run"
        out.mkdir()
        (out / "stale.txt").write_text("x")
        with pytest.raises(FileExistsError):
            run_experiment(tiny_config(), out)
        run_experiment(tiny_config(), out, force=True)  # explicit override

    def test_threads_do_not_change_outputs(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        run_experiment(tiny_config(), a, threads=1)
        run_experiment(tiny_config(), b, threads=3)
        assert (a / "eval.json").read_bytes() == (b / "eval.json").read_bytes()

    def test_sweep_fans_out_groups(self, tmp_path):
        out = tmp_path / "sweep"
        run_experiment(tiny_config(sweeps={"bins": [4, 6, 8, 10]}), out)
        payload = json.loads((out / "eval.json").read_text())
        bins_seen = {g["keys"]["bins"] for g in payload["groups"]}
        assert bins_seen == {4, 6, 8, 10}
        # sweeps share one preparation: attacks = 6 per bins value
        assert len(payload["attacks"]) == 24

    def test_null_permutations_recorded(self, tmp_path):
        out = tmp_path / "null"
        run_experiment(tiny_config(protocol={"null_permutations": 3}), out)
        for attack in attacks_of(out):
            assert attack["null_auc"] is not None
            assert 0.0 <= attack["null_auc"] <= 1.0

    def test_truth_restricted_to_surviving_nodes(self, tmp_path):
        out = tmp_path / "truth"
        run_experiment(tiny_config(), out)
        report = json.loads(next((out / "reports").glob("*.json")).read_text())
        ranked = {r["node"] for r in report["ranking"]}
        assert set(report["truth"]) <= ranked


class TestStudies:
    def test_stability_count_one_matches_baseline(self, tmp_path):
        cfg = tiny_config(
            embedding={"algorithm": "line", "dim": 8, "samples_per_edge": 30},
            protocol={"buckets": ["medium"], "repetitions": 1})
        run_experiment(cfg, tmp_path / "base")
        run_stability_study(cfg, [1, 3], tmp_path / "stab")
        base = attacks_of(tmp_path / "base")
        stab = attacks_of(tmp_path / "stab")
        ones = [a for a in stab if a["keys"]["count"] == 1]
        assert len(base) == len(ones) == 1
        for key in ("auc", "precision_at_k", "f1"):
            assert ones[0][key] == base[0][key]
        assert {a["keys"]["count"] for a in stab} == {1, 3}

    def test_stability_deterministic_engine_constant_across_counts(self, tmp_path):
        cfg = tiny_config(protocol={"buckets": ["high"], "repetitions": 1})
        run_stability_study(cfg, [1, 2], tmp_path / "stab")
        stab = attacks_of(tmp_path / "stab")
        by_count = {a["keys"]["count"]: a for a in stab}
        assert by_count[1]["auc"] == by_count[2]["auc"]

    def test_variation_count_one_matches_baseline(self, tmp_path):
        cfg = tiny_config(
            embedding={"algorithm": "line", "dim": 8, "samples_per_edge": 30},
            protocol={"buckets": ["high"], "repetitions": 1})
        run_experiment(cfg, tmp_path / "base")
        run_variation_study(cfg, [1, 2], tmp_path / "var")
        base = attacks_of(tmp_path / "base")
        var = [a for a in attacks_of(tmp_path / "var") if a["keys"]["count"] == 1]
        assert var[0]["auc"] == base[0]["auc"]

    def test_variation_deterministic_engine_constant_across_counts(self, tmp_path):
        cfg = tiny_config(protocol={"buckets": ["low"], "repetitions": 1})
        run_variation_study(cfg, [1, 3], tmp_path / "var")
        var = attacks_of(tmp_path / "var")
        by_count = {a["keys"]["count"]: a for a in var}
        assert by_count[1]["auc"] == by_count[3]["auc"]


class TestEvalRoundTrip:
    def test_reaggregation_matches(self, tmp_path):
        out = tmp_path / "run"
        run_experiment(tiny_config(), out)
        evaluate_reports(out / "reports", tmp_path / "reeval")
        assert (out / "eval.csv").read_bytes() == \
            (tmp_path / "reeval" / "eval.csv").read_bytes()

    def test_empty_reports_dir(self, tmp_path):
        with pytest.raises(ValueError, match="no attack reports"):
            evaluate_reports(tmp_path, tmp_path / "out")


class TestCli:
    def test_generate_and_embed(self, tmp_path):
        edges = tmp_path / "g.edges"
        emb = tmp_path / "e.txt"
        assert cli_main(["generate", "--kind", "barabasi", "--n", "40",
                         "--m", "2", "--seed", "3", "--out", str(edges)]) == 0
        assert cli_main(["embed", "--graph", str(edges), "--algorithm", "hope",
                         "--dim", "8", "--seed", "1", "--out", str(emb)]) == 0
        assert emb.exists()

    def test_attack_produces_report(self, tmp_path):
        from nodeleak.embeddings import embed, save_embedding
        from nodeleak.graph import remove_node
        g = generate_barabasi(40, 2, seed=5)
        target = max(g.nodes, key=g.degree)
        save_edge_list(g, tmp_path / "g.edges")
        save_edge_list(remove_node(g, target), tmp_path / "gp.edges")
        e = embed(g, EmbedSpec("hope", dim=8), seed=0)
        save_embedding(e.drop_node(target), tmp_path / "em.txt")
        rc = cli_main(["attack", "--graph", str(tmp_path / "gp.edges"),
                       "--embedding", str(tmp_path / "em.txt"),
                       "--algorithm", "hope", "--dim", "8",
                       "--bins", "4", "--shadows", "3",
                       "--target", str(target),
                       "--truth-graph", str(tmp_path / "g.edges"),
                       "--seed", "2", "--out", str(tmp_path / "report.json")])
        assert rc == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["target"] == target
        assert report["truth"]

    def test_experiment_subcommand_and_eval(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(tiny_config().to_dict()))
        rc = cli_main(["experiment", "--config", str(cfg_path),
                       "--out", str(tmp_path / "run")])
        assert rc == 0
        rc = cli_main(["eval", "--reports", str(tmp_path / "run" / "reports"),
                       "--out", str(tmp_path / "reeval")])
        assert rc == 0

    def test_missing_config_nonzero_exit(self, tmp_path, capsys):
        rc = cli_main(["experiment", "--config", str(tmp_path / "nope.json"),
                       "--out", str(tmp_path / "x")])
        assert rc == 1
        assert "nope.json" in capsys.readouterr().err

    def test_stability_subcommand(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(
            tiny_config(protocol={"buckets": ["high"], "repetitions": 1}).to_dict()))
        rc = cli_main(["stability", "--config", str(cfg_path), "--counts", "1,2",
                       "--out", str(tmp_path / "stab")])
        assert rc == 0
        assert (tmp_path / "stab" / "eval.json").exists()
