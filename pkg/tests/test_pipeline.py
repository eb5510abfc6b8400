import filecmp
import json
import os

import pytest

from clirkit.corpus import Document
from clirkit.evaluation import evaluate_run, read_run
from clirkit.pipeline import (
    ExperimentContext,
    PipelineConfig,
    PipelineStageError,
    combine_models,
    derive_seed,
    finish_topic,
    prepare_topic,
    run_experiment,
    run_topic,
    sweep,
)
from clirkit.retrieval import InvertedIndex

from conftest import small_config_dict, write_config


def make_ctx(cfg_dict):
    return ExperimentContext.from_config(PipelineConfig.from_dict(cfg_dict))


class TestConfig:
    def test_round_trip_through_json(self, small_config, tmp_path):
        path = write_config(tmp_path, small_config)
        cfg = PipelineConfig.from_file(path)
        assert cfg.sgns.dim == 8
        assert cfg.feedback.num_docs == 5
        assert cfg.method == "proj"

    def test_unknown_method_rejected(self, small_config):
        with pytest.raises(ValueError):
            PipelineConfig.from_dict({**small_config, "method": "oracle"})

    def test_derive_seed_stable(self):
        assert derive_seed(3, "q01", "sgns-src") == derive_seed(3, "q01", "sgns-src")
        assert derive_seed(3, "q01", "sgns-src") != derive_seed(3, "q01", "sgns-tgt")
        assert derive_seed(3, "q01", "sgns-src") != derive_seed(4, "q01", "sgns-src")


class TestStagingContract:
    def test_first_stages_identical_across_methods(self, small_corpus_dir, small_config):
        ctx = make_ctx(small_config)
        topic = ctx.topics[0]
        shared_prefix = ["query_model", "source_feedback_retrieval",
                        "target_feedback_retrieval"]
        diags = {}
        for method in ("uniform", "proj"):
            cfg = PipelineConfig.from_dict({**small_config, "method": method})
            _, diag = run_topic(ctx, topic, cfg)
            diags[method] = diag
            assert diag.stages[:3] == shared_prefix
        assert diags["uniform"].feedback_source_docs == diags["proj"].feedback_source_docs
        assert diags["uniform"].feedback_target_docs == diags["proj"].feedback_target_docs
        assert "embeddings" in diags["proj"].stages
        assert "embeddings" not in diags["uniform"].stages

    def test_proj_diagnostics_carry_training_evidence(self, small_config):
        ctx = make_ctx(small_config)
        _, diag = run_topic(ctx, ctx.topics[0],
                            PipelineConfig.from_dict({**small_config, "method": "proj"}))
        assert diag.pair_provenance["pairs_kept"] > 0
        assert len(diag.objective_curve) == 30


class TestEndpoints:
    def test_alpha_zero_equals_cooccur_run(self, small_config, tmp_path):
        cfg_a = PipelineConfig.from_dict(
            {**small_config, "method": "proj", "alpha": 0.0, "tag": "endpoint"})
        cfg_b = PipelineConfig.from_dict(
            {**small_config, "method": "cooccur", "tag": "endpoint"})
        ctx = make_ctx(small_config)
        out_a = run_experiment(ctx, cfg_a, str(tmp_path / "a"))
        out_b = run_experiment(ctx, cfg_b, str(tmp_path / "b"))
        assert filecmp.cmp(out_a.run_path, out_b.run_path, shallow=False)

    def test_alpha_one_matches_sweep_cell(self, small_config, tmp_path):
        ctx = make_ctx(small_config)
        cfg = PipelineConfig.from_dict(
            {**small_config, "method": "proj", "alpha": 1.0, "tag": "pure"})
        direct = run_experiment(ctx, cfg, str(tmp_path / "direct"))
        sweep(ctx, cfg, alphas=[1.0], ns=[cfg.feedback.num_docs], outdir=str(tmp_path / "grid"))
        cell = read_run(str(tmp_path / "grid" / "pure-a1-n5.run"))
        assert cell.rankings == direct.run.rankings


class TestDeterminismAndCaching:
    def test_two_runs_byte_identical(self, small_config, tmp_path):
        cfg = PipelineConfig.from_dict(small_config)
        for sub in ("one", "two"):
            ctx = make_ctx(small_config)
            run_experiment(ctx, cfg, str(tmp_path / sub))
        for name in ("testrun.run", "testrun.manifest.json", "testrun.diagnostics.json"):
            assert filecmp.cmp(tmp_path / "one" / name, tmp_path / "two" / name,
                               shallow=False), name

    def test_prebuilt_index_equals_fresh_build(self, small_config, tmp_path):
        cfg = PipelineConfig.from_dict(small_config)
        ctx_fresh = make_ctx(small_config)
        ctx_fresh.src_index.save(str(tmp_path / "src.idx"))
        ctx_fresh.tgt_index.save(str(tmp_path / "tgt.idx"))
        cached_cfg = {**small_config,
                      "source_index": str(tmp_path / "src.idx"),
                      "target_index": str(tmp_path / "tgt.idx")}
        ctx_cached = make_ctx(cached_cfg)
        out_fresh = run_experiment(ctx_fresh, cfg, str(tmp_path / "fresh"))
        out_cached = run_experiment(ctx_cached, cfg, str(tmp_path / "cached"))
        assert filecmp.cmp(out_fresh.run_path, out_cached.run_path, shallow=False)

    def test_manifest_lists_hashes(self, small_config, tmp_path):
        cfg = PipelineConfig.from_dict(small_config)
        out = run_experiment(make_ctx(small_config), cfg, str(tmp_path / "m"))
        manifest = json.loads(open(out.manifest_path).read())
        assert set(manifest["inputs"]) == {"source_docs", "target_docs",
                                           "dictionary", "topics"}
        assert "testrun.run" in manifest["outputs"]
        assert manifest["config"]["seed"] == 1
        for digest in manifest["outputs"].values():
            assert len(digest) == 64


class TestSweep:
    def test_cells_reevaluate_to_reported_map(self, small_config, tmp_path):
        ctx = make_ctx(small_config)
        cfg = PipelineConfig.from_dict({**small_config, "tag": "grid"})
        csv_path = sweep(ctx, cfg, alphas=[0.0, 0.6], ns=[3, 5], outdir=str(tmp_path))
        rows = [line.split(",") for line in open(csv_path).read().splitlines()[1:]]
        assert len(rows) == 4
        for alpha, n, reported in rows:
            run = read_run(str(tmp_path / f"grid-a{float(alpha):g}-n{n}.run"))
            again = evaluate_run(run, ctx.qrels, depth=cfg.depth)
            assert f"{again.map:.6f}" == reported

    def test_singleton_grid_equals_direct_run(self, small_config, tmp_path):
        ctx = make_ctx(small_config)
        cfg = PipelineConfig.from_dict({**small_config, "tag": "single"})
        sweep(ctx, cfg, alphas=[cfg.alpha], ns=[cfg.feedback.num_docs],
              outdir=str(tmp_path / "grid"))
        direct = run_experiment(ctx, cfg, str(tmp_path / "direct"))
        cell = read_run(str(tmp_path / "grid" / f"single-a{cfg.alpha:g}-n5.run"))
        assert cell.rankings == direct.run.rankings


class TestFallbacks:
    def test_zero_pairs_fall_back_to_partner(self, small_corpus_dir):
        # the only dictionary candidate occurs once in the target collection,
        # so min_count=2 keeps it out of the embedding vocabulary and no
        # translation pair survives
        from clirkit.corpus import BilingualDictionary, Topic

        src_docs = [Document(f"s{i}", ("q", "filler", "filler", "q")) for i in range(6)]
        tgt_docs = [Document("t0", ("c", "tfiller", "tfiller"))]
        tgt_docs += [Document(f"t{i}", ("tfiller",) * 4) for i in range(1, 6)]
        ctx = ExperimentContext(
            src_index=InvertedIndex.from_documents(src_docs),
            tgt_index=InvertedIndex.from_documents(tgt_docs),
            src_docs={d.doc_id: d for d in src_docs},
            tgt_docs={d.doc_id: d for d in tgt_docs},
            dictionary=BilingualDictionary(entries={"q": ("c",)}),
            topics=[Topic("t1", ("q",))],
        )
        cfg = PipelineConfig.from_dict({
            "method": "proj", "alpha": 0.6, "depth": 5, "seed": 1,
            "feedback": {"num_docs": 3, "num_terms": 5, "interp_coeff": 0.5},
            "sgns": {"window": 2, "negatives": 2, "dim": 4, "epochs": 2,
                     "learning_rate": 0.02, "min_count": 2},
            "projection": {"eta": 0.02, "epochs": 5, "decay": 0.98},
        })
        models = prepare_topic(ctx, ctx.topics[0], cfg)
        assert models.primary is None
        assert any(f.startswith("zero_pairs") for f in models.diagnostics.flags)
        tm = combine_models(models, cfg)
        assert "partner_only" in models.diagnostics.flags
        assert dict(tm.table["q"]) == {"c": 1.0}
        ranked = finish_topic(ctx, cfg, models, tm)
        assert ranked

    def test_stage_error_carries_stage_name(self, small_corpus_dir, tmp_path):
        # a dictionary that covers no query term breaks the initial translation
        bad_dict = tmp_path / "bad.tsv"
        bad_dict.write_text("zzznotaterm\tzzzother\n")
        cfg_dict = small_config_dict(small_corpus_dir["paths"])
        cfg_dict["dictionary"] = str(bad_dict)
        ctx = make_ctx(cfg_dict)
        cfg = PipelineConfig.from_dict(cfg_dict)
        with pytest.raises(PipelineStageError) as err:
            run_topic(ctx, ctx.topics[0], cfg)
        assert err.value.stage == "target_feedback_retrieval"
        assert err.value.topic_id == ctx.topics[0].topic_id

    def test_prf_toggle_changes_rankings(self, small_config):
        ctx = make_ctx(small_config)
        topic = ctx.topics[0]
        on, _ = run_topic(ctx, topic, PipelineConfig.from_dict(
            {**small_config, "method": "uniform", "prf_enabled": True}))
        off, _ = run_topic(ctx, topic, PipelineConfig.from_dict(
            {**small_config, "method": "uniform", "prf_enabled": False}))
        assert on != off
