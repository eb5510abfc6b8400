"""End-to-end cross-language retrieval pipeline and experiment drivers.

``run_topic`` wires the per-topic procedure: retrieve pseudo-relevant
documents in both languages (the target side via the uniform initial
translation), train per-language embeddings, learn the projection from
the translation pairs present in both vocabularies, build and optionally
interpolate the translation model, translate the query model, apply
mixture feedback in the target collection, and retrieve to depth.

``run_experiment`` writes one run file plus diagnostics and a manifest of
config and content hashes; ``sweep`` evaluates an (alpha, n) grid reusing
the per-topic models that do not depend on alpha.
"""

from __future__ import annotations

import hashlib
import json
import os
import zlib
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, replace

from clirkit.corpus import (
    BilingualDictionary,
    Document,
    NormalizationPipeline,
    Topic,
    load_documents,
    load_stopwords,
    parse_dictionary,
    parse_qrels,
    parse_topics,
)
from clirkit.embeddings import SgnsConfig, train_sgns
from clirkit.evaluation import RunFile, evaluate_run, write_run
from clirkit.prf import FeedbackConfig, estimate_feedback_model, interpolate_query
from clirkit.projection import (
    NoTranslationPairsError,
    ProjectionConfig,
    extract_pairs,
    learn_projection,
)
from clirkit.retrieval import InvertedIndex, QueryModel, RankedList, retrieve
from clirkit.translation import (
    TranslationModel,
    cooccur_model,
    interpolate_models,
    mixed_model,
    projected_model,
    top1_model,
    translate_query_model,
    uniform_model,
)

METHODS = ("proj", "mixed", "uniform", "top1", "cooccur")


class PipelineStageError(RuntimeError):
    def __init__(self, stage: str, topic_id: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed for topic {topic_id!r}: {cause}")
        self.stage = stage
        self.topic_id = topic_id


@dataclass
class NormalizationSpec:
    lowercase: bool = True
    stopwords: str | None = None
    stemmer: str = "none"

    def build(self) -> NormalizationPipeline:
        stop = load_stopwords(self.stopwords) if self.stopwords else frozenset()
        return NormalizationPipeline(lowercase=self.lowercase, stopwords=stop,
                                     stemmer=self.stemmer)


@dataclass
class PipelineConfig:
    source_docs: str = ""
    source_format: str = "jsonl"
    target_docs: str = ""
    target_format: str = "jsonl"
    dictionary: str = ""
    topics: str = ""
    qrels: str | None = None
    source_index: str | None = None
    target_index: str | None = None
    source_normalization: NormalizationSpec = field(default_factory=NormalizationSpec)
    target_normalization: NormalizationSpec = field(default_factory=NormalizationSpec)
    mu: float = 1000.0
    depth: int = 1000
    method: str = "proj"
    alpha: float = 0.6
    cooccur_window: int = 4
    fallback: str = "uniform_over_candidates"
    prf_enabled: bool = True
    feedback: FeedbackConfig = field(default_factory=FeedbackConfig)
    sgns: SgnsConfig = field(default_factory=SgnsConfig)
    projection: ProjectionConfig = field(default_factory=ProjectionConfig)
    verbose_queries: bool = False
    seed: int = 0
    tag: str = "clirkit"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}, expected one of {METHODS}")

    @classmethod
    def from_file(cls, path: str) -> "PipelineConfig":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineConfig":
        kwargs = dict(raw)
        for key, sub in (("source_normalization", NormalizationSpec),
                         ("target_normalization", NormalizationSpec),
                         ("feedback", FeedbackConfig),
                         ("sgns", SgnsConfig),
                         ("projection", ProjectionConfig)):
            if key in kwargs and isinstance(kwargs[key], dict):
                kwargs[key] = sub(**kwargs[key])
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TopicDiagnostics:
    topic_id: str
    method: str
    stages: list[str] = field(default_factory=list)
    feedback_source_docs: list[str] = field(default_factory=list)
    feedback_target_docs: list[str] = field(default_factory=list)
    pair_provenance: dict = field(default_factory=dict)
    objective_curve: list[float] = field(default_factory=list)
    fallback_terms: list[str] = field(default_factory=list)
    dropped_terms: list[str] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ExperimentContext:
    """Shared, read-only inputs: indexes, documents, dictionary, topics."""

    src_index: InvertedIndex
    tgt_index: InvertedIndex
    src_docs: dict[str, Document]
    tgt_docs: dict[str, Document]
    dictionary: BilingualDictionary
    topics: list[Topic]
    qrels: dict[str, set[str]] | None = None

    @property
    def tgt_doc_list(self) -> list[Document]:
        return list(self.tgt_docs.values())

    @classmethod
    def from_config(cls, cfg: PipelineConfig) -> "ExperimentContext":
        src_pipe = cfg.source_normalization.build()
        tgt_pipe = cfg.target_normalization.build()
        source = load_documents(cfg.source_docs, cfg.source_format, src_pipe)
        target = load_documents(cfg.target_docs, cfg.target_format, tgt_pipe)
        src_index = (InvertedIndex.load(cfg.source_index) if cfg.source_index
                     else InvertedIndex.from_documents(source))
        tgt_index = (InvertedIndex.load(cfg.target_index) if cfg.target_index
                     else InvertedIndex.from_documents(target))
        return cls(
            src_index=src_index,
            tgt_index=tgt_index,
            src_docs={d.doc_id: d for d in source},
            tgt_docs={d.doc_id: d for d in target},
            dictionary=parse_dictionary(cfg.dictionary, src_pipe, tgt_pipe),
            topics=parse_topics(cfg.topics, src_pipe),
            qrels=parse_qrels(cfg.qrels) if cfg.qrels else None,
        )


def derive_seed(base: int, *parts: str) -> int:
    """Stable per-topic, per-purpose seed."""
    h = zlib.crc32(":".join(parts).encode("utf-8"))
    return (base * 1000003 + h) % (2 ** 32)


@contextmanager
def _stage(diag: TopicDiagnostics, name: str):
    try:
        yield
    except PipelineStageError:
        raise
    except Exception as exc:
        raise PipelineStageError(name, diag.topic_id, exc) from exc
    diag.stages.append(name)


@dataclass
class TopicModels:
    """Alpha-independent per-topic artifacts, reusable across a sweep row."""

    query: QueryModel
    primary: TranslationModel | None
    partner: TranslationModel | None
    diagnostics: TopicDiagnostics


def prepare_topic(ctx: ExperimentContext, topic: Topic, cfg: PipelineConfig,
                  need_partner: bool = False) -> TopicModels:
    """Stages up to translation-model construction."""
    diag = TopicDiagnostics(topic_id=topic.topic_id, method=cfg.method)
    terms = topic.query_terms(cfg.verbose_queries)
    n = cfg.feedback.num_docs

    with _stage(diag, "query_model"):
        q_s = QueryModel.from_terms(terms)

    with _stage(diag, "source_feedback_retrieval"):
        f_s = retrieve(q_s, ctx.src_index, cfg.mu, n)
        f_s_docs = [ctx.src_docs[d] for d, _ in f_s]
        diag.feedback_source_docs = [d for d, _ in f_s]

    with _stage(diag, "target_feedback_retrieval"):
        initial = uniform_model(terms, ctx.dictionary)
        q_t0 = translate_query_model(q_s, initial)
        f_t = retrieve(q_t0, ctx.tgt_index, cfg.mu, n)
        f_t_docs = [ctx.tgt_docs[d] for d, _ in f_t]
        diag.feedback_target_docs = [d for d, _ in f_t]

    primary: TranslationModel | None = None
    if cfg.method == "proj":
        with _stage(diag, "embeddings"):
            src_table = train_sgns(
                f_s_docs, replace(cfg.sgns, seed=derive_seed(cfg.seed, topic.topic_id, "sgns-src")))
            tgt_table = train_sgns(
                f_t_docs, replace(cfg.sgns, seed=derive_seed(cfg.seed, topic.topic_id, "sgns-tgt")))
        with _stage(diag, "projection"):
            try:
                pairset = extract_pairs(src_table, tgt_table, ctx.dictionary)
            except NoTranslationPairsError as exc:
                diag.flags.append(f"zero_pairs:{exc.reason}")
                pairset = None
            if pairset is not None:
                diag.pair_provenance = dict(pairset.provenance)
                w = learn_projection(
                    pairset, src_table, tgt_table,
                    replace(cfg.projection, seed=derive_seed(cfg.seed, topic.topic_id, "proj")))
                diag.objective_curve = [obj for _, obj, _ in w.train_log]
        with _stage(diag, "translation_model"):
            if pairset is not None:
                primary = projected_model(terms, w, src_table, tgt_table,
                                          ctx.dictionary, fallback=cfg.fallback)
    elif cfg.method == "mixed":
        with _stage(diag, "translation_model"):
            primary = mixed_model(terms, f_s_docs, f_t_docs, ctx.dictionary,
                                  cfg.sgns, derive_seed(cfg.seed, topic.topic_id, "mixed"),
                                  fallback=cfg.fallback)
    elif cfg.method == "uniform":
        with _stage(diag, "translation_model"):
            primary = initial
    elif cfg.method == "top1":
        with _stage(diag, "translation_model"):
            primary = top1_model(terms, ctx.dictionary)
    elif cfg.method == "cooccur":
        with _stage(diag, "translation_model"):
            primary = cooccur_model(terms, ctx.dictionary, ctx.tgt_doc_list,
                                    cfg.cooccur_window)

    partner: TranslationModel | None = None
    interpolating = cfg.method in ("proj", "mixed")
    if interpolating and (need_partner or cfg.alpha < 1.0 or primary is None):
        with _stage(diag, "partner_model"):
            partner = cooccur_model(terms, ctx.dictionary, ctx.tgt_doc_list,
                                    cfg.cooccur_window)

    if primary is not None:
        diag.fallback_terms = list(primary.diagnostics["fallback_terms"])
        diag.dropped_terms = list(primary.diagnostics["dropped_terms"])
    return TopicModels(query=q_s, primary=primary, partner=partner, diagnostics=diag)


def combine_models(models: TopicModels, cfg: PipelineConfig,
                   alpha: float | None = None) -> TranslationModel:
    """Interpolate the embedding model with its partner at alpha."""
    a = cfg.alpha if alpha is None else alpha
    diag = models.diagnostics
    if models.primary is None:
        if models.partner is None:
            raise PipelineStageError("translation_model", diag.topic_id,
                                     ValueError("no translation model could be built"))
        if "partner_only" not in diag.flags:
            diag.flags.append("partner_only")
        return models.partner
    if cfg.method not in ("proj", "mixed") or a == 1.0:
        return models.primary
    if models.partner is None:
        raise PipelineStageError("partner_model", diag.topic_id,
                                 ValueError("interpolation requested but no partner model"))
    if a == 0.0:
        return models.partner
    return interpolate_models(models.primary, models.partner, a)


def finish_topic(ctx: ExperimentContext, cfg: PipelineConfig, models: TopicModels,
                 tm: TranslationModel) -> RankedList:
    """Query translation, mixture feedback, and final retrieval."""
    diag = models.diagnostics
    with _stage(diag, "query_translation"):
        q_t = translate_query_model(models.query, tm)
    if cfg.prf_enabled:
        with _stage(diag, "feedback"):
            fb = retrieve(q_t, ctx.tgt_index, cfg.mu, cfg.feedback.num_docs)
            fb_docs = [ctx.tgt_docs[d] for d, _ in fb]
            fb_model = estimate_feedback_model(fb_docs, ctx.tgt_index, cfg.feedback)
            q_t = interpolate_query(q_t, fb_model, cfg.feedback.interp_coeff)
    with _stage(diag, "final_retrieval"):
        ranked = retrieve(q_t, ctx.tgt_index, cfg.mu, cfg.depth)
    return ranked


def run_topic(ctx: ExperimentContext, topic: Topic,
              cfg: PipelineConfig) -> tuple[RankedList, TopicDiagnostics]:
    models = prepare_topic(ctx, topic, cfg)
    tm = combine_models(models, cfg)
    ranked = finish_topic(ctx, cfg, models, tm)
    return ranked, models.diagnostics


@dataclass
class ExperimentResult:
    run: RunFile
    run_path: str
    diagnostics_path: str
    manifest_path: str


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def run_experiment(ctx: ExperimentContext, cfg: PipelineConfig,
                   outdir: str) -> ExperimentResult:
    """Run every topic, write run file, diagnostics, and manifest."""
    os.makedirs(outdir, exist_ok=True)
    rankings: dict[str, RankedList] = {}
    diagnostics: list[TopicDiagnostics] = []
    for topic in sorted(ctx.topics, key=lambda t: t.topic_id):
        ranked, diag = run_topic(ctx, topic, cfg)
        rankings[topic.topic_id] = ranked
        diagnostics.append(diag)
    run = RunFile(tag=cfg.tag, rankings=rankings)
    run_path = os.path.join(outdir, f"{cfg.tag}.run")
    write_run(run, run_path)
    diagnostics_path = os.path.join(outdir, f"{cfg.tag}.diagnostics.json")
    with open(diagnostics_path, "w", encoding="utf-8") as fh:
        json.dump([d.to_dict() for d in diagnostics], fh, indent=2, sort_keys=True)
        fh.write("\n")
    manifest = {
        "config": cfg.to_dict(),
        "inputs": {name: _sha256(path) for name, path in (
            ("source_docs", cfg.source_docs),
            ("target_docs", cfg.target_docs),
            ("dictionary", cfg.dictionary),
            ("topics", cfg.topics),
        ) if path},
        "outputs": {
            os.path.basename(run_path): _sha256(run_path),
            os.path.basename(diagnostics_path): _sha256(diagnostics_path),
        },
    }
    manifest_path = os.path.join(outdir, f"{cfg.tag}.manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return ExperimentResult(run=run, run_path=run_path,
                            diagnostics_path=diagnostics_path,
                            manifest_path=manifest_path)


def sweep(ctx: ExperimentContext, cfg: PipelineConfig, alphas: list[float],
          ns: list[int], outdir: str) -> str:
    """Grid over (alpha, n); one run file per cell plus a MAP CSV.

    For each n the alpha-independent artifacts (feedback sets, embedding
    spaces, projection, partner model) are built once per topic and
    shared across the alpha values.
    """
    if ctx.qrels is None:
        raise ValueError("sweep needs qrels to report MAP")
    os.makedirs(outdir, exist_ok=True)
    rows: list[tuple[float, int, float]] = []
    for n in ns:
        cfg_n = replace(cfg, feedback=replace(cfg.feedback, num_docs=n))
        prepared = [(topic, prepare_topic(ctx, topic, cfg_n, need_partner=True))
                    for topic in sorted(ctx.topics, key=lambda t: t.topic_id)]
        for alpha in alphas:
            rankings: dict[str, RankedList] = {}
            for topic, models in prepared:
                tm = combine_models(models, cfg_n, alpha=alpha)
                rankings[topic.topic_id] = finish_topic(ctx, cfg_n, models, tm)
            tag = f"{cfg.tag}-a{alpha:g}-n{n}"
            run = RunFile(tag=tag, rankings=rankings)
            write_run(run, os.path.join(outdir, f"{tag}.run"))
            report = evaluate_run(run, ctx.qrels, depth=cfg.depth)
            rows.append((alpha, n, report.map))
    csv_path = os.path.join(outdir, "sweep.csv")
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("alpha,n,map\n")
        for alpha, n, map_score in rows:
            fh.write(f"{alpha:g},{n},{map_score:.6f}\n")
    return csv_path
