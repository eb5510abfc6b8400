"""Term-translation probability models and query-model translation.

Every constructor returns a TranslationModel whose rows are proper
distributions over dictionary candidates. The embedding-based models
score candidates by cosine similarity and pass the scores through a
softmax; the others use dictionary order, uniform mass, or windowed
co-occurrence evidence.

Fallback policy: a query term without any dictionary entry is always
dropped (and recorded); a term whose vectors are unusable either gets a
uniform row over its dictionary candidates ("uniform_over_candidates",
the default) or is dropped too ("drop_term").
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from clirkit.corpus import BilingualDictionary, Document
from clirkit.embeddings import EmbeddingTable, SgnsConfig, train_sgns
from clirkit.projection import ProjectionMatrix
from clirkit.retrieval import QueryModel

FALLBACK_POLICIES = ("uniform_over_candidates", "drop_term")


@dataclass
class TranslationModel:
    """Per source term, a distribution over candidate translations."""

    table: dict[str, list[tuple[str, float]]] = field(default_factory=dict)
    fallback: str = "uniform_over_candidates"
    diagnostics: dict = field(default_factory=lambda: {"fallback_terms": [], "dropped_terms": []})

    def distribution(self, term: str) -> dict[str, float]:
        return dict(self.table.get(term, ()))

    def argmax(self, term: str) -> str | None:
        row = self.table.get(term)
        if not row:
            return None
        return max(row, key=lambda cp: (cp[1], cp[0]))[0]

    def save(self, path: str) -> None:
        """TSV rows `source<TAB>target<TAB>prob`, grouped by source."""
        with open(path, "w", encoding="utf-8") as fh:
            for source in self.table:
                for target, prob in self.table[source]:
                    fh.write(f"{source}\t{target}\t{prob:.12g}\n")


def softmax_scores(scores: Sequence[float]) -> list[float]:
    """Softmax with max-shift; invariant to adding a constant."""
    if not len(scores):
        return []
    top = max(scores)
    exps = [math.exp(s - top) for s in scores]
    total = sum(exps)
    return [e / total for e in exps]


def _dedupe(terms: Sequence[str]) -> list[str]:
    seen = set()
    out = []
    for t in terms:
        if t not in seen:
            seen.add(t)
            out.append(t)
    return out


def _uniform_row(candidates: Sequence[str]) -> list[tuple[str, float]]:
    p = 1.0 / len(candidates)
    return [(c, p) for c in candidates]


def _apply_fallback(model: TranslationModel, term: str,
                    candidates: Sequence[str]) -> None:
    model.diagnostics["fallback_terms"].append(term)
    if model.fallback == "uniform_over_candidates":
        model.table[term] = _uniform_row(candidates)
    else:
        model.diagnostics["dropped_terms"].append(term)


def _check_fallback(fallback: str) -> None:
    if fallback not in FALLBACK_POLICIES:
        raise ValueError(f"unknown fallback policy {fallback!r}")


def projected_model(query_terms: Sequence[str], w: ProjectionMatrix,
                    src_emb: EmbeddingTable, tgt_emb: EmbeddingTable,
                    dictionary: BilingualDictionary,
                    fallback: str = "uniform_over_candidates") -> TranslationModel:
    """Softmax over cosine(W^T u, v_candidate) per query term.

    Candidates without a target vector are excluded from the softmax;
    terms with no usable vectors at all take the fallback row.
    """
    _check_fallback(fallback)
    model = TranslationModel(fallback=fallback)
    for term in _dedupe(query_terms):
        candidates = dictionary.entries.get(term)
        if not candidates:
            model.diagnostics["dropped_terms"].append(term)
            continue
        u = src_emb.vectors.get(term)
        if u is None:
            _apply_fallback(model, term, candidates)
            continue
        projected = w.project(u)
        norm_p = float(np.linalg.norm(projected))
        if norm_p == 0.0:
            _apply_fallback(model, term, candidates)
            continue
        scored: list[tuple[str, float]] = []
        for cand in candidates:
            v = tgt_emb.vectors.get(cand)
            if v is None:
                continue
            norm_v = float(np.linalg.norm(v))
            if norm_v == 0.0:
                continue
            cos = float(np.dot(projected, v)) / (norm_p * norm_v)
            scored.append((cand, max(-1.0, min(1.0, cos))))
        if not scored:
            _apply_fallback(model, term, candidates)
            continue
        probs = softmax_scores([s for _, s in scored])
        model.table[term] = [(c, p) for (c, _), p in zip(scored, probs)]
    return model


def uniform_model(query_terms: Sequence[str],
                  dictionary: BilingualDictionary) -> TranslationModel:
    """Equal weight on every dictionary candidate."""
    model = TranslationModel()
    for term in _dedupe(query_terms):
        candidates = dictionary.entries.get(term)
        if not candidates:
            model.diagnostics["dropped_terms"].append(term)
            continue
        model.table[term] = _uniform_row(candidates)
    return model


def top1_model(query_terms: Sequence[str],
               dictionary: BilingualDictionary) -> TranslationModel:
    """All mass on the first dictionary candidate."""
    model = TranslationModel()
    for term in _dedupe(query_terms):
        candidates = dictionary.entries.get(term)
        if not candidates:
            model.diagnostics["dropped_terms"].append(term)
            continue
        model.table[term] = [(candidates[0], 1.0)]
    return model


def cooccur_model(query_terms: Sequence[str], dictionary: BilingualDictionary,
                  tgt_docs: Sequence[Document], window: int = 4) -> TranslationModel:
    """Add-one windowed co-occurrence with the other query terms' candidates.

    score(c) = 1 + sum over candidates c' of the other query terms of the
    number of position pairs within ``window`` tokens of each other (same
    document) where c and c' occur. Scores are normalized per source term.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    model = TranslationModel()
    terms = _dedupe(query_terms)
    cand_lists = {t: dictionary.entries.get(t, ()) for t in terms}
    needed = {c for cands in cand_lists.values() for c in cands}
    counts = _window_cooccurrence(tgt_docs, needed, window)
    for term in terms:
        candidates = cand_lists[term]
        if not candidates:
            model.diagnostics["dropped_terms"].append(term)
            continue
        partner_cands = [c for other, cands in cand_lists.items()
                         if other != term for c in cands]
        scores = []
        for cand in candidates:
            hits = sum(counts.get((min(cand, pc), max(cand, pc)), 0)
                       for pc in partner_cands)
            scores.append(1.0 + hits)
        total = sum(scores)
        model.table[term] = [(c, s / total) for c, s in zip(candidates, scores)]
    return model


def _window_cooccurrence(docs: Sequence[Document], needed: set[str],
                         window: int) -> dict[tuple[str, str], int]:
    counts: Counter[tuple[str, str]] = Counter()
    for doc in docs:
        tokens = doc.tokens
        n = len(tokens)
        for i in range(n):
            a = tokens[i]
            if a not in needed:
                continue
            for j in range(i + 1, min(n, i + window + 1)):
                b = tokens[j]
                if b in needed:
                    counts[(min(a, b), max(a, b))] += 1
    return dict(counts)


def mixed_model(query_terms: Sequence[str], f_s: Sequence[Document],
                f_t: Sequence[Document], dictionary: BilingualDictionary,
                cfg: SgnsConfig, seed: int,
                fallback: str = "uniform_over_candidates") -> TranslationModel:
    """Shared-space model from shuffled rank-paired document merges.

    The i-th ranked source document is merged with the i-th ranked target
    document (extra documents on the longer side are ignored), each merge
    is shuffled with the seeded generator, and one embedding space is
    trained on the merged collection. Translation probabilities are the
    softmax over direct cosines, with no projection.
    """
    _check_fallback(fallback)
    if not f_s or not f_t:
        raise ValueError("both document lists must be non-empty")
    merged = merge_shuffle(f_s, f_t, seed)
    table = train_sgns(merged, replace(cfg, seed=seed))
    model = TranslationModel(fallback=fallback)
    for term in _dedupe(query_terms):
        candidates = dictionary.entries.get(term)
        if not candidates:
            model.diagnostics["dropped_terms"].append(term)
            continue
        u = table.vectors.get(term)
        if u is None or float(np.linalg.norm(u)) == 0.0:
            _apply_fallback(model, term, candidates)
            continue
        norm_u = float(np.linalg.norm(u))
        scored = []
        for cand in candidates:
            v = table.vectors.get(cand)
            if v is None:
                continue
            norm_v = float(np.linalg.norm(v))
            if norm_v == 0.0:
                continue
            cos = float(np.dot(u, v)) / (norm_u * norm_v)
            scored.append((cand, max(-1.0, min(1.0, cos))))
        if not scored:
            _apply_fallback(model, term, candidates)
            continue
        probs = softmax_scores([s for _, s in scored])
        model.table[term] = [(c, p) for (c, _), p in zip(scored, probs)]
    return model


def merge_shuffle(f_s: Sequence[Document], f_t: Sequence[Document],
                  seed: int) -> list[Document]:
    """Rank-pair and shuffle document merges into pseudo-bilingual docs."""
    rng = np.random.default_rng(seed)
    merged: list[Document] = []
    for i, (ds, dt) in enumerate(zip(f_s, f_t)):
        tokens = list(ds.tokens) + list(dt.tokens)
        perm = rng.permutation(len(tokens))
        merged.append(Document(f"merged-{i}", tuple(tokens[p] for p in perm)))
    return merged


def interpolate_models(p1: TranslationModel, p2: TranslationModel,
                       alpha: float) -> TranslationModel:
    """alpha * p1 + (1 - alpha) * p2 over the union of candidates.

    Exact at the endpoints: alpha 1 returns a copy of p1, alpha 0 a copy
    of p2. Otherwise missing candidates count as 0 and each row is
    renormalized exactly.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    if alpha == 1.0:
        return TranslationModel(table={s: list(row) for s, row in p1.table.items()},
                                fallback=p1.fallback,
                                diagnostics={k: list(v) for k, v in p1.diagnostics.items()})
    if alpha == 0.0:
        return TranslationModel(table={s: list(row) for s, row in p2.table.items()},
                                fallback=p2.fallback,
                                diagnostics={k: list(v) for k, v in p2.diagnostics.items()})
    model = TranslationModel(fallback=p1.fallback)
    sources = list(p1.table)
    sources.extend(s for s in p2.table if s not in p1.table)
    for source in sources:
        row1 = dict(p1.table.get(source, ()))
        row2 = dict(p2.table.get(source, ()))
        cands = list(row1)
        cands.extend(c for c in row2 if c not in row1)
        weights = {c: alpha * row1.get(c, 0.0) + (1.0 - alpha) * row2.get(c, 0.0)
                   for c in cands}
        total = sum(weights.values())
        model.table[source] = [(c, weights[c] / total) for c in cands]
    dropped = set(p1.diagnostics["dropped_terms"]) & set(p2.diagnostics["dropped_terms"])
    model.diagnostics["dropped_terms"] = sorted(dropped)
    model.diagnostics["fallback_terms"] = sorted(
        set(p1.diagnostics["fallback_terms"]) | set(p2.diagnostics["fallback_terms"]))
    return model


def translate_query_model(src_query: QueryModel,
                          tm: TranslationModel) -> QueryModel:
    """q_t(w_t) = sum over source terms of p(w_t|w_s) * q_s(w_s).

    Source terms without a model row are dropped; their mass is
    redistributed by the final normalization.
    """
    out: dict[str, float] = {}
    translated_any = False
    for w_s, q_w in src_query.weights.items():
        row = tm.table.get(w_s)
        if not row:
            continue
        translated_any = True
        for w_t, p in row:
            out[w_t] = out.get(w_t, 0.0) + p * q_w
    if not translated_any:
        raise ValueError("every source query term was dropped by the translation model")
    return QueryModel(out)
