"""Skip-gram negative-sampling embeddings trained from scratch.

Tuned for the tiny collections this toolkit trains on (tens of
documents), so the emphasis is reproducibility rather than throughput:
a single seeded generator drives initialization and sampling, pairs are
visited in corpus order, and there is no asynchronous weight sharing.

For each (center, context) pair within the window the trainer performs
one positive update and ``negatives`` negative updates of the logistic
objective. Pairs are processed in batches whose size is a deterministic
function of the vocabulary: gradients inside a batch are taken against
the parameters at the batch start and accumulated exactly (duplicate
rows sum their contributions), so results are reproducible bit for bit
given a seed. Negatives are drawn from the unigram distribution raised
to 0.75. The learning rate decays linearly from ``learning_rate`` to
``learning_rate / 100`` across epochs.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Iterator, Sequence

import numpy as np

from clirkit.corpus import Document


@dataclass
class SgnsConfig:
    window: int = 10
    negatives: int = 45
    dim: int = 50
    epochs: int = 100
    learning_rate: float = 0.05
    min_count: int = 1
    subsample: float = 0.0
    seed: int = 0

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(asdict(self), sort_keys=True).encode()).hexdigest()[:16]


@dataclass
class EmbeddingTable:
    """Term -> dense vector of fixed dimension, plus training metadata."""

    dim: int
    vectors: dict[str, np.ndarray]
    metadata: dict = field(default_factory=dict)

    def __contains__(self, term: str) -> bool:
        return term in self.vectors

    @property
    def vocab(self) -> list[str]:
        return list(self.vectors)

    def save(self, path: str) -> None:
        """word2vec text format: `vocab dim` header, then one word per line."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{len(self.vectors)} {self.dim}\n")
            for word, vec in self.vectors.items():
                cells = " ".join(f"{x:.17g}" for x in vec)
                fh.write(f"{word} {cells}\n")

    @classmethod
    def load(cls, path: str) -> "EmbeddingTable":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().split()
            vocab_size, dim = int(header[0]), int(header[1])
            vectors: dict[str, np.ndarray] = {}
            for line in fh:
                parts = line.rstrip("\n").split(" ")
                if len(parts) != dim + 1:
                    raise ValueError(f"embedding row has {len(parts) - 1} values, expected {dim}")
                vectors[parts[0]] = np.array([float(x) for x in parts[1:]])
        if len(vectors) != vocab_size:
            raise ValueError("embedding header vocab size does not match rows")
        return cls(dim=dim, vectors=vectors)


@dataclass
class SgnsModel:
    """Full trainer state; ``to_table`` keeps only the input vectors."""

    vocab: list[str]
    word_index: dict[str, int]
    input_vectors: np.ndarray
    context_vectors: np.ndarray
    config: SgnsConfig

    def to_table(self) -> EmbeddingTable:
        vectors = {w: self.input_vectors[i].copy() for i, w in enumerate(self.vocab)}
        return EmbeddingTable(dim=self.config.dim, vectors=vectors,
                              metadata={"config": self.config.digest(),
                                        "seed": self.config.seed})


def sigmoid(x):
    scalar = np.ndim(x) == 0
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty_like(arr)
    pos = arr >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-arr[pos]))
    ex = np.exp(arr[~pos])
    out[~pos] = ex / (1.0 + ex)
    return float(out[0]) if scalar else out


def pair_loss(u: np.ndarray, v: np.ndarray, positive: bool) -> float:
    """Logistic loss of one (center, target) pair: -log sigma(+-u.v)."""
    s = float(np.dot(u, v))
    x = -s if positive else s
    # softplus(x) without overflow for large |x|
    return max(x, 0.0) + float(np.log1p(np.exp(-abs(x))))


def pair_gradients(u: np.ndarray, v: np.ndarray, positive: bool) -> tuple[np.ndarray, np.ndarray]:
    """(dL/du, dL/dv) of pair_loss at the given vectors."""
    s = float(np.dot(u, v))
    g = sigmoid(s) - (1.0 if positive else 0.0)
    return g * v, g * u


def iter_window_pairs(token_ids: Sequence[int], window: int) -> Iterator[tuple[int, int]]:
    """All (center, context) id pairs within ``window`` positions."""
    n = len(token_ids)
    for i in range(n):
        lo = max(0, i - window)
        hi = min(n, i + window + 1)
        for j in range(lo, hi):
            if j != i:
                yield token_ids[i], token_ids[j]


def negative_distribution(counts: Sequence[int]) -> np.ndarray:
    """Unigram distribution raised to 0.75, renormalized."""
    weights = np.asarray(counts, dtype=float) ** 0.75
    return weights / weights.sum()


def negative_table(counts: Sequence[int], size: int = 1_000_000) -> np.ndarray:
    """Sampling table over word ids; uniform draws from it approximate the
    0.75-power unigram distribution to one part in ``size``."""
    cum = np.cumsum(negative_distribution(counts))
    cum[-1] = 1.0
    grid = (np.arange(size) + 0.5) / size
    return np.searchsorted(cum, grid).astype(np.int32)


def build_vocab(docs: Sequence[Document], min_count: int) -> tuple[list[str], list[int]]:
    """Vocabulary ordered by count desc then term asc; parallel count list."""
    counts: Counter[str] = Counter()
    for doc in docs:
        counts.update(doc.tokens)
    kept = [(w, c) for w, c in counts.items() if c >= min_count]
    kept.sort(key=lambda wc: (-wc[1], wc[0]))
    return [w for w, _ in kept], [c for _, c in kept]


def train_sgns_model(docs: Sequence[Document], cfg: SgnsConfig) -> SgnsModel:
    vocab, counts = build_vocab(docs, cfg.min_count)
    if not vocab:
        raise ValueError("vocabulary empty after min_count filtering")
    word_index = {w: i for i, w in enumerate(vocab)}
    vsize = len(vocab)
    rng = np.random.default_rng(cfg.seed)

    emb = (rng.random((vsize, cfg.dim)) - 0.5) / cfg.dim
    ctx = np.zeros((vsize, cfg.dim))

    neg_table = negative_table(counts)
    freqs = np.asarray(counts, dtype=float)
    freqs /= freqs.sum()

    sequences = [[word_index[t] for t in doc.tokens if t in word_index]
                 for doc in docs]

    static_pairs = None
    if cfg.subsample <= 0.0:
        static_pairs = _enumerate_pairs(sequences, cfg.window)

    for epoch in range(cfg.epochs):
        if cfg.epochs > 1:
            frac = epoch / (cfg.epochs - 1)
        else:
            frac = 0.0
        lr = cfg.learning_rate * (1.0 - frac) + (cfg.learning_rate / 100.0) * frac

        if static_pairs is not None:
            centers, contexts = static_pairs
        else:
            kept = [[t for t in seq
                     if freqs[t] <= cfg.subsample
                     or rng.random() < np.sqrt(cfg.subsample / freqs[t])]
                    for seq in sequences]
            centers, contexts = _enumerate_pairs(kept, cfg.window)

        n_pairs = len(centers)
        if n_pairs == 0:
            continue
        negatives = neg_table[rng.integers(0, len(neg_table),
                                           size=(n_pairs, cfg.negatives))]
        _run_epoch(emb, ctx, centers, contexts, negatives, lr)

    return SgnsModel(vocab=vocab, word_index=word_index,
                     input_vectors=emb, context_vectors=ctx, config=cfg)


def _enumerate_pairs(sequences: list[list[int]], window: int) -> tuple[np.ndarray, np.ndarray]:
    centers: list[int] = []
    contexts: list[int] = []
    for seq in sequences:
        for c, t in iter_window_pairs(seq, window):
            centers.append(c)
            contexts.append(t)
    return np.asarray(centers, dtype=np.intp), np.asarray(contexts, dtype=np.intp)


# Pairs per update batch, a deterministic function of the input (it
# regroups gradient sums, so it is part of the reproducibility contract).
# Bounding batch * (negatives + 1) / vocabulary keeps the summed per-row
# step close to sequential SGD even on near-degenerate vocabularies.
_MAX_BATCH_PAIRS = 64


def _batch_pairs(vsize: int, negatives: int) -> int:
    return max(1, min(_MAX_BATCH_PAIRS, (2 * vsize) // (negatives + 1)))


def _scatter_subtract(matrix: np.ndarray, rows: np.ndarray,
                      grads: np.ndarray) -> None:
    """matrix[rows] -= grads with exact accumulation over duplicate rows."""
    order = np.argsort(rows, kind="stable")
    sorted_rows = rows[order]
    sorted_grads = grads[order]
    starts = np.concatenate(([0], np.flatnonzero(np.diff(sorted_rows)) + 1))
    matrix[sorted_rows[starts]] -= np.add.reduceat(sorted_grads, starts, axis=0)


# Vocabulary cutoff for the dense batch-coefficient path below.
_DENSE_COEF_LIMIT = 2_000_000


def _run_epoch(emb: np.ndarray, ctx: np.ndarray, centers: np.ndarray,
               contexts: np.ndarray, negatives: np.ndarray, lr: float) -> None:
    n_pairs = len(centers)
    vsize = ctx.shape[0]
    k = negatives.shape[1]
    batch = _batch_pairs(vsize, k)
    labels = np.zeros(k + 1)
    labels[0] = 1.0
    row_offsets = np.arange(batch)[:, None] * vsize
    for start in range(0, n_pairs, batch):
        end = min(start + batch, n_pairs)
        b = end - start
        c = centers[start:end]
        targets = np.empty((b, k + 1), dtype=np.intp)
        targets[:, 0] = contexts[start:end]
        targets[:, 1:] = negatives[start:end]
        u_rows = emb[c]
        if b * vsize <= _DENSE_COEF_LIMIT:
            # For small vocabularies, aggregate the batch through a dense
            # pair/word coefficient matrix and two matrix products.
            flat = (targets + row_offsets[:b]).ravel()
            scores = (u_rows @ ctx.T).ravel()[flat].reshape(b, k + 1)
            ex = np.exp(-np.abs(scores))
            sig = np.where(scores >= 0.0, 1.0 / (1.0 + ex), ex / (1.0 + ex))
            g = (sig - labels) * lr
            coef = np.bincount(flat, weights=g.ravel(),
                               minlength=b * vsize).reshape(b, vsize)
            grad_u = coef @ ctx
            ctx -= coef.T @ u_rows
        else:
            t_rows = ctx[targets]
            scores = np.einsum("bd,bkd->bk", u_rows, t_rows)
            g = (sigmoid(scores) - labels) * lr
            grad_u = np.einsum("bk,bkd->bd", g, t_rows)
            contrib = (g[:, :, None] * u_rows[:, None, :]).reshape(-1, u_rows.shape[1])
            _scatter_subtract(ctx, targets.ravel(), contrib)
        _scatter_subtract(emb, c, grad_u)


def train_sgns(docs: Sequence[Document], cfg: SgnsConfig) -> EmbeddingTable:
    """Train and return the input (center-word) vectors."""
    return train_sgns_model(docs, cfg).to_table()


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """u.v / (|u||v|), clipped into [-1, 1]; zero vectors are an error."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"vector lengths differ: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine undefined for zero vectors")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))
