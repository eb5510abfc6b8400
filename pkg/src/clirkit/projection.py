"""Linear map between the source and target embedding spaces.

Given translation pairs (w_s, w_t) whose vectors u, v live in two
independently trained n-dimensional spaces, learn W (n x n) minimizing

    f(W) = sum_pairs 1/2 ||W^T u - v||^2

by per-pair stochastic gradient descent,

    W <- W - eta * u (W^T u - v)^T,

with the learning rate multiplied by ``decay`` after every epoch.
Projection of a source vector is then u_hat = W^T u.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from clirkit.corpus import BilingualDictionary
from clirkit.embeddings import EmbeddingTable


class NoTranslationPairsError(ValueError):
    """No usable (source, candidate) pairs; ``reason`` separates an empty
    dictionary from vocabularies that simply do not overlap with it."""

    def __init__(self, reason: str, message: str):
        super().__init__(message)
        self.reason = reason


@dataclass
class TranslationPairSet:
    pairs: list[tuple[str, str]]
    provenance: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass
class ProjectionConfig:
    eta: float = 0.05
    epochs: int = 100
    decay: float = 0.98
    init_range: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError("eta must be positive")


@dataclass
class ProjectionMatrix:
    w: np.ndarray
    n: int
    train_log: list[tuple[int, float, float]] = field(default_factory=list)
    seed: int = 0

    def project(self, u: np.ndarray) -> np.ndarray:
        """u_hat = W^T u."""
        u = np.asarray(u, dtype=float)
        if u.shape != (self.n,):
            raise ValueError(f"expected vector of length {self.n}, got {u.shape}")
        return self.w.T @ u

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{self.n}\n")
            for row in self.w:
                fh.write(" ".join(f"{x:.17g}" for x in row) + "\n")

    @classmethod
    def load(cls, path: str) -> "ProjectionMatrix":
        with open(path, encoding="utf-8") as fh:
            n = int(fh.readline())
            rows = [[float(x) for x in fh.readline().split()] for _ in range(n)]
        w = np.array(rows)
        if w.shape != (n, n):
            raise ValueError("projection matrix file does not match its header")
        return cls(w=w, n=n)

    def save_train_log(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("epoch,objective,eta\n")
            for epoch, obj, eta in self.train_log:
                fh.write(f"{epoch},{obj:.17g},{eta:.17g}\n")


def extract_pairs(src_emb: EmbeddingTable, tgt_emb: EmbeddingTable,
                  dictionary: BilingualDictionary) -> TranslationPairSet:
    """All (w_s, w_t) with w_s in the source vocabulary and w_t a
    dictionary candidate present in the target vocabulary.

    One pair per surviving candidate, ordered by source term then
    candidate dictionary position. Duplicates are not collapsed; each is
    an independent training constraint.
    """
    if not dictionary.entries:
        raise NoTranslationPairsError("empty_dictionary", "the dictionary has no entries")
    pairs: list[tuple[str, str]] = []
    sources_seen = 0
    for w_s in sorted(dictionary.entries):
        if w_s not in src_emb.vectors:
            continue
        sources_seen += 1
        for w_t in dictionary.entries[w_s]:
            if w_t in tgt_emb.vectors:
                pairs.append((w_s, w_t))
    if not pairs:
        raise NoTranslationPairsError(
            "no_overlap",
            f"no pair survives: {len(dictionary.entries)} dictionary entries, "
            f"{sources_seen} with a source vector, none with a target-side vector")
    return TranslationPairSet(
        pairs=pairs,
        provenance={"entries_examined": len(dictionary.entries),
                    "entries_with_source_vector": sources_seen,
                    "pairs_kept": len(pairs)})


def _pair_matrices(pairs, src_emb: EmbeddingTable,
                   tgt_emb: EmbeddingTable) -> tuple[np.ndarray, np.ndarray]:
    plist = pairs.pairs if isinstance(pairs, TranslationPairSet) else list(pairs)
    u_rows = np.array([src_emb.vectors[s] for s, _ in plist])
    v_rows = np.array([tgt_emb.vectors[t] for _, t in plist])
    return u_rows, v_rows


def objective(w: np.ndarray, pairs, src_emb: EmbeddingTable,
              tgt_emb: EmbeddingTable) -> float:
    """sum over pairs of 1/2 ||W^T u - v||^2."""
    u_rows, v_rows = _pair_matrices(pairs, src_emb, tgt_emb)
    residual = u_rows @ w - v_rows
    return 0.5 * float(np.sum(residual * residual))


def objective_gradient(w: np.ndarray, pairs, src_emb: EmbeddingTable,
                       tgt_emb: EmbeddingTable) -> np.ndarray:
    """Full-batch gradient, sum over pairs of u (W^T u - v)^T."""
    u_rows, v_rows = _pair_matrices(pairs, src_emb, tgt_emb)
    return u_rows.T @ (u_rows @ w - v_rows)


def learn_projection(pairs, src_emb: EmbeddingTable, tgt_emb: EmbeddingTable,
                     cfg: ProjectionConfig) -> ProjectionMatrix:
    """Seeded SGD over shuffled pair visits; logs the objective per epoch."""
    u_rows, v_rows = _pair_matrices(pairs, src_emb, tgt_emb)
    if u_rows.size == 0:
        raise ValueError("cannot learn a projection from zero pairs")
    if u_rows.shape[1] != v_rows.shape[1]:
        raise ValueError("source and target embedding dimensions differ")
    n = u_rows.shape[1]
    rng = np.random.default_rng(cfg.seed)
    w = rng.uniform(-cfg.init_range, cfg.init_range, size=(n, n))
    eta = cfg.eta
    order = np.arange(len(u_rows))
    train_log: list[tuple[int, float, float]] = []
    for epoch in range(cfg.epochs):
        rng.shuffle(order)
        # divergence shows up as a non-finite objective, checked below
        with np.errstate(over="ignore", invalid="ignore"):
            for i in order:
                u = u_rows[i]
                residual = w.T @ u - v_rows[i]
                w -= eta * np.outer(u, residual)
            resid = u_rows @ w - v_rows
            obj = 0.5 * float(np.sum(resid * resid))
        if not np.isfinite(obj):
            raise ValueError(
                f"projection training diverged at epoch {epoch} "
                f"(objective not finite); use a smaller eta than {cfg.eta}")
        train_log.append((epoch, obj, eta))
        eta *= cfg.decay
    return ProjectionMatrix(w=w, n=n, train_log=train_log, seed=cfg.seed)
