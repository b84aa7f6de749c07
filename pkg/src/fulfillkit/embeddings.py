"""Word vectors from windowed co-occurrence statistics.

Training minimizes the weighted least-squares objective

    J = sum_ij f(X_ij) * (w_i . wt_j + b_i + bt_j - log X_ij)^2,
    f(x) = min((x / x_max)^0.75, 1)

by AdaGrad over shuffled co-occurrence pairs, one pair at a time, single
threaded so a fixed seed reproduces the table bit for bit. The published
vector is w + wt (main plus context), the standard combination for this
family of models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError, NumericError

X_MAX_DEFAULT = 100.0
ALPHA_DEFAULT = 0.75
LR_DEFAULT = 0.05


@dataclass(frozen=True)
class CoocMatrix:
    """Symmetric weighted co-occurrence counts over a min-count vocabulary.

    ``pairs`` maps (i, j) to X_ij for every nonzero entry, both orientations
    present for i != j.
    """

    vocab: dict[str, int]
    pairs: dict[tuple[int, int], float]

    def count(self, word_i: str, word_j: str) -> float:
        i, j = self.vocab.get(word_i), self.vocab.get(word_j)
        if i is None or j is None:
            return 0.0
        return self.pairs.get((i, j), 0.0)

    @property
    def n_words(self) -> int:
        return len(self.vocab)


@dataclass(frozen=True)
class EmbeddingTable:
    """word -> row of a |V| x m matrix; all entries finite."""

    vocab: dict[str, int]
    vectors: np.ndarray

    def __post_init__(self) -> None:
        if self.vectors.ndim != 2 or len(self.vocab) != self.vectors.shape[0]:
            raise DataError("vectors must be a |vocab| x dim matrix")
        if not np.all(np.isfinite(self.vectors)):
            raise NumericError("embedding table contains non-finite values")

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def __contains__(self, word: str) -> bool:
        return word in self.vocab

    def vector(self, word: str) -> np.ndarray:
        return self.vectors[self.vocab[word]]


def build_cooccurrence(
    streams: Sequence[Sequence[str]], window: int = 15, min_count: int = 5
) -> CoocMatrix:
    """Count 1/distance-weighted co-occurrences within a symmetric window.

    Words with corpus frequency below ``min_count`` are removed from the
    streams before distances are measured, so surviving words can co-occur
    across a dropped gap. Raises DataError if nothing survives the filter.
    """
    if window < 1:
        raise DataError("window must be >= 1")
    if min_count < 1:
        raise DataError("min_count must be >= 1")
    freq: dict[str, int] = {}
    for stream in streams:
        for tok in stream:
            freq[tok] = freq.get(tok, 0) + 1
    kept = sorted((w for w, c in freq.items() if c >= min_count), key=lambda w: (-freq[w], w))
    if not kept:
        raise DataError("empty vocabulary: no word reaches min_count")
    vocab = {w: i for i, w in enumerate(kept)}

    pairs: dict[tuple[int, int], float] = {}
    for stream in streams:
        ids = [vocab[t] for t in stream if t in vocab]
        for pos in range(len(ids)):
            hi = min(len(ids), pos + window + 1)
            for other in range(pos + 1, hi):
                weight = 1.0 / (other - pos)
                a, b = ids[pos], ids[other]
                pairs[(a, b)] = pairs.get((a, b), 0.0) + weight
                if a != b:
                    pairs[(b, a)] = pairs.get((b, a), 0.0) + weight
    return CoocMatrix(vocab=vocab, pairs=pairs)


def train_embeddings(
    cooc: CoocMatrix,
    dim: int = 50,
    iters: int = 20,
    seed: int = 0,
    lr: float = LR_DEFAULT,
    x_max: float = X_MAX_DEFAULT,
    alpha: float = ALPHA_DEFAULT,
    return_history: bool = False,
):
    """Train vectors on a co-occurrence matrix. Deterministic per seed.

    Returns the EmbeddingTable, or (table, history) when ``return_history``
    is set; history[k] is the objective after k epochs (history[0] is the
    initial objective), so history[-1] < history[0] on any input with pairs.
    Raises NumericError naming the iteration if the loss goes non-finite.
    """
    if cooc.n_words == 0:
        raise DataError("empty co-occurrence matrix")
    if dim < 1 or iters < 0:
        raise DataError("dim must be >= 1 and iters >= 0")
    v = cooc.n_words
    rng = np.random.default_rng(seed)
    scale = 1.0 / (dim + 1)
    w = (rng.random((v, dim)) - 0.5) * scale
    wt = (rng.random((v, dim)) - 0.5) * scale
    b = (rng.random(v) - 0.5) * scale
    bt = (rng.random(v) - 0.5) * scale
    acc_w = np.ones((v, dim))
    acc_wt = np.ones((v, dim))
    acc_b = np.ones(v)
    acc_bt = np.ones(v)

    items = sorted(cooc.pairs.items())
    idx_i = np.array([ij[0] for ij, _ in items], dtype=np.int64)
    idx_j = np.array([ij[1] for ij, _ in items], dtype=np.int64)
    xs = np.array([x for _, x in items])
    logx = np.log(xs)
    fx = np.minimum((xs / x_max) ** alpha, 1.0)

    def objective() -> float:
        dots = np.einsum("ij,ij->i", w[idx_i], wt[idx_j])
        diff = dots + b[idx_i] + bt[idx_j] - logx
        return float(np.sum(fx * diff * diff))

    history = [objective()]
    order = np.arange(len(items))
    for epoch in range(iters):
        if len(items):
            rng.shuffle(order)
        for k in order:
            i, j = int(idx_i[k]), int(idx_j[k])
            wi, wj = w[i], wt[j]
            diff = float(wi @ wj) + b[i] + bt[j] - logx[k]
            fdiff = fx[k] * diff
            gw = fdiff * wj
            gwt = fdiff * wi
            # AdaGrad step with the pre-update accumulator, then accumulate.
            w[i] = wi - lr * gw / np.sqrt(acc_w[i])
            wt[j] = wj - lr * gwt / np.sqrt(acc_wt[j])
            acc_w[i] += gw * gw
            acc_wt[j] += gwt * gwt
            b[i] -= lr * fdiff / math.sqrt(acc_b[i])
            bt[j] -= lr * fdiff / math.sqrt(acc_bt[j])
            acc_b[i] += fdiff * fdiff
            acc_bt[j] += fdiff * fdiff
        loss = objective()
        if not math.isfinite(loss):
            raise NumericError(f"non-finite training loss at iteration {epoch + 1}")
        history.append(loss)

    table = EmbeddingTable(vocab=dict(cooc.vocab), vectors=w + wt)
    if return_history:
        return table, history
    return table


def save_embeddings(
    table: EmbeddingTable, path: str | Path, comments: Sequence[str] | None = None
) -> None:
    """Write the vector-text format: `<vocab_size> <dim>`, then one
    `word v1 ... vdim` line per word in index order.

    ``comments`` become leading ``#`` lines (provenance); loaders skip them."""
    words = sorted(table.vocab, key=table.vocab.get)
    lines = []
    for comment in comments or ():
        text = comment if comment.startswith("#") else f"# {comment}"
        lines.append(text)
    lines.append(f"{len(words)} {table.dim}")
    for word in words:
        if any(ch.isspace() for ch in word):
            raise DataError(f"word {word!r} contains whitespace; not serializable")
        vec = table.vectors[table.vocab[word]]
        lines.append(word + " " + " ".join(repr(float(x)) for x in vec))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Read the vector-text format back into a table."""
    path = Path(path)
    lines = [
        ln for ln in path.read_text(encoding="utf-8").splitlines()
        if not ln.startswith("#")
    ]
    if not lines:
        raise DataError(f"{path}: empty embedding file")
    head = lines[0].split()
    if len(head) != 2:
        raise DataError(f"{path}:1: header must be '<vocab_size> <dim>'")
    try:
        n, dim = int(head[0]), int(head[1])
    except ValueError as exc:
        raise DataError(f"{path}:1: non-numeric header") from exc
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != n:
        raise DataError(f"{path}: header declares {n} rows, found {len(body)}")
    vocab: dict[str, int] = {}
    vectors = np.empty((n, dim))
    for offset, line in enumerate(body):
        parts = line.split()
        where = f"{path}:{offset + 2}"
        if len(parts) != dim + 1:
            raise DataError(f"{where}: expected word + {dim} values, got {len(parts) - 1}")
        word = parts[0]
        if word in vocab:
            raise DataError(f"{where}: duplicate word {word!r}")
        try:
            vectors[offset] = [float(x) for x in parts[1:]]
        except ValueError as exc:
            raise DataError(f"{where}: non-numeric vector component") from exc
        vocab[word] = offset
    return EmbeddingTable(vocab=vocab, vectors=vectors)
