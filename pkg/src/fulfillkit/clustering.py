"""k-means with BIC model selection and the semantic reward-difficulty pipeline.

The model-selection score is, deliberately, the printed form

    BIC = sum_k sum_{i in cluster k} ||v_i - c_k||  +  log(n) * m * K

with an *unsquared* Euclidean distance term, while Lloyd iterations optimize
the standard squared-distance distortion. Both quantities are kept as
specified; internal consistency loses to fidelity here.

The semantic pipeline: cluster word vectors (K1 chosen by BIC), express each
reward as a K1-dim vector counting its tokens per word cluster, cluster
those (K2 by BIC), then summarize projects over reward clusters and estimate
per-cluster on-time probabilities from labels.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .corpus import Corpus, Label, Project
from .embeddings import EmbeddingTable
from .errors import DataError, NumericError
from .text import load_stopwords, tokenize


def _derive_seed(seed: int, stream: int) -> int:
    return int(np.random.SeedSequence([seed, stream]).generate_state(1)[0])


@dataclass(frozen=True)
class ClusterModel:
    """Fitted centers; assignment = nearest center by Euclidean distance,
    ties to the lowest center index."""

    k: int
    centers: np.ndarray

    def __post_init__(self) -> None:
        if self.k < 1 or self.centers.shape[0] != self.k:
            raise NumericError("centers must be a k x m matrix with k >= 1")
        if not np.all(np.isfinite(self.centers)):
            raise NumericError("cluster centers must be finite")

    @property
    def dim(self) -> int:
        return int(self.centers.shape[1])

    def assign(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self.dim:
            raise NumericError(
                f"points have dimension {points.shape[1]}, model expects {self.dim}"
            )
        return np.argmin(_sq_dists(points, self.centers), axis=1)


def _sq_dists(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """(n, k) squared Euclidean distances, clipped at zero."""
    d2 = (
        np.sum(points**2, axis=1)[:, None]
        - 2.0 * points @ centers.T
        + np.sum(centers**2, axis=1)[None, :]
    )
    return np.maximum(d2, 0.0)


def _kmeans_pp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    first = int(rng.integers(0, n))
    centers[0] = points[first]
    d2 = _sq_dists(points, centers[:1])[:, 0]
    for c in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            idx = int(rng.integers(0, n))
        centers[c] = points[idx]
        d2 = np.minimum(d2, _sq_dists(points, centers[c : c + 1])[:, 0])
    return centers


def kmeans_fit(
    points,
    k: int,
    seed: int = 0,
    max_iter: int = 300,
    tol: float = 0.0,
    return_history: bool = False,
):
    """Lloyd's algorithm from a k-means++ start; deterministic per seed.

    Runs to an assignment fixpoint (or center shift <= tol, or max_iter).
    A cluster emptied during an update is reseeded with the point farthest
    from its current center. With ``return_history`` also returns the
    squared-distance distortion after each assignment step.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2:
        raise NumericError("points must be a 2-d array")
    if not np.all(np.isfinite(points)):
        raise NumericError("points must be finite")
    n = points.shape[0]
    if not 1 <= k <= n:
        raise NumericError(f"k must satisfy 1 <= k <= n (k={k}, n={n})")

    rng = np.random.default_rng(seed)
    centers = _kmeans_pp_init(points, k, rng)
    prev_assign = None
    history: list[float] = []
    for _ in range(max_iter):
        d2 = _sq_dists(points, centers)
        assign = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(n), assign].sum()))
        if prev_assign is not None and np.array_equal(assign, prev_assign):
            break
        prev_assign = assign

        new_centers = centers.copy()
        counts = np.bincount(assign, minlength=k)
        for c in range(k):
            if counts[c] > 0:
                new_centers[c] = points[assign == c].mean(axis=0)
        empties = np.flatnonzero(counts == 0)
        if len(empties):
            # farthest points from their assigned centers, one per empty slot
            own = np.sqrt(d2[np.arange(n), assign])
            order = np.argsort(-own, kind="stable")
            for slot, c in enumerate(empties):
                new_centers[c] = points[order[slot % n]]
        shift = float(np.max(np.linalg.norm(new_centers - centers, axis=1)))
        centers = new_centers
        if shift <= tol and not len(empties):
            d2 = _sq_dists(points, centers)
            assign = np.argmin(d2, axis=1)
            history.append(float(d2[np.arange(n), assign].sum()))
            break

    model = ClusterModel(k=k, centers=centers)
    if return_history:
        return model, history
    return model


def bic_score(model: ClusterModel, points, n_override: int | None = None) -> float:
    """Model-selection score: unsquared within-cluster distance plus
    log(n) * m * K. ``n`` defaults to the number of points scored;
    ``n_override`` substitutes an external corpus-level count."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != model.dim:
        raise NumericError(
            f"points of dimension {points.shape} incompatible with model dim {model.dim}"
        )
    assign = model.assign(points)
    dep = points - model.centers[assign]
    distance_term = float(np.sqrt(np.sum(dep**2, axis=1)).sum())
    n = int(n_override) if n_override is not None else points.shape[0]
    if n < 1:
        raise NumericError("BIC sample count must be >= 1")
    return distance_term + float(np.log(n)) * model.dim * model.k


def select_k(
    points,
    k_min: int,
    k_max: int,
    seed: int = 0,
    max_iter: int = 300,
    return_scores: bool = False,
):
    """Fit every k in [k_min, k_max], return the BIC argmin (ties -> smaller k).

    Each k gets its own derived seed so the scan is deterministic end to end.
    With ``return_scores`` also returns the list of (k, bic) pairs.
    """
    points = np.asarray(points, dtype=float)
    n = points.shape[0] if points.ndim == 2 else 0
    if not 1 <= k_min <= k_max <= n:
        raise NumericError(f"need 1 <= k_min <= k_max <= n (got {k_min}..{k_max}, n={n})")
    best: tuple[float, int, ClusterModel] | None = None
    scores: list[tuple[int, float]] = []
    for k in range(k_min, k_max + 1):
        model = kmeans_fit(points, k, seed=_derive_seed(seed, k), max_iter=max_iter)
        bic = bic_score(model, points)
        scores.append((k, bic))
        if best is None or bic < best[0]:
            best = (bic, k, model)
    assert best is not None
    if return_scores:
        return best[1], best[2], scores
    return best[1], best[2]


@dataclass(frozen=True)
class SemanticModel:
    """Word-cluster model plus reward-cluster model built on its counts."""

    word_model: ClusterModel
    reward_model: ClusterModel

    def __post_init__(self) -> None:
        if self.reward_model.dim != self.word_model.k:
            raise DataError(
                "reward model input dimension must equal the word model's k "
                f"({self.reward_model.dim} != {self.word_model.k})"
            )

    @property
    def k1(self) -> int:
        return self.word_model.k

    @property
    def k2(self) -> int:
        return self.reward_model.k


def reward_to_cluster_vector(
    stream: Sequence[str], word_model: ClusterModel, table: EmbeddingTable
) -> np.ndarray:
    """K1-dim vector: component j counts tokens whose embedding lands in word
    cluster j. Out-of-vocabulary tokens are ignored, so the L1 norm equals
    the in-vocabulary token count."""
    vec = np.zeros(word_model.k)
    in_vocab = [t for t in stream if t in table.vocab]
    if in_vocab:
        rows = table.vectors[[table.vocab[t] for t in in_vocab]]
        for cluster in word_model.assign(rows):
            vec[cluster] += 1.0
    return vec


def _reward_streams(corpus: Corpus, stopwords: frozenset[str]) -> list[list[str]]:
    return [
        tokenize(reward.description, stopwords)
        for project in corpus.projects.values()
        for reward in project.rewards
    ]


def build_semantic_model(
    corpus: Corpus,
    table: EmbeddingTable,
    seed: int = 0,
    stopwords: Iterable[str] | None = None,
    k1_range: tuple[int, int] = (1, 100),
    k2_range: tuple[int, int] = (1, 30),
) -> SemanticModel:
    """Run the semantic pipeline: cluster word vectors, vectorize rewards by
    word-cluster counts, cluster the reward vectors. Ranges are clipped to
    the available point counts; both stages pick k by BIC."""
    stop = frozenset(stopwords) if stopwords is not None else load_stopwords()
    n_words = table.vectors.shape[0]
    if n_words == 0:
        raise DataError("embedding table is empty")
    k1_lo = min(max(1, k1_range[0]), n_words)
    k1_hi = min(k1_range[1], n_words)
    _, word_model = select_k(
        table.vectors, k1_lo, k1_hi, seed=_derive_seed(seed, 0)
    )

    streams = _reward_streams(corpus, stop)
    if not streams:
        raise DataError("corpus has no rewards to cluster")
    reward_vecs = np.vstack(
        [reward_to_cluster_vector(s, word_model, table) for s in streams]
    )
    n_rewards = reward_vecs.shape[0]
    k2_lo = min(max(1, k2_range[0]), n_rewards)
    k2_hi = min(k2_range[1], n_rewards)
    _, reward_model = select_k(
        reward_vecs, k2_lo, k2_hi, seed=_derive_seed(seed, 1)
    )
    return SemanticModel(word_model=word_model, reward_model=reward_model)


def project_semantic_features(
    project: Project,
    model: SemanticModel,
    table: EmbeddingTable,
    mode: str = "backers",
    stopwords: Iterable[str] | None = None,
) -> np.ndarray:
    """K2-dim vector over reward clusters: summed backer counts
    (mode="backers") or reward counts (mode="reward_count")."""
    if mode not in ("backers", "reward_count"):
        raise DataError(f"unknown semantic feature mode {mode!r}")
    stop = frozenset(stopwords) if stopwords is not None else load_stopwords()
    out = np.zeros(model.k2)
    for reward in project.rewards:
        stream = tokenize(reward.description, stop)
        vec = reward_to_cluster_vector(stream, model.word_model, table)
        cluster = int(model.reward_model.assign(vec[None, :])[0])
        out[cluster] += reward.backer_count if mode == "backers" else 1.0
    return out


@dataclass(frozen=True)
class DifficultyReport:
    """Per reward-cluster prior and on-time conditional probability.

    ``p_on_time[i]`` is None for clusters holding no labeled project.
    """

    counts: tuple[int, ...]
    p_cluster: tuple[float, ...]
    p_on_time: tuple[float | None, ...]


def _major_cluster(
    project: Project, model: SemanticModel, table: EmbeddingTable, stop: frozenset[str]
) -> int:
    """Reward cluster holding the largest share of the project's rewards;
    ties break to the lowest cluster index."""
    counts = np.zeros(model.k2, dtype=int)
    for reward in project.rewards:
        stream = tokenize(reward.description, stop)
        vec = reward_to_cluster_vector(stream, model.word_model, table)
        counts[int(model.reward_model.assign(vec[None, :])[0])] += 1
    return int(np.argmax(counts))


def cluster_difficulty(
    labeled_projects: Sequence[tuple[Project, Label]],
    model: SemanticModel,
    table: EmbeddingTable,
    stopwords: Iterable[str] | None = None,
) -> DifficultyReport:
    """Estimate P(cluster) and P(on_time | major cluster) from labels.

    Computed in the Bayes form P(c|on) * P(on) / P(c), which reduces exactly
    to the frequency ratio (on-time projects in c) / (projects in c).
    """
    if not labeled_projects:
        raise DataError("need at least one labeled project")
    stop = frozenset(stopwords) if stopwords is not None else load_stopwords()
    k2 = model.k2
    n_total = len(labeled_projects)
    in_cluster = np.zeros(k2, dtype=int)
    on_in_cluster = np.zeros(k2, dtype=int)
    n_on = 0
    for project, label in labeled_projects:
        c = _major_cluster(project, model, table, stop)
        in_cluster[c] += 1
        if label.on_time:
            on_in_cluster[c] += 1
            n_on += 1

    p_cluster = tuple(float(c) / n_total for c in in_cluster)
    p_on_given: list[float | None] = []
    p_on = n_on / n_total
    for c in range(k2):
        if in_cluster[c] == 0:
            p_on_given.append(None)
        elif n_on == 0:
            p_on_given.append(0.0)
        else:
            p_c_given_on = on_in_cluster[c] / n_on
            p_on_given.append(float(p_c_given_on * p_on / p_cluster[c]))
    return DifficultyReport(
        counts=tuple(int(c) for c in in_cluster),
        p_cluster=p_cluster,
        p_on_time=tuple(p_on_given),
    )
