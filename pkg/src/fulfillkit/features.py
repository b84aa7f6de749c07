"""Time-point-aware feature extraction.

Each project is summarized at one of four time points: launch (TP1), the
fundraising midpoint (TP2), the deadline (TP3), and shortly after the
deadline (TP4, 5% of the way from the deadline to the latest estimated
reward delivery).  Features carry an availability tag so that a vector
requested at an early time point never leaks later information.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from .clustering import SemanticModel, project_semantic_features
from .corpus import CATEGORIES, Event, Project
from .embeddings import EmbeddingTable
from .errors import DataError, NumericError, SmogUndefinedError
from .text import (
    CategoryDictionary,
    category_scores,
    load_stopwords,
    smog_score,
    split_sentences,
    tokenize,
)

DEFAULT_N_SLOTS = 20

MISSING = float("nan")


class TimePoint(Enum):
    """Observation cutoffs along a project's life."""

    TP1 = "tp1"
    TP2 = "tp2"
    TP3 = "tp3"
    TP4 = "tp4"

    @classmethod
    def parse(cls, value: "TimePoint | str") -> "TimePoint":
        if isinstance(value, TimePoint):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise DataError(f"unknown time point: {value!r}") from None

    @property
    def order(self) -> int:
        return ("tp1", "tp2", "tp3", "tp4").index(self.value)

    def cutoff(self, project: Project) -> float:
        """Latest event timestamp visible at this time point."""
        launch = float(project.launch_ts)
        deadline = float(project.deadline_ts)
        if self is TimePoint.TP1:
            return launch
        if self is TimePoint.TP2:
            return launch + (deadline - launch) / 2.0
        if self is TimePoint.TP3:
            return deadline
        return deadline + 0.05 * (float(project.ledd_ts) - deadline)


@dataclass(frozen=True)
class FeatureSpec:
    """Schema entry: name, first time point at which the value exists, and
    whether log(1+x) applies (one-hot and readability columns are exempt)."""

    name: str
    availability: TimePoint
    log_transform: bool = True


@dataclass(frozen=True)
class FeatureVector:
    specs: tuple[FeatureSpec, ...]
    values: np.ndarray
    tp: TimePoint

    def __post_init__(self) -> None:
        names = [s.name for s in self.specs]
        if len(set(names)) != len(names):
            raise DataError("duplicate feature names")
        if self.values.shape != (len(self.specs),):
            raise DataError("feature vector shape does not match schema")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.specs)

    def get(self, name: str) -> float:
        for spec, value in zip(self.specs, self.values):
            if spec.name == name:
                return float(value)
        raise KeyError(name)

    def as_dict(self) -> dict[str, float]:
        return {s.name: float(v) for s, v in zip(self.specs, self.values)}


@dataclass(frozen=True)
class FeatureMatrix:
    """Rectangular named feature block for a set of projects."""

    ids: tuple[str, ...]
    specs: tuple[FeatureSpec, ...]
    values: np.ndarray
    tp: TimePoint
    transformed: bool = False

    def __post_init__(self) -> None:
        if len(set(self.ids)) != len(self.ids):
            raise DataError("duplicate project ids in feature matrix")
        names = [s.name for s in self.specs]
        if len(set(names)) != len(names):
            raise DataError("duplicate feature names")
        if self.values.ndim != 2 or self.values.shape != (len(self.ids), len(self.specs)):
            raise DataError("feature matrix is not rectangular against its schema")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.specs)

    def column(self, name: str) -> np.ndarray:
        for j, spec in enumerate(self.specs):
            if spec.name == name:
                return self.values[:, j]
        raise KeyError(name)


@dataclass(frozen=True)
class FeatureContext:
    """Everything extraction needs besides the project itself.

    ``liwc_categories`` is the subset of dictionary categories whose scores
    become features; pass the outcome of the significance screen.
    ``semantic_mode`` is ``auto`` (reward counts before the deadline, backer
    counts at and after it), ``backers``, or ``reward_count``.
    """

    semantic_model: SemanticModel
    embedding_table: EmbeddingTable
    liwc_dictionary: CategoryDictionary | None = None
    liwc_categories: tuple[str, ...] = ()
    stopwords: frozenset[str] | None = None
    n_slots: int = DEFAULT_N_SLOTS
    semantic_mode: str = "auto"

    def __post_init__(self) -> None:
        if self.n_slots < 1:
            raise DataError("n_slots must be at least 1")
        if self.semantic_mode not in ("auto", "backers", "reward_count"):
            raise DataError(f"unknown semantic mode: {self.semantic_mode!r}")
        if self.liwc_categories:
            if self.liwc_dictionary is None:
                raise DataError("liwc_categories given without a dictionary")
            known = {name for name, _ in self.liwc_dictionary.categories}
            missing = [name for name in self.liwc_categories if name not in known]
            if missing:
                raise DataError(f"categories not in dictionary: {missing}")

    def resolved_stopwords(self) -> frozenset[str]:
        return self.stopwords if self.stopwords is not None else load_stopwords()

    def mode_for(self, tp: TimePoint) -> str:
        if self.semantic_mode != "auto":
            return self.semantic_mode
        return "reward_count" if tp.order < TimePoint.TP3.order else "backers"


def feature_schema(context: FeatureContext, tp: TimePoint | str) -> tuple[FeatureSpec, ...]:
    """Ordered schema at ``tp``: exactly the features with availability <= tp."""
    tp = TimePoint.parse(tp)
    tp1, tp2, tp4 = TimePoint.TP1, TimePoint.TP2, TimePoint.TP4
    specs: list[FeatureSpec] = [
        FeatureSpec("images", tp1),
        FeatureSpec("faqs", tp1),
        FeatureSpec("goal", tp1),
        FeatureSpec("n_rewards", tp1),
    ]
    specs += [FeatureSpec(f"cat_{name}", tp1, log_transform=False) for name in CATEGORIES]
    specs += [
        FeatureSpec("reward_sentences", tp1),
        FeatureSpec("bio_sentences", tp1),
        FeatureSpec("fundraising_days", tp1),
        FeatureSpec("delivery_window_days", tp1),
        FeatureSpec("smog_project", tp1, log_transform=False),
        FeatureSpec("smog_reward", tp1, log_transform=False),
        FeatureSpec("smog_bio", tp1, log_transform=False),
    ]
    specs += [
        FeatureSpec(f"semantic_{i}", tp1) for i in range(context.semantic_model.k2)
    ]
    specs += [
        FeatureSpec("backers", tp2),
        FeatureSpec("comments", tp2),
        FeatureSpec("updates", tp2),
        FeatureSpec("creator_comments", tp2),
        FeatureSpec("creator_updates", tp2),
    ]
    specs += [FeatureSpec(f"slot_{i}", tp2) for i in range(context.n_slots)]
    specs += [
        FeatureSpec("creator_comments_tp4", tp4),
        FeatureSpec("creator_updates_tp4", tp4),
        FeatureSpec("update_interval_avg", tp4),
        FeatureSpec("response_latency_avg", tp4),
        FeatureSpec("backer_comments_tp4", tp4),
        FeatureSpec("commenting_backers_tp4", tp4),
        FeatureSpec("backer_questions_tp4", tp4),
    ]
    specs += [FeatureSpec(f"liwc_updates_{name}", tp4) for name in context.liwc_categories]
    specs += [FeatureSpec(f"liwc_comments_{name}", tp4) for name in context.liwc_categories]
    return tuple(s for s in specs if s.availability.order <= tp.order)


def temporal_slots(
    events: Sequence[Event],
    launch_ts: float,
    deadline_ts: float,
    cutoff_ts: float,
    n_slots: int,
) -> np.ndarray:
    """Comment counts over ``n_slots`` equal fundraising-phase time slots.

    Slot i covers [launch + i*d/n, launch + (i+1)*d/n) with d the fundraising
    span; only comments with ts <= cutoff are counted.
    """
    if deadline_ts <= launch_ts:
        raise DataError("deadline must be after launch")
    if n_slots < 1:
        raise DataError("n_slots must be at least 1")
    counts = np.zeros(n_slots, dtype=np.int64)
    span = float(deadline_ts) - float(launch_ts)
    for event in events:
        if event.kind != "comment" or event.ts > cutoff_ts:
            continue
        idx = math.floor((float(event.ts) - float(launch_ts)) * n_slots / span)
        if 0 <= idx < n_slots:
            counts[idx] += 1
    return counts


def response_latency(events: Sequence[Event]) -> float:
    """Mean seconds from a backer question ('?' in a backer comment) to the
    earliest creator comment strictly after it; NaN when no pair matches."""
    creator_ts = [
        float(e.ts) for e in events if e.author_role == "creator" and e.kind == "comment"
    ]
    latencies = []
    for event in events:
        if event.author_role != "backer" or event.kind != "comment":
            continue
        if "?" not in event.text:
            continue
        answered = [ts for ts in creator_ts if ts > event.ts]
        if answered:
            latencies.append(min(answered) - float(event.ts))
    return float(np.mean(latencies)) if latencies else MISSING


def _check_sorted(events: Sequence[Event]) -> None:
    for earlier, later in zip(events, events[1:]):
        if later.ts < earlier.ts:
            raise DataError("events are not sorted by timestamp")


def _smog_or_missing(text: str) -> float:
    try:
        return smog_score(text)
    except SmogUndefinedError:
        return MISSING


def _distinct_backer_authors(events: Iterable[Event]) -> int:
    return len({e.author_id for e in events if e.author_role == "backer" and e.author_id})


def _liwc_features(
    texts: Sequence[str], context: FeatureContext
) -> list[float]:
    # proportions over all tokens; stopwords stay in the denominator
    tokens: list[str] = []
    for text in texts:
        tokens.extend(tokenize(text, frozenset()))
    scores = category_scores(tokens, context.liwc_dictionary)
    return [scores[name] for name in context.liwc_categories]


def extract_features(
    project: Project,
    events: Sequence[Event],
    context: FeatureContext,
    tp: TimePoint | str,
) -> FeatureVector:
    """Project summary at ``tp`` using only events with ts <= the cutoff."""
    tp = TimePoint.parse(tp)
    _check_sorted(events)
    specs = feature_schema(context, tp)
    stopwords = context.resolved_stopwords()

    reward_text = " ".join(r.description for r in project.rewards)
    values: dict[str, float] = {
        "images": float(project.images_count),
        "faqs": float(project.faqs_count),
        "goal": float(project.goal),
        "n_rewards": float(len(project.rewards)),
        "reward_sentences": float(len(split_sentences(reward_text))),
        "bio_sentences": float(len(split_sentences(project.bio_description))),
        "fundraising_days": project.fundraising_days,
        "delivery_window_days": project.delivery_window_days,
        "smog_project": _smog_or_missing(project.project_description),
        "smog_reward": _smog_or_missing(reward_text),
        "smog_bio": _smog_or_missing(project.bio_description),
    }
    for name in CATEGORIES:
        values[f"cat_{name}"] = 1.0 if project.category == name else 0.0
    semantic = project_semantic_features(
        project,
        context.semantic_model,
        context.embedding_table,
        mode=context.mode_for(tp),
        stopwords=stopwords,
    )
    for i, weight in enumerate(semantic):
        values[f"semantic_{i}"] = float(weight)

    if tp.order >= TimePoint.TP2.order:
        cutoff = tp.cutoff(project)
        fund_cutoff = min(cutoff, float(project.deadline_ts))
        fund_events = [e for e in events if e.ts <= fund_cutoff]
        if tp is TimePoint.TP2:
            backers = float(_distinct_backer_authors(fund_events))
        else:
            backers = float(sum(r.backer_count for r in project.rewards))
        values["backers"] = backers
        values["comments"] = float(sum(1 for e in fund_events if e.kind == "comment"))
        values["updates"] = float(sum(1 for e in fund_events if e.kind == "update"))
        values["creator_comments"] = float(
            sum(1 for e in fund_events if e.author_role == "creator" and e.kind == "comment")
        )
        values["creator_updates"] = float(
            sum(1 for e in fund_events if e.author_role == "creator" and e.kind == "update")
        )
        slots = temporal_slots(
            events, project.launch_ts, project.deadline_ts, fund_cutoff, context.n_slots
        )
        for i, count in enumerate(slots):
            values[f"slot_{i}"] = float(count)

    if tp is TimePoint.TP4:
        cutoff4 = tp.cutoff(project)
        deadline = float(project.deadline_ts)
        visible = [e for e in events if e.ts <= cutoff4]
        window = [e for e in visible if e.ts > deadline]
        values["creator_comments_tp4"] = float(
            sum(1 for e in window if e.author_role == "creator" and e.kind == "comment")
        )
        values["creator_updates_tp4"] = float(
            sum(1 for e in window if e.author_role == "creator" and e.kind == "update")
        )
        update_ts = sorted(
            float(e.ts) for e in visible if e.author_role == "creator" and e.kind == "update"
        )
        if len(update_ts) >= 2:
            gaps = np.diff(np.asarray(update_ts))
            values["update_interval_avg"] = float(gaps.mean())
        else:
            values["update_interval_avg"] = MISSING
        values["response_latency_avg"] = response_latency(visible)
        backer_comments = [
            e for e in visible if e.author_role == "backer" and e.kind == "comment"
        ]
        values["backer_comments_tp4"] = float(len(backer_comments))
        values["commenting_backers_tp4"] = float(_distinct_backer_authors(backer_comments))
        values["backer_questions_tp4"] = float(
            sum(1 for e in backer_comments if "?" in e.text)
        )
        if context.liwc_categories:
            update_scores = _liwc_features(
                [e.text for e in visible if e.author_role == "creator" and e.kind == "update"],
                context,
            )
            comment_scores = _liwc_features([e.text for e in backer_comments], context)
            for name, score in zip(context.liwc_categories, update_scores):
                values[f"liwc_updates_{name}"] = score
            for name, score in zip(context.liwc_categories, comment_scores):
                values[f"liwc_comments_{name}"] = score

    row = np.array([values[s.name] for s in specs], dtype=float)
    return FeatureVector(specs=specs, values=row, tp=tp)


def extract_matrix(
    corpus,
    context: FeatureContext,
    tp: TimePoint | str,
    ids: Sequence[str] | None = None,
) -> FeatureMatrix:
    """Stack per-project vectors into a matrix; rows follow sorted ids."""
    tp = TimePoint.parse(tp)
    if ids is None:
        ids = sorted(corpus.projects)
    rows = []
    for pid in ids:
        if pid not in corpus.projects:
            raise DataError(f"unknown project id: {pid}")
        vector = extract_features(
            corpus.projects[pid], corpus.events_for(pid), context, tp
        )
        rows.append(vector.values)
    specs = feature_schema(context, tp)
    values = np.vstack(rows) if rows else np.zeros((0, len(specs)))
    return FeatureMatrix(ids=tuple(ids), specs=specs, values=values, tp=tp)


def log1p_matrix(matrix: FeatureMatrix) -> FeatureMatrix:
    """log(1+x) on flagged columns; exempt columns pass through untouched.

    Refuses to run twice on the same matrix and rejects negatives in flagged
    columns; NaN entries propagate unchanged.
    """
    if matrix.transformed:
        raise DataError("feature matrix already log-transformed")
    values = matrix.values.copy()
    for j, spec in enumerate(matrix.specs):
        if not spec.log_transform:
            continue
        col = values[:, j]
        finite = col[~np.isnan(col)]
        if (finite < 0).any():
            raise NumericError(f"negative value in log-transformed column {spec.name!r}")
        values[:, j] = np.log1p(col)
    return FeatureMatrix(
        ids=matrix.ids, specs=matrix.specs, values=values, tp=matrix.tp, transformed=True
    )
