"""Project corpus: record types, JSONL loading/saving, success filtering.

A corpus is three line-oriented JSON files sharing project ids:

* ``projects.jsonl`` -- one project per line (rewards embedded),
* ``events.jsonl``   -- creator/backer updates and comments, any order,
* ``labels.jsonl``   -- delivery outcome per labeled project.

Loaders validate eagerly and report the offending file and line number.
Records are frozen dataclasses; a loaded Corpus is safe to share read-only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator

from .errors import DataError

#: Fixed top-level category vocabulary. One-hot feature columns use this order.
CATEGORIES = (
    "art",
    "comics",
    "crafts",
    "dance",
    "design",
    "fashion",
    "film_video",
    "food",
    "games",
    "journalism",
    "music",
    "photography",
    "publishing",
    "technology",
    "theater",
)

AUTHOR_ROLES = ("creator", "backer")
EVENT_KINDS = ("update", "comment")
LABEL_STATUSES = ("on_time", "late")

_SECONDS_PER_DAY = 86400.0


@dataclass(frozen=True)
class Reward:
    """One reward tier of a project."""

    id: str
    description: str
    pledge_amount: float
    estimated_delivery_ts: int
    backer_count: int

    def __post_init__(self) -> None:
        if not self.id:
            raise DataError("reward id must be non-empty")
        if self.pledge_amount < 0:
            raise DataError(f"reward {self.id}: pledge_amount must be >= 0")
        if self.backer_count < 0:
            raise DataError(f"reward {self.id}: backer_count must be >= 0")


@dataclass(frozen=True)
class Project:
    """A fundraising project with its reward tiers."""

    id: str
    category: str
    goal: float
    pledged: float
    launch_ts: int
    deadline_ts: int
    images_count: int
    faqs_count: int
    project_description: str
    bio_description: str
    creator_backed_count: int
    creator_created_count: int
    successful: bool
    rewards: tuple[Reward, ...]

    def __post_init__(self) -> None:
        if not self.id:
            raise DataError("project id must be non-empty")
        if self.category not in CATEGORIES:
            raise DataError(f"project {self.id}: unknown category {self.category!r}")
        if self.goal <= 0:
            raise DataError(f"project {self.id}: goal must be > 0")
        if self.pledged < 0:
            raise DataError(f"project {self.id}: pledged must be >= 0")
        if self.deadline_ts <= self.launch_ts:
            raise DataError(f"project {self.id}: deadline_ts must be after launch_ts")
        for name in ("images_count", "faqs_count", "creator_backed_count", "creator_created_count"):
            if getattr(self, name) < 0:
                raise DataError(f"project {self.id}: {name} must be >= 0")
        if not self.rewards:
            raise DataError(f"project {self.id}: rewards must be non-empty")
        seen: set[str] = set()
        for r in self.rewards:
            if r.id in seen:
                raise DataError(f"project {self.id}: duplicate reward id {r.id!r}")
            seen.add(r.id)
            if r.estimated_delivery_ts < self.deadline_ts:
                raise DataError(
                    f"project {self.id}: reward {r.id} estimated_delivery_ts "
                    "precedes the fundraising deadline"
                )

    @property
    def ledd_ts(self) -> int:
        """Longest estimated delivery date: the latest reward delivery estimate."""
        return max(r.estimated_delivery_ts for r in self.rewards)

    @property
    def fundraising_days(self) -> float:
        return (self.deadline_ts - self.launch_ts) / _SECONDS_PER_DAY

    @property
    def delivery_window_days(self) -> float:
        """Days between the deadline and the longest estimated delivery."""
        return (self.ledd_ts - self.deadline_ts) / _SECONDS_PER_DAY


@dataclass(frozen=True)
class Event:
    """One timeline event: an update posted or a comment left on a project.

    ``author_id`` identifies who wrote it (distinct-backer counts need this);
    it may be empty for corpora that do not track identity.
    """

    project_id: str
    author_role: str
    kind: str
    ts: int
    text: str
    author_id: str = ""

    def __post_init__(self) -> None:
        if self.author_role not in AUTHOR_ROLES:
            raise DataError(f"event: unknown author_role {self.author_role!r}")
        if self.kind not in EVENT_KINDS:
            raise DataError(f"event: unknown kind {self.kind!r}")


@dataclass(frozen=True)
class Label:
    """Delivery outcome for one project.

    ``actual_duration_days`` is the observed span from deadline to final
    delivery; it is None for projects whose delivery date is unknown (those
    still carry an on-time/late status).
    """

    project_id: str
    status: str
    actual_duration_days: float | None = None

    def __post_init__(self) -> None:
        if self.status not in LABEL_STATUSES:
            raise DataError(f"label {self.project_id}: unknown status {self.status!r}")
        if self.actual_duration_days is not None and self.actual_duration_days <= 0:
            raise DataError(f"label {self.project_id}: actual_duration_days must be > 0")

    @property
    def on_time(self) -> bool:
        return self.status == "on_time"


@dataclass
class Corpus:
    """Projects keyed by id, with per-project event streams and labels.

    ``events[pid]`` is sorted by timestamp (ties keep input order) and only
    holds ids that have at least one event. Treat instances as read-only.
    """

    projects: dict[str, Project]
    events: dict[str, tuple[Event, ...]] = field(default_factory=dict)
    labels: dict[str, Label] = field(default_factory=dict)
    warnings: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.projects)

    def events_for(self, project_id: str) -> tuple[Event, ...]:
        return self.events.get(project_id, ())

    def labeled_ids(self) -> list[str]:
        """Ids of labeled projects, in corpus insertion order."""
        return [pid for pid in self.projects if pid in self.labels]


def build_corpus(
    projects: list[Project],
    events: list[Event] = (),
    labels: list[Label] = (),
    warnings: tuple[str, ...] = (),
) -> Corpus:
    """Assemble and cross-validate a corpus from already-constructed records.

    Checks referential integrity (events and labels must point at known
    projects, at most one label per project) and that no event precedes its
    project's launch. Event streams come out time-sorted.
    """
    proj_map: dict[str, Project] = {}
    for p in projects:
        if p.id in proj_map:
            raise DataError(f"duplicate project id {p.id!r}")
        proj_map[p.id] = p

    by_project: dict[str, list[Event]] = {}
    for ev in events:
        proj = proj_map.get(ev.project_id)
        if proj is None:
            raise DataError(f"event references unknown project {ev.project_id!r}")
        if ev.ts < proj.launch_ts:
            raise DataError(f"event on project {ev.project_id} precedes its launch")
        by_project.setdefault(ev.project_id, []).append(ev)

    label_map: dict[str, Label] = {}
    for lab in labels:
        if lab.project_id not in proj_map:
            raise DataError(f"label references unknown project {lab.project_id!r}")
        if lab.project_id in label_map:
            raise DataError(f"duplicate label for project {lab.project_id!r}")
        label_map[lab.project_id] = lab

    sorted_events = {
        pid: tuple(sorted(evs, key=lambda e: e.ts)) for pid, evs in by_project.items()
    }
    return Corpus(projects=proj_map, events=sorted_events, labels=label_map, warnings=warnings)


# --------------------------------------------------------------------------
# JSONL parsing


def _iter_jsonl(path: Path) -> Iterator[tuple[int, dict]]:
    """Yield (line_number, object) for each record line.

    Blank lines are skipped. A line whose object is exactly ``{"_meta": ...}``
    is a provenance header and is skipped too.
    """
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise DataError(f"{path}:{lineno}: record must be a JSON object")
            if set(obj) == {"_meta"}:
                continue
            yield lineno, obj


def _take(obj: dict, key: str, where: str):
    if key not in obj:
        raise DataError(f"{where}: missing required key {key!r}")
    return obj[key]


def _as_int(value, key: str, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DataError(f"{where}: {key} must be a number")
    if isinstance(value, float) and not value.is_integer():
        raise DataError(f"{where}: {key} must be an integer")
    return int(value)


def _as_float(value, key: str, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DataError(f"{where}: {key} must be a number")
    return float(value)


def _as_str(value, key: str, where: str) -> str:
    if not isinstance(value, str):
        raise DataError(f"{where}: {key} must be a string")
    return value


_REWARD_KEYS = {"id", "description", "pledge_amount", "estimated_delivery_ts", "backer_count"}
_PROJECT_KEYS = {
    "id", "category", "goal", "pledged", "launch_ts", "deadline_ts",
    "images_count", "faqs_count", "project_description", "bio_description",
    "creator_backed_count", "creator_created_count", "successful", "rewards",
}
_EVENT_KEYS = {"project_id", "author_role", "kind", "ts", "text", "author_id"}
_LABEL_KEYS = {"project_id", "status", "actual_duration_days"}


def _check_keys(obj: dict, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise DataError(f"{where}: unknown key(s) {sorted(unknown)}")


def _parse_reward(obj: dict, where: str) -> Reward:
    _check_keys(obj, _REWARD_KEYS, where)
    return Reward(
        id=_as_str(_take(obj, "id", where), "id", where),
        description=_as_str(_take(obj, "description", where), "description", where),
        pledge_amount=_as_float(_take(obj, "pledge_amount", where), "pledge_amount", where),
        estimated_delivery_ts=_as_int(
            _take(obj, "estimated_delivery_ts", where), "estimated_delivery_ts", where
        ),
        backer_count=_as_int(_take(obj, "backer_count", where), "backer_count", where),
    )


def _parse_project(obj: dict, where: str) -> Project:
    _check_keys(obj, _PROJECT_KEYS, where)
    raw_rewards = _take(obj, "rewards", where)
    if not isinstance(raw_rewards, list):
        raise DataError(f"{where}: rewards must be a list")
    rewards = tuple(_parse_reward(r, where) for r in raw_rewards)
    successful = _take(obj, "successful", where)
    if not isinstance(successful, bool):
        raise DataError(f"{where}: successful must be a boolean")
    return Project(
        id=_as_str(_take(obj, "id", where), "id", where),
        category=_as_str(_take(obj, "category", where), "category", where),
        goal=_as_float(_take(obj, "goal", where), "goal", where),
        pledged=_as_float(_take(obj, "pledged", where), "pledged", where),
        launch_ts=_as_int(_take(obj, "launch_ts", where), "launch_ts", where),
        deadline_ts=_as_int(_take(obj, "deadline_ts", where), "deadline_ts", where),
        images_count=_as_int(_take(obj, "images_count", where), "images_count", where),
        faqs_count=_as_int(_take(obj, "faqs_count", where), "faqs_count", where),
        project_description=_as_str(
            _take(obj, "project_description", where), "project_description", where
        ),
        bio_description=_as_str(_take(obj, "bio_description", where), "bio_description", where),
        creator_backed_count=_as_int(
            _take(obj, "creator_backed_count", where), "creator_backed_count", where
        ),
        creator_created_count=_as_int(
            _take(obj, "creator_created_count", where), "creator_created_count", where
        ),
        successful=successful,
        rewards=rewards,
    )


def _parse_event(obj: dict, where: str) -> Event:
    _check_keys(obj, _EVENT_KEYS, where)
    return Event(
        project_id=_as_str(_take(obj, "project_id", where), "project_id", where),
        author_role=_as_str(_take(obj, "author_role", where), "author_role", where),
        kind=_as_str(_take(obj, "kind", where), "kind", where),
        ts=_as_int(_take(obj, "ts", where), "ts", where),
        text=_as_str(_take(obj, "text", where), "text", where),
        author_id=_as_str(obj.get("author_id", ""), "author_id", where),
    )


def _parse_label(obj: dict, where: str) -> Label:
    _check_keys(obj, _LABEL_KEYS, where)
    duration = obj.get("actual_duration_days")
    if duration is not None:
        duration = _as_float(duration, "actual_duration_days", where)
    return Label(
        project_id=_as_str(_take(obj, "project_id", where), "project_id", where),
        status=_as_str(_take(obj, "status", where), "status", where),
        actual_duration_days=duration,
    )


def load_corpus(
    projects_path: str | Path,
    events_path: str | Path | None = None,
    labels_path: str | Path | None = None,
) -> Corpus:
    """Load a corpus from JSONL files, validating every record.

    Raises DataError naming file and line for the first malformed record,
    duplicate id, dangling reference, or ordering violation found.
    """
    projects_path = Path(projects_path)
    projects: list[Project] = []
    warnings: list[str] = []
    for lineno, obj in _iter_jsonl(projects_path):
        where = f"{projects_path}:{lineno}"
        try:
            proj = _parse_project(obj, where)
        except DataError as exc:
            if str(exc).startswith(where):
                raise
            raise DataError(f"{where}: {exc}") from exc
        projects.append(proj)
        for r in proj.rewards:
            if not r.description.strip():
                warnings.append(f"project {proj.id}: reward {r.id} has an empty description")

    events: list[Event] = []
    if events_path is not None:
        events_path = Path(events_path)
        for lineno, obj in _iter_jsonl(events_path):
            where = f"{events_path}:{lineno}"
            try:
                events.append(_parse_event(obj, where))
            except DataError as exc:
                if str(exc).startswith(where):
                    raise
                raise DataError(f"{where}: {exc}") from exc

    labels: list[Label] = []
    if labels_path is not None:
        labels_path = Path(labels_path)
        for lineno, obj in _iter_jsonl(labels_path):
            where = f"{labels_path}:{lineno}"
            try:
                labels.append(_parse_label(obj, where))
            except DataError as exc:
                if str(exc).startswith(where):
                    raise
                raise DataError(f"{where}: {exc}") from exc

    return build_corpus(projects, events, labels, warnings=tuple(warnings))


# --------------------------------------------------------------------------
# Serialization


def _reward_to_obj(r: Reward) -> dict:
    return {
        "id": r.id,
        "description": r.description,
        "pledge_amount": r.pledge_amount,
        "estimated_delivery_ts": r.estimated_delivery_ts,
        "backer_count": r.backer_count,
    }


def _project_to_obj(p: Project) -> dict:
    return {
        "id": p.id,
        "category": p.category,
        "goal": p.goal,
        "pledged": p.pledged,
        "launch_ts": p.launch_ts,
        "deadline_ts": p.deadline_ts,
        "images_count": p.images_count,
        "faqs_count": p.faqs_count,
        "project_description": p.project_description,
        "bio_description": p.bio_description,
        "creator_backed_count": p.creator_backed_count,
        "creator_created_count": p.creator_created_count,
        "successful": p.successful,
        "rewards": [_reward_to_obj(r) for r in p.rewards],
    }


def _dump_line(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def save_corpus(
    corpus: Corpus,
    projects_path: str | Path,
    events_path: str | Path | None = None,
    labels_path: str | Path | None = None,
    meta: dict | None = None,
) -> None:
    """Write a corpus back to JSONL. Inverse of load_corpus.

    ``meta``, when given, is emitted as a leading ``{"_meta": ...}`` line in
    each file; loaders skip it. Floats are written with repr precision, so a
    save/load round trip reproduces values exactly.
    """
    header = [_dump_line({"_meta": meta})] if meta is not None else []

    lines = header + [_dump_line(_project_to_obj(p)) for p in corpus.projects.values()]
    Path(projects_path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    if events_path is not None:
        lines = list(header)
        for pid in corpus.projects:
            for ev in corpus.events_for(pid):
                lines.append(
                    _dump_line(
                        {
                            "project_id": ev.project_id,
                            "author_role": ev.author_role,
                            "kind": ev.kind,
                            "ts": ev.ts,
                            "text": ev.text,
                            "author_id": ev.author_id,
                        }
                    )
                )
        Path(events_path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    if labels_path is not None:
        lines = list(header)
        for pid in corpus.projects:
            lab = corpus.labels.get(pid)
            if lab is not None:
                obj = {"project_id": lab.project_id, "status": lab.status}
                if lab.actual_duration_days is not None:
                    obj["actual_duration_days"] = lab.actual_duration_days
                lines.append(_dump_line(obj))
        Path(labels_path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def filter_successful(corpus: Corpus, min_goal: float = 100.0) -> Corpus:
    """Keep only funded projects with goal >= min_goal.

    Events and labels of dropped projects are dropped with them. Mirrors the
    preprocessing that produced the study population this package models.
    """
    keep = {
        pid: p
        for pid, p in corpus.projects.items()
        if p.successful and p.goal >= min_goal
    }
    return Corpus(
        projects=keep,
        events={pid: evs for pid, evs in corpus.events.items() if pid in keep},
        labels={pid: lab for pid, lab in corpus.labels.items() if pid in keep},
        warnings=corpus.warnings,
    )
