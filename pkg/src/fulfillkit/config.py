"""Run configuration: an INI file with one section per pipeline stage.

Resolution order is file, then environment (``FULFILLKIT_<SECTION>_<KEY>``),
then explicit overrides (CLI flags). Validation never partially applies: a
config either loads whole or raises with every problem listed.
"""

from __future__ import annotations

import configparser
import hashlib
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .errors import ConfigError
from .features import TimePoint
from .models import GbtParams

ENV_PREFIX = "FULFILLKIT_"

DEFAULTS: dict[str, dict[str, str]] = {
    "run": {"out_dir": "runs/latest", "jobs": "1"},
    "paths": {
        "corpus": "",
        "events": "",
        "labels": "",
        "stopwords": "",
        "dictionary": "",
        "embeddings": "",
    },
    "synth": {"n_projects": "2000", "noise": "0.10", "duration_coverage": "0.80"},
    "embeddings": {"dim": "50", "iters": "20", "window": "15", "min_count": "5"},
    "clustering": {"k1_min": "1", "k1_max": "100", "k2_min": "1", "k2_max": "30"},
    "features": {
        "tps": "tp1,tp2,tp3,tp4",
        "n_slots": "20",
        "liwc_categories": "delay,fulfill",
        "semantic_mode": "auto",
    },
    "selection": {
        "order": "vif_boruta",
        "vif_threshold": "10.0",
        "boruta_runs": "100",
        "boruta_alpha": "0.05",
        "boruta_trees": "300",
    },
    "classifier": {
        "n_trees": "200",
        "depth": "4",
        "eta": "0.1",
        "lambda_reg": "1.0",
        "gamma": "0.0",
        "min_child_weight": "1.0",
    },
    "regressor": {"selection": "vif", "stepwise": "true"},
    "evaluation": {"folds": "10", "pairing": "fold"},
}

_SELECTION_ORDERS = ("none", "vif", "vif_boruta")
_REGRESSOR_SELECTIONS = ("none", "vif")
_PAIRINGS = ("fold", "project")
_SEMANTIC_MODES = ("auto", "backers", "reward_count")


@dataclass(frozen=True)
class PathsConfig:
    corpus: str | None
    events: str | None
    labels: str | None
    stopwords: str | None
    dictionary: str | None
    embeddings: str | None


@dataclass(frozen=True)
class SynthSection:
    n_projects: int
    noise: float
    duration_coverage: float


@dataclass(frozen=True)
class EmbeddingsSection:
    dim: int
    iters: int
    window: int
    min_count: int


@dataclass(frozen=True)
class ClusteringSection:
    k1_min: int
    k1_max: int
    k2_min: int
    k2_max: int


@dataclass(frozen=True)
class FeaturesSection:
    tps: tuple[str, ...]
    n_slots: int
    liwc_categories: tuple[str, ...]
    semantic_mode: str


@dataclass(frozen=True)
class SelectionSection:
    order: str
    vif_threshold: float
    boruta_runs: int
    boruta_alpha: float
    boruta_trees: int


@dataclass(frozen=True)
class RegressorSection:
    selection: str
    stepwise: bool


@dataclass(frozen=True)
class EvaluationSection:
    folds: int
    pairing: str


@dataclass(frozen=True)
class RunConfig:
    master_seed: int
    out_dir: str
    jobs: int
    paths: PathsConfig
    synth: SynthSection
    embeddings: EmbeddingsSection
    clustering: ClusteringSection
    features: FeaturesSection
    selection: SelectionSection
    classifier: GbtParams
    regressor: RegressorSection
    evaluation: EvaluationSection
    resolved: tuple[tuple[str, str, str], ...]


class _Resolver:
    """Flat (section, key) -> string view with typed getters that collect
    errors instead of raising one at a time."""

    def __init__(self, table: dict[tuple[str, str], str]):
        self.table = table
        self.errors: list[str] = []

    def raw(self, section: str, key: str) -> str:
        return self.table.get((section, key), "")

    def _parse(self, section, key, kind, minimum=None, maximum=None):
        text = self.raw(section, key)
        try:
            value = kind(text)
        except ValueError:
            self.errors.append(
                f"{section}.{key}: expected {kind.__name__}, got {text!r}"
            )
            return None
        if minimum is not None and value < minimum:
            self.errors.append(f"{section}.{key}: must be >= {minimum}, got {value}")
            return None
        if maximum is not None and value > maximum:
            self.errors.append(f"{section}.{key}: must be <= {maximum}, got {value}")
            return None
        return value

    def get_int(self, section, key, minimum=None, maximum=None):
        return self._parse(section, key, int, minimum, maximum)

    def get_float(self, section, key, minimum=None, maximum=None):
        return self._parse(section, key, float, minimum, maximum)

    def get_bool(self, section, key):
        text = self.raw(section, key).strip().lower()
        if text in ("true", "1", "yes", "on"):
            return True
        if text in ("false", "0", "no", "off"):
            return False
        self.errors.append(f"{section}.{key}: expected a boolean, got {text!r}")
        return None

    def get_enum(self, section, key, allowed):
        text = self.raw(section, key).strip()
        if text in allowed:
            return text
        self.errors.append(
            f"{section}.{key}: must be one of {', '.join(allowed)}; got {text!r}"
        )
        return None

    def get_path(self, section, key):
        text = self.raw(section, key).strip()
        if not text:
            return None
        if not os.path.exists(text):
            self.errors.append(f"{section}.{key}: path does not exist: {text}")
            return None
        return text


def _flatten(
    path: str | Path | None,
    env: Mapping[str, str] | None,
    overrides: Mapping[tuple[str, str], str] | None,
) -> tuple[dict[tuple[str, str], str], list[str]]:
    errors: list[str] = []
    table: dict[tuple[str, str], str] = {
        (section, key): value
        for section, entries in DEFAULTS.items()
        for key, value in entries.items()
    }

    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            return table, [f"cannot read config file: {exc}"]
        try:
            parser.read_string(text, source=str(path))
        except configparser.Error as exc:
            return table, [f"cannot parse config file: {exc}"]
        for section in parser.sections():
            if section not in DEFAULTS and section != "run":
                errors.append(f"unknown section [{section}]")
                continue
            for key, value in parser.items(section):
                known = (section, key) == ("run", "master_seed") or key in DEFAULTS.get(section, {})
                if not known:
                    errors.append(f"unknown key {section}.{key}")
                    continue
                table[(section, key)] = value

    env = os.environ if env is None else env
    for name, value in env.items():
        if not name.startswith(ENV_PREFIX):
            continue
        rest = name[len(ENV_PREFIX):]
        section, _, key = rest.partition("_")
        section, key = section.lower(), key.lower()
        if (section, key) in table or (section, key) == ("run", "master_seed"):
            table[(section, key)] = value
        else:
            errors.append(f"environment override {name} matches no config key")

    for (section, key), value in (overrides or {}).items():
        table[(section, key)] = value

    return table, errors


def load_config(
    path: str | Path | None = None,
    env: Mapping[str, str] | None = None,
    overrides: Mapping[tuple[str, str], str] | None = None,
) -> RunConfig:
    """Resolve and validate a full configuration.

    Raises ConfigError carrying every detected problem in its message; the
    ``errors`` attribute holds them as a list.
    """
    table, errors = _flatten(path, env, overrides)
    r = _Resolver(table)
    r.errors = errors

    if ("run", "master_seed") not in table or not str(table[("run", "master_seed")]).strip():
        r.errors.append("run.master_seed: required, no default")
        master_seed = None
    else:
        master_seed = r.get_int("run", "master_seed", minimum=0)

    out_dir = r.raw("run", "out_dir").strip()
    if not out_dir:
        r.errors.append("run.out_dir: must not be empty")
    jobs = r.get_int("run", "jobs", minimum=1)

    paths = PathsConfig(
        corpus=r.get_path("paths", "corpus"),
        events=r.get_path("paths", "events"),
        labels=r.get_path("paths", "labels"),
        stopwords=r.get_path("paths", "stopwords"),
        dictionary=r.get_path("paths", "dictionary"),
        embeddings=r.get_path("paths", "embeddings"),
    )

    synth = SynthSection(
        n_projects=r.get_int("synth", "n_projects", minimum=1),
        noise=r.get_float("synth", "noise", minimum=0.0, maximum=1.0),
        duration_coverage=r.get_float("synth", "duration_coverage", minimum=0.0, maximum=1.0),
    )
    embeddings = EmbeddingsSection(
        dim=r.get_int("embeddings", "dim", minimum=1),
        iters=r.get_int("embeddings", "iters", minimum=1),
        window=r.get_int("embeddings", "window", minimum=1),
        min_count=r.get_int("embeddings", "min_count", minimum=0),
    )

    clustering = ClusteringSection(
        k1_min=r.get_int("clustering", "k1_min", minimum=1),
        k1_max=r.get_int("clustering", "k1_max", minimum=1),
        k2_min=r.get_int("clustering", "k2_min", minimum=1),
        k2_max=r.get_int("clustering", "k2_max", minimum=1),
    )
    for low, high in (("k1_min", "k1_max"), ("k2_min", "k2_max")):
        lo, hi = getattr(clustering, low), getattr(clustering, high)
        if lo is not None and hi is not None and lo > hi:
            r.errors.append(f"clustering.{low} exceeds clustering.{high} ({lo} > {hi})")

    tps_text = [t.strip() for t in r.raw("features", "tps").split(",") if t.strip()]
    tps: list[str] = []
    for name in tps_text:
        try:
            tps.append(TimePoint.parse(name).value)
        except Exception:
            r.errors.append(f"features.tps: unknown time point {name!r}")
    if not tps_text:
        r.errors.append("features.tps: must list at least one time point")
    liwc = tuple(
        c.strip() for c in r.raw("features", "liwc_categories").split(",") if c.strip()
    )
    features = FeaturesSection(
        tps=tuple(tps),
        n_slots=r.get_int("features", "n_slots", minimum=1),
        liwc_categories=liwc,
        semantic_mode=r.get_enum("features", "semantic_mode", _SEMANTIC_MODES),
    )

    selection = SelectionSection(
        order=r.get_enum("selection", "order", _SELECTION_ORDERS),
        vif_threshold=r.get_float("selection", "vif_threshold", minimum=1.0),
        boruta_runs=r.get_int("selection", "boruta_runs", minimum=20),
        boruta_alpha=r.get_float("selection", "boruta_alpha", minimum=1e-12, maximum=1.0),
        boruta_trees=r.get_int("selection", "boruta_trees", minimum=1),
    )

    gbt_fields = {
        "n_trees": r.get_int("classifier", "n_trees", minimum=1),
        "depth": r.get_int("classifier", "depth", minimum=1),
        "eta": r.get_float("classifier", "eta", minimum=1e-12),
        "lambda_reg": r.get_float("classifier", "lambda_reg", minimum=0.0),
        "gamma": r.get_float("classifier", "gamma", minimum=0.0),
        "min_child_weight": r.get_float("classifier", "min_child_weight", minimum=0.0),
    }

    regressor = RegressorSection(
        selection=r.get_enum("regressor", "selection", _REGRESSOR_SELECTIONS),
        stepwise=r.get_bool("regressor", "stepwise"),
    )
    evaluation = EvaluationSection(
        folds=r.get_int("evaluation", "folds", minimum=2),
        pairing=r.get_enum("evaluation", "pairing", _PAIRINGS),
    )

    if r.errors:
        exc = ConfigError("; ".join(r.errors))
        exc.errors = list(r.errors)
        raise exc

    resolved = tuple(
        (section, key, table[(section, key)])
        for section, key in sorted(table)
    )
    return RunConfig(
        master_seed=master_seed,
        out_dir=out_dir,
        jobs=jobs,
        paths=paths,
        synth=synth,
        embeddings=embeddings,
        clustering=clustering,
        features=features,
        selection=selection,
        classifier=GbtParams(**gbt_fields),
        regressor=regressor,
        evaluation=evaluation,
        resolved=resolved,
    )


def validate_config(
    path: str | Path | None = None,
    env: Mapping[str, str] | None = None,
    overrides: Mapping[tuple[str, str], str] | None = None,
) -> list[str]:
    """Every problem with the configuration, or an empty list when valid."""
    try:
        load_config(path, env=env, overrides=overrides)
    except ConfigError as exc:
        return list(getattr(exc, "errors", [str(exc)]))
    return []


def config_hash(config: RunConfig) -> str:
    """Stable digest of the fully resolved configuration."""
    canonical = "\n".join(f"{s}.{k}={v}" for s, k, v in config.resolved)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def write_default_config(path: str | Path, master_seed: int) -> None:
    """Emit a complete, commented template with every default spelled out."""
    lines = [
        "# fulfillkit run configuration",
        "# every key shown here is optional except run.master_seed",
        "",
        "[run]",
        f"master_seed = {master_seed}",
    ]
    for key, value in DEFAULTS["run"].items():
        lines.append(f"{key} = {value}")
    for section, entries in DEFAULTS.items():
        if section == "run":
            continue
        lines.append("")
        lines.append(f"[{section}]")
        for key, value in entries.items():
            lines.append(f"{key} = {value}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
