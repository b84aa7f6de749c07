"""Deterministic synthetic corpus generator with planted, recoverable signal.

The generator plants structure the rest of the package is designed to
recover:

* each project has a latent *difficulty* ``d`` driven by its category, the
  word pool its reward descriptions are written from (easy/medium/hard), and
  its backer load, and a latent creator *diligence*;
* the on-time/late label thresholds ``a0 + w_dil*diligence - w_dif*d + eps``
  at zero (bounded noise ``eps``), then flips with probability ``noise``;
* actual delivery duration is lognormal around ``25 + 300*mix`` days where
  ``mix`` mixes difficulty and (one minus) diligence, so hard-pool projects
  run longer and diligent creators run shorter;
* diligent creators post more updates, respond to more questions, and
  respond faster; projects trending late attract more backer questions and
  their delivery-phase updates use delay vocabulary instead of fulfillment
  vocabulary.

Everything is drawn from one ``numpy.random.default_rng(seed)`` stream, so a
given (config, seed) pair always yields the identical corpus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .corpus import CATEGORIES, Corpus, Event, Label, Project, Reward, build_corpus
from .errors import ConfigError

# Latent difficulty prior per category: performance/art categories deliver
# readily, hardware-heavy categories do not.
CATEGORY_DIFFICULTY = {
    "art": 0.35,
    "comics": 0.45,
    "crafts": 0.30,
    "dance": 0.10,
    "design": 0.75,
    "fashion": 0.50,
    "film_video": 0.55,
    "food": 0.40,
    "games": 0.90,
    "journalism": 0.35,
    "music": 0.25,
    "photography": 0.30,
    "publishing": 0.40,
    "technology": 0.90,
    "theater": 0.15,
}

DEFAULT_CATEGORY_WEIGHTS = (
    0.07,  # art
    0.04,  # comics
    0.03,  # crafts
    0.02,  # dance
    0.08,  # design
    0.06,  # fashion
    0.15,  # film_video
    0.06,  # food
    0.12,  # games
    0.02,  # journalism
    0.15,  # music
    0.04,  # photography
    0.08,  # publishing
    0.06,  # technology
    0.02,  # theater
)

EASY_WORDS = (
    "shirt", "print", "card", "sticker", "badge", "photo", "thank", "note",
    "postcard", "poster", "mug", "tote", "pin", "zine", "copy", "digital",
    "download", "song", "track", "ebook", "pdf", "wallpaper", "recipe",
    "pattern", "stencil", "bookmark", "magnet", "coaster", "keychain", "patch",
)

MEDIUM_WORDS = (
    "handmade", "jewelry", "notebook", "hardcover", "vinyl", "album",
    "boardgame", "expansion", "miniature", "plush", "apparel", "hoodie",
    "ceramic", "leather", "wallet", "backpack", "lantern", "speaker",
    "headphones", "charger", "puzzle", "artbook", "figurine", "sculpture",
    "watchband", "organizer", "toolkit", "planner", "terrarium", "skillet",
)

HARD_WORDS = (
    "electronics", "prototype", "manufacturing", "injection", "molding",
    "firmware", "assembly", "certification", "drone", "robotics", "wearable",
    "biometric", "synthesizer", "fabrication", "tooling", "logistics",
    "console", "peripherals", "microcontroller", "lithium", "machining",
    "anodized", "telescope", "projector", "turbine", "exoskeleton",
    "hydroponic", "nanotech", "photonics", "augmented",
)

_NEUTRAL_WORDS = (
    "the", "a", "we", "our", "you", "will", "receive", "with", "and", "for",
    "of", "to", "this", "plus", "edition", "limited", "early", "bird",
    "special", "bundle", "pack", "set", "signed", "exclusive", "reward",
    "tier", "includes", "one", "two", "free", "shipping", "worldwide",
    "backer", "level", "get", "your", "name", "credits", "access",
    "community", "project", "campaign", "goal", "stretch",
)

_PROGRESS_WORDS = (
    "progress", "production", "samples", "working", "update", "news",
    "factory", "design", "final", "testing", "photos", "milestone",
)

_FULFILL_WORDS = (
    "shipped", "shipping", "tracking", "sent", "mailed", "fulfilled",
    "delivered", "warehouse", "dispatched", "arriving", "completed", "packed",
)

_DELAY_WORDS = (
    "delay", "delayed", "sorry", "apologize", "apologies", "waiting",
    "issue", "issues", "problem", "setback", "unfortunately", "postponed",
)

_THANKS_WORDS = (
    "thanks", "thank", "grateful", "support", "amazing", "awesome", "wonderful",
)

_DAY = 86400
_BASE_TS = 1356998400  # 2013-01-01T00:00:00Z

_EPS_HALF_WIDTH = 0.10

# Private stream for the label-threshold reference sample; independent of the
# corpus stream so calibration never perturbs generated content.
_CALIB_SEED = 20170801
_CALIB_N = 200_000

# Duration model constants: duration = (25 + 300*mix) * exp(N(0, 0.18)) days.
_DUR_BASE = 25.0
_DUR_SPAN = 300.0
_DUR_LOG_SD = 0.18
_MIX_DIFFICULTY = 0.45
_MIX_SLACKNESS = 0.55  # weight on (1 - diligence)


@dataclass(frozen=True)
class SynthConfig:
    """Knobs for the synthetic corpus generator.

    ``pool_mix_override`` forces reward word-pool choice to fixed
    (easy, medium, hard) probabilities instead of the category-driven latent;
    (0, 0, 1) with ``noise=0`` provably yields all-late labels. The two score
    weights set how strongly diligence and difficulty drive the label.
    """

    n_projects: int = 2000
    late_rate: float = 0.55
    noise: float = 0.10
    duration_coverage: float = 0.80
    events_scale: float = 1.0
    easy_words: tuple[str, ...] = EASY_WORDS
    medium_words: tuple[str, ...] = MEDIUM_WORDS
    hard_words: tuple[str, ...] = HARD_WORDS
    category_weights: tuple[float, ...] | None = None
    pool_mix_override: tuple[float, float, float] | None = None
    score_diligence_weight: float = 0.55
    score_difficulty_weight: float = 2.8

    def validate(self) -> None:
        if self.n_projects <= 0:
            raise ConfigError("n_projects must be positive")
        if not 0.0 < self.late_rate < 1.0:
            raise ConfigError("late_rate must be strictly between 0 and 1")
        if not 0.0 <= self.noise <= 1.0:
            raise ConfigError("noise must be in [0, 1]")
        if not 0.0 <= self.duration_coverage <= 1.0:
            raise ConfigError("duration_coverage must be in [0, 1]")
        if self.events_scale < 0:
            raise ConfigError("events_scale must be >= 0")
        for name in ("easy_words", "medium_words", "hard_words"):
            if not getattr(self, name):
                raise ConfigError(f"{name} must be non-empty")
        if self.category_weights is not None:
            if len(self.category_weights) != len(CATEGORIES):
                raise ConfigError(
                    f"category_weights must have {len(CATEGORIES)} entries"
                )
            if min(self.category_weights) < 0 or sum(self.category_weights) <= 0:
                raise ConfigError("category_weights must be non-negative, sum > 0")
        if self.pool_mix_override is not None:
            if len(self.pool_mix_override) != 3:
                raise ConfigError("pool_mix_override must have 3 entries")
            if min(self.pool_mix_override) < 0 or sum(self.pool_mix_override) <= 0:
                raise ConfigError("pool_mix_override must be non-negative, sum > 0")
        if self.score_difficulty_weight < 0 or self.score_diligence_weight < 0:
            raise ConfigError("score weights must be >= 0")


def _draw_structure(cfg: SynthConfig, rng: np.random.Generator) -> dict:
    """Vectorized prepass, part 1: category, diligence, backers, reward pools,
    and the latent difficulty d they induce."""
    n = cfg.n_projects
    weights = np.asarray(
        cfg.category_weights if cfg.category_weights is not None else DEFAULT_CATEGORY_WEIGHTS,
        dtype=float,
    )
    weights = weights / weights.sum()
    cat_idx = rng.choice(len(CATEGORIES), size=n, p=weights)
    cat_diff = np.asarray([CATEGORY_DIFFICULTY[c] for c in CATEGORIES])[cat_idx]
    diligence = rng.beta(2.0, 2.0, size=n)
    total_backers = 1 + np.floor(rng.lognormal(4.0, 0.9, size=n)).astype(np.int64)
    backer_load = np.minimum(1.0, np.log1p(total_backers) / 8.0)

    n_rewards = 2 + np.minimum(rng.poisson(2.0, size=n), 8)
    offsets = np.concatenate(([0], np.cumsum(n_rewards)))
    total_r = int(offsets[-1])
    if cfg.pool_mix_override is not None:
        mix = np.asarray(cfg.pool_mix_override, dtype=float)
        mix = mix / mix.sum()
        lvl_flat = rng.choice(np.array([0.0, 0.5, 1.0]), size=total_r, p=mix)
        q_flat = lvl_flat.copy()
    else:
        p_flat = np.clip(
            np.repeat(cat_diff, n_rewards) + rng.normal(0.0, 0.25, size=total_r),
            0.0,
            1.0,
        )
        lvl_flat = np.where(p_flat < 1 / 3, 0.0, np.where(p_flat < 2 / 3, 0.5, 1.0))
        q_flat = p_flat
    pool_level = np.add.reduceat(lvl_flat, offsets[:-1]) / n_rewards

    d = 0.65 * pool_level + 0.20 * cat_diff + 0.15 * backer_load
    return {
        "cat_idx": cat_idx,
        "diligence": diligence,
        "total_backers": total_backers,
        "n_rewards": n_rewards,
        "offsets": offsets,
        "lvl_flat": lvl_flat,
        "q_flat": q_flat,
        "d": d,
    }


@lru_cache(maxsize=1)
def _calibration_reference() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Reference draws of (diligence, difficulty, score noise) under the
    default latent distribution, from the fixed private stream."""
    rng = np.random.default_rng(_CALIB_SEED)
    st = _draw_structure(SynthConfig(n_projects=_CALIB_N), rng)
    eps = rng.uniform(-_EPS_HALF_WIDTH, _EPS_HALF_WIDTH, size=_CALIB_N)
    return st["diligence"], st["d"], eps


def _threshold_offset(cfg: SynthConfig) -> float:
    """Offset a0 placing P(score > 0) at 1 - late_rate under default latents.

    The score weights enter linearly, so the fixed reference component
    samples calibrate any weight setting exactly (up to reference sampling
    noise, well inside the documented +/-0.05 late-rate tolerance). Label
    flips pull the observed rate toward 0.5, so the pre-noise target is
    inflated to compensate: solve r*(1-noise) + (1-r*)*noise = late_rate.
    The offset deliberately ignores pool/category overrides: degenerate
    configs are meant to push labels off the default operating point.
    """
    if cfg.noise == 0.5:
        target = 0.5  # observed labels are coin flips; any threshold works
    else:
        target = (cfg.late_rate - cfg.noise) / (1.0 - 2.0 * cfg.noise)
    target = min(1.0, max(0.0, target))
    dil, d, eps = _calibration_reference()
    z = cfg.score_diligence_weight * dil - cfg.score_difficulty_weight * d + eps
    return -float(np.quantile(z, target))


def _draw_latents(cfg: SynthConfig, rng: np.random.Generator) -> dict:
    """Vectorized prepass: all per-project and per-reward latent draws."""
    n = cfg.n_projects
    st = _draw_structure(cfg, rng)
    d = st["d"]
    diligence = st["diligence"]
    eps = rng.uniform(-_EPS_HALF_WIDTH, _EPS_HALF_WIDTH, size=n)
    score = (
        _threshold_offset(cfg)
        + cfg.score_diligence_weight * diligence
        - cfg.score_difficulty_weight * d
        + eps
    )
    flips = rng.random(n) < cfg.noise
    on_time = (score > 0.0) ^ flips

    mix_dur = np.clip(_MIX_DIFFICULTY * d + _MIX_SLACKNESS * (1.0 - diligence), 0.0, 1.0)
    duration = (_DUR_BASE + _DUR_SPAN * mix_dur) * np.exp(
        rng.normal(0.0, _DUR_LOG_SD, size=n)
    )
    has_duration = rng.random(n) < cfg.duration_coverage

    st.update(
        score=score,
        on_time=on_time,
        duration=duration,
        has_duration=has_duration,
    )
    return st


def _pick(rng: np.random.Generator, pool: tuple[str, ...], k: int) -> list[str]:
    if k <= 0:
        return []
    idx = rng.integers(0, len(pool), size=k)
    return [pool[i] for i in idx]


def _sentence(rng: np.random.Generator, words: list[str], mark: str = ".") -> str:
    return " ".join(words) + mark


def _paragraph(
    rng: np.random.Generator,
    n_sentences: int,
    main_pool: tuple[str, ...],
    accent_pool: tuple[str, ...],
) -> str:
    out = []
    for _ in range(max(1, n_sentences)):
        k_main = 4 + int(rng.poisson(4.0))
        k_acc = 1 + int(rng.poisson(2.0))
        words = _pick(rng, main_pool, k_main) + _pick(rng, accent_pool, k_acc)
        rng.shuffle(words)
        out.append(_sentence(rng, words))
    return " ".join(out)


def generate_synthetic(config: SynthConfig, seed: int) -> tuple[Corpus, dict[str, Label]]:
    """Generate a labeled corpus. Returns (corpus, labels); the corpus also
    carries the same labels.

    Planted correlations (all recoverable from the emitted records): hard-pool
    rewards run longer and later; diligent creators post more and faster and
    finish sooner; projects trending late accumulate backer questions and
    delay-flavored update text during the delivery window.
    """
    config.validate()
    rng = np.random.default_rng(seed)
    lat = _draw_latents(config, rng)
    pools = (config.easy_words, config.medium_words, config.hard_words)

    projects: list[Project] = []
    events: list[Event] = []
    labels: list[Label] = []

    for i in range(config.n_projects):
        pid = f"p{i:05d}"
        dil = float(lat["diligence"][i])
        score = float(lat["score"][i])
        total_backers = int(lat["total_backers"][i])
        positive = 1.0 / (1.0 + math.exp(-2.5 * score))

        launch = _BASE_TS + int(rng.integers(0, 730 * _DAY))
        fund_days = int(rng.integers(15, 61))
        deadline = launch + fund_days * _DAY

        goal = float(np.clip(math.exp(rng.normal(math.log(5000.0), 1.0)), 100.0, 1e6))
        goal = round(goal, 2)
        pledged = round(goal * (1.0 + abs(float(rng.normal(0.0, 0.6)))), 2)

        lo, hi = int(lat["offsets"][i]), int(lat["offsets"][i + 1])
        rewards = []
        amounts = np.round(np.cumsum(rng.uniform(5.0, 80.0, size=hi - lo)), 2)
        probs = np.exp(-0.45 * np.arange(hi - lo))
        counts = rng.multinomial(total_backers, probs / probs.sum())
        for j in range(hi - lo):
            lvl = lat["lvl_flat"][lo + j]
            q = float(lat["q_flat"][lo + j])
            pool = pools[int(round(lvl * 2))]
            k_pool = 3 + int(rng.poisson(3.0))
            k_neut = 3 + int(rng.poisson(3.0))
            words = _pick(rng, pool, k_pool) + _pick(rng, _NEUTRAL_WORDS, k_neut)
            rng.shuffle(words)
            window_days = max(7.0, (20.0 + 120.0 * q) * (1.0 + float(rng.normal(0.0, 0.25))))
            rewards.append(
                Reward(
                    id=f"{pid}r{j}",
                    description=_sentence(rng, words),
                    pledge_amount=float(amounts[j]),
                    estimated_delivery_ts=deadline + int(window_days * _DAY),
                    backer_count=int(counts[j]),
                )
            )

        projects.append(
            Project(
                id=pid,
                category=CATEGORIES[int(lat["cat_idx"][i])],
                goal=goal,
                pledged=pledged,
                launch_ts=launch,
                deadline_ts=deadline,
                images_count=int(rng.poisson(2.0 + 6.0 * dil)),
                faqs_count=int(rng.poisson(1.0 + 3.0 * dil)),
                project_description=_paragraph(
                    rng, 4 + int(rng.poisson(4.0)), _NEUTRAL_WORDS, _PROGRESS_WORDS
                ),
                bio_description=_paragraph(
                    rng, 2 + int(rng.poisson(2.0)), _NEUTRAL_WORDS, _THANKS_WORDS
                ),
                creator_backed_count=int(rng.poisson(1.0 + 3.0 * dil)),
                creator_created_count=int(rng.poisson(0.5 + 1.5 * dil)),
                successful=True,
                rewards=tuple(rewards),
            )
        )

        ledd = max(r.estimated_delivery_ts for r in rewards)
        window_sec = ledd - deadline
        horizon = deadline + int(0.10 * window_sec)
        scale = config.events_scale
        questions: list[int] = []

        def _comment(ts: int, author: str, words: list[str], question: bool) -> None:
            rng.shuffle(words)
            events.append(
                Event(
                    project_id=pid,
                    author_role="backer",
                    kind="comment",
                    ts=ts,
                    text=_sentence(rng, words, "?" if question else "."),
                    author_id=author,
                )
            )
            if question:
                questions.append(ts)

        # Fundraising-phase backer comments.
        bl = min(1.0, math.log1p(total_backers) / 8.0)
        n_bc = int(rng.poisson((1.0 + 14.0 * bl) * scale))
        for _ in range(n_bc):
            ts = launch + int(rng.random() ** 0.7 * (deadline - launch))
            author = f"b{int(rng.integers(0, total_backers))}"
            q = bool(rng.random() < 0.25)
            _comment(ts, author, _pick(rng, _NEUTRAL_WORDS, 4 + int(rng.poisson(3.0))), q)

        # Fundraising-phase creator updates.
        for _ in range(int(rng.poisson((1.0 + 5.0 * dil) * scale))):
            ts = launch + int(rng.random() * (deadline - launch))
            events.append(
                Event(
                    project_id=pid,
                    author_role="creator",
                    kind="update",
                    ts=ts,
                    text=_paragraph(rng, 1 + int(rng.poisson(1.0)), _NEUTRAL_WORDS, _PROGRESS_WORDS),
                    author_id="creator",
                )
            )

        # Delivery-phase creator updates: fulfillment vs delay vocabulary.
        for _ in range(int(rng.poisson((0.5 + 5.5 * dil) * scale))):
            ts = deadline + 1 + int(rng.random() * max(1, horizon - deadline - 1))
            flavor = _FULFILL_WORDS if rng.random() < positive else _DELAY_WORDS
            words = _pick(rng, _NEUTRAL_WORDS, 5 + int(rng.poisson(3.0))) + _pick(rng, flavor, 2 + int(rng.poisson(2.0)))
            rng.shuffle(words)
            events.append(
                Event(
                    project_id=pid,
                    author_role="creator",
                    kind="update",
                    ts=ts,
                    text=_sentence(rng, words),
                    author_id="creator",
                )
            )

        # Delivery-phase backer comments: more, and more questioning, when late.
        n_dc = int(rng.poisson((1.0 + 5.0 * (1.0 - positive)) * scale))
        for _ in range(n_dc):
            ts = deadline + 1 + int(rng.random() * max(1, horizon - deadline - 1))
            author = f"b{int(rng.integers(0, total_backers))}"
            q = bool(rng.random() < min(0.6, 0.2 + 0.4 * (1.0 - positive)))
            words = _pick(rng, _NEUTRAL_WORDS, 3 + int(rng.poisson(2.0)))
            if rng.random() < (1.0 - positive):
                words += _pick(rng, _DELAY_WORDS, 1 + int(rng.poisson(1.0)))
            _comment(ts, author, words, q)

        # Creator responses to questions: diligent creators answer more, faster.
        for q_ts in questions:
            if rng.random() < 0.25 + 0.65 * dil:
                latency = max(60, int(rng.exponential((0.3 + 2.2 * (1.0 - dil)) * _DAY)))
                words = _pick(rng, _THANKS_WORDS, 2 + int(rng.poisson(1.0)))
                words += _pick(rng, _NEUTRAL_WORDS, 3 + int(rng.poisson(2.0)))
                rng.shuffle(words)
                events.append(
                    Event(
                        project_id=pid,
                        author_role="creator",
                        kind="comment",
                        ts=q_ts + latency,
                        text=_sentence(rng, words),
                        author_id="creator",
                    )
                )

        labels.append(
            Label(
                project_id=pid,
                status="on_time" if bool(lat["on_time"][i]) else "late",
                actual_duration_days=(
                    round(float(lat["duration"][i]), 3) if lat["has_duration"][i] else None
                ),
            )
        )

    corpus = build_corpus(projects, events, labels)
    return corpus, dict(corpus.labels)
