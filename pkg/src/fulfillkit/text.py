"""Tokenization, SMOG readability, and dictionary-based category scoring.

The category scorer reads any dictionary in the %-delimited interchange
format (header lines map numeric ids to category names, body lines map a
word pattern to its category ids, ``*`` suffix = prefix match). A small
original demo dictionary ships with the package for tests and demos.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

import numpy as np
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .errors import DataError, SmogUndefinedError
from .stats import welch_t_test

log = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"[a-z0-9]+")
_SENTENCE_SPLIT_RE = re.compile(r"[.!?]+")
_WORDCHAR_RE = re.compile(r"\w")
_VOWEL_GROUP_RE = re.compile(r"[aeiouy]+")


def _data_path(name: str) -> Path:
    return Path(resources.files("fulfillkit").joinpath("data", name))


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Stopword set from a one-word-per-line file; bundled list by default."""
    p = Path(path) if path is not None else _data_path("stopwords.txt")
    words = [w.strip().lower() for w in p.read_text(encoding="utf-8").splitlines()]
    return frozenset(w for w in words if w)


def tokenize(
    text: str,
    stopwords: Iterable[str] | None = None,
    stemmer: Callable[[str], str] | None = None,
) -> list[str]:
    """Lowercase tokens, punctuation stripped, stopwords removed, order kept.

    Tokens are maximal [a-z0-9] runs of the lowercased text. ``stemmer`` is
    an optional per-token hook applied after stopword removal; none is used
    by default.
    """
    if not text:
        return []
    drop = frozenset(stopwords) if stopwords is not None else frozenset()
    tokens = [t for t in _TOKEN_RE.findall(text.lower()) if t not in drop]
    if stemmer is not None:
        tokens = [stemmer(t) for t in tokens]
    return tokens


def count_syllables(word: str) -> int:
    """Heuristic syllable count: maximal aeiouy groups, silent final 'e'
    (one forming its own group after a consonant) subtracted, minimum 1."""
    w = word.lower()
    groups = _VOWEL_GROUP_RE.findall(w)
    n = len(groups)
    if n > 1 and w.endswith("e") and len(w) >= 2 and w[-2] not in "aeiouy":
        n -= 1
    return max(1, n)


def split_sentences(text: str) -> list[str]:
    """Segments between ./!/? runs that contain at least one word character."""
    return [s for s in _SENTENCE_SPLIT_RE.split(text) if _WORDCHAR_RE.search(s)]


def smog_score(text: str) -> float:
    """SMOG readability grade of the text.

        grade = 1.0430 * sqrt(polysyllables * 30 / sentences) + 3.1291

    where a polysyllable is any word of >= 3 heuristic syllables. Raises
    SmogUndefinedError when the text has no sentences; callers that want a
    missing-value sentinel catch it.
    """
    sentences = split_sentences(text)
    if not sentences:
        raise SmogUndefinedError("SMOG needs at least one sentence")
    poly = 0
    for sentence in sentences:
        for token in _TOKEN_RE.findall(sentence.lower()):
            if count_syllables(token) >= 3:
                poly += 1
    return 1.0430 * (poly * 30.0 / len(sentences)) ** 0.5 + 3.1291


@dataclass(frozen=True)
class CategoryDictionary:
    """Named categories of word patterns; ``*`` suffix means prefix match."""

    categories: tuple[tuple[str, tuple[str, ...]], ...]

    def __post_init__(self) -> None:
        names = [name for name, _ in self.categories]
        if len(set(names)) != len(names):
            raise DataError("category names must be unique")
        for name, patterns in self.categories:
            if not patterns:
                raise DataError(f"category {name!r} has no patterns")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.categories)

    def _matchers(self) -> tuple[dict[str, set[str]], dict[str, list[tuple[str, str]]]]:
        # exact word -> categories; first letter -> [(prefix, category)]
        exact: dict[str, set[str]] = {}
        prefixes: dict[str, list[tuple[str, str]]] = {}
        for name, patterns in self.categories:
            for pat in patterns:
                if pat.endswith("*"):
                    stem = pat[:-1]
                    if stem:
                        prefixes.setdefault(stem[0], []).append((stem, name))
                else:
                    exact.setdefault(pat, set()).add(name)
        return exact, prefixes


def load_category_dictionary(path: str | Path | None = None) -> CategoryDictionary:
    """Parse a %-delimited dictionary file; bundled demo dictionary by default.

    Layout: a ``%`` line, ``id<TAB>name`` header lines, a ``%`` line, then
    ``pattern<TAB>id[,id...]`` body lines (comma- or whitespace-separated
    ids both occur in the wild and are accepted).
    """
    p = Path(path) if path is not None else _data_path("demo_liwc.dic")
    names: dict[str, str] = {}
    patterns: dict[str, list[str]] = {}
    in_header = False
    header_done = False
    for lineno, raw in enumerate(p.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line == "%":
            if not header_done:
                if in_header:
                    header_done = True
                in_header = not in_header
            continue
        where = f"{p}:{lineno}"
        if in_header:
            parts = line.split()
            if len(parts) != 2:
                raise DataError(f"{where}: header line must be 'id name'")
            cat_id, name = parts
            if cat_id in names:
                raise DataError(f"{where}: duplicate category id {cat_id!r}")
            if name in names.values():
                raise DataError(f"{where}: duplicate category name {name!r}")
            names[cat_id] = name
        else:
            parts = re.split(r"[\t,]+|\s+", line)
            word, ids = parts[0].lower(), parts[1:]
            if not ids:
                raise DataError(f"{where}: pattern {word!r} lists no categories")
            for cat_id in ids:
                if cat_id not in names:
                    raise DataError(f"{where}: unknown category id {cat_id!r}")
                patterns.setdefault(names[cat_id], []).append(word)
    if not names:
        raise DataError(f"{p}: no category header found")
    missing = [n for n in names.values() if n not in patterns]
    if missing:
        raise DataError(f"{p}: categories with no patterns: {missing}")
    return CategoryDictionary(
        categories=tuple((names[k], tuple(patterns[names[k]])) for k in names)
    )


def category_scores(
    tokens: Sequence[str], dictionary: CategoryDictionary
) -> dict[str, float]:
    """Per-category fraction of tokens matched. Empty input scores all zeros.

    A token counts at most once per category however many patterns it hits;
    one token may score in several categories.
    """
    if not dictionary.categories:
        raise DataError("dictionary has no categories")
    counts = {name: 0 for name in dictionary.names}
    if tokens:
        exact, prefixes = dictionary._matchers()
        for tok in tokens:
            hits = set(exact.get(tok, ()))
            for stem, name in prefixes.get(tok[:1], ()):
                if tok.startswith(stem):
                    hits.add(name)
            for name in hits:
                counts[name] += 1
    total = max(1, len(tokens))
    return {name: counts[name] / total for name in dictionary.names}


def select_significant_categories(
    group_a: Mapping[str, Sequence[float]],
    group_b: Mapping[str, Sequence[float]],
    alpha: float | None = None,
) -> set[str]:
    """Categories whose per-sample scores differ between the groups.

    Runs a two-sided Welch t-test per category shared by both groups and
    keeps those with p < alpha. ``alpha=None`` applies the Bonferroni
    default 0.05 / number_of_categories. Categories that cannot be tested
    (fewer than two samples, or zero variance in both groups) are skipped
    with a warning.
    """
    shared = [name for name in group_a if name in group_b]
    if alpha is None:
        if not shared:
            return set()
        alpha = 0.05 / len(shared)
    selected: set[str] = set()
    for name in shared:
        a = list(group_a[name])
        b = list(group_b[name])
        if len(a) < 2 or len(b) < 2:
            log.warning("category %s skipped: fewer than 2 samples per group", name)
            continue
        if float(np.var(a)) == 0.0 and float(np.var(b)) == 0.0:
            log.warning("category %s skipped: degenerate variance in both groups", name)
            continue
        if welch_t_test(a, b) < alpha:
            selected.add(name)
    return selected
