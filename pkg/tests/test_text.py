"""Tokenizer, syllables, SMOG, and dictionary category scoring."""

import numpy as np
import pytest

from fulfillkit.errors import DataError, SmogUndefinedError
from fulfillkit.text import (
    CategoryDictionary,
    category_scores,
    count_syllables,
    load_category_dictionary,
    load_stopwords,
    select_significant_categories,
    smog_score,
    split_sentences,
    tokenize,
)


class TestTokenize:
    def test_stopword_removal(self):
        assert tokenize("Thank you!!", stopwords={"you"}) == ["thank"]

    def test_empty(self):
        assert tokenize("") == []

    def test_punctuation_stripped(self):
        assert tokenize("Print, sign & SHIP") == ["print", "sign", "ship"]

    def test_idempotent_on_own_output(self):
        stop = load_stopwords()
        text = "The shipment: 3 boxes, arriving soon... really!"
        once = tokenize(text, stop)
        again = tokenize(" ".join(once), stop)
        assert once == again

    def test_order_preserved(self):
        assert tokenize("alpha beta gamma") == ["alpha", "beta", "gamma"]

    def test_stemmer_hook(self):
        assert tokenize("running dogs", stemmer=lambda w: w.rstrip("s")) == ["running", "dog"]

    def test_bundled_stopwords(self):
        stop = load_stopwords()
        assert "the" in stop and "and" in stop
        assert tokenize("the and of", stop) == []


class TestSyllables:
    @pytest.mark.parametrize(
        "word,n",
        [
            ("cat", 1),
            ("table", 1),       # silent final e after consonant
            ("see", 1),
            ("make", 1),
            ("estimate", 3),    # e-s-t-i-m-a-t-e: groups e,i,a,e minus silent e
            ("delivery", 4),
            ("manufacturing", 5),
            ("rhythm", 1),      # y counts as vowel
            ("xyz", 1),
            ("q", 1),           # floor at one
        ],
    )
    def test_counts(self, word, n):
        assert count_syllables(word) == n


class TestSentences:
    def test_runs_collapse(self):
        assert len(split_sentences("Hi... there! Ok?")) == 3

    def test_no_word_chars_no_sentence(self):
        assert split_sentences("... !!! ???") == []
        assert split_sentences("") == []


class TestSmog:
    def test_thirty_sentences_thirty_polysyllables(self):
        sentence = "The fantastical creature slept."  # fantastical: 4 syllables
        text = " ".join([sentence] * 30)
        assert smog_score(text) == pytest.approx(1.0430 * 30.0**0.5 + 3.1291, abs=1e-9)

    def test_zero_polysyllables(self):
        assert smog_score("The cat sat. The dog ran.") == pytest.approx(3.1291)

    def test_no_sentences_raises(self):
        with pytest.raises(SmogUndefinedError):
            smog_score("")
        with pytest.raises(SmogUndefinedError):
            smog_score("...")

    def test_invariant_under_sentence_reordering(self):
        s = ["The delivery is complicated.", "We ship soon.", "Manufacturing takes patience."]
        assert smog_score(" ".join(s)) == pytest.approx(smog_score(" ".join(reversed(s))))


class TestCategoryDictionary:
    def test_wildcard_prefix_match(self):
        d = CategoryDictionary((("C", ("ship*",)),))
        assert category_scores(["ship", "shipped"], d) == {"C": 1.0}

    def test_empty_stream_all_zero(self):
        d = CategoryDictionary((("C", ("ship*",)), ("D", ("x",))))
        assert category_scores([], d) == {"C": 0.0, "D": 0.0}

    def test_ratio(self):
        d = CategoryDictionary((("C", ("a", "b")),))
        assert category_scores(["a", "b", "c", "d"], d) == {"C": 0.5}

    def test_scores_in_unit_interval_and_dilution(self):
        d = load_category_dictionary()
        rng = np.random.default_rng(0)
        tokens = ["shipped", "delayed", "thanks"]
        base = category_scores(tokens, d)
        assert all(0.0 <= v <= 1.0 for v in base.values())
        diluted = category_scores(tokens + ["qqq"] * 5, d)
        for name in base:
            assert diluted[name] <= base[name] + 1e-12

    def test_unique_names_required(self):
        with pytest.raises(DataError):
            CategoryDictionary((("C", ("a",)), ("C", ("b",))))

    def test_patterns_required(self):
        with pytest.raises(DataError):
            CategoryDictionary((("C", ()),))

    def test_bundled_dictionary_loads(self):
        d = load_category_dictionary()
        assert "delay" in d.names and "fulfill" in d.names
        scores = category_scores(["delayed", "sorry", "shipped"], d)
        assert scores["delay"] == pytest.approx(2 / 3)
        assert scores["fulfill"] == pytest.approx(1 / 3)

    def test_dic_parse_errors(self, tmp_path):
        bad = tmp_path / "bad.dic"
        bad.write_text("%\n1\tposemo\n%\nhappy\t9\n")
        with pytest.raises(DataError, match="unknown category id"):
            load_category_dictionary(bad)
        nopat = tmp_path / "nopat.dic"
        nopat.write_text("%\n1\tposemo\n2\tnegemo\n%\nhappy\t1\n")
        with pytest.raises(DataError, match="no patterns"):
            load_category_dictionary(nopat)

    def test_dic_roundtrip_format(self, tmp_path):
        p = tmp_path / "mini.dic"
        p.write_text("%\n1\tgood\n2\tbad\n%\ngreat\t1\nawful\t2\ngood*\t1,2\n")
        d = load_category_dictionary(p)
        assert d.names == ("good", "bad")
        s = category_scores(["great", "goodness"], d)
        assert s == {"good": 1.0, "bad": 0.5}


class TestSelectSignificantCategories:
    def test_identical_groups_empty(self):
        rng = np.random.default_rng(1)
        vals = rng.random(50)
        a = {"c1": vals, "c2": vals}
        b = {"c1": vals.copy(), "c2": vals.copy()}
        assert select_significant_categories(a, b) == set()

    def test_strong_shift_selected_at_strict_alpha(self):
        rng = np.random.default_rng(2)
        base = rng.normal(0.0, 1.0, 100)
        a = {"flat": base, "shifted": rng.normal(0.0, 1.0, 100)}
        b = {"flat": rng.normal(0.0, 1.0, 100), "shifted": rng.normal(10.0, 1.0, 100)}
        got = select_significant_categories(a, b, alpha=0.00078)
        assert got == {"shifted"}

    def test_alpha_one_selects_everything_testable(self):
        rng = np.random.default_rng(3)
        a = {"c1": rng.random(10), "c2": rng.random(10)}
        b = {"c1": rng.random(10), "c2": rng.random(10)}
        assert select_significant_categories(a, b, alpha=1.0) == {"c1", "c2"}

    def test_degenerate_variance_skipped(self, caplog):
        a = {"const": [1.0, 1.0, 1.0], "varies": [0.0, 1.0, 2.0, 5.0]}
        b = {"const": [2.0, 2.0, 2.0], "varies": [10.0, 11.0, 12.0, 13.0]}
        import logging

        with caplog.at_level(logging.WARNING):
            got = select_significant_categories(a, b, alpha=0.05)
        assert "const" not in got
        assert any("degenerate" in rec.message for rec in caplog.records)

    def test_bonferroni_default(self):
        # 10 categories: default alpha = 0.005; a category with p ~ 0.02
        # passes alpha=0.05 but not the Bonferroni default.
        rng = np.random.default_rng(8)
        a, b = {}, {}
        for i in range(10):
            a[f"c{i}"] = rng.normal(0.0, 1.0, 40)
            b[f"c{i}"] = rng.normal(0.0, 1.0, 40)
        a["weak"] = rng.normal(0.0, 1.0, 40)
        b["weak"] = a["weak"] + 0.55  # modest shift
        from fulfillkit.stats import welch_t_test

        p = welch_t_test(a["weak"], b["weak"])
        assert 0.05 / 11 < p < 0.05  # sanity: sits between the two thresholds
        assert "weak" not in select_significant_categories(a, b)
        assert "weak" in select_significant_categories(a, b, alpha=0.05)
