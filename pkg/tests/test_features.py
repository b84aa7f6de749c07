"""Feature extraction: time-point cutoffs, availability, hand-checked values."""

import math

import numpy as np
import pytest

from fulfillkit.clustering import ClusterModel, SemanticModel
from fulfillkit.corpus import CATEGORIES, Event, Project, Reward, build_corpus
from fulfillkit.embeddings import EmbeddingTable
from fulfillkit.errors import DataError, NumericError
from fulfillkit.features import (
    FeatureContext,
    FeatureMatrix,
    FeatureSpec,
    TimePoint,
    extract_features,
    extract_matrix,
    feature_schema,
    log1p_matrix,
    response_latency,
    temporal_slots,
)
from fulfillkit.synth import SynthConfig, generate_synthetic
from fulfillkit.text import CategoryDictionary, smog_score

DAY = 86400
LAUNCH = 100 * DAY
DEADLINE = 130 * DAY  # 30-day campaign


def count_semantic(k=6):
    """Semantic model over a 1-word vocabulary: a reward whose description
    holds c copies of "tok" lands in cluster c."""
    word_model = ClusterModel(k=1, centers=np.array([[0.0]]))
    reward_model = ClusterModel(k=k, centers=np.arange(k, dtype=float).reshape(k, 1))
    table = EmbeddingTable(vocab={"tok": 0}, vectors=np.array([[0.0]]))
    return SemanticModel(word_model=word_model, reward_model=reward_model), table


def make_project(
    pid="p1",
    rewards=None,
    category="games",
    goal=5000.0,
    images=3,
    faqs=2,
    bio="Two sentences here. Second one.",
    description="One line about the plan.",
):
    if rewards is None:
        rewards = (
            Reward("r1", "tok tok", 10.0, DEADLINE + 60 * DAY, 7),
            Reward("r2", "tok tok tok. tok tok tok", 25.0, DEADLINE + 100 * DAY, 3),
        )
    return Project(
        id=pid,
        category=category,
        goal=goal,
        pledged=goal * 1.5,
        launch_ts=LAUNCH,
        deadline_ts=DEADLINE,
        images_count=images,
        faqs_count=faqs,
        project_description=description,
        bio_description=bio,
        creator_backed_count=1,
        creator_created_count=0,
        successful=True,
        rewards=tuple(rewards),
    )


def make_context(**overrides):
    model, table = count_semantic()
    defaults = dict(
        semantic_model=model,
        embedding_table=table,
        stopwords=frozenset(),
        n_slots=20,
    )
    defaults.update(overrides)
    return FeatureContext(**defaults)


def ev(ts, role="backer", kind="comment", text="nice", author="b1"):
    return Event("p1", role, kind, ts, text, author_id=author)


class TestTimePoint:
    def test_parse(self):
        assert TimePoint.parse("tp3") is TimePoint.TP3
        assert TimePoint.parse("TP1") is TimePoint.TP1
        assert TimePoint.parse(TimePoint.TP2) is TimePoint.TP2
        with pytest.raises(DataError, match="time point"):
            TimePoint.parse("tp9")

    def test_cutoffs(self):
        project = make_project()
        assert TimePoint.TP1.cutoff(project) == LAUNCH
        assert TimePoint.TP2.cutoff(project) == LAUNCH + 15 * DAY
        assert TimePoint.TP3.cutoff(project) == DEADLINE
        # latest delivery estimate is deadline + 100 days
        assert TimePoint.TP4.cutoff(project) == DEADLINE + 0.05 * 100 * DAY

    def test_order(self):
        orders = [tp.order for tp in (TimePoint.TP1, TimePoint.TP2, TimePoint.TP3, TimePoint.TP4)]
        assert orders == [0, 1, 2, 3]


class TestSchema:
    def test_monotone_nesting(self):
        context = make_context()
        names = {tp: set(s.name for s in feature_schema(context, tp)) for tp in TimePoint}
        assert names[TimePoint.TP1] < names[TimePoint.TP2]
        assert names[TimePoint.TP2] == names[TimePoint.TP3]
        assert names[TimePoint.TP3] < names[TimePoint.TP4]

    def test_tp1_has_no_event_features(self):
        context = make_context()
        for spec in feature_schema(context, TimePoint.TP1):
            assert spec.availability is TimePoint.TP1

    def test_exempt_flags(self):
        context = make_context()
        flags = {s.name: s.log_transform for s in feature_schema(context, TimePoint.TP4)}
        assert not flags["cat_games"]
        assert not flags["smog_project"]
        assert flags["goal"]
        assert flags["comments"]

    def test_liwc_names_present_only_with_selection(self):
        dictionary = CategoryDictionary(categories=(("posemo", ("great",)),))
        context = make_context(liwc_dictionary=dictionary, liwc_categories=("posemo",))
        tp4_names = [s.name for s in feature_schema(context, TimePoint.TP4)]
        assert "liwc_updates_posemo" in tp4_names
        assert "liwc_comments_posemo" in tp4_names
        assert all("liwc" not in s.name for s in feature_schema(context, TimePoint.TP3))

    def test_unknown_category_rejected(self):
        dictionary = CategoryDictionary(categories=(("posemo", ("great",)),))
        with pytest.raises(DataError, match="not in dictionary"):
            make_context(liwc_dictionary=dictionary, liwc_categories=("negemo",))


class TestExtractTp1:
    def test_hand_values(self):
        project = make_project()
        vector = extract_features(project, (), make_context(), TimePoint.TP1)
        assert vector.get("images") == 3
        assert vector.get("faqs") == 2
        assert vector.get("goal") == 5000.0
        assert vector.get("n_rewards") == 2
        assert vector.get("cat_games") == 1.0
        assert sum(vector.get(f"cat_{c}") for c in CATEGORIES) == 1.0
        # reward text joins to "tok tok tok tok tok. tok tok tok" -> 2 sentences
        assert vector.get("reward_sentences") == 2
        assert vector.get("bio_sentences") == 2
        assert vector.get("fundraising_days") == 30.0
        assert vector.get("delivery_window_days") == 100.0
        assert vector.get("smog_bio") == pytest.approx(smog_score("Two sentences here. Second one."))

    def test_semantic_reward_count_mode_at_tp1(self):
        # rewards hold 2 and 6 tokens -> clusters 2 and 6 by reward count
        project = make_project(
            rewards=(
                Reward("r1", "tok tok", 10.0, DEADLINE + 10 * DAY, 50),
                Reward("r2", "tok tok tok tok tok tok", 25.0, DEADLINE + 10 * DAY, 9),
            )
        )
        model, table = count_semantic(k=8)
        context = make_context(semantic_model=model, embedding_table=table)
        vector = extract_features(project, (), context, TimePoint.TP1)
        assert vector.get("semantic_2") == 1.0
        assert vector.get("semantic_6") == 1.0
        assert vector.get("semantic_3") == 0.0

    def test_smog_missing_on_empty_bio(self):
        project = make_project(bio="")
        vector = extract_features(project, (), make_context(), TimePoint.TP1)
        assert math.isnan(vector.get("smog_bio"))
        assert vector.get("bio_sentences") == 0


class TestExtractEventFeatures:
    def test_zero_events_at_tp3(self):
        project = make_project()
        tp1 = extract_features(project, (), make_context(), TimePoint.TP1)
        tp3 = extract_features(project, (), make_context(), TimePoint.TP3)
        for name in ("comments", "updates", "creator_comments", "creator_updates"):
            assert tp3.get(name) == 0.0
        assert all(tp3.get(f"slot_{i}") == 0.0 for i in range(20))
        for spec in tp1.specs:
            if spec.name.startswith("semantic_"):
                continue  # weighting mode changes at TP3 by design
            assert tp3.get(spec.name) == pytest.approx(tp1.get(spec.name), nan_ok=True)

    def test_counts_by_role_and_kind(self):
        events = (
            ev(LAUNCH + 1 * DAY, "backer", "comment", author="b1"),
            ev(LAUNCH + 2 * DAY, "backer", "comment", author="b2"),
            ev(LAUNCH + 3 * DAY, "creator", "comment", author=""),
            ev(LAUNCH + 4 * DAY, "creator", "update", author=""),
        )
        vector = extract_features(make_project(), events, make_context(), TimePoint.TP3)
        assert vector.get("comments") == 3.0
        assert vector.get("updates") == 1.0
        assert vector.get("creator_comments") == 1.0
        assert vector.get("creator_updates") == 1.0
        assert vector.get("backers") == 10.0  # reward backer counts 7 + 3

    def test_tp2_backers_are_distinct_commenting_authors(self):
        events = (
            ev(LAUNCH + 1 * DAY, author="b1"),
            ev(LAUNCH + 2 * DAY, author="b1"),
            ev(LAUNCH + 3 * DAY, author="b2"),
            ev(LAUNCH + 20 * DAY, author="b9"),  # after TP2 cutoff
        )
        vector = extract_features(make_project(), events, make_context(), TimePoint.TP2)
        assert vector.get("backers") == 2.0
        assert vector.get("comments") == 3.0

    def test_midpoint_cutoff_hides_later_events(self):
        events = (
            ev(LAUNCH + 1 * DAY),
            ev(LAUNCH + 16 * DAY),
            ev(LAUNCH + 29 * DAY),
        )
        tp2 = extract_features(make_project(), events, make_context(), TimePoint.TP2)
        tp3 = extract_features(make_project(), events, make_context(), TimePoint.TP3)
        assert tp2.get("comments") == 1.0
        assert tp3.get("comments") == 3.0

    def test_fundraising_counts_frozen_at_tp4(self):
        events = (
            ev(LAUNCH + 1 * DAY),
            ev(DEADLINE + 1 * DAY),  # within TP4 window (cutoff is +5 days)
        )
        tp3 = extract_features(make_project(), events, make_context(), TimePoint.TP3)
        tp4 = extract_features(make_project(), events, make_context(), TimePoint.TP4)
        assert tp4.get("comments") == tp3.get("comments") == 1.0
        assert tp4.get("backer_comments_tp4") == 2.0

    def test_unsorted_events_rejected(self):
        events = (ev(LAUNCH + 2 * DAY), ev(LAUNCH + 1 * DAY))
        with pytest.raises(DataError, match="sorted"):
            extract_features(make_project(), events, make_context(), TimePoint.TP3)

    def test_pure_function(self):
        events = (ev(LAUNCH + 1 * DAY), ev(LAUNCH + 2 * DAY, "creator", "update"))
        a = extract_features(make_project(), events, make_context(), TimePoint.TP4)
        b = extract_features(make_project(), events, make_context(), TimePoint.TP4)
        assert np.array_equal(a.values, b.values, equal_nan=True)


class TestTemporalSlots:
    def test_day_three_lands_in_slot_two(self):
        # 30-day campaign, 20 slots -> slot width 1.5 days
        events = (ev(LAUNCH + 3 * DAY),)
        slots = temporal_slots(events, LAUNCH, DEADLINE, DEADLINE, 20)
        assert slots[2] == 1
        assert slots.sum() == 1

    def test_no_comments_all_zero(self):
        slots = temporal_slots((), LAUNCH, DEADLINE, DEADLINE, 20)
        assert not slots.any()

    def test_midpoint_cutoff_zeroes_back_half(self):
        events = tuple(ev(LAUNCH + d * DAY) for d in (1, 5, 14, 16, 20, 29))
        slots = temporal_slots(events, LAUNCH, DEADLINE, LAUNCH + 15 * DAY, 20)
        assert slots[10:].sum() == 0
        assert slots.sum() == 3

    def test_sum_bounded_by_comment_count(self):
        events = tuple(ev(LAUNCH + d * DAY) for d in (0, 1, 2, 10, 29.9))
        updates = (ev(LAUNCH + 3 * DAY, "creator", "update"),)
        slots = temporal_slots(events + updates, LAUNCH, DEADLINE, DEADLINE, 20)
        assert slots.sum() == 5  # updates not counted, all comments inside span

    def test_bad_span(self):
        with pytest.raises(DataError, match="deadline"):
            temporal_slots((), LAUNCH, LAUNCH, LAUNCH, 20)


class TestResponseLatency:
    def test_single_pair(self):
        events = (
            ev(1000.0, text="when does it ship?"),
            ev(1000.0 + 3600.0, "creator", "comment", text="next week"),
        )
        assert response_latency(events) == 3600.0

    def test_unanswered_is_missing(self):
        events = (
            ev(1000.0, "creator", "comment", text="hello all"),
            ev(2000.0, text="any update?"),
        )
        assert math.isnan(response_latency(events))

    def test_mean_of_two(self):
        events = (
            ev(0.0, text="size?"),
            ev(100.0, "creator", "comment", text="large"),
            ev(500.0, text="color?"),
            ev(800.0, "creator", "comment", text="blue"),
        )
        assert response_latency(events) == 200.0

    def test_non_questions_ignored(self):
        events = (
            ev(0.0, text="love this"),
            ev(50.0, "creator", "comment", text="thanks"),
        )
        assert math.isnan(response_latency(events))


class TestTp4Features:
    def test_update_interval_hand_mean(self):
        ts = [LAUNCH + d * DAY for d in (1, 4, 5, 11)]  # gaps 3, 1, 6 days
        events = tuple(ev(t, "creator", "update", text="news") for t in ts)
        vector = extract_features(make_project(), events, make_context(), TimePoint.TP4)
        assert vector.get("update_interval_avg") == pytest.approx((3 + 1 + 6) / 3 * DAY)

    def test_single_update_interval_missing(self):
        events = (ev(LAUNCH + DAY, "creator", "update"),)
        vector = extract_features(make_project(), events, make_context(), TimePoint.TP4)
        assert math.isnan(vector.get("update_interval_avg"))

    def test_window_counts_exclude_fundraising(self):
        events = (
            ev(LAUNCH + 2 * DAY, "creator", "update"),
            ev(DEADLINE + 1 * DAY, "creator", "update"),
            ev(DEADLINE + 2 * DAY, "creator", "comment"),
            # TP4 cutoff is deadline + 5 days; this one is out of range
            ev(DEADLINE + 30 * DAY, "creator", "update"),
        )
        vector = extract_features(make_project(), events, make_context(), TimePoint.TP4)
        assert vector.get("creator_updates_tp4") == 1.0
        assert vector.get("creator_comments_tp4") == 1.0
        assert vector.get("updates") == 1.0

    def test_backer_question_counts(self):
        events = (
            ev(LAUNCH + 1 * DAY, text="when?", author="b1"),
            ev(DEADLINE + 1 * DAY, text="still waiting?", author="b1"),
            ev(DEADLINE + 2 * DAY, text="looks great", author="b2"),
        )
        vector = extract_features(make_project(), events, make_context(), TimePoint.TP4)
        assert vector.get("backer_comments_tp4") == 3.0
        assert vector.get("commenting_backers_tp4") == 2.0
        assert vector.get("backer_questions_tp4") == 2.0

    def test_liwc_proportions(self):
        dictionary = CategoryDictionary(
            categories=(("fulfill", ("ship*",)), ("delay", ("delay*", "sorry")))
        )
        context = make_context(liwc_dictionary=dictionary, liwc_categories=("fulfill", "delay"))
        events = (
            ev(DEADLINE + 1 * DAY, "creator", "update", text="sorry delays again"),
            ev(DEADLINE + 2 * DAY, "creator", "update", text="shipping now"),
            ev(DEADLINE + 3 * DAY, "backer", "comment", text="shipped fast"),
        )
        vector = extract_features(make_project(), events, context, TimePoint.TP4)
        # update tokens: sorry delays again shipping now -> 1 fulfill, 2 delay over 5
        assert vector.get("liwc_updates_fulfill") == pytest.approx(1 / 5)
        assert vector.get("liwc_updates_delay") == pytest.approx(2 / 5)
        # comment tokens: shipped fast -> 1 fulfill over 2
        assert vector.get("liwc_comments_fulfill") == pytest.approx(1 / 2)
        assert vector.get("liwc_comments_delay") == 0.0

    def test_semantic_mode_switches_to_backers(self):
        project = make_project(
            rewards=(
                Reward("r1", "tok tok", 10.0, DEADLINE + 10 * DAY, 50),
                Reward("r2", "tok tok tok", 25.0, DEADLINE + 10 * DAY, 9),
            )
        )
        model, table = count_semantic(k=8)
        context = make_context(semantic_model=model, embedding_table=table)
        tp2 = extract_features(project, (), context, TimePoint.TP2)
        tp3 = extract_features(project, (), context, TimePoint.TP3)
        assert tp2.get("semantic_2") == 1.0 and tp2.get("semantic_3") == 1.0
        assert tp3.get("semantic_2") == 50.0 and tp3.get("semantic_3") == 9.0


class TestMatrix:
    def test_extract_matrix_rows_match_vectors(self):
        config = SynthConfig(n_projects=6)
        corpus, _ = generate_synthetic(config, seed=7)
        model, table = count_semantic()
        context = make_context(semantic_model=model, embedding_table=table)
        matrix = extract_matrix(corpus, context, TimePoint.TP3)
        assert matrix.ids == tuple(sorted(corpus.projects))
        assert matrix.values.shape == (6, len(matrix.specs))
        pid = matrix.ids[2]
        vector = extract_features(
            corpus.projects[pid], corpus.events_for(pid), context, TimePoint.TP3
        )
        assert np.array_equal(matrix.values[2], vector.values, equal_nan=True)

    def test_unknown_id(self):
        config = SynthConfig(n_projects=3)
        corpus, _ = generate_synthetic(config, seed=7)
        with pytest.raises(DataError, match="unknown project"):
            extract_matrix(corpus, make_context(), TimePoint.TP1, ids=["nope"])

    def test_event_counts_monotone_on_synth(self):
        config = SynthConfig(n_projects=12)
        corpus, _ = generate_synthetic(config, seed=3)
        model, table = count_semantic()
        context = make_context(semantic_model=model, embedding_table=table)
        count_names = ["backers", "comments", "updates", "creator_comments", "creator_updates"]
        count_names += [f"slot_{i}" for i in range(20)]
        tps = [TimePoint.TP2, TimePoint.TP3, TimePoint.TP4]
        matrices = {tp: extract_matrix(corpus, context, tp) for tp in tps}
        for earlier, later in zip(tps, tps[1:]):
            for name in count_names:
                a = matrices[earlier].column(name)
                b = matrices[later].column(name)
                assert (b >= a).all(), name


class TestLog1p:
    def build_matrix(self, values, log_flags):
        specs = tuple(
            FeatureSpec(f"f{i}", TimePoint.TP1, log_transform=flag)
            for i, flag in enumerate(log_flags)
        )
        ids = tuple(f"p{i}" for i in range(len(values)))
        return FeatureMatrix(
            ids=ids, specs=specs, values=np.array(values, dtype=float), tp=TimePoint.TP1
        )

    def test_values(self):
        matrix = self.build_matrix([[0.0, math.e - 1.0]], [True, True])
        out = log1p_matrix(matrix)
        assert out.values[0, 0] == 0.0
        assert out.values[0, 1] == pytest.approx(1.0)

    def test_exempt_column_untouched(self):
        matrix = self.build_matrix([[5.0, 5.0]], [True, False])
        out = log1p_matrix(matrix)
        assert out.values[0, 1] == 5.0
        assert out.values[0, 0] == pytest.approx(math.log(6.0))

    def test_double_application_rejected(self):
        matrix = self.build_matrix([[1.0]], [True])
        once = log1p_matrix(matrix)
        with pytest.raises(DataError, match="already"):
            log1p_matrix(once)

    def test_negative_in_flagged_column(self):
        matrix = self.build_matrix([[-0.5]], [True])
        with pytest.raises(NumericError, match="negative"):
            log1p_matrix(matrix)

    def test_negative_in_exempt_column_fine(self):
        matrix = self.build_matrix([[-0.5]], [False])
        assert log1p_matrix(matrix).values[0, 0] == -0.5

    def test_nan_propagates(self):
        matrix = self.build_matrix([[float("nan")]], [True])
        assert math.isnan(log1p_matrix(matrix).values[0, 0])
