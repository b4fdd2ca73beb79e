"""Feature construction: tokenization, embeddings, connectivity, activity, statistics."""

import math

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings, strategies as st

from sompsnet import (
    EmbeddingTable,
    EngagementKind,
    IneligibleAtCutoffError,
    NotFittedError,
    PnsEncoders,
    SizingParams,
    build_connectivity_matrix,
    build_pns_vector,
    build_user_activity_matrix,
    compute_sizing,
    connectivity_score,
    embed_engagements,
    featurize_article,
    tokenize,
)
from sompsnet.featurize import (
    UAM_WIDTH,
    average_posts_per_day,
    lower_median,
    max_posts_single_day,
    select_engaging_users,
    windowed_engagements,
)

from conftest import make_article, make_corpus, make_engagement, make_user


class TestTokenize:
    def test_lowercase_and_punctuation(self):
        assert tokenize("Shocking NEWS: cure-all!") == ["shocking", "news", "cure", "all"]

    def test_urls_stripped(self):
        assert tokenize("check https://t.co/abc123 now") == ["check", "now"]
        assert tokenize("see www.example.com/page today") == ["see", "today"]

    def test_empty_text(self):
        assert tokenize("") == []
        assert tokenize("   ") == []


class TestLowerMedian:
    def test_odd_length(self):
        assert lower_median([1, 2, 3]) == 2

    def test_even_length_takes_lower_middle(self):
        values = [2, 4, 6, 8]
        assert lower_median(values) == 4
        # sort-and-index oracle
        assert lower_median(values) == sorted(values)[(len(values) - 1) // 2]

    @given(st.lists(st.integers(0, 100), min_size=1, max_size=30))
    def test_matches_sort_index_oracle(self, values):
        assert lower_median(values) == sorted(values)[(len(values) - 1) // 2]

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            lower_median([])


class TestComputeSizing:
    def _corpus(self, tweet_user_counts, words_per_tweet=3):
        news, engagements, users = [], [], []
        eid = 0
        for a, count in enumerate(tweet_user_counts):
            news_id = f"n{a}"
            news.append(make_article(news_id))
            for u in range(count):
                uid = f"u{a}_{u}"
                users.append(make_user(uid))
                engagements.append(
                    make_engagement(
                        f"e{eid}", news_id, "tweet", uid, u, text=" ".join(["w"] * words_per_tweet)
                    )
                )
                eid += 1
            users.append(make_user(f"r{a}"))
            engagements.append(make_engagement(f"e{eid}", news_id, "retweet", f"r{a}", 10))
            eid += 1
        return make_corpus(news, engagements, users)

    def test_odd_median(self):
        sizing = compute_sizing(self._corpus([1, 2, 3]))
        assert sizing.tweet_users == 2

    def test_even_median_lower_middle(self):
        sizing = compute_sizing(self._corpus([2, 4, 6, 8]))
        assert sizing.tweet_users == 4

    def test_seq_len_is_tweet_token_median(self):
        sizing = compute_sizing(self._corpus([2, 2], words_per_tweet=5))
        assert sizing.seq_len == 5

    def test_clamped_to_one(self):
        corpus = self._corpus([1])
        sizing = compute_sizing(corpus)
        assert sizing.retweet_users == 1

    def test_empty_corpus_rejected(self):
        empty = make_corpus([], [], [])
        with pytest.raises(ValueError):
            compute_sizing(empty)


class TestEmbedEngagements:
    def _table(self):
        return EmbeddingTable({"a": [1.0, 0.0], "b": [0.0, 2.0]})

    def test_all_oov_is_zero(self):
        out = embed_engagements(["zzz yyy xxx"], self._table(), m=4)
        npt.assert_array_equal(out, np.zeros((4, 2)))

    def test_identical_texts_equal_single(self):
        table = self._table()
        one = embed_engagements(["a b"], table, m=3)
        many = embed_engagements(["a b"] * 5, table, m=3)
        npt.assert_allclose(many, one)

    def test_hand_average(self):
        # texts {"a b", "a"}: sequences [[1,0],[0,2]] and [[1,0],[0,0]], mean
        out = embed_engagements(["a b", "a"], self._table(), m=2)
        npt.assert_allclose(out, [[1.0, 0.0], [0.0, 1.0]])

    def test_truncation(self):
        out = embed_engagements(["a a a a a"], self._table(), m=2)
        npt.assert_allclose(out, [[1.0, 0.0], [1.0, 0.0]])

    def test_empty_text_pads(self):
        out = embed_engagements([""], self._table(), m=2)
        npt.assert_array_equal(out, np.zeros((2, 2)))

    def test_empty_list_rejected(self):
        with pytest.raises(ValueError):
            embed_engagements([], self._table(), m=2)

    @given(
        st.lists(
            st.text(alphabet="ab ", min_size=0, max_size=8), min_size=1, max_size=6
        ),
        st.randoms(use_true_random=False),
    )
    def test_permutation_invariant(self, texts, rnd):
        table = self._table()
        shuffled = list(texts)
        rnd.shuffle(shuffled)
        npt.assert_allclose(
            embed_engagements(texts, table, m=4),
            embed_engagements(shuffled, table, m=4),
            atol=1e-12,
        )


def brute_force_connectivity(fx, fy, gx, gy):
    """Element-by-element re-derivation over the id universe (oracle)."""
    universe = set(fx) | set(fy) | set(gx) | set(gy)
    numerator = sum(
        1 for u in universe if (u in fx and u in fy) or (u in gx and u in gy)
    )
    denominator = sum(1 for u in universe if u in fx or u in fy or u in gx or u in gy)
    return numerator / denominator if denominator else 0.0


id_sets = st.sets(st.integers(0, 30).map(str), max_size=20)


class TestConnectivityScore:
    def test_identical_networks(self):
        x = make_user("x", followers={"1", "2"}, following={"3"})
        y = make_user("y", followers={"1", "2"}, following={"3"})
        assert connectivity_score(x, y) == 1.0

    def test_disjoint_networks(self):
        x = make_user("x", followers={"1"}, following={"2"})
        y = make_user("y", followers={"3"}, following={"4"})
        assert connectivity_score(x, y) == 0.0

    def test_hand_example(self):
        x = make_user("x", followers={"1", "2"}, following={"4"})
        y = make_user("y", followers={"2", "3"}, following={"4", "5"})
        assert connectivity_score(x, y) == pytest.approx(0.4)

    def test_empty_networks_zero(self):
        assert connectivity_score(make_user("x"), make_user("y")) == 0.0

    @given(id_sets, id_sets, id_sets, id_sets)
    def test_matches_brute_force_oracle(self, fx, fy, gx, gy):
        x = make_user("x", followers=fx, following=gx)
        y = make_user("y", followers=fy, following=gy)
        assert connectivity_score(x, y) == brute_force_connectivity(fx, fy, gx, gy)

    @given(id_sets, id_sets, id_sets, id_sets)
    def test_symmetric_and_bounded(self, fx, fy, gx, gy):
        x = make_user("x", followers=fx, following=gx)
        y = make_user("y", followers=fy, following=gy)
        s = connectivity_score(x, y)
        assert s == connectivity_score(y, x)
        assert 0.0 <= s <= 1.0

    @given(id_sets, id_sets)
    def test_self_score_one_when_network_nonempty(self, fx, gx):
        x = make_user("x", followers=fx, following=gx)
        expected = 1.0 if (fx or gx) else 0.0
        assert connectivity_score(x, x) == expected


class TestConnectivityMatrix:
    def test_single_user_zero_matrix(self):
        matrix = build_connectivity_matrix([make_user("x", followers={"1"})], k=4)
        npt.assert_array_equal(matrix, np.zeros((4, 4)))

    def test_two_users_symmetric(self):
        x = make_user("x", followers={"1", "2"})
        y = make_user("y", followers={"2", "3"})
        matrix = build_connectivity_matrix([x, y], k=3)
        score = connectivity_score(x, y)
        assert matrix[0, 1] == matrix[1, 0] == score
        assert matrix[0, 0] == matrix[1, 1] == 0.0

    def test_three_users_match_pairwise_oracle(self):
        users = [
            make_user("a", followers={"1", "2"}, following={"9"}),
            make_user("b", followers={"2", "3"}, following={"9", "8"}),
            make_user("c", followers={"4"}, following={"8"}),
        ]
        matrix = build_connectivity_matrix(users, k=3)
        for i in range(3):
            for j in range(3):
                expected = 0.0 if i == j else connectivity_score(users[i], users[j])
                assert matrix[i, j] == expected

    def test_too_many_users_rejected(self):
        users = [make_user(f"u{i}") for i in range(3)]
        with pytest.raises(ValueError):
            build_connectivity_matrix(users, k=2)


class TestSelectEngagingUsers:
    def test_first_k_distinct_in_time_order(self):
        engagements = [
            make_engagement("e1", "n", "tweet", "u1", 0),
            make_engagement("e2", "n", "tweet", "u2", 1),
            make_engagement("e3", "n", "tweet", "u1", 2),  # repeat engager
            make_engagement("e4", "n", "tweet", "u3", 3),
            make_engagement("e5", "n", "retweet", "u9", 0.5),
        ]
        assert select_engaging_users(engagements, EngagementKind.TWEET, k=2) == ["u1", "u2"]
        assert select_engaging_users(engagements, EngagementKind.TWEET, k=9) == ["u1", "u2", "u3"]
        assert select_engaging_users(engagements, EngagementKind.RETWEET, k=9) == ["u9"]


class TestUserActivityMatrix:
    def test_brand_new_account_conventions(self):
        user = make_user("u1", created_days_ago=0)
        engagements = [make_engagement("e1", "n", "tweet", "u1", 0)]
        matrix = build_user_activity_matrix([user], engagements, EngagementKind.TWEET, k=2)
        row = matrix[0]
        assert row[11] == 0.0  # average posts per day
        assert row[12] == 0.0  # max posts on a single day
        assert row[13] == 0.0  # days since creation

    def test_average_posts_per_day_oracle(self):
        # 20 posts spanning exactly 10 days -> 20 / ceil(10) = 2.0
        offsets = np.linspace(0, 10, 20)
        user = make_user("u1", post_day_offsets=offsets)
        span = (max(offsets) - min(offsets))
        assert average_posts_per_day(user) == len(offsets) / math.ceil(span) == 2.0

    def test_max_posts_single_day(self):
        user = make_user("u1", post_day_offsets=[0.1, 0.2, 0.3, 1.5, 2.7])
        assert max_posts_single_day(user) == 3

    def test_article_tweet_count_column(self):
        user = make_user("u1", created_days_ago=10)
        engagements = [
            make_engagement(f"e{i}", "n", "tweet", "u1", i) for i in range(3)
        ]
        matrix = build_user_activity_matrix([user], engagements, EngagementKind.TWEET, k=1)
        assert matrix[0, -1] == 3.0

    def test_retweet_delay_column(self):
        user = make_user("u1", created_days_ago=10)
        engagements = [
            make_engagement("e1", "n", "tweet", "u2", 0),
            make_engagement("e2", "n", "retweet", "u1", 6),
        ]
        matrix = build_user_activity_matrix([user], engagements, EngagementKind.RETWEET, k=1)
        assert matrix[0, -1] == 6.0

    def test_flags_and_counts_placement(self):
        user = make_user(
            "u1",
            created_days_ago=2,
            protected=True,
            verified=True,
            default_profile_image=True,
            default_profile_ui=False,
            geo_enabled=False,
            description_word_count=7,
            username_word_count=2,
            favourites_count=11,
            friends_count=22,
            followers_count=33,
            listed_count=44,
        )
        engagements = [make_engagement("e1", "n", "tweet", "u1", 0)]
        row = build_user_activity_matrix([user], engagements, EngagementKind.TWEET, k=1)[0]
        assert row[:5].tolist() == [1.0, 1.0, 1.0, 0.0, 0.0]
        assert row[5:11].tolist() == [7.0, 2.0, 11.0, 22.0, 33.0, 44.0]
        assert row[13] == pytest.approx(2.0)

    def test_padding_rows_zero(self):
        user = make_user("u1", verified=True, followers_count=5)
        engagements = [make_engagement("e1", "n", "tweet", "u1", 0)]
        matrix = build_user_activity_matrix([user], engagements, EngagementKind.TWEET, k=4)
        npt.assert_array_equal(matrix[1:], np.zeros((3, UAM_WIDTH)))


class TestPnsVector:
    def _encoders(self):
        articles = [
            make_article("t1", rating=4, publisher="pub-a", tags=("nutrition",)),
            make_article("t2", rating=2, publisher="pub-b", tags=("detox",)),
            make_article("t3", rating=5, publisher="pub-a", tags=("nutrition", "cardio")),
        ]
        return PnsEncoders.fit(articles, top_tags=2, top_publishers=2)

    def test_counts_and_likes_oracle(self):
        likes = [3, 0, 1, 0, 0, 2, 0, 0]
        kinds = ["tweet"] * 5 + ["retweet"] * 2 + ["reply"]
        engagements = [
            make_engagement(f"e{i}", "n", kind, "u1", i, like_count=likes[i])
            for i, kind in enumerate(kinds)
        ]
        vector = build_pns_vector(make_article("n"), engagements, self._encoders())
        assert vector[0] == 5.0 and vector[1] == 2.0 and vector[2] == 1.0
        assert vector[4] == sum(likes) == 6.0

    def test_lifetime_zero_when_simultaneous(self):
        engagements = [
            make_engagement("e1", "n", "tweet", "u1", 5.0),
            make_engagement("e2", "n", "retweet", "u1", 5.0),
        ]
        vector = build_pns_vector(make_article("n"), engagements, self._encoders())
        assert vector[6] == 0.0

    def test_lifetime_span(self):
        engagements = [
            make_engagement("e1", "n", "tweet", "u1", 0),
            make_engagement("e2", "n", "reply", "u1", 48),
        ]
        vector = build_pns_vector(make_article("n"), engagements, self._encoders())
        assert vector[6] == pytest.approx(2.0)

    def test_unique_hashtags_and_mentions(self):
        engagements = [
            make_engagement("e1", "n", "tweet", "u1", 0, hashtags=("#a", "#b"),
                            mentioned_user_ids=("m1",)),
            make_engagement("e2", "n", "tweet", "u1", 1, hashtags=("#b",),
                            mentioned_user_ids=("m1", "m2")),
        ]
        vector = build_pns_vector(make_article("n"), engagements, self._encoders())
        assert vector[3] == 2.0  # unique hashtags
        assert vector[5] == 2.0  # unique mentions

    def test_known_publisher_mean_rating(self):
        encoders = self._encoders()
        vector = build_pns_vector(
            make_article("n", publisher="pub-a"), [make_engagement("e1", "n", "tweet", "u1", 0)], encoders
        )
        assert vector[-1] == pytest.approx(4.5)  # mean of ratings 4 and 5

    def test_unseen_publisher_falls_back_to_global_mean(self):
        encoders = self._encoders()
        vector = build_pns_vector(
            make_article("n", publisher="brand-new"), [make_engagement("e1", "n", "tweet", "u1", 0)], encoders
        )
        assert vector[-1] == pytest.approx((4 + 2 + 5) / 3)

    def test_tag_and_publisher_buckets(self):
        encoders = self._encoders()
        assert encoders.tag_vocab == ("nutrition", "cardio") or encoders.tag_vocab == ("nutrition", "detox")
        vector = build_pns_vector(
            make_article("n", publisher="pub-a", tags=("nutrition", "unheard-of")),
            [make_engagement("e1", "n", "tweet", "u1", 0)],
            encoders,
        )
        tag_block = vector[7 : 7 + len(encoders.tag_vocab) + 1]
        assert tag_block[0] == 1.0  # nutrition
        assert tag_block[-1] == 1.0  # "other" bucket
        pub_block = vector[7 + len(encoders.tag_vocab) + 1 : -1]
        assert pub_block.sum() == 1.0

    def test_unfitted_encoders_rejected(self):
        with pytest.raises(NotFittedError):
            build_pns_vector(make_article("n"), [], None)

    def test_dim_matches_layout(self):
        encoders = self._encoders()
        vector = build_pns_vector(
            make_article("n"), [make_engagement("e1", "n", "tweet", "u1", 0)], encoders
        )
        assert vector.shape == (encoders.dim,)


class TestFeaturizeArticle:
    def _corpus(self):
        users = [
            make_user("u1", followers={"1", "2"}, created_days_ago=100,
                      post_day_offsets=[-5, -4, -3]),
            make_user("u2", followers={"2", "3"}, created_days_ago=50,
                      post_day_offsets=[-2, -1]),
            make_user("u3", followers={"9"}, created_days_ago=10),
        ]
        news = [make_article("n1", rating=4, publisher="pub-a", tags=("nutrition",))]
        engagements = [
            make_engagement("e1", "n1", "tweet", "u1", 0, text="study finds results"),
            make_engagement("e2", "n1", "tweet", "u2", 2, text="data analysis"),
            make_engagement("e3", "n1", "retweet", "u3", 8, text="study finds results"),
            make_engagement("e4", "n1", "reply", "u3", 9, text="interesting"),
        ]
        return make_corpus(news, engagements, users)

    def _setup(self):
        corpus = self._corpus()
        sizing = SizingParams(tweet_users=3, retweet_users=2, seq_len=3)
        table = EmbeddingTable.from_tokens(
            ["study", "finds", "results", "data", "analysis"], dim=4, seed=0
        )
        encoders = PnsEncoders.fit(list(corpus.news))
        return corpus, sizing, table, encoders

    def test_no_cutoff_equals_huge_cutoff(self):
        corpus, sizing, table, encoders = self._setup()
        article = corpus.news[0]
        uncut = featurize_article(article, corpus, sizing, table, encoders, None)
        windowed = featurize_article(article, corpus, sizing, table, encoders, 1e6)
        for name in ("emb_tweets", "emb_retweets", "adj_tweets", "adj_retweets",
                     "uam_tweets", "uam_retweets", "pns"):
            npt.assert_array_equal(getattr(uncut, name), getattr(windowed, name))

    def test_cutoff_empties_retweet_branch(self):
        corpus, sizing, table, encoders = self._setup()
        article = corpus.news[0]
        feats = featurize_article(article, corpus, sizing, table, encoders, 4.0)
        assert feats.valid_retweet_users == 0
        npt.assert_array_equal(feats.adj_retweets, 0.0)
        npt.assert_array_equal(feats.uam_retweets, 0.0)
        npt.assert_array_equal(feats.emb_retweets, 0.0)
        assert feats.valid_tweet_users == 2

    def test_cutoff_shrinks_pns_counts(self):
        corpus, sizing, table, encoders = self._setup()
        article = corpus.news[0]
        narrow = featurize_article(article, corpus, sizing, table, encoders, 1.0)
        wide = featurize_article(article, corpus, sizing, table, encoders, None)
        assert narrow.pns[0] == 1.0 and wide.pns[0] == 2.0
        assert narrow.pns[2] == 0.0 and wide.pns[2] == 1.0

    def test_article_without_tweets_is_ineligible(self):
        users = [make_user("u1")]
        news = [make_article("n1")]
        engagements = [make_engagement("e1", "n1", "retweet", "u1", 0)]
        corpus = make_corpus(news, engagements, users)
        sizing = SizingParams(1, 1, 2)
        table = EmbeddingTable.from_tokens(["x"], dim=2)
        encoders = PnsEncoders.fit(news)
        with pytest.raises(IneligibleAtCutoffError):
            featurize_article(news[0], corpus, sizing, table, encoders, 4.0)

    def test_window_nesting(self):
        corpus, _, _, _ = self._setup()
        for c1, c2 in [(1.0, 2.0), (2.0, 8.0), (8.0, None)]:
            inner = {e.engagement_id for e in windowed_engagements(corpus, "n1", c1)}
            outer = {e.engagement_id for e in windowed_engagements(corpus, "n1", c2)}
            assert inner <= outer

    def test_static_shapes(self, synth_corpus, synth_table):
        sizing = SizingParams(tweet_users=5, retweet_users=3, seq_len=4)
        encoders = PnsEncoders.fit(list(synth_corpus.news))
        for article in synth_corpus.news[:10]:
            feats = featurize_article(article, synth_corpus, sizing, synth_table, encoders)
            assert feats.adj_tweets.shape == (5, 5)
            assert feats.adj_retweets.shape == (3, 3)
            assert feats.uam_tweets.shape == (5, UAM_WIDTH)
            assert feats.emb_tweets.shape == (4, synth_table.dim)
            assert feats.pns.shape == (encoders.dim,)
            feats.validate()
