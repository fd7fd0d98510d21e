import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stagelayout.errors import ProviderError, SchemaError
from stagelayout.retrieval import (
    AssetRecord,
    ScoredAsset,
    StubProvider,
    candidate_set,
    dump_index,
    load_index,
    score_assets,
    select_asset,
)
from stagelayout.synth import random_asset_index

UNIT = np.eye(4)[0]


def test_combined_score_is_sum():
    class P:
        def text_image_score(self, q, e):
            return 20.0

        def text_text_score(self, q, n):
            return 10.0

    [s] = score_assets("chair", [AssetRecord("A", "chair", (1, 1, 1), UNIT)], P())
    assert (s.score, s.image_score, s.text_score) == (30.0, 20.0, 10.0)


def test_weights_are_applied():
    class P:
        def text_image_score(self, q, e):
            return 20.0

        def text_text_score(self, q, n):
            return 10.0

    [s] = score_assets("chair", [AssetRecord("A", "chair", (1, 1, 1), UNIT)], P(), weights=(0.5, 2.0))
    assert s.score == 30.0 and s.image_score == 20.0


def test_ties_broken_by_asset_id():
    class P:
        def text_image_score(self, q, e):
            return 5.0

        def text_text_score(self, q, n):
            return 1.0

    idx = [AssetRecord(a, "x", (1, 1, 1), UNIT) for a in ("b", "c", "a")]
    assert [s.asset_id for s in score_assets("q", idx, P())] == ["a", "b", "c"]


def test_provider_error_names_asset():
    idx = [AssetRecord("bad", "x", (1, 1, 1), np.eye(3)[0])]
    with pytest.raises(ProviderError, match="bad"):
        score_assets("q", idx, StubProvider(dim=16))


def test_ranking_matches_naive_resort():
    idx = random_asset_index(3, 1000)
    p = StubProvider()
    got = score_assets("a carved oak wardrobe", idx, p)
    naive = []
    for rec in idx:
        score = p.text_image_score("a carved oak wardrobe", rec.image_embedding) + p.text_text_score(
            "a carved oak wardrobe", rec.name
        )
        naive.append((score, rec.asset_id))
    naive.sort(key=lambda t: t[1])
    naive.sort(key=lambda t: t[0], reverse=True)
    assert [s.asset_id for s in got] == [aid for _, aid in naive]


def test_selection_example_golden():
    scored = [("A", 30.0), ("B", 28.0), ("C", 26.0)]
    assert candidate_set(scored, 27) == ["A", "B"]
    picks = {select_asset(scored, 27, 10, seed=42) for _ in range(20)}
    assert picks == {"A"}


def test_nothing_above_threshold():
    assert select_asset([("A", 26.9), ("B", 3.0)], 27, 10, seed=1) is None


def test_top_k_cap():
    scored = [(f"a{i:02d}", 50.0 - i) for i in range(15)]
    assert candidate_set(scored, 27, 10) == [f"a{i:02d}" for i in range(10)]


def test_image_gate_uses_image_score():
    scored = [ScoredAsset("A", 40.0, 20.0, 20.0), ScoredAsset("B", 30.0, 28.0, 2.0)]
    assert candidate_set(scored, 27, threshold_target="image") == ["B"]
    assert candidate_set(scored, 27, threshold_target="combined") == ["A", "B"]
    with pytest.raises(ValueError):
        candidate_set(scored, 27, threshold_target="text")


@given(
    st.lists(st.floats(-50, 80, allow_nan=False), min_size=1, max_size=30),
    st.floats(-50, 80),
    st.floats(0, 40),
    st.integers(1, 15),
)
@settings(max_examples=200, deadline=None)
def test_raising_threshold_never_enlarges(scores, t, dt, k):
    scored = sorted(((f"a{i:03d}", s) for i, s in enumerate(scores)), key=lambda p: (-p[1], p[0]))
    low = set(candidate_set(scored, t, k))
    high = set(candidate_set(scored, t + dt, k))
    assert high <= low


@given(st.lists(st.floats(-50, 80, allow_nan=False), min_size=1, max_size=30), st.integers(0, 2**32))
@settings(max_examples=100, deadline=None)
def test_selection_is_pure(scores, seed):
    scored = sorted(((f"a{i:03d}", s) for i, s in enumerate(scores)), key=lambda p: (-p[1], p[0]))
    assert select_asset(scored, 0, 10, seed) == select_asset(list(scored), 0, 10, seed)


def test_uniform_over_seeds():
    scored = [(f"a{i}", float(i)) for i in range(10)]
    counts = Counter(select_asset(scored, -math.inf, len(scored), seed) for seed in range(20_000))
    assert set(counts) == {a for a, _ in scored}
    mean = 20_000 / 10
    sd = math.sqrt(20_000 * 0.1 * 0.9)
    assert all(abs(c - mean) <= 3 * sd for c in counts.values())


def test_index_round_trip():
    idx = random_asset_index(1, 25)
    text = dump_index(idx)
    back = load_index(text)
    assert [r.asset_id for r in back] == [r.asset_id for r in idx]
    for a, b in zip(idx, back):
        assert np.array_equal(a.image_embedding, b.image_embedding)
        assert (a.name, a.dims, a.tags) == (b.name, b.dims, b.tags)
    assert dump_index(back) == text


def test_index_errors_cite_line():
    good = dump_index(random_asset_index(1, 2))
    with pytest.raises(SchemaError, match="line 3"):
        load_index(good + '{"id": "x"}\n')
    with pytest.raises(ValueError):
        AssetRecord("x", "x", (1, 1, 1), np.array([0.5, 0.5]))
