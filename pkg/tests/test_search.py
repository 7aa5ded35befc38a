import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from tridex import delta as dl
from tridex.search import candidate_files, find_all, search, verify, z_function
from tridex.store import Store

from oracles import brute_find, brute_search, random_text


def indexed(files):
    store = Store.memory()
    batch = store.batch()
    dl.apply(dl.compute_delta({}, files, lambda p: store.file_id(p, batch, create=True)), store, batch)
    store.commit_batch(batch)
    return store


def run(files, pattern, limit=None):
    return search(indexed(files), pattern, files.get, limit=limit)


def rows(results):
    return [(m.path, line, col) for m in results for line, col in m.occurrences]


def test_candidate_examples():
    store = indexed({"f": "abcdef"})
    assert candidate_files(store, "abcd") == {store.file_id("f")}
    assert candidate_files(store, "zzz") == set()
    # each file has one of the two trigrams, none has both
    assert candidate_files(indexed({"a": "abcx", "b": "xbcd"}), "abcd") == set()
    with pytest.raises(ValueError):
        candidate_files(store, "ab")


def test_z_function_small():
    assert z_function("aabxaab") == [7, 1, 0, 0, 3, 1, 0]
    assert z_function("") == []


@given(st.text(alphabet="ab", max_size=30))
def test_z_function_brute(s):
    expected = []
    for i in range(len(s)):
        k = 0
        while i + k < len(s) and s[k] == s[i + k]:
            k += 1
        expected.append(k)
    assert z_function(s) == expected


@given(st.text(alphabet="ab \t", max_size=40), st.text(alphabet="ab \t", min_size=1, max_size=4))
def test_find_all_matches_brute(text, pattern):
    assert find_all(text, pattern) == [i for i in range(len(text) - len(pattern) + 1) if text.startswith(pattern, i)]


def test_verify_positions_and_tab_space():
    assert verify("x\n a\tb", "a b") == [(2, 2)]
    assert verify("aaaa", "aa") == [(1, 1), (1, 2), (1, 3)]
    assert verify("abc", "abcd") == []


def test_tab_in_query_matches_space_in_file():
    res = run({"f": "int  x = 1;"}, "int\t x")
    assert rows(res) == [("f", 1, 1)]


def test_short_pattern_falls_back_to_scan():
    files = {"a": "xy\nyx", "b": "no", "c": "x"}
    assert rows(run(files, "x")) == brute_search(files, "x")
    assert rows(run(files, "yx")) == [("a", 2, 1)]
    with pytest.raises(ValueError):
        run(files, "")


def test_limit_truncates_but_keeps_counts():
    files = {"a": "abc abc abc", "b": "abc"}
    res = run(files, "abc", limit=2)
    assert res.truncated
    assert rows(res) == [("a", 1, 1), ("a", 1, 5)]
    assert res.matches[0].count == 3
    full = run(files, "abc", limit=4)
    assert not full.truncated and len(rows(full)) == 4


def test_results_ordered_by_path_then_position():
    files = {"z": "needle", "a/b": "one needle\nneedle two", "m": "none"}
    assert rows(run(files, "needle")) == [("a/b", 1, 5), ("a/b", 2, 1), ("z", 1, 1)]


def _corpus(rng):
    return {f"f{i:02d}": random_text(rng, 200) for i in range(rng.randint(1, 8))}


def _pattern(rng, corpus):
    text = rng.choice(list(corpus.values()))
    if len(text) >= 3 and rng.random() < 0.7:
        i = rng.randrange(len(text) - 2)
        return text[i : i + rng.randint(3, 8)]
    return "".join(rng.choice("ab \t\nc") for _ in range(rng.randint(3, 5)))


@pytest.mark.parametrize("seed", range(60))
def test_search_equals_brute_force(seed):
    rng = random.Random(seed)
    corpus = _corpus(rng)
    store = indexed(corpus)
    for _ in range(5):
        p = _pattern(rng, corpus)
        assert rows(search(store, p, corpus.get)) == brute_search(corpus, p)
        # soundness: every file with a hit is a candidate
        hits = {path for path, text in corpus.items() if brute_find(text, p)}
        cands = {store.path_of(f) for f in candidate_files(store, p)}
        assert hits <= cands


@pytest.mark.parametrize("seed", range(20))
def test_longer_pattern_never_enlarges_candidates(seed):
    rng = random.Random(seed)
    corpus = _corpus(rng)
    store = indexed(corpus)
    p = _pattern(rng, corpus)
    longer = p + rng.choice("abc ")
    assert candidate_files(store, longer) <= candidate_files(store, p)
