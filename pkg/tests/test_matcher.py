import random
from collections import deque

import pytest
from hypothesis import given, settings, strategies as st

from cmine.config import PipelineConfig
from cmine.errors import ConfigurationMismatchError, IndexFormatError
from cmine.matcher import (Payload, ScanStats, build, dumps_index, load_index, loads_index,
                           pattern_key, save_index, search)
from cmine.normalize import config_fingerprint, normalize

PLAIN = PipelineConfig(remove_stopwords=False, stem_mode="none")
FP = config_fingerprint(PLAIN, frozenset())


def doc(text):
    return normalize(text, PLAIN, frozenset())


def automaton(terms):
    return build([(tuple(t.split()), Payload(f"C{i}", t, ("T",))) for i, t in enumerate(terms)], FP)


def hits(auto, text):
    return sorted((m.start_token, m.end_token, m.payloads[0].original_term) for m in search(auto, doc(text)))


def state_strings(auto):
    """Byte string spelled by each state, recovered by walking the goto edges."""
    out = {0: b""}
    queue = deque([0])
    while queue:
        s = queue.popleft()
        for byte, t in auto.edges(s):
            out[t] = out[s] + bytes([byte])
            queue.append(t)
    return out


def test_classic_keyword_trie():
    auto = automaton(["he", "she", "his", "hers"])
    names = {v: k for k, v in state_strings(auto).items()}
    # root plus h he her hers hi his s sh she
    assert auto.node_count == 10
    assert auto.fail(names[b"she"]) == names[b"he"]
    assert auto.fail(names[b"hers"]) == names[b"s"]
    assert auto.fail(names[b"his"]) == names[b"s"]
    assert auto.fail(names[b"sh"]) == names[b"h"]
    assert auto.fail(names[b"her"]) == 0
    assert {auto.patterns[p].payloads[0].original_term for p in auto.outputs(names[b"she"])} == {"she", "he"}


def test_token_boundaries():
    auto = automaton(["he", "she", "his", "hers"])
    # substrings inside a word never count
    assert hits(auto, "ushers") == []
    assert hits(auto, "she hers his") == [(0, 1, "she"), (1, 2, "hers"), (2, 3, "his")]
    assert hits(automaton(["art"]), "heart art") == [(1, 2, "art")]


def test_single_pattern_is_a_chain():
    auto = automaton(["abcdef"])
    assert auto.node_count == 7
    assert all(auto.fail(s) == 0 for s in range(auto.node_count))


def test_multi_token_and_overlapping():
    auto = automaton(["type 2 diabetes mellitus", "diabetes mellitus", "diabetes", "mellitus"])
    assert hits(auto, "type 2 diabetes mellitus") == [
        (0, 4, "type 2 diabetes mellitus"), (2, 3, "diabetes"), (2, 4, "diabetes mellitus"),
        (3, 4, "mellitus")]


def test_empty_text():
    assert search(automaton(["x"]), doc("")) == []
    assert search(automaton(["x"]), doc(" ,. ")) == []


def test_shared_pattern_merges_payloads():
    auto = build([(("dm",), Payload("C1", "DM", ("dsyn",))), (("dm",), Payload("C2", "DM", ("dsyn",)))], FP)
    [m] = search(auto, doc("dm"))
    assert {p.concept_id for p in m.payloads} == {"C1", "C2"}
    assert auto.pattern_count == 1


def test_pattern_key_rejects_empty():
    with pytest.raises(ValueError):
        pattern_key(())


def test_fingerprint_mismatch():
    auto = automaton(["x"])
    other = normalize("x", PipelineConfig(), frozenset({"a"}))
    with pytest.raises(ConfigurationMismatchError):
        search(auto, other)


def naive(terms, tokens):
    found = set()
    for t in set(terms):
        p = tuple(t.split())
        for i in range(len(tokens) - len(p) + 1):
            if tuple(tokens[i:i + len(p)]) == p:
                found.add((i, i + len(p), t))
    return found


ALPHABET = ["a", "b", "ab", "ba", "aa", "abc", "c"]
terms_st = st.lists(st.lists(st.sampled_from(ALPHABET), min_size=1, max_size=3).map(" ".join),
                    min_size=1, max_size=12)
tokens_st = st.lists(st.sampled_from(ALPHABET + ["z"]), max_size=25)


@settings(max_examples=300, deadline=None)
@given(terms_st, tokens_st)
def test_agrees_with_naive_search(terms, tokens):
    auto = automaton(list(dict.fromkeys(terms)))
    assert set(hits(auto, " ".join(tokens))) == naive(terms, tokens)


@settings(max_examples=200, deadline=None)
@given(terms_st)
def test_failure_links_are_longest_proper_suffix(terms):
    auto = automaton(list(dict.fromkeys(terms)))
    strings = state_strings(auto)
    by_string = {v: k for k, v in strings.items()}
    for s, text in strings.items():
        if s == 0:
            continue
        suffix = next(text[i:] for i in range(1, len(text) + 1) if text[i:] in by_string)
        assert auto.fail(s) == by_string[suffix]
        assert auto.depth(auto.fail(s)) < auto.depth(s)


@settings(max_examples=200, deadline=None)
@given(terms_st, tokens_st)
def test_scan_is_linear(terms, tokens):
    auto = automaton(list(dict.fromkeys(terms)))
    stats = ScanStats()
    search(auto, doc(" ".join(tokens)), stats)
    assert stats.steps <= 2 * stats.input_bytes


def test_deterministic_build():
    terms = ["heart attack", "attack", "heart", "heart failure", "failure"]
    a = dumps_index(automaton(terms))
    assert a == dumps_index(automaton(terms))
    rng = random.Random(1)
    shuffled = terms[:]
    rng.shuffle(shuffled)
    x, y = automaton(terms), automaton(shuffled)
    # pattern ids follow input order; the state graph does not
    assert x.node_count == y.node_count
    for s in range(x.node_count):
        assert x.edges(s) == y.edges(s) and x.fail(s) == y.fail(s)
    text = "heart failure heart attack"
    assert hits(x, text) == hits(y, text)


def test_round_trip(tmp_path):
    auto = automaton(["heart attack", "attack", "heart", "café au lait", "x" * 40])
    path = tmp_path / "idx.cmi"
    save_index(auto, path)
    again = load_index(path)
    assert again.node_count == auto.node_count
    assert again.fingerprint == auto.fingerprint
    assert dumps_index(again) == dumps_index(auto)
    text = "heart attack café au lait heart " + "x" * 40
    assert hits(again, text) == hits(auto, text)


def test_rejects_truncated_and_corrupt():
    data = dumps_index(automaton(["heart attack", "attack"]))
    for cut in (0, 10, len(data) // 2, len(data) - 1):
        with pytest.raises(IndexFormatError):
            loads_index(data[:cut])
    flipped = bytearray(data)
    flipped[len(data) // 2] ^= 0xFF
    with pytest.raises(IndexFormatError, match="checksum"):
        loads_index(bytes(flipped))
    with pytest.raises(IndexFormatError, match="magic"):
        loads_index(b"XXXX" + data[4:])
    bumped = bytearray(data)
    bumped[4] = 9
    with pytest.raises(IndexFormatError, match="version"):
        loads_index(bytes(bumped))
