import random

import pytest
from hypothesis import given, settings, strategies as st

from cmine.concept_cluster import (ClusterConfig, MaskingTable, UnionFind, apply_mask,
                                   build_masking_table, cluster_key, levenshtein, term_similarity)
from cmine.errors import ConfigError
from tests.conftest import records
from tests.corpus import DIABETES_FIXTURE

ON = ClusterConfig(enabled=True)


@pytest.mark.parametrize("a, b, d", [
    ("", "", 0), ("abc", "", 3), ("kitten", "sitting", 3), ("flaw", "lawn", 2), ("ca", "ac", 2),
])
def test_levenshtein_known_values(a, b, d):
    assert levenshtein(a, b) == levenshtein(b, a) == d


def test_similarity_examples():
    assert term_similarity("Diabetes", "diabetes", ON) == 1.0
    # one substitution over eight characters
    assert term_similarity("diabetes", "diabetis", ON) == pytest.approx(1 - 1 / 8)
    assert term_similarity("brain tumour", "tumour brain", ON) < 1.0
    unordered = ClusterConfig(enabled=True, respect_word_order=False)
    assert term_similarity("brain tumour", "tumour brain", unordered) == 1.0
    stopless = ClusterConfig(enabled=True, remove_stopwords=True, use_stemming=True)
    assert term_similarity("tumour of the brain", "tumours brain", stopless) == 1.0


def test_stopword_only_term_keeps_tokens():
    cfg = ClusterConfig(enabled=True, remove_stopwords=True)
    assert cluster_key("The", cfg) == "the"


def test_threshold_validated():
    with pytest.raises(ConfigError):
        ClusterConfig(edit_threshold=1.5)


def test_union_find_root_is_minimum():
    uf = UnionFind()
    uf.union("c", "b")
    uf.union("b", "z")
    uf.union("z", "a")
    assert {uf.find(x) for x in "abcz"} == {"a"}


def test_diabetes_transitive_table():
    table = build_masking_table(records(DIABETES_FIXTURE), ON)
    assert table.items() == [(c, "C0011847") for c in ("C0011847", "C0011849", "C0011860", "C3250443")]
    assert table.clusters() == {"C0011847": ["C0011847", "C0011849", "C0011860", "C3250443"]}


def test_disabled_is_identity():
    table = build_masking_table(records(DIABETES_FIXTURE), ClusterConfig())
    assert all(a == b for a, b in table.items())
    assert len(table) == 4


def test_unknown_id_maps_to_itself():
    assert MaskingTable({})["C1"] == "C1"


def test_apply_mask_dedupes():
    recs = records(DIABETES_FIXTURE)
    masked = apply_mask(recs, build_masking_table(recs, ON))
    assert {(r.concept_id, r.term) for r in masked} == {("C0011847", "diabetes"), ("C0011847", "DM")}
    assert len(masked) == 2


def test_permutation_invariance():
    rng = random.Random(7)
    recs = records(DIABETES_FIXTURE)
    expected = build_masking_table(recs, ON).items()
    for _ in range(25):
        rng.shuffle(recs)
        assert build_masking_table(recs, ON).items() == expected


def _components(recs, cfg):
    """Reference: connected components by depth-first search over every record pair."""
    ids = sorted({r.concept_id for r in recs})
    adj = {i: set() for i in ids}
    for r in recs:
        for s in recs:
            if r.concept_id != s.concept_id and term_similarity(r.term, s.term, cfg) >= cfg.edit_threshold:
                adj[r.concept_id].add(s.concept_id)
    out = {}
    for i in ids:
        if i in out:
            continue
        comp, stack = set(), [i]
        while stack:
            x = stack.pop()
            if x not in comp:
                comp.add(x)
                stack.extend(adj[x])
        for x in comp:
            out[x] = min(comp)
    return sorted(out.items())


record_rows = st.lists(
    st.tuples(st.sampled_from([f"C{i:07d}" for i in range(12)]),
              st.lists(st.sampled_from(["diabetes", "diabetis", "dm", "brain", "tumour", "tumor", "of"]),
                       min_size=1, max_size=3).map(" ".join),
              st.just("dsyn")),
    min_size=1, max_size=50)


@settings(max_examples=150, deadline=None)
@given(record_rows, st.sampled_from([1.0, 0.9, 0.8, 0.6]))
def test_matches_brute_force_components(rows, threshold):
    cfg = ClusterConfig(enabled=True, edit_threshold=threshold, exhaustive=True)
    assert build_masking_table(records(rows), cfg).items() == _components(records(rows), cfg)


@settings(max_examples=100, deadline=None)
@given(record_rows)
def test_blocking_is_lossless_at_threshold_one(rows):
    recs = records(rows)
    assert build_masking_table(recs, ON).items() == \
        build_masking_table(recs, ClusterConfig(enabled=True, exhaustive=True)).items()


@settings(max_examples=100, deadline=None)
@given(record_rows)
def test_exact_threshold_links_casefold_equal_terms(rows):
    recs = records(rows)
    table = build_masking_table(recs, ON)
    for r in recs:
        for s in recs:
            if r.term.lower() == s.term.lower():
                assert table[r.concept_id] == table[s.concept_id]
