import pytest
from hypothesis import given, strategies as st

from cmine.errors import ParseError
from cmine.knowledge_source import (ConceptRecord, filter_records, load_buckets,
                                    load_knowledge_source, mini_thesaurus_path)

ROWS = [("C0011849", "diabetes mellitus", "dsyn"), ("C0392747", "heparin", "phsu")]


def test_whitelist_filters(write_kb):
    path = write_kb(ROWS)
    recs = load_knowledge_source(path, {"dsyn"})
    assert recs == [ConceptRecord("C0011849", "diabetes mellitus", "dsyn", "UNKNOWN")]


def test_no_whitelist_keeps_everything(write_kb):
    assert len(load_knowledge_source(write_kb(ROWS))) == 2


def test_empty_whitelist_keeps_nothing(write_kb):
    assert load_knowledge_source(write_kb(ROWS), set()) == []


def test_comments_blank_lines_and_source_column(tmp_path):
    path = tmp_path / "kb.tsv"
    path.write_text("# header\n\nC1\tAspirin\tphsu\tRXNORM\nC2\tFever\tsosy\n", encoding="utf-8")
    recs = load_knowledge_source(path)
    assert [r.source_vocabulary for r in recs] == ["RXNORM", "UNKNOWN"]


def test_dedup_on_id_and_casefolded_term(write_kb):
    path = write_kb([("C1", "Heparin", "phsu"), ("C1", "heparin", "phsu"), ("C2", "heparin", "phsu")])
    recs = load_knowledge_source(path)
    assert [(r.concept_id, r.term) for r in recs] == [("C1", "Heparin"), ("C2", "heparin")]


@pytest.mark.parametrize("line, lineno", [
    ("C1\tonly-two-fields", 2),
    ("C1\tterm\tdsyn\tSRC\textra", 2),
    ("\tterm\tdsyn", 2),
    ("C1\t   \tdsyn", 2),
])
def test_malformed_line_reports_line_number(tmp_path, line, lineno):
    path = tmp_path / "kb.tsv"
    path.write_text("C0\tok\tdsyn\n" + line + "\n", encoding="utf-8")
    with pytest.raises(ParseError) as info:
        load_knowledge_source(path)
    assert info.value.line == lineno


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_knowledge_source(tmp_path / "nope.tsv")


def test_record_invariants():
    with pytest.raises(ValueError):
        ConceptRecord("C1", "  ", "dsyn")
    with pytest.raises(ValueError):
        ConceptRecord("C\t1", "x", "dsyn")


def test_mini_thesaurus_covers_first_document_terms():
    terms = {r.term.lower() for r in load_knowledge_source(mini_thesaurus_path())}
    for t in ("ligament tear", "total knee replacement", "radiography", "prophylactic treatment", "heparin"):
        assert t in terms
    # deliberately absent, see the thesaurus header
    assert "dvt" not in terms


def test_buckets(tmp_path):
    path = tmp_path / "b.tsv"
    path.write_text("dsyn\tDiagnosis\nphsu\tMedicines\ntopp\tProcedures\n", encoding="utf-8")
    b = load_buckets(path)
    assert b["dsyn"] == "Diagnosis"
    assert b["fndg"] == "Other"
    assert b.bucket_for_types(["fndg", "topp"]) == "Procedures"


def test_empty_bucket_file(tmp_path):
    path = tmp_path / "b.tsv"
    path.write_text("", encoding="utf-8")
    assert load_buckets(path)["dsyn"] == "Other"


def test_bucket_malformed_line(tmp_path):
    path = tmp_path / "b.tsv"
    path.write_text("dsyn\tDiagnosis\nphsu\n", encoding="utf-8")
    with pytest.raises(ParseError) as info:
        load_buckets(path)
    assert info.value.line == 2


types = st.sampled_from(["dsyn", "phsu", "topp", "sosy", "fndg"])
rows = st.lists(st.tuples(st.sampled_from(["C1", "C2", "C3", "C4"]),
                          st.sampled_from(["fever", "Fever", "heparin", "knee", "chest pain"]), types),
                max_size=30)


@given(rows, st.frozensets(types))
def test_whitelist_properties(tmp_path_factory, data, whitelist):
    path = tmp_path_factory.mktemp("kb") / "kb.tsv"
    path.write_text("".join("\t".join(r) + "\n" for r in data), encoding="utf-8")
    everything = load_knowledge_source(path)
    filtered = load_knowledge_source(path, whitelist)
    assert filtered == filter_records(everything, whitelist)
    assert filter_records(filtered, whitelist) == filtered
    smaller = frozenset(sorted(whitelist)[1:])
    assert len(load_knowledge_source(path, smaller)) <= len(filtered)
