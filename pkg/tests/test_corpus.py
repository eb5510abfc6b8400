import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clirkit.corpus import (
    BilingualDictionary,
    Document,
    DuplicateDocIdError,
    NormalizationPipeline,
    ParseError,
    Topic,
    load_documents,
    normalize,
    parse_dictionary,
    parse_documents,
    parse_qrels,
    parse_topics,
)

PLAIN = NormalizationPipeline(lowercase=True, stopwords=frozenset(), stemmer="none")


class TestNormalize:
    def test_lowercase_stopwords_porter(self):
        pipeline = NormalizationPipeline(lowercase=True, stopwords=frozenset({"the"}),
                                         stemmer="porter")
        assert normalize("The running DOGS", pipeline) == ["run", "dog"]

    def test_empty_input(self):
        assert normalize("", PLAIN) == []

    def test_identity_pipeline(self):
        pipeline = NormalizationPipeline(lowercase=True, stopwords=frozenset(), stemmer="none")
        assert normalize("a a a", pipeline) == ["a", "a", "a"]

    def test_splits_on_non_alphanumeric(self):
        assert normalize("foo-bar_baz  42,qux", PLAIN) == ["foo", "bar", "baz", "42", "qux"]

    def test_stopwords_checked_after_lowercasing(self):
        pipeline = NormalizationPipeline(lowercase=True, stopwords=frozenset({"the"}),
                                         stemmer="none")
        assert normalize("THE The the", pipeline) == []

    @settings(max_examples=100, deadline=None)
    @given(st.text(max_size=80), st.booleans(), st.frozensets(st.sampled_from(["a", "b", "the"])))
    def test_idempotent_without_stemming(self, text, lowercase, stop):
        # Stemming is intentionally excluded: the published suffix rules
        # are not idempotent (e.g. agreed -> agre -> agr).
        pipeline = NormalizationPipeline(lowercase=lowercase, stopwords=stop, stemmer="none")
        once = normalize(text, pipeline)
        assert normalize(" ".join(once), pipeline) == once

    def test_unknown_stemmer_rejected(self):
        with pytest.raises(ValueError):
            NormalizationPipeline(stemmer="snowball")


class TestDocument:
    def test_length_tracks_tokens(self):
        doc = Document("d1", ("a", "b", "c"))
        assert doc.length == 3

    def test_tokens_coerced_to_tuple(self):
        doc = Document("d1", ["a", "b"])
        assert doc.tokens == ("a", "b")


class TestParseTrecSgml:
    def test_single_record(self, tmp_path):
        path = tmp_path / "c.sgml"
        path.write_text("<DOC><DOCNO>d1</DOCNO><TEXT>a b</TEXT></DOC>")
        assert list(parse_documents(str(path), "trec_sgml")) == [("d1", "a b")]

    def test_empty_file(self, tmp_path):
        path = tmp_path / "c.sgml"
        path.write_text("")
        assert list(parse_documents(str(path), "trec_sgml")) == []

    def test_duplicate_docno(self, tmp_path):
        path = tmp_path / "c.sgml"
        path.write_text("<DOC><DOCNO>d1</DOCNO><TEXT>a</TEXT></DOC>"
                        "<DOC><DOCNO>d1</DOCNO><TEXT>b</TEXT></DOC>")
        with pytest.raises(DuplicateDocIdError) as err:
            list(parse_documents(str(path), "trec_sgml"))
        assert "d1" in str(err.value)

    def test_multiple_text_blocks_concatenated(self, tmp_path):
        path = tmp_path / "c.sgml"
        path.write_text("<DOC><DOCNO>d1</DOCNO><TEXT>a</TEXT><TEXT>b</TEXT></DOC>")
        [(_, text)] = list(parse_documents(str(path), "trec_sgml"))
        assert text.split() == ["a", "b"]

    def test_malformed_record_reports_position(self, tmp_path):
        path = tmp_path / "c.sgml"
        path.write_text("<DOC><DOCNO>d1</DOCNO><TEXT>a</TEXT></DOC><DOC><DOCNO>d2</DOCNO></DOC>")
        with pytest.raises(ParseError) as err:
            list(parse_documents(str(path), "trec_sgml"))
        assert err.value.docs_parsed == 1
        assert err.value.byte_offset is not None

    def test_count_preserving(self, tmp_path):
        n = 37
        path = tmp_path / "c.sgml"
        path.write_text("".join(
            f"<DOC><DOCNO>d{i}</DOCNO><TEXT>tok{i} common</TEXT></DOC>" for i in range(n)))
        docs = load_documents(str(path), "trec_sgml", PLAIN)
        assert len(docs) == n


class TestParseJsonl:
    def test_records_in_order(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text('{"id": "x", "text": "hello world"}\n{"id": "y", "text": "bye"}\n')
        assert list(parse_documents(str(path), "jsonl")) == [("x", "hello world"), ("y", "bye")]

    def test_malformed_line(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text('{"id": "x", "text": "a"}\nnot json\n')
        with pytest.raises(ParseError) as err:
            list(parse_documents(str(path), "jsonl"))
        assert err.value.docs_parsed == 1

    def test_unknown_format(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text("")
        with pytest.raises(ValueError):
            list(parse_documents(str(path), "csv"))


class TestParseDictionary:
    def test_direct_parse(self, tmp_path):
        path = tmp_path / "d.tsv"
        path.write_text("chien\tdog hound\n")
        d = parse_dictionary(str(path), PLAIN, PLAIN)
        assert d.entries == {"chien": ("dog", "hound")}

    def test_empty_candidates_dropped_with_count(self, tmp_path):
        path = tmp_path / "d.tsv"
        path.write_text("x\t\nchien\tdog\n")
        d = parse_dictionary(str(path), PLAIN, PLAIN)
        assert d.entries == {"chien": ("dog",)}
        assert d.dropped_entries == 1

    def test_line_without_tab(self, tmp_path):
        path = tmp_path / "d.tsv"
        path.write_text("chien dog\n")
        with pytest.raises(ParseError) as err:
            parse_dictionary(str(path), PLAIN, PLAIN)
        assert err.value.line == 1

    def test_repeated_source_merges_against_naive_oracle(self, tmp_path):
        lines = ["a\tx y", "b\tz", "a\ty w", "a\tx"]
        path = tmp_path / "d.tsv"
        path.write_text("\n".join(lines) + "\n")
        d = parse_dictionary(str(path), PLAIN, PLAIN)
        # independent oracle: first-occurrence order with duplicates removed
        oracle: dict[str, list[str]] = {}
        for line in lines:
            src, cands = line.split("\t")
            bucket = oracle.setdefault(src, [])
            for c in cands.split():
                if c not in bucket:
                    bucket.append(c)
        assert {s: list(c) for s, c in d.entries.items()} == oracle

    def test_multiword_candidates_split_to_unigrams(self, tmp_path):
        path = tmp_path / "d.tsv"
        path.write_text("gare\ttrain station\n")
        d = parse_dictionary(str(path), PLAIN, PLAIN)
        assert d.entries["gare"] == ("train", "station")

    def test_no_stopwords_survive_normalization(self, tmp_path):
        stop = NormalizationPipeline(lowercase=True, stopwords=frozenset({"the", "le"}),
                                     stemmer="none")
        path = tmp_path / "d.tsv"
        path.write_text("le\tthe\nchien\tthe dog\n")
        d = parse_dictionary(str(path), stop, stop)
        for source, cands in d.entries.items():
            assert source not in {"the", "le"}
            assert not set(cands) & {"the", "le"}
        assert d.entries == {"chien": ("dog",)}


class TestParseQrels:
    def test_relevant(self, tmp_path):
        path = tmp_path / "q.txt"
        path.write_text("91 0 d7 1\n")
        assert parse_qrels(str(path)) == {"91": {"d7"}}

    def test_nonrelevant_judgment_keeps_topic(self, tmp_path):
        path = tmp_path / "q.txt"
        path.write_text("91 0 d7 0\n")
        assert parse_qrels(str(path)) == {"91": set()}

    def test_duplicate_lines_idempotent(self, tmp_path):
        path = tmp_path / "q.txt"
        path.write_text("91 0 d7 1\n91 0 d7 1\n")
        assert parse_qrels(str(path)) == {"91": {"d7"}}

    def test_non_integer_relevance(self, tmp_path):
        path = tmp_path / "q.txt"
        path.write_text("91 0 d7 one\n")
        with pytest.raises(ParseError) as err:
            parse_qrels(str(path))
        assert err.value.line == 1


class TestParseTopics:
    def test_short_and_verbose_queries(self, tmp_path):
        path = tmp_path / "t.jsonl"
        path.write_text(json.dumps({"id": "q1", "title": "solar power", "desc": "energy"}) + "\n")
        [topic] = parse_topics(str(path), PLAIN)
        assert topic.query_terms() == ("solar", "power")
        assert topic.query_terms(verbose=True) == ("solar", "power", "energy")

    def test_empty_title_rejected(self, tmp_path):
        path = tmp_path / "t.jsonl"
        path.write_text(json.dumps({"id": "q1", "title": "..."}) + "\n")
        with pytest.raises(ParseError):
            parse_topics(str(path), PLAIN)
