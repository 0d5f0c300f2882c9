"""Corpus parsing, validation, slicing, and synthetic generation."""

import pytest

from conftest import make_corpus

from clustersum.corpus import (
    BUNDLED_SEED,
    BUNDLED_SPEC,
    RECOGNIZED_GROUPS,
    Corpus,
    ReportMeta,
    SentenceRecord,
    SyntheticSpec,
    _FILLER_WORDS,
    _TOPIC_POOLS,
    bundled_synthetic_corpus,
    concept_sort_key,
    generate_synthetic_corpus,
    load_taxonomy,
    parse_corpus_csv,
    serialize_corpus_csv,
    slice_by_concept,
    validate_corpus,
)
from clustersum.errors import (
    DuplicateSentenceIdError,
    EmptyTextError,
    InvalidSpecError,
    MalformedCsvError,
    UnknownConceptError,
)
from clustersum.summarise import STOPWORDS

BASIC_CSV = (
    "file_id,sentence_id,text,concepts,year,group\n"
    "f1,s1,Staffing pressure was noted.,Acuity,2020,WB\n"
    "f1,s2,The rota had gaps.,Acuity;Teamworking,2020,WB\n"
    "f2,s1,Handover was rushed.,Communication factor,2021,Asian\n"
)


class TestParse:
    def test_basic_rows(self):
        corpus = parse_corpus_csv(BASIC_CSV)
        assert len(corpus) == 3
        first = corpus.records[0]
        assert first.file_id == "f1"
        assert first.sentence_id == "s1"
        assert first.text == "Staffing pressure was noted."
        assert first.concepts == ("Acuity",)
        assert corpus.meta["f1"] == ReportMeta("f1", 2020, "WB")
        assert corpus.meta["f2"] == ReportMeta("f2", 2021, "Asian")

    def test_multi_concept_cell_expands(self):
        corpus = parse_corpus_csv(BASIC_CSV)
        assert corpus.records[1].concepts == ("Acuity", "Teamworking")
        assert slice_by_concept(corpus, "Acuity").rows == (0, 1)
        assert slice_by_concept(corpus, "Teamworking").rows == (1,)

    def test_bytes_with_bom(self):
        data = ("﻿" + BASIC_CSV).encode("utf-8")
        corpus = parse_corpus_csv(data)
        assert len(corpus) == 3
        assert corpus.records[0].file_id == "f1"

    def test_optional_columns_missing(self):
        corpus = parse_corpus_csv("file_id,sentence_id,text,concepts\nf1,s1,Some text.,Acuity\n")
        assert corpus.meta == {}

    def test_duplicate_id(self):
        data = BASIC_CSV + "f1,s1,Repeated.,Acuity,,\n"
        with pytest.raises(DuplicateSentenceIdError):
            parse_corpus_csv(data)

    def test_missing_required_column(self):
        with pytest.raises(MalformedCsvError, match="concepts"):
            parse_corpus_csv("file_id,sentence_id,text\nf1,s1,Hello.\n")

    def test_short_row(self):
        with pytest.raises(MalformedCsvError, match="expected"):
            parse_corpus_csv("file_id,sentence_id,text,concepts\nf1,s1,Hello.\n")

    def test_empty_text(self):
        with pytest.raises(EmptyTextError):
            parse_corpus_csv('file_id,sentence_id,text,concepts\nf1,s1,"  ...  ",Acuity\n')

    def test_empty_concepts_cell(self):
        with pytest.raises(MalformedCsvError, match="concepts"):
            parse_corpus_csv("file_id,sentence_id,text,concepts\nf1,s1,Hello., ; \n")

    def test_bad_year(self):
        data = "file_id,sentence_id,text,concepts,year\nf1,s1,Hello.,Acuity,20x1\n"
        with pytest.raises(MalformedCsvError, match="year"):
            parse_corpus_csv(data)

    def test_year_out_of_range(self):
        data = "file_id,sentence_id,text,concepts,year\nf1,s1,Hello.,Acuity,1234\n"
        with pytest.raises(MalformedCsvError, match="1234"):
            parse_corpus_csv(data)

    def test_unknown_concept_strict_only(self):
        data = "file_id,sentence_id,text,concepts\nf1,s1,Hello.,Not A Concept\n"
        assert len(parse_corpus_csv(data)) == 1
        with pytest.raises(UnknownConceptError):
            parse_corpus_csv(data, strict_taxonomy=True)

    def test_not_utf8(self):
        with pytest.raises(MalformedCsvError, match="UTF-8"):
            parse_corpus_csv(b"\xff\xfe\x00bad")

    def test_quoted_concept_names_with_commas(self):
        data = (
            "file_id,sentence_id,text,concepts\n"
            'f1,s1,Bloods were requested.,"Assessment, investigation, testing, screening"\n'
        )
        corpus = parse_corpus_csv(data)
        assert corpus.records[0].concepts == ("Assessment, investigation, testing, screening",)


class TestRoundTrip:
    def test_parse_serialize_parse(self):
        corpus = parse_corpus_csv(BASIC_CSV)
        again = parse_corpus_csv(serialize_corpus_csv(corpus))
        assert again == corpus

    def test_without_meta(self):
        corpus = parse_corpus_csv("file_id,sentence_id,text,concepts\nf1,s1,Some text.,Acuity\n")
        assert parse_corpus_csv(serialize_corpus_csv(corpus)) == corpus


class TestValidate:
    def test_valid_corpus(self):
        report = validate_corpus(parse_corpus_csv(BASIC_CSV))
        assert report.valid
        assert report.violations == []
        assert report.concept_counts == {
            "Acuity": 2,
            "Teamworking": 1,
            "Communication factor": 1,
        }
        assert report.total_sentences == 3
        assert report.total_concept_assignments == 4

    def test_reports_do_not_raise(self):
        # validate() sees corpora built in memory, which parse() would reject
        corpus = make_corpus(
            [
                ("f1", "s1", "Fine text.", "Acuity"),
                ("f1", "s1", "Duplicate key.", "Acuity"),
                ("f1", "s3", "...", "Acuity"),
            ]
        )
        report = validate_corpus(corpus)
        assert not report.valid
        assert len(report.violations) == 2

    def test_meta_violations(self):
        corpus = Corpus(
            (SentenceRecord("f1", "s1", "Fine.", ("Acuity",)),),
            {"ghost": ReportMeta("ghost", 1492, "WB")},
        )
        report = validate_corpus(corpus)
        assert not report.valid
        assert any("ghost" in v for v in report.violations)
        assert any("1492" in v for v in report.violations)

    def test_strict_flags_unknown_concepts(self):
        corpus = make_corpus([("f1", "s1", "Fine.", "Custom label")])
        assert validate_corpus(corpus).valid
        report = validate_corpus(corpus, strict_taxonomy=True)
        assert not report.valid

    def test_taxonomy_shaped_counts(self):
        # Per-concept sentence counts for the 27-concept taxonomy. The
        # bracket counts sum to 4133 assignments; the distinct sentence
        # total is 3760, so 373 sentences must carry a second label.
        counts = [
            54, 69, 381, 142, 132, 477, 169, 62, 168, 158, 42, 197, 30, 88,
            118, 80, 169, 147, 320, 35, 54, 94, 77, 188, 530, 112, 40,
        ]
        taxonomy = load_taxonomy()
        assert len(counts) == len(taxonomy) == 27
        assert sum(counts) == 4133

        label_stream = [
            taxonomy[i] for i, count in enumerate(counts) for _ in range(count)
        ]
        distinct = 3760
        primaries = label_stream[:distinct]
        extras = label_stream[distinct:]
        assert len(extras) == 373

        rows = []
        for i, primary in enumerate(primaries):
            concepts = [primary]
            if i < len(extras):
                assert extras[i] != primary  # early vs late taxonomy labels
                concepts.append(extras[i])
            rows.append((f"f{i // 50}", f"s{i % 50:02d}", f"Sentence number {i}.", concepts))
        report = validate_corpus(make_corpus(rows))

        assert report.valid
        assert report.total_sentences == 3760
        assert report.total_concept_assignments == 4133
        assert report.concept_counts == dict(zip(taxonomy, counts))


class TestSlices:
    def test_sizes_sum_to_assignments(self):
        corpus = parse_corpus_csv(BASIC_CSV)
        total = sum(len(slice_by_concept(corpus, c).rows) for c in corpus.concepts())
        assert total == validate_corpus(corpus).total_concept_assignments

    def test_rows_ascending_and_texts_align(self):
        corpus = parse_corpus_csv(BASIC_CSV)
        sl = slice_by_concept(corpus, "Acuity")
        assert list(sl.rows) == sorted(sl.rows)
        assert sl.texts() == [corpus.records[i].text for i in sl.rows]
        assert sl.ids() == [("f1", "s1"), ("f1", "s2")]

    def test_unknown_concept_is_empty(self):
        corpus = parse_corpus_csv(BASIC_CSV)
        assert slice_by_concept(corpus, "Nothing").rows == ()


class TestTaxonomy:
    def test_builtin_taxonomy(self):
        taxonomy = load_taxonomy()
        assert len(taxonomy) == 27
        assert taxonomy[0] == "Acuity"
        assert taxonomy[2] == "Assessment, investigation, testing, screening"
        assert taxonomy[-1] == "Training and education"
        assert "Teamworking" in taxonomy

    def test_concept_sort_key_orders_taxonomy_first(self):
        ordered = sorted(["Zzz custom", "Teamworking", "Acuity"], key=concept_sort_key)
        assert ordered == ["Acuity", "Teamworking", "Zzz custom"]

    def test_load_taxonomy_from_file(self, tmp_path):
        path = tmp_path / "tax.txt"
        path.write_text("One\nTwo\n\n", encoding="utf-8")
        assert load_taxonomy(path) == ("One", "Two")


class TestSynthetic:
    def test_deterministic(self):
        spec = SyntheticSpec(3, 12, ("A", "B"))
        assert generate_synthetic_corpus(spec, 7) == generate_synthetic_corpus(spec, 7)
        assert generate_synthetic_corpus(spec, 7) != generate_synthetic_corpus(spec, 8)

    def test_shapes_and_groups(self):
        spec = SyntheticSpec(3, 25, ("A", "B"))
        corpus = generate_synthetic_corpus(spec, 1)
        assert len(corpus) == 75
        assert len(corpus.concepts()) == 3
        for concept in corpus.concepts():
            assert len(slice_by_concept(corpus, concept).rows) == 25
        # files of ten sentences, so 3 files per concept (10+10+5)
        file_ids = sorted({r.file_id for r in corpus.records})
        assert len(file_ids) == 9
        groups = [corpus.meta[f].group for f in file_ids]
        assert groups == ["A", "B"] * 4 + ["A"]  # round-robin over files
        years = [corpus.meta[f].year for f in file_ids]
        assert all(2018 <= y <= 2023 for y in years)

    def test_no_groups(self):
        corpus = generate_synthetic_corpus(SyntheticSpec(1, 3), 0)
        assert all(m.group is None for m in corpus.meta.values())
        assert not corpus.has_group_metadata()

    def test_concepts_use_taxonomy_names_then_synthetic(self):
        corpus = generate_synthetic_corpus(SyntheticSpec(29, 1), 0)
        names = corpus.concepts()
        assert names[0] == "Acuity"
        assert names[26] == "Training and education"
        assert names[27] == "Synthetic concept 28"
        assert names[28] == "Synthetic concept 29"

    def test_sentences_draw_from_own_pool(self):
        from clustersum.metrics import tokenize_words

        corpus = generate_synthetic_corpus(SyntheticSpec(4, 30), 3)
        for c, concept in enumerate(corpus.concepts()):
            allowed = set(_TOPIC_POOLS[c]) | set(_FILLER_WORDS)
            for record in slice_by_concept(corpus, concept).records():
                assert set(tokenize_words(record.text)) <= allowed

    def test_pools_disjoint_and_stopword_free(self):
        seen = {}
        for i, pool in enumerate(_TOPIC_POOLS):
            assert len(pool) == 12
            for word in pool:
                assert word not in seen, f"{word!r} in pools {seen.get(word)} and {i}"
                seen[word] = i
                assert word not in STOPWORDS
                assert word == word.lower()
        assert set(_FILLER_WORDS) <= STOPWORDS

    def test_invalid_spec(self):
        with pytest.raises(InvalidSpecError):
            generate_synthetic_corpus(SyntheticSpec(0, 5), 0)
        with pytest.raises(InvalidSpecError):
            generate_synthetic_corpus(SyntheticSpec(2, 0), 0)
        with pytest.raises(InvalidSpecError):
            generate_synthetic_corpus(SyntheticSpec(2, 5, ("A", " ")), 0)

    def test_bundled_corpus_matches_regeneration(self, bundled_corpus):
        # drift guard: the shipped CSV must stay in sync with the generator
        assert bundled_corpus == generate_synthetic_corpus(BUNDLED_SPEC, BUNDLED_SEED)

    def test_bundled_corpus_shape(self, bundled_corpus):
        assert len(bundled_corpus) == 500
        assert len(bundled_corpus.concepts()) == 5
        groups = {m.group for m in bundled_corpus.meta.values()}
        assert groups == set(RECOGNIZED_GROUPS)
