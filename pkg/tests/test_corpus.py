import json

import pytest
from hypothesis import given, strategies as st

from lingmask.corpus import (
    CleanDocument,
    RawDocument,
    clean_document,
    ingest_documents,
    normalize_text,
    split_sentences,
)


class TestNormalize:
    def test_whitespace_collapse(self):
        assert normalize_text("a\t\tb   c") == "a b c"

    def test_dollar_span_removed(self):
        assert normalize_text("energy $E = mc^2$ here") == "energy here"

    def test_empty(self):
        assert normalize_text("") == ""

    def test_newlines_become_spaces(self):
        assert normalize_text("one\ntwo\r\nthree") == "one two three"

    @pytest.mark.parametrize(
        "raw,expected",
        [
            ("x ^2 y", "x y"),  # operator next to a digit
            ("sum ∑=3 here", "sum here"),  # operator next to a symbol
            ("a ::: b", "a b"),  # mostly non-alphanumeric token
            ("state-of-the-art stays", "state-of-the-art stays"),
            ("x=y stays", "x=y stays"),  # operator between plain letters
            ("a $x$ b $y$ c", "a b c"),
        ],
    )
    def test_formula_token_rules(self, raw, expected):
        assert normalize_text(raw) == expected

    @given(st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=200))
    def test_idempotent_and_never_longer(self, raw):
        once = normalize_text(raw)
        assert normalize_text(once) == once
        assert len(once) <= len(raw)


class TestSplitSentences:
    @pytest.mark.parametrize(
        "clean,expected",
        [
            ("A cat. A dog.", ["A cat.", "A dog."]),
            ("Fig. 1 shows X.", ["Fig. 1 shows X."]),
            ("one sentence", ["one sentence"]),
            ("", []),
            ("Run! Stop now? Yes.", ["Run!", "Stop now?", "Yes."]),
            ("See e.g. The device.", ["See e.g. The device."]),
            ("Made in the U.S. The end.", ["Made in the U.S. The end."]),
            ("lower case. not split", ["lower case. not split"]),
        ],
    )
    def test_examples(self, clean, expected):
        assert split_sentences(clean) == expected

    @given(
        st.lists(
            st.sampled_from(["Alpha beta.", "Gamma delta!", "Epsilon?", "Zeta eta."]),
            min_size=1,
            max_size=6,
        )
    )
    def test_join_reconstructs_normalized_text(self, parts):
        text = normalize_text(" ".join(parts))
        assert " ".join(split_sentences(text)) == text


class TestDomainTypes:
    def test_raw_document_requires_id(self):
        with pytest.raises(ValueError):
            RawDocument(id="", text="x")

    def test_raw_document_rejects_unknown_section(self):
        with pytest.raises(ValueError):
            RawDocument(id="d", text="x", section="figures")

    def test_clean_document_pipeline(self):
        doc = clean_document(RawDocument(id="d", text="A\tcat. A dog."))
        assert doc == CleanDocument(id="d", sentences=["A cat.", "A dog."])


class TestIngest:
    def _write(self, path, lines):
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    def test_jsonl_order_and_count(self, tmp_path):
        path = tmp_path / "docs.jsonl"
        self._write(
            path,
            [
                json.dumps({"id": "a", "text": "one", "section": "claims"}),
                json.dumps({"id": "b", "text": "two"}),
                json.dumps({"id": "c", "text": "three", "section": "weird"}),
            ],
        )
        docs = list(ingest_documents(str(path)))
        assert [d.id for d in docs] == ["a", "b", "c"]
        assert docs[0].section == "claims"
        assert docs[1].section == "other"
        assert docs[2].section == "other"

    def test_jsonl_missing_text(self, tmp_path):
        path = tmp_path / "docs.jsonl"
        self._write(path, [json.dumps({"id": "a", "text": "x"}), json.dumps({"id": "b"})])
        with pytest.raises(ValueError, match="missing field: text at line 2"):
            list(ingest_documents(str(path)))

    def test_jsonl_malformed(self, tmp_path):
        path = tmp_path / "docs.jsonl"
        self._write(path, ["{not json"])
        with pytest.raises(ValueError, match="line 1"):
            list(ingest_documents(str(path)))

    def test_empty_file(self, tmp_path):
        path = tmp_path / "docs.jsonl"
        path.write_text("", encoding="utf-8")
        assert list(ingest_documents(str(path))) == []

    def test_tsv(self, tmp_path):
        path = tmp_path / "docs.tsv"
        self._write(path, ["a\tone two", "b\tthree"])
        docs = list(ingest_documents(str(path), format="tsv"))
        assert [(d.id, d.text, d.section) for d in docs] == [
            ("a", "one two", "other"),
            ("b", "three", "other"),
        ]

    def test_tsv_wrong_columns(self, tmp_path):
        path = tmp_path / "docs.tsv"
        self._write(path, ["a\tb\tc"])
        with pytest.raises(ValueError, match="line 1"):
            list(ingest_documents(str(path), format="tsv"))

    def test_unknown_format(self, tmp_path):
        with pytest.raises(ValueError, match="unknown input format"):
            list(ingest_documents(str(tmp_path / "x"), format="xml"))
