import pytest
from hypothesis import given, strategies as st

from cogtran.alignment import align_pair
from cogtran.errors import BadToken, EmptyForm
from cogtran.phonology import (SoundClassModel, classify, read_class_table, segment,
                               strip_modifiers)


class TestSegment:
    def test_latin_gold_form(self):
        assert segment("j uː n ɪ p ɛ r ʊ m") == ["j", "uː", "n", "ɪ", "p", "ɛ", "r", "ʊ", "m"]

    def test_single(self):
        assert segment("a") == ["a"]

    def test_whitespace_runs(self):
        assert segment("  t͡ʃ  e ") == ["t͡ʃ", "e"]

    @pytest.mark.parametrize("form", ["", "   ", "\t"])
    def test_empty(self, form):
        with pytest.raises(EmptyForm):
            segment(form)

    @pytest.mark.parametrize("form", ["a - b", "a . b"])
    def test_reserved_symbols(self, form):
        with pytest.raises(BadToken):
            segment(form)

    @given(st.lists(st.sampled_from(["a", "tʰ", "uː", "ŋ", "t͡ʃ", "⁵⁵"]), min_size=1)
           .map(lambda toks: "  ".join(toks)))
    def test_idempotent_under_rejoin(self, form):
        once = segment(form)
        assert segment(" ".join(once)) == once


class TestClassify:
    def test_labial_plosive(self, scm):
        assert classify("p", scm) == "P"

    def test_aspiration_stripped(self, scm):
        assert classify("pʰ", scm) == classify("p", scm)

    def test_length_stripped(self, scm):
        assert classify("uː", scm) == classify("u", scm)

    def test_unknown(self, scm):
        assert classify("☃", scm) == scm.unknown_class

    def test_tones(self, scm):
        assert classify("⁵⁵", scm) == "1"
        assert classify("³⁵", scm) == "2"
        assert classify("⁵¹", scm) == "3"

    def test_affricates(self, scm):
        assert classify("t͡ʃ", scm) == classify("tʃ", scm) == "C"

    def test_strip_modifiers(self):
        assert strip_modifiers("tʰː") == "t"
        assert strip_modifiers("ã") == "a"

    def test_deterministic(self, scm):
        assert [classify("kʷ", scm) for _ in range(3)] == ["K"] * 3


class TestSoundClassModel:
    def test_invariants_of_builtin(self, scm):
        n = len(scm.classes)
        for i in range(n):
            for j in range(n):
                assert scm.matrix[i][j] == scm.matrix[j][i]
        assert set(scm.class_of.values()) <= set(scm.classes)
        assert scm.gap_penalty < min(scm.matrix[i][i] for i in range(n))

    def test_class_inventory_size(self, scm):
        assert 25 <= len(scm.classes) <= 30

    def test_scores_follow_rules(self, scm):
        assert scm.score("P", "P") == 5
        assert scm.score("P", "B") == 2
        assert scm.score("A", "P") == -10
        assert scm.score("P", "N") == -2
        assert all(scm.score("0", c) == -2 for c in scm.classes)
        assert scm.gap_penalty == -4

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            SoundClassModel({"a": "A"}, ("A", "0"), ((5, 1), (2, 5)))

    def test_rejects_gap_above_self_match(self):
        with pytest.raises(ValueError):
            SoundClassModel({"a": "A"}, ("A", "0"), ((5, -2), (-2, -2)), gap_penalty=-1)

    def test_from_files(self, tmp_path):
        (tmp_path / "classes.tsv").write_text("SEGMENT\tCLASS\np\tP\nb\tP\na\tV\n", encoding="utf-8")
        (tmp_path / "scores.tsv").write_text(
            "CLASS\tP\tV\t0\nP\t3\t-5\t-1\nV\t-5\t3\t-1\n0\t-1\t-1\t-1\n", encoding="utf-8")
        m = SoundClassModel.from_files(tmp_path / "classes.tsv", tmp_path / "scores.tsv",
                                       gap_penalty=-2)
        assert classify("bʰ", m) == "P"
        assert align_pair(["p", "a"], ["b", "a"], m).score == 6

    def test_table_header_skipped(self):
        assert read_class_table("SEGMENT\tCLASS\np\tP\n") == {"p": "P"}


def test_same_class_phonemes_align_identically(scm):
    # p and b share a class, so they are interchangeable for the aligner
    for other in (["a"], ["b", "a"], ["t", "a", "p"]):
        assert align_pair(["p", "a"], other, scm).score == align_pair(["b", "a"], other, scm).score
