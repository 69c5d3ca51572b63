import numpy as np
import pytest

from cogtran.alignment import Msa
from cogtran.encoding import (CLS, GAP, IGNORE, MASK, PAD, SEP, SPECIALS, UNK, Vocabulary,
                              build_vocab, collate, decode, encode)
from cogtran.errors import EmptyCorpus, UnknownLanguageToken
from cogtran.trimming import split_merged, trim

LANGS = ["French", "Italian", "Spanish", "Latin"]


@pytest.fixture
def trimmed(table1):
    return trim(table1)


@pytest.fixture
def vocab(trimmed):
    return build_vocab([trimmed], LANGS)


class TestVocabulary:
    def test_counting(self):
        msa = Msa([("x", ["a", "b"]), ("y", ["b", "a"])])
        v = build_vocab([msa], ["x", "y"])
        # [GAP] is one of the six specials, so it is never added twice
        assert len(v) == 6 + 2 + 2
        gapped = build_vocab([Msa([("x", ["a", "-"]), ("y", ["b", "a"])])], ["x", "y"])
        assert len(gapped) == 10

    def test_layout(self, vocab):
        assert vocab.tokens[: len(SPECIALS)] == list(SPECIALS)
        assert vocab.pad_id == 0
        assert vocab.tokens[6:10] == ["[French]", "[Italian]", "[Spanish]", "[Latin]"]
        assert vocab.tokens[10:13] == ["ʒ", "ə", "n"]

    def test_unknown_token(self, vocab):
        assert vocab.id_of("ɮ") == vocab.unk_id

    def test_unknown_language(self, vocab):
        with pytest.raises(UnknownLanguageToken):
            vocab.language_id("Portuguese")

    def test_specials(self, vocab):
        assert all(vocab.is_special(vocab.ids[t]) for t in SPECIALS)
        assert vocab.is_special(vocab.language_id("Latin"))
        assert not vocab.is_special(vocab.ids["j.ɛ"])

    def test_save_load(self, vocab, tmp_path):
        vocab.save(tmp_path / "v.txt")
        assert Vocabulary.load(tmp_path / "v.txt") == vocab

    def test_empty(self):
        with pytest.raises(EmptyCorpus):
            build_vocab([], ["a"])

    def test_merged_tokens_only_after_trimming(self, table1, trimmed):
        plain = set(build_vocab([table1], LANGS).tokens)
        merged = set(build_vocab([trimmed], LANGS).tokens)
        assert merged - plain == {"j.ɛ", "ʊ.m"}
        assert plain - merged == {"ʊ", "m"}


class TestEncode:
    def test_table2_grid(self, trimmed, vocab):
        g = encode(trimmed.rows, "Latin", vocab, "train")
        assert g.ids.shape == (4, 11)
        assert g.target_row == 3
        latin = [vocab.tokens[i] for i in g.ids[3]]
        assert latin == [CLS, "[Latin]"] + [MASK] * 8 + [SEP]
        gold = ["j", "uː", "n", "ɪ", "p", "ɛ", "r", "ʊ.m", SEP]
        assert g.label_ids[:2].tolist() == [IGNORE, IGNORE]
        assert [vocab.tokens[i] for i in g.label_ids[2:]] == gold
        french = [vocab.tokens[i] for i in g.ids[0]]
        assert french == [CLS, "[French]", "ʒ", "ə", "n", "j.ɛ", "v", GAP, "ʁ", GAP, SEP]
        assert not g.pad_mask.any()

    def test_infer_mode(self, vocab):
        rows = [("French", ["ʒ", "ə", "n", "v", "ʁ"]), ("Italian", ["dʒ", "i", "n", "p", "r"])]
        g = encode(rows, "Latin", vocab, "infer")
        assert g.ids.shape == (3, 8)
        assert g.ids[2, 2:7].tolist() == [vocab.mask_id] * 5
        assert (g.label_ids == IGNORE).all()

    def test_label_round_trip(self, trimmed, vocab):
        g = encode(trimmed.rows, "Latin", vocab, "train")
        word = decode(g.label_ids, vocab, "Latin")
        assert str(word) == "j uː n ɪ p ɛ r ʊ m"
        for lang, sites in trimmed.rows:
            g = encode(trimmed.rows, lang, vocab, "train")
            expected = [p for t in sites if t != GAP for p in split_merged(t)]
            assert decode(g.label_ids, vocab).phonemes == expected

    def test_missing_language(self, trimmed, vocab):
        with pytest.raises(UnknownLanguageToken):
            encode(trimmed.rows, "Portuguese", vocab, "infer")

    def test_oov_maps_to_unk(self, vocab):
        g = encode([("French", ["ɮ"])], "Latin", vocab, "infer")
        assert g.ids[0, 2] == vocab.unk_id


class TestDecode:
    def test_paper_output(self, vocab):
        v = Vocabulary(list(vocab.tokens) + ["k"], vocab.languages)
        ids = [v.cls_id, v.language_id("Latin"), v.ids["k"], v.ids["ɛ"], v.sep_id]
        word = decode(ids, v, "Latin")
        assert word.language_id == "Latin" and str(word) == "k ɛ"

    def test_all_gap(self, vocab):
        assert decode([vocab.gap_id] * 4, vocab).phonemes == []

    def test_merged_tokens(self, vocab):
        ids = [vocab.ids[t] for t in ["j", "uː", "n", "ɪ", "p", "ɛ", "r", "ʊ.m"]]
        assert decode(ids, vocab).phonemes == "j uː n ɪ p ɛ r ʊ m".split()

    def test_unk_and_pad_dropped(self, vocab):
        assert decode([vocab.ids[PAD], vocab.ids[UNK], vocab.ids["n"]], vocab).phonemes == ["n"]


def test_collate_pads(trimmed, vocab):
    a = encode(trimmed.rows, "Latin", vocab, "train")
    b = encode([("French", ["n"]), ("Latin", ["n"])], "Latin", vocab, "train")
    ids, pad, labels = collate([a, b])
    assert ids.shape == (2, 4, 11) and labels.shape == (2, 11)
    assert pad[1, 2:].all() and pad[1, :, 4:].all() and not pad[1, :2, :4].any()
    assert (ids[1][pad[1]] == vocab.pad_id).all()
    assert (labels[1, 4:] == IGNORE).all()
    np.testing.assert_array_equal(ids[0], a.ids)
