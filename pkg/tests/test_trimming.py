import random

import pytest

from cogtran.alignment import Msa
from cogtran.errors import EmptyToken, TooFewRows
from cogtran.phonology import GAP
from cogtran.trimming import TrimmedMsa, split_merged, trim

from conftest import TABLE2_ROWS, rows


def random_msa(rng: random.Random) -> Msa:
    n_rows = rng.randint(2, 5)
    width = rng.randint(1, 9)
    out = []
    for r in range(n_rows):
        sites = [GAP if rng.random() < 0.4 else rng.choice("ptkaeiou") for _ in range(width)]
        if all(s == GAP for s in sites):
            sites[rng.randrange(width)] = "m"
        out.append((f"L{r}", sites))
    return Msa(out)


def expand(msa: Msa) -> dict[str, list[str]]:
    return {lang: [p for t in sites if t != GAP for p in split_merged(t)]
            for lang, sites in msa.rows}


class TestSplitMerged:
    @pytest.mark.parametrize("token,parts", [("j.ɛ", ["j", "ɛ"]), ("n", ["n"]),
                                             ("ʊ.m", ["ʊ", "m"]), ("a.b.c", ["a", "b", "c"])])
    def test_examples(self, token, parts):
        assert split_merged(token) == parts

    @pytest.mark.parametrize("token", ["", "-", "a.", ".a", "a..b"])
    def test_empty(self, token):
        with pytest.raises(EmptyToken):
            split_merged(token)


class TestTrim:
    def test_table2_golden(self, table1):
        out = trim(table1)
        assert isinstance(out, TrimmedMsa)
        assert out.width == 8
        assert out.rows == rows(TABLE2_ROWS)
        assert out.row("French")[3] == "j.ɛ"
        assert out.row("Latin")[-1] == "ʊ.m"

    def test_no_lone_sites_unchanged(self):
        msa = Msa([("a", ["p", "a", "-"]), ("b", ["p", "-", "t"]), ("c", ["-", "a", "t"])])
        assert trim(msa).rows == msa.rows

    def test_merge_into_gap_replaces_it(self):
        msa = Msa([("a", ["x", "-", "t"]), ("b", ["-", "-", "t"]), ("c", ["-", "a", "t"])])
        # column 0 folds into a's gap at column 1, leaving a column with two fillers
        assert trim(msa).rows == [("a", ["x", "t"]), ("b", ["-", "t"]), ("c", ["a", "t"])]

    def test_cascade(self):
        msa = Msa([("a", ["x", "y", "t"]), ("b", ["-", "-", "t"])])
        assert trim(msa).rows == [("a", ["x.y.t"]), ("b", ["t"])]

    def test_too_few_rows(self):
        with pytest.raises(TooFewRows):
            trim(Msa([("a", ["p"])]))

    def test_round_trip_random(self):
        rng = random.Random(2024)
        for _ in range(1000):
            msa = random_msa(rng)
            out = trim(msa)
            assert expand(out) == msa.degapped()
            assert out.languages == msa.languages
            assert len({len(s) for _, s in out.rows}) == 1
            if out.width > 1:
                for j in range(out.width):
                    assert sum(t != GAP for t in out.column(j)) != 1

    def test_idempotent(self):
        rng = random.Random(9)
        for _ in range(100):
            once = trim(random_msa(rng))
            assert trim(once).rows == once.rows
