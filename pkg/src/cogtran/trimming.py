"""Training-time trimming of alignments.

A site where every language but one has a gap is folded into a neighbouring
site of the same row: the lone phoneme is prepended (with a "." separator) to
the row's token in the following site, or appended to the penultimate site
when the lone site is the last one.  Test alignments are never trimmed.
"""

from __future__ import annotations

from .alignment import Msa
from .errors import EmptyToken, TooFewRows
from .phonology import GAP, SEPARATOR


class TrimmedMsa(Msa):
    """An Msa whose tokens may be merged phoneme runs such as ``j.ɛ``."""


def split_merged(token: str) -> list[str]:
    if not token or token == GAP:
        raise EmptyToken(f"not a phoneme token: {token!r}")
    parts = token.split(SEPARATOR)
    if any(not p for p in parts):
        raise EmptyToken(f"empty segment in merged token {token!r}")
    return parts


def _join(first: str, second: str) -> str:
    if first == GAP:
        return second
    if second == GAP:
        return first
    return first + SEPARATOR + second


def _lone_row(column: list[str]) -> int | None:
    filled = [r for r, tok in enumerate(column) if tok != GAP]
    return filled[0] if len(filled) == 1 else None


def trim(msa: Msa) -> TrimmedMsa:
    if len(msa.rows) < 2:
        raise TooFewRows("trimming needs at least two rows")
    langs = msa.languages
    cols = [msa.column(j) for j in range(msa.width)]
    changed = True
    while changed and len(cols) > 1:
        changed = False
        j = 0
        while j < len(cols):
            r = _lone_row(cols[j])
            if r is None:
                j += 1
                continue
            lone = cols[j][r]
            if j + 1 < len(cols):
                cols[j + 1][r] = _join(lone, cols[j + 1][r])
            elif len(cols) > 1:
                cols[j - 1][r] = _join(cols[j - 1][r], lone)
            else:
                j += 1
                continue
            del cols[j]
            changed = True
    rows = [(lang, [c[r] for c in cols]) for r, lang in enumerate(langs)]
    return TrimmedMsa(rows)
