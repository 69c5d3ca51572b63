"""Sound-class based pairwise and progressive multiple alignment.

Pairwise alignment is global Needleman-Wunsch with a linear gap penalty over
sound-class scores.  Cognate sets with more than two words are aligned
progressively along a UPGMA guide tree, profile against profile.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

from .errors import DegenerateMatrix, DuplicateLanguage, EmptySequence
from .phonology import GAP, SoundClassModel, classify, default_model

# traceback moves
_DIAG, _UP, _LEFT = 0, 1, 2


@dataclass
class PairwiseAlignment:
    row_a: list[str]
    row_b: list[str]
    score: int


@dataclass
class GuideTree:
    """Binary UPGMA tree; a leaf has ``index`` set and no children."""

    height: float = 0.0
    index: int | None = None
    left: "GuideTree | None" = None
    right: "GuideTree | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.index is not None

    def leaves(self) -> list[int]:
        if self.is_leaf:
            return [self.index]
        return self.left.leaves() + self.right.leaves()

    def nodes(self) -> Iterator["GuideTree"]:
        yield self
        if not self.is_leaf:
            yield from self.left.nodes()
            yield from self.right.nodes()

    def topology(self):
        """Nested tuples of leaf indices, e.g. ``((0, 1), (2, 3))``."""
        if self.is_leaf:
            return self.index
        return (self.left.topology(), self.right.topology())


@dataclass
class Msa:
    """Rows of equal-length site lists, one row per language."""

    rows: list[tuple[str, list[str]]]

    @property
    def width(self) -> int:
        return len(self.rows[0][1]) if self.rows else 0

    @property
    def languages(self) -> list[str]:
        return [lang for lang, _ in self.rows]

    def row(self, language: str) -> list[str]:
        for lang, sites in self.rows:
            if lang == language:
                return sites
        raise KeyError(language)

    def column(self, j: int) -> list[str]:
        return [sites[j] for _, sites in self.rows]

    def degapped(self) -> dict[str, list[str]]:
        return {lang: [t for t in sites if t != GAP] for lang, sites in self.rows}

    def without(self, language: str) -> "Msa":
        """Drop one row and any column left with gaps only."""
        rows = [(lang, sites) for lang, sites in self.rows if lang != language]
        keep = [j for j in range(self.width) if any(s[j] != GAP for _, s in rows)]
        return type(self)([(lang, [s[j] for j in keep]) for lang, s in rows])

    def to_tsv(self) -> str:
        return "".join(lang + "\t" + "\t".join(sites) + "\n" for lang, sites in self.rows)


def _needleman_wunsch(n: int, m: int, sub: Callable[[int, int], float], gap: float):
    """Global alignment DP; returns (score, ops) with ops from start to end.

    Ties in the traceback prefer the diagonal, then a gap in the second
    sequence (up), then a gap in the first (left).
    """
    F = [[0.0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        F[i][0] = F[i - 1][0] + gap
    for j in range(1, m + 1):
        F[0][j] = F[0][j - 1] + gap
    for i in range(1, n + 1):
        Fi, Fp = F[i], F[i - 1]
        for j in range(1, m + 1):
            d = Fp[j - 1] + sub(i - 1, j - 1)
            u = Fp[j] + gap
            lft = Fi[j - 1] + gap
            Fi[j] = d if (d >= u and d >= lft) else (u if u >= lft else lft)
    ops = []
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and F[i][j] == F[i - 1][j - 1] + sub(i - 1, j - 1):
            ops.append(_DIAG)
            i, j = i - 1, j - 1
        elif i > 0 and F[i][j] == F[i - 1][j] + gap:
            ops.append(_UP)
            i -= 1
        else:
            ops.append(_LEFT)
            j -= 1
    ops.reverse()
    return F[n][m], ops


def align_pair(a: Sequence[str], b: Sequence[str],
               m: SoundClassModel | None = None) -> PairwiseAlignment:
    """Optimal global alignment of two phoneme sequences."""
    if not a or not b:
        raise EmptySequence("cannot align an empty sequence")
    m = m or default_model()
    ca = [m.index(classify(p, m)) for p in a]
    cb = [m.index(classify(p, m)) for p in b]
    S = m.matrix
    score, ops = _needleman_wunsch(len(a), len(b), lambda i, j: S[ca[i]][cb[j]], m.gap_penalty)
    row_a, row_b = [], []
    i = j = 0
    for op in ops:
        if op == _DIAG:
            row_a.append(a[i])
            row_b.append(b[j])
            i += 1
            j += 1
        elif op == _UP:
            row_a.append(a[i])
            row_b.append(GAP)
            i += 1
        else:
            row_a.append(GAP)
            row_b.append(b[j])
            j += 1
    return PairwiseAlignment(row_a, row_b, int(score))


def distance_matrix(seqs: Sequence[Sequence[str]],
                    m: SoundClassModel | None = None) -> list[list[float]]:
    """Pairwise distances ``1 - s(i,j) / max(s(i,i), s(j,j))`` clamped to [0, 1]."""
    m = m or default_model()
    n = len(seqs)
    self_scores = [align_pair(s, s, m).score for s in seqs]
    d = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            denom = max(self_scores[i], self_scores[j])
            if denom <= 0:
                # only possible with unknown-class material on both sides
                dij = 0.0 if list(seqs[i]) == list(seqs[j]) else 1.0
            else:
                s = align_pair(seqs[i], seqs[j], m).score
                dij = min(1.0, max(0.0, 1.0 - s / denom))
            d[i][j] = d[j][i] = dij
    return d


def build_upgma(d: Sequence[Sequence[float]]) -> GuideTree:
    """Average-linkage agglomeration; ties go to the lowest cluster-id pair."""
    n = len(d)
    if n < 2:
        raise DegenerateMatrix("UPGMA needs at least two items")
    clusters = {i: GuideTree(index=i) for i in range(n)}
    size = {i: 1 for i in range(n)}
    dist = {(i, j): float(d[i][j]) for i in range(n) for j in range(i + 1, n)}
    next_id = n
    while len(clusters) > 1:
        (a, b), dab = min(dist.items(), key=lambda kv: (kv[1], kv[0]))
        node = GuideTree(height=dab / 2, left=clusters.pop(a), right=clusters.pop(b))
        new = next_id
        next_id += 1
        for c in clusters:
            dac = dist.pop((min(a, c), max(a, c)))
            dbc = dist.pop((min(b, c), max(b, c)))
            dist[(c, new)] = (size[a] * dac + size[b] * dbc) / (size[a] + size[b])
        del dist[(a, b)]
        clusters[new] = node
        size[new] = size.pop(a) + size.pop(b)
    return next(iter(clusters.values()))


class _Profile:
    """A block of aligned rows with per-column sound-class counts."""

    def __init__(self, members: list[int], rows: list[list[str]], classes: list[list[int | None]]):
        self.members = members
        self.rows = rows
        self.classes = classes
        width = len(rows[0])
        self.counts = []
        for j in range(width):
            c = Counter(cl[j] for cl in classes if cl[j] is not None)
            self.counts.append((list(c.items()), sum(c.values())))

    @property
    def width(self) -> int:
        return len(self.rows[0])


def _column_score(x, y, S) -> float:
    # mean class score over all non-gap cross pairs
    items_x, nx = x
    items_y, ny = y
    total = 0
    for cx, kx in items_x:
        row = S[cx]
        for cy, ky in items_y:
            total += kx * ky * row[cy]
    return total / (nx * ny)


def _align_profiles(p: _Profile, q: _Profile, m: SoundClassModel) -> _Profile:
    S = m.matrix
    if len(p.rows) == 1 and len(q.rows) == 1:
        ca, cb = p.classes[0], q.classes[0]
        sub = lambda i, j: S[ca[i]][cb[j]]  # noqa: E731
    else:
        sub = lambda i, j: _column_score(p.counts[i], q.counts[j], S)  # noqa: E731
    _, ops = _needleman_wunsch(p.width, q.width, sub, m.gap_penalty)
    rows = [[] for _ in range(len(p.rows) + len(q.rows))]
    classes = [[] for _ in rows]
    i = j = 0
    np_ = len(p.rows)
    for op in ops:
        for r in range(np_):
            if op == _LEFT:
                rows[r].append(GAP)
                classes[r].append(None)
            else:
                rows[r].append(p.rows[r][i])
                classes[r].append(p.classes[r][i])
        for r in range(len(q.rows)):
            if op == _UP:
                rows[np_ + r].append(GAP)
                classes[np_ + r].append(None)
            else:
                rows[np_ + r].append(q.rows[r][j])
                classes[np_ + r].append(q.classes[r][j])
        if op != _LEFT:
            i += 1
        if op != _UP:
            j += 1
    return _Profile(p.members + q.members, rows, classes)


def progressive_align(words: Sequence[tuple[str, Sequence[str]]],
                      m: SoundClassModel | None = None) -> Msa:
    """Align a cognate set; rows come back in input order."""
    m = m or default_model()
    if not words:
        raise EmptySequence("no words to align")
    langs = [lang for lang, _ in words]
    if len(set(langs)) != len(langs):
        raise DuplicateLanguage(f"duplicate language in cognate set: {langs}")
    seqs = [list(w) for _, w in words]
    if any(not s for s in seqs):
        raise EmptySequence("cannot align an empty word")
    if len(seqs) == 1:
        return Msa([(langs[0], seqs[0])])

    classes = [[m.index(classify(p, m)) for p in s] for s in seqs]
    tree = build_upgma(distance_matrix(seqs, m))

    def walk(node: GuideTree) -> _Profile:
        if node.is_leaf:
            k = node.index
            return _Profile([k], [seqs[k]], [classes[k]])
        return _align_profiles(walk(node.left), walk(node.right), m)

    prof = walk(tree)
    by_member = dict(zip(prof.members, prof.rows))
    return Msa([(langs[k], by_member[k]) for k in range(len(seqs))])
