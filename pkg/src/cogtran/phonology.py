"""IPA segmentation and sound-class lookup.

Word forms arrive already segmented (one IPA segment per space-delimited
token).  Alignment does not compare segments directly but the coarse sound
classes they fall into, scored with a small integer matrix.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping

from .errors import BadToken, EmptyForm

GAP = "-"
SEPARATOR = "."

_TONE_CHARS = set("0123456789⁰¹²³⁴⁵⁶⁷⁸⁹₀₁₂₃₄₅₆₇₈₉˥˦˧˨˩")
_DIGIT_VALUE = {c: i for i, c in enumerate("0123456789")}
_DIGIT_VALUE.update({c: i for i, c in enumerate("⁰¹²³⁴⁵⁶⁷⁸⁹")})
_DIGIT_VALUE.update({c: i for i, c in enumerate("₀₁₂₃₄₅₆₇₈₉")})
# Chao tone letters, highest first
_DIGIT_VALUE.update({"˥": 5, "˦": 4, "˧": 3, "˨": 2, "˩": 1})

TONE_LEVEL, TONE_RISING, TONE_FALLING = "1", "2", "3"


def segment(form: str) -> list[str]:
    """Split a space-segmented IPA form into phoneme tokens.

    >>> segment("  t͡ʃ  e ")
    ['t͡ʃ', 'e']
    """
    tokens = form.split()
    if not tokens:
        raise EmptyForm(f"no segments in form {form!r}")
    for tok in tokens:
        if tok == GAP or tok == SEPARATOR:
            raise BadToken(f"reserved symbol {tok!r} in form {form!r}")
    return tokens


def is_tone(p: str) -> bool:
    return bool(p) and all(c in _TONE_CHARS for c in p)


def tone_class(p: str) -> str:
    values = [_DIGIT_VALUE[c] for c in p if c in _DIGIT_VALUE]
    if len(values) < 2 or values[0] == values[-1]:
        return TONE_LEVEL
    return TONE_RISING if values[-1] > values[0] else TONE_FALLING


def strip_modifiers(p: str) -> str:
    """Drop length marks, aspiration and other modifier letters, combining
    diacritics and tone digits."""
    kept = []
    for c in unicodedata.normalize("NFD", p):
        if c in _TONE_CHARS:
            continue
        cat = unicodedata.category(c)
        if cat in ("Mn", "Me", "Lm", "Sk"):
            continue
        kept.append(c)
    return unicodedata.normalize("NFC", "".join(kept))


@dataclass(frozen=True, eq=False)
class SoundClassModel:
    class_of: Mapping[str, str]
    classes: tuple[str, ...]
    matrix: tuple[tuple[int, ...], ...]
    gap_penalty: int = -4
    unknown_class: str = "0"
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index = {c: i for i, c in enumerate(self.classes)}
        object.__setattr__(self, "_index", index)
        n = len(self.classes)
        if len(index) != n:
            raise ValueError("duplicate class symbols in score matrix")
        if any(len(row) != n for row in self.matrix) or len(self.matrix) != n:
            raise ValueError("score matrix is not square")
        for i in range(n):
            for j in range(i):
                if self.matrix[i][j] != self.matrix[j][i]:
                    raise ValueError(
                        f"score matrix not symmetric at {self.classes[i]}/{self.classes[j]}"
                    )
        missing = set(self.class_of.values()) - set(index)
        if self.unknown_class not in index:
            missing.add(self.unknown_class)
        if missing:
            raise ValueError(f"classes without scores: {sorted(missing)}")
        if self.gap_penalty >= min(self.matrix[i][i] for i in range(n)):
            raise ValueError("gap penalty must be below every self-match score")

    @classmethod
    def from_files(cls, classes_path, scores_path, gap_penalty: int = -4,
                   unknown_class: str = "0") -> "SoundClassModel":
        class_of = read_class_table(Path(classes_path).read_text(encoding="utf-8"))
        symbols, matrix = read_score_matrix(Path(scores_path).read_text(encoding="utf-8"))
        return cls(class_of, symbols, matrix, gap_penalty, unknown_class)

    def index(self, cls_symbol: str) -> int:
        return self._index[cls_symbol]

    def score(self, a: str, b: str) -> int:
        """Score two class symbols."""
        return self.matrix[self._index[a]][self._index[b]]

    def classify(self, p: str) -> str:
        return classify(p, self)


def classify(p: str, m: SoundClassModel) -> str:
    """Map a phoneme to its sound class, falling back on the bare segment."""
    cls = m.class_of.get(p)
    if cls is not None:
        return cls
    if is_tone(p):
        tone = tone_class(p)
        if tone in m._index:
            return tone
    bare = strip_modifiers(p)
    if bare:
        cls = m.class_of.get(bare)
        if cls is not None:
            return cls
        # diphthongs and unlisted clusters: fall back on the first segment
        cls = m.class_of.get(bare[0])
        if cls is not None:
            return cls
    return m.unknown_class


def read_class_table(text: str) -> dict[str, str]:
    class_of = {}
    for n, line in enumerate(text.splitlines()):
        if not line.strip():
            continue
        seg, _, cls = line.partition("\t")
        if n == 0 and seg == "SEGMENT":
            continue
        if not cls:
            raise ValueError(f"line {n + 1}: expected SEGMENT<TAB>CLASS")
        class_of[unicodedata.normalize("NFC", seg)] = cls
    return class_of


def read_score_matrix(text: str) -> tuple[tuple[str, ...], tuple[tuple[int, ...], ...]]:
    lines = [line for line in text.splitlines() if line.strip()]
    header = lines[0].split("\t")[1:]
    rows = {}
    for line in lines[1:]:
        cells = line.split("\t")
        rows[cells[0]] = [int(c) for c in cells[1:]]
    if list(rows) != header:
        raise ValueError("score matrix row labels must match the header")
    return tuple(header), tuple(tuple(rows[c]) for c in header)


@lru_cache(maxsize=1)
def default_model() -> SoundClassModel:
    """The built-in SCA-style model shipped with the package."""
    data = resources.files("cogtran") / "data"
    return SoundClassModel(
        read_class_table((data / "sound_classes.tsv").read_text(encoding="utf-8")),
        *read_score_matrix((data / "sound_scores.tsv").read_text(encoding="utf-8")),
    )
