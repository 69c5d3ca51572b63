"""Token vocabulary and the 2D integer grids fed to the encoder.

Every row of a grid reads ``[CLS] [<language>] site tokens... [SEP]`` and is
right-padded with ``[PAD]`` when instances are batched.  The row being
predicted has all of its site tokens replaced by ``[MASK]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .alignment import Msa
from .errors import EmptyCorpus, UnknownLanguageToken
from .phonology import GAP, SEPARATOR

PAD, CLS, SEP, MASK, UNK = "[PAD]", "[CLS]", "[SEP]", "[MASK]", "[UNK]"
SPECIALS = (PAD, CLS, SEP, MASK, GAP, UNK)
IGNORE = -100


def language_token(name: str) -> str:
    return f"[{name}]"


class Vocabulary:
    """Bijection between tokens and integer ids; ``[PAD]`` is always 0."""

    def __init__(self, tokens: Sequence[str], languages: Sequence[str]):
        self.tokens = list(tokens)
        self.languages = list(languages)
        self.ids = {t: i for i, t in enumerate(self.tokens)}
        if len(self.ids) != len(self.tokens):
            raise ValueError("duplicate tokens in vocabulary")
        if tuple(self.tokens[: len(SPECIALS)]) != SPECIALS:
            raise ValueError("vocabulary must start with the special tokens")
        for lang in self.languages:
            if language_token(lang) not in self.ids:
                raise ValueError(f"missing language token for {lang!r}")
        self.pad_id = self.ids[PAD]
        self.cls_id = self.ids[CLS]
        self.sep_id = self.ids[SEP]
        self.mask_id = self.ids[MASK]
        self.gap_id = self.ids[GAP]
        self.unk_id = self.ids[UNK]
        self._language_ids = {self.ids[language_token(lang)] for lang in self.languages}

    def __len__(self) -> int:
        return len(self.tokens)

    def __eq__(self, other) -> bool:
        return (isinstance(other, Vocabulary) and self.tokens == other.tokens
                and self.languages == other.languages)

    def id_of(self, token: str) -> int:
        return self.ids.get(token, self.unk_id)

    def language_id(self, language: str) -> int:
        tok = language_token(language)
        if tok not in self.ids or language not in self.languages:
            raise UnknownLanguageToken(f"no vocabulary token for language {language!r}")
        return self.ids[tok]

    def is_special(self, idx: int) -> bool:
        return idx < len(SPECIALS) or idx in self._language_ids

    def save(self, path) -> None:
        # language tokens are recognisable by their brackets
        Path(path).write_text("".join(t + "\n" for t in self.tokens), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        tokens = Path(path).read_text(encoding="utf-8").split("\n")
        if tokens and tokens[-1] == "":
            tokens.pop()
        langs = [t[1:-1] for t in tokens[len(SPECIALS):] if t.startswith("[") and t.endswith("]")]
        return cls(tokens, langs)


def build_vocab(msas: Iterable[Msa], languages: Iterable[str]) -> Vocabulary:
    """Specials, then language tokens, then site tokens in first-seen order."""
    msas = list(msas)
    if not msas:
        raise EmptyCorpus("cannot build a vocabulary from an empty corpus")
    languages = list(dict.fromkeys(languages))
    tokens = list(SPECIALS)
    seen = set(tokens)
    for lang in languages:
        tok = language_token(lang)
        if tok in seen:
            raise ValueError(f"language name {lang!r} collides with a special token")
        tokens.append(tok)
        seen.add(tok)
    for msa in msas:
        for _, sites in msa.rows:
            for tok in sites:
                if tok not in seen:
                    if tok.startswith("[") and tok.endswith("]"):
                        raise ValueError(f"site token {tok!r} looks like a special token")
                    tokens.append(tok)
                    seen.add(tok)
    return Vocabulary(tokens, languages)


@dataclass
class TokenGrid:
    ids: np.ndarray        # (rows, width) int64
    pad_mask: np.ndarray   # (rows, width) bool, True at [PAD]
    label_ids: np.ndarray  # (width,) int64, IGNORE where unsupervised
    target_row: int

    @property
    def width(self) -> int:
        return self.ids.shape[1]

    @property
    def num_rows(self) -> int:
        return self.ids.shape[0]


@dataclass
class DecodedWord:
    language_id: str
    phonemes: list[str]

    def __str__(self) -> str:
        return " ".join(self.phonemes)


def encode(rows: Sequence[tuple[str, Sequence[str]]], unknown_language: str,
           vocab: Vocabulary, mode: str = "train") -> TokenGrid:
    """Lay out an alignment as a grid with the unknown language's row masked.

    In ``train`` mode the unknown row must be part of ``rows`` and its sites
    become the labels.  In ``infer`` mode the unknown word is absent and an
    all-``[MASK]`` row of the alignment width is appended.  The unknown row is
    always placed last.
    """
    if mode not in ("train", "infer"):
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
    rows = list(rows)
    width = len(rows[0][1]) if rows else 0
    known = [(lang, sites) for lang, sites in rows if lang != unknown_language]
    gold = None
    if mode == "train":
        if len(known) == len(rows):
            raise UnknownLanguageToken(f"{unknown_language!r} has no row in the alignment")
        gold = next(sites for lang, sites in rows if lang == unknown_language)
    elif len(known) != len(rows):
        raise ValueError(f"{unknown_language!r} must be absent from the alignment in infer mode")

    target_lang_id = vocab.language_id(unknown_language)
    grid = np.empty((len(known) + 1, width + 3), dtype=np.int64)
    for r, (lang, sites) in enumerate(known):
        grid[r, 0] = vocab.cls_id
        grid[r, 1] = vocab.language_id(lang)
        grid[r, 2:-1] = [vocab.id_of(t) for t in sites]
        grid[r, -1] = vocab.sep_id
    grid[-1, 0] = vocab.cls_id
    grid[-1, 1] = target_lang_id
    grid[-1, 2:-1] = vocab.mask_id
    grid[-1, -1] = vocab.sep_id

    labels = np.full(width + 3, IGNORE, dtype=np.int64)
    if gold is not None:
        labels[2:-1] = [vocab.id_of(t) for t in gold]
        labels[-1] = vocab.sep_id
    return TokenGrid(grid, np.zeros_like(grid, dtype=bool), labels, len(known))


def decode(ids: Iterable[int], vocab: Vocabulary, language: str = "") -> DecodedWord:
    """Turn a column of predicted ids back into a phoneme list."""
    phonemes: list[str] = []
    for i in ids:
        i = int(i)
        if i == IGNORE or vocab.is_special(i):
            continue
        phonemes.extend(vocab.tokens[i].split(SEPARATOR))
    return DecodedWord(language, phonemes)


def collate(grids: Sequence[TokenGrid], pad_id: int = 0):
    """Stack grids into padded (batch, rows, width) arrays."""
    n_rows = max(g.num_rows for g in grids)
    width = max(g.width for g in grids)
    ids = np.full((len(grids), n_rows, width), pad_id, dtype=np.int64)
    pad = np.ones((len(grids), n_rows, width), dtype=bool)
    labels = np.full((len(grids), width), IGNORE, dtype=np.int64)
    for b, g in enumerate(grids):
        r, w = g.ids.shape
        ids[b, :r, :w] = g.ids
        pad[b, :r, :w] = g.pad_mask
        labels[b, :w] = g.label_ids
    return ids, pad, labels
