"""Seeded toy language families with regular sound laws.

Used for the bundled offline sample and for tests.  Proto-words are random
CV(C) syllable strings; each daughter applies its own ordered list of sound
changes, so reflexes are predictable from the proto-form and vice versa.
"""

from __future__ import annotations

import random

from .dataio import CognateSet, Dataset

CONSONANTS = ["p", "t", "k", "b", "d", "g", "m", "n", "s", "l", "r", "w", "j"]
VOWELS = ["a", "e", "i", "o", "u", "aː", "iː", "uː"]
FRONT = {"i", "e", "iː", "ɛ"}

_SUBSTITUTIONS = [
    ("p", "f"), ("b", "v"), ("d", "ð"), ("g", "ɣ"), ("s", "h"), ("w", "v"),
    ("o", "u"), ("e", "ɛ"), ("a", "ɑ"), ("l", "r"), ("n", "ŋ"), ("t", "θ"),
]
_PALATAL = [("k", "tʃ"), ("g", "dʒ"), ("t", "ts"), ("s", "ʃ")]
_LENITION = [("t", "d"), ("p", "b"), ("k", "g")]


def _is_vowel(seg: str) -> bool:
    return seg.rstrip("ː") in {"a", "e", "i", "o", "u", "ɛ", "ɑ"}


def apply_rules(word: list[str], rules: list[tuple]) -> list[str]:
    for rule in rules:
        kind = rule[0]
        if kind == "sub":
            word = [rule[2] if s == rule[1] else s for s in word]
        elif kind == "palatal":
            word = [rule[2] if s == rule[1] and i + 1 < len(word) and word[i + 1] in FRONT else s
                    for i, s in enumerate(word)]
        elif kind == "lenition":
            word = [rule[2] if (s == rule[1] and 0 < i < len(word) - 1
                                and _is_vowel(word[i - 1]) and _is_vowel(word[i + 1])) else s
                    for i, s in enumerate(word)]
        elif kind == "unlength":
            word = [s.rstrip("ː") for s in word]
        elif kind == "drop_final_vowel":
            if len(word) > 2 and _is_vowel(word[-1]):
                word = word[:-1]
        elif kind == "drop_final_consonant":
            if len(word) > 2 and not _is_vowel(word[-1]):
                word = word[:-1]
        elif kind == "epenthesis":
            if word and word[0] == "s":
                word = ["e"] + word
    return word


def random_rules(rng: random.Random) -> list[tuple]:
    rules = [("sub", a, b) for a, b in rng.sample(_SUBSTITUTIONS, rng.randint(2, 4))]
    rules += [("palatal", a, b) for a, b in rng.sample(_PALATAL, rng.randint(0, 2))]
    rules += [("lenition", a, b) for a, b in rng.sample(_LENITION, rng.randint(0, 2))]
    for extra in ("unlength", "drop_final_vowel", "drop_final_consonant", "epenthesis"):
        if rng.random() < 0.35:
            rules.append((extra,))
    rng.shuffle(rules)
    return rules


def random_word(rng: random.Random) -> list[str]:
    word = []
    for _ in range(rng.randint(2, 3)):
        word.append(rng.choice(CONSONANTS))
        word.append(rng.choice(VOWELS))
    if rng.random() < 0.4:
        word.append(rng.choice(CONSONANTS[:9]))
    return word


def synthetic_family(name: str, n_sets: int, n_daughters: int = 4, seed: int = 0,
                     attestation: float = 0.85) -> Dataset:
    """A family with proto-language ``Proto<name>`` and daughters ``<name>1..n``."""
    rng = random.Random(f"{name}:{seed}")
    proto = f"Proto{name}"
    daughters = [f"{name}{i + 1}" for i in range(n_daughters)]
    laws = {d: random_rules(rng) for d in daughters}
    sets = []
    seen = set()
    while len(sets) < n_sets:
        root = random_word(rng)
        if tuple(root) in seen:
            continue
        seen.add(tuple(root))
        present = [d for d in daughters if rng.random() < attestation]
        while len(present) < 2:
            present = sorted(set(present) | {rng.choice(daughters)}, key=daughters.index)
        words = {proto: root}
        for d in present:
            words[d] = apply_rules(list(root), laws[d])
        sets.append(CognateSet(str(len(sets) + 1), name, words, proto))
    return Dataset(name, [proto] + daughters, sets, proto)
