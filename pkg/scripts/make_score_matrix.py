"""Regenerate src/cogtran/data/sound_scores.tsv from the scoring rules.

same class +5, compatible classes +2, vowel against consonant (or tone against
segment) -10, anything else -2; the unknown class scores -2 everywhere.
"""
from pathlib import Path

VOWELS = list("AEIOUY")
CONSONANTS = list("PBTDKGCSMNLRWJH!")
TONES = ["1", "2", "3"]
MARKER = "_"
UNKNOWN = "0"

COMPATIBLE = {
    frozenset(p)
    for p in [
        "PB", "TD", "KG", "CS", "TC", "KC", "TS", "MN", "LR", "WJ", "GH", "BW",
    ]
}
COMPATIBLE |= {frozenset((a, b)) for a in VOWELS for b in VOWELS if a != b}
COMPATIBLE |= {frozenset((a, b)) for a in TONES for b in TONES if a != b}


def group(c):
    if c in VOWELS:
        return "V"
    if c in CONSONANTS:
        return "C"
    if c in TONES:
        return "T"
    return c


def score(a, b):
    if UNKNOWN in (a, b):
        return -2
    if a == b:
        return 5
    if frozenset((a, b)) in COMPATIBLE:
        return 2
    ga, gb = group(a), group(b)
    if {ga, gb} in ({"V", "C"}, {"T", "V"}, {"T", "C"}):
        return -10
    return -2


def main():
    symbols = VOWELS + CONSONANTS + TONES + [MARKER, UNKNOWN]
    out = Path(__file__).resolve().parents[1] / "src" / "cogtran" / "data" / "sound_scores.tsv"
    lines = ["\t".join(["CLASS"] + symbols)]
    for a in symbols:
        lines.append("\t".join([a] + [str(score(a, b)) for b in symbols]))
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
