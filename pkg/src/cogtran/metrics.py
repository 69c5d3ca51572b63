"""Evaluation of predicted words against gold words.

Edit distances count phoneme tokens, not characters.  B-Cubed F1 treats every
column of the pairwise alignment of prediction and gold as an item labelled by
its (predicted token, gold token) pair, so a sound that is consistently
replaced by the same wrong sound is penalised less than scattered errors.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .alignment import align_pair
from .errors import BothEmpty, EmptySequence
from .phonology import GAP, SEPARATOR, SoundClassModel, default_model


def clean_tokens(tokens: Iterable[str]) -> list[str]:
    """Strip gaps and bracketed special tokens; split merged tokens."""
    out = []
    for tok in tokens:
        if tok == GAP or (tok.startswith("[") and tok.endswith("]")):
            continue
        out.extend(p for p in tok.split(SEPARATOR) if p)
    return out


def edit_distance(a: Sequence[str], b: Sequence[str]) -> int:
    """Levenshtein distance over token sequences."""
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i] + [0] * len(b)
        for j, y in enumerate(b, 1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y))
        prev = cur
    return prev[-1]


def ned(a: Sequence[str], b: Sequence[str]) -> float:
    """Edit distance divided by the longer sequence's length."""
    if not a and not b:
        raise BothEmpty("normalized edit distance of two empty sequences")
    return edit_distance(a, b) / max(len(a), len(b))


def bcubed_from_columns(columns: Sequence[tuple[str, str]]) -> float:
    pred_count: dict[str, int] = defaultdict(int)
    gold_count: dict[str, int] = defaultdict(int)
    pair_count: dict[tuple[str, str], int] = defaultdict(int)
    for p, g in columns:
        pred_count[p] += 1
        gold_count[g] += 1
        pair_count[p, g] += 1
    n = len(columns)
    precision = sum(pair_count[p, g] / pred_count[p] for p, g in columns) / n
    recall = sum(pair_count[p, g] / gold_count[g] for p, g in columns) / n
    return 2 * precision * recall / (precision + recall)


def bcubed_f1(pred: Sequence[str], gold: Sequence[str],
              m: SoundClassModel | None = None) -> float:
    if not pred or not gold:
        raise EmptySequence("B-Cubed F1 needs two non-empty sequences")
    alm = align_pair(pred, gold, m or default_model())
    return bcubed_from_columns(list(zip(alm.row_a, alm.row_b)))


@dataclass
class Scores:
    ed: float
    ned: float
    bc: float
    n: int

    def to_dict(self) -> dict:
        return {"ed": self.ed, "ned": self.ned, "bc": self.bc, "n": self.n}


@dataclass
class EvalReport:
    ed: float
    ned: float
    bc: float
    n: int
    per_family: dict[str, Scores] = field(default_factory=dict)

    def to_dict(self, per_family: bool = True) -> dict:
        out = {"ed": self.ed, "ned": self.ned, "bc": self.bc, "n": self.n}
        if per_family:
            out["per_family"] = {f: s.to_dict() for f, s in sorted(self.per_family.items())}
        return out

    def to_json(self, per_family: bool = True) -> str:
        return json.dumps(self.to_dict(per_family), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        fams = {f: Scores(**s) for f, s in d.get("per_family", {}).items()}
        return cls(d["ed"], d["ned"], d["bc"], d["n"], fams)


def score_pair(pred: Sequence[str], gold: Sequence[str],
               m: SoundClassModel | None = None) -> tuple[int, float, float]:
    """ED, NED and BC of one prediction; an empty prediction gets BC 0."""
    pred, gold = clean_tokens(pred), clean_tokens(gold)
    bc = bcubed_f1(pred, gold, m) if pred and gold else (1.0 if pred == gold else 0.0)
    return edit_distance(pred, gold), ned(pred, gold), bc


def _mean(rows: list[tuple[int, float, float]]) -> tuple[float, float, float]:
    n = len(rows)
    return (sum(r[0] for r in rows) / n, sum(r[1] for r in rows) / n,
            sum(r[2] for r in rows) / n)


def evaluate(pairs: Iterable[tuple[Sequence[str], Sequence[str], str]],
             m: SoundClassModel | None = None) -> EvalReport:
    """Average ED/NED/BC over (prediction, gold, family) triples."""
    m = m or default_model()
    scored: list[tuple[int, float, float]] = []
    by_family: dict[str, list] = defaultdict(list)
    for pred, gold, family in pairs:
        s = score_pair(pred, gold, m)
        scored.append(s)
        by_family[family].append(s)
    if not scored:
        raise ValueError("nothing to evaluate")
    per_family = {f: Scores(*_mean(rows), len(rows)) for f, rows in by_family.items()}
    return EvalReport(*_mean(scored), len(scored), per_family)


def aggregate(reports: Sequence[EvalReport]) -> dict:
    """Mean and sample standard deviation of ED/NED/BC over several reports."""
    out = {}
    for key in ("ed", "ned", "bc"):
        vals = [getattr(r, key) for r in reports]
        mean = sum(vals) / len(vals)
        var = sum((v - mean) ** 2 for v in vals) / (len(vals) - 1) if len(vals) > 1 else 0.0
        out[key] = {"mean": mean, "std": math.sqrt(var)}
    families = sorted({f for r in reports for f in r.per_family})
    out["per_family"] = {}
    for fam in families:
        vals = [r.per_family[fam].bc for r in reports if fam in r.per_family]
        mean = sum(vals) / len(vals)
        var = sum((v - mean) ** 2 for v in vals) / (len(vals) - 1) if len(vals) > 1 else 0.0
        out["per_family"][fam] = {"bc_mean": mean, "bc_std": math.sqrt(var)}
    out["folds"] = len(reports)
    return out


@dataclass
class ErrorTable:
    rows: list[tuple[tuple[str, str], float]]

    def to_tsv(self) -> str:
        lines = ["RANK\tPAIR\tFREQUENCY"]
        for rank, ((a, b), freq) in enumerate(self.rows, 1):
            lines.append(f"{rank}\t{a}/{b}\t{freq:.6f}")
        return "\n".join(lines) + "\n"

    def as_dict(self) -> dict[tuple[str, str], float]:
        return dict(self.rows)


def substitutions(pred: Sequence[str], gold: Sequence[str],
                  m: SoundClassModel | None = None) -> list[tuple[str, str]]:
    """Unordered pairs of unequal tokens opposite each other in the alignment."""
    pred, gold = clean_tokens(pred), clean_tokens(gold)
    if not pred or not gold:
        return []
    alm = align_pair(pred, gold, m or default_model())
    return [tuple(sorted((p, g))) for p, g in zip(alm.row_a, alm.row_b)
            if p != GAP and g != GAP and p != g]


def sound_exchange_errors(pairs: Iterable[tuple[Sequence[str], Sequence[str], str]],
                          m: SoundClassModel | None = None) -> ErrorTable:
    """Rank sound exchanges after normalising within each family, then overall."""
    counts: dict[str, dict[tuple[str, str], int]] = defaultdict(lambda: defaultdict(int))
    for pred, gold, family in pairs:
        for pair in substitutions(pred, gold, m):
            counts[family][pair] += 1
    combined: dict[tuple[str, str], float] = defaultdict(float)
    for fam_counts in counts.values():
        total = sum(fam_counts.values())
        for pair, c in fam_counts.items():
            combined[pair] += c / total
    grand = sum(combined.values())
    rows = sorted(((pair, v / grand) for pair, v in combined.items()),
                  key=lambda kv: (-kv[1], kv[0]))
    return ErrorTable(rows)
