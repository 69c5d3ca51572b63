"""Cognate wordlists on disk.

A wordlist is a UTF-8 TSV file::

    COGID<TAB>lang1<TAB>...<TAB>langN
    12<TAB>p a t e r<TAB><TAB>p a d r e

Each row is one cognate set, cells hold space-segmented IPA, an empty cell
means the language has no word in that set and a cell holding exactly ``?``
marks the word to be predicted.  A data directory holds one wordlist per
family (the file stem is the family name) and optionally ``protos.tsv``
mapping ``FAMILY<TAB>PROTO_LANGUAGE``.
"""

from __future__ import annotations

import hashlib
import io
import json
import logging
import math
import urllib.request
import zipfile
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (EmptyDataset, FetchError, MalformedHeader, ProportionOutOfRange,
                     RowWidthMismatch)
from .phonology import segment

log = logging.getLogger(__name__)

TARGET_CELL = "?"
PROTOS_FILE = "protos.tsv"


@dataclass
class CognateSet:
    id: str
    family: str
    words: dict[str, list[str]]
    proto_language: str | None = None
    target: str | None = None

    @property
    def attested(self) -> list[str]:
        return list(self.words)


@dataclass
class Dataset:
    family: str
    languages: list[str]
    cognate_sets: list[CognateSet] = field(default_factory=list)
    proto_language: str | None = None

    def __len__(self) -> int:
        return len(self.cognate_sets)

    def subset(self, sets: Iterable[CognateSet]) -> "Dataset":
        return Dataset(self.family, list(self.languages), list(sets), self.proto_language)

    def without_language(self, language: str) -> "Dataset":
        """Drop one language everywhere, e.g. the proto-language for pre-training."""
        sets = []
        for cs in self.cognate_sets:
            words = {k: v for k, v in cs.words.items() if k != language}
            if words:
                sets.append(CognateSet(cs.id, cs.family, words))
        return Dataset(self.family, [l for l in self.languages if l != language], sets)


def parse_tsv(text: str, family: str, proto_language: str | None = None) -> Dataset:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise EmptyDataset(f"{family}: empty file")
    header = lines[0].rstrip("\r").split("\t")
    if header[0] != "COGID" or len(header) < 2 or any(not h for h in header[1:]):
        raise MalformedHeader(f"{family}: header must be COGID<TAB>lang1<TAB>...")
    languages = header[1:]
    if len(set(languages)) != len(languages):
        raise MalformedHeader(f"{family}: duplicate language in header")
    if proto_language is not None and proto_language not in languages:
        raise MalformedHeader(f"{family}: proto-language {proto_language!r} not in header")
    sets = []
    for n, line in enumerate(lines[1:], 2):
        cells = line.rstrip("\r").split("\t")
        if len(cells) != len(header):
            raise RowWidthMismatch(f"{family} line {n}: {len(cells)} cells, header has {len(header)}")
        words, target = {}, None
        for lang, cell in zip(languages, cells[1:]):
            cell = cell.strip()
            if not cell:
                continue
            if cell == TARGET_CELL:
                target = lang
            else:
                words[lang] = segment(cell)
        if not words and target is None:
            continue
        proto = proto_language if proto_language in words or proto_language == target else None
        sets.append(CognateSet(cells[0], family, words, proto, target))
    if not sets:
        raise EmptyDataset(f"{family}: no cognate sets")
    return Dataset(family, languages, sets, proto_language)


def load_tsv(path, family: str | None = None, proto_language: str | None = None) -> Dataset:
    path = Path(path)
    return parse_tsv(path.read_text(encoding="utf-8"), family or path.stem, proto_language)


def format_tsv(dataset: Dataset) -> str:
    out = ["\t".join(["COGID"] + dataset.languages)]
    for cs in dataset.cognate_sets:
        cells = [cs.id]
        for lang in dataset.languages:
            if lang == cs.target:
                cells.append(TARGET_CELL)
            else:
                cells.append(" ".join(cs.words.get(lang, ())))
        out.append("\t".join(cells))
    return "\n".join(out) + "\n"


def save_tsv(dataset: Dataset, path) -> None:
    Path(path).write_text(format_tsv(dataset), encoding="utf-8", newline="\n")


def read_protos(directory) -> dict[str, str]:
    path = Path(directory) / PROTOS_FILE
    if not path.exists():
        return {}
    protos = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        fam, _, proto = line.partition("\t")
        if fam and proto and fam != "FAMILY":
            protos[fam] = proto.strip()
    return protos


def load_collection(path, proto_language: str | None = None) -> list[Dataset]:
    """Load one wordlist file or every family wordlist in a directory."""
    path = Path(path)
    if path.is_file():
        return [load_tsv(path, proto_language=proto_language)]
    protos = read_protos(path)
    files = sorted(p for p in path.glob("*.tsv") if p.name != PROTOS_FILE)
    if not files:
        raise EmptyDataset(f"no wordlists in {path}")
    return [load_tsv(f, proto_language=protos.get(f.stem, proto_language)) for f in files]


def test_size(n: int, proportion: float) -> int:
    # half-up rounding, not banker's
    return int(math.floor(proportion * n + 0.5))


def split(dataset: Dataset, test_proportion: float, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded train/test partition at cognate-set granularity."""
    if not 0 < test_proportion < 1:
        raise ProportionOutOfRange(f"test proportion must lie in (0, 1), got {test_proportion}")
    n = len(dataset.cognate_sets)
    perm = np.random.default_rng(seed).permutation(n)
    test_idx = set(perm[: test_size(n, test_proportion)].tolist())
    train = [cs for i, cs in enumerate(dataset.cognate_sets) if i not in test_idx]
    test = [cs for i, cs in enumerate(dataset.cognate_sets) if i in test_idx]
    return dataset.subset(train), dataset.subset(test)


def split_collection(datasets: Sequence[Dataset], test_proportion: float, seed: int):
    pairs = [split(d, test_proportion, seed) for d in datasets]
    return [p[0] for p in pairs], [p[1] for p in pairs]


def summarize(dataset: Dataset) -> tuple[int, int, int]:
    """(languages, words, cognate sets); words counts filled cells."""
    words = sum(len(cs.words) for cs in dataset.cognate_sets)
    return len(dataset.languages), words, len(dataset.cognate_sets)


def sample_dir() -> Path:
    """The small synthetic sample bundled for offline use."""
    return Path(str(resources.files("cogtran") / "data" / "sample"))


# fetching the published collections

def fetch_manifest() -> dict:
    return json.loads((resources.files("cogtran") / "data" / "fetch_manifest.json")
                      .read_text(encoding="utf-8"))


def _download(url: str, timeout: float = 60.0) -> bytes:
    try:
        with urllib.request.urlopen(url, timeout=timeout) as resp:
            return resp.read()
    except OSError as exc:
        raise FetchError(f"cannot download {url}: {exc}") from exc


def _normalize_wide(text: str) -> str | None:
    """Re-emit a wide cognate TSV in canonical form; None if not one."""
    lines = [l.rstrip("\r") for l in text.split("\n")]
    if not lines or not lines[0].startswith("COGID\t"):
        return None
    header = lines[0].split("\t")
    out = [lines[0]]
    for line in lines[1:]:
        if not line.strip():
            continue
        cells = line.split("\t")
        cells += [""] * (len(header) - len(cells))
        out.append("\t".join(" ".join(c.split()) for c in cells[: len(header)]))
    return "\n".join(out) + "\n"


def convert_archive(blob: bytes, dest: Path, collection: str) -> list[Path]:
    """Extract every wide-format cognate TSV of a repository zip.

    ``<repo>/<...>/<family>/<name>.tsv`` becomes ``dest/<collection>/<name>/<family>.tsv``.
    """
    written = []
    with zipfile.ZipFile(io.BytesIO(blob)) as zf:
        for info in sorted(zf.infolist(), key=lambda i: i.filename):
            parts = info.filename.split("/")
            if info.is_dir() or not parts[-1].endswith(".tsv") or len(parts) < 3:
                continue
            text = _normalize_wide(zf.read(info).decode("utf-8"))
            if text is None:
                continue
            name, family = parts[-1][:-4], parts[-2]
            # keep the training/surprise partition of the source tree apart
            group = parts[-3] if len(parts) > 3 else collection
            target = dest / collection / group / name / f"{family}.tsv"
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(text, encoding="utf-8", newline="\n")
            written.append(target)
    return written


def fetch(dest, manifest: dict | None = None) -> dict:
    """Download the public collections, verify pinned hashes, convert to wordlists.

    Writes ``dest/fetched.json`` recording source URLs and SHA-256 hashes.
    """
    dest = Path(dest)
    manifest = manifest or fetch_manifest()
    record = {"sources": []}
    for src in manifest["sources"]:
        blob = _download(src["url"])
        digest = hashlib.sha256(blob).hexdigest()
        pinned = src.get("sha256")
        if pinned and pinned != digest:
            raise FetchError(f"hash mismatch for {src['url']}: {digest} != {pinned}")
        files = convert_archive(blob, dest, src["name"])
        log.info("%s: %d wordlists", src["name"], len(files))
        record["sources"].append({"name": src["name"], "url": src["url"], "sha256": digest,
                                  "files": [str(f.relative_to(dest)) for f in files]})
    dest.mkdir(parents=True, exist_ok=True)
    (dest / "fetched.json").write_text(json.dumps(record, indent=1) + "\n", encoding="utf-8")
    return record
