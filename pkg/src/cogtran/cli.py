"""``cogtran`` command-line entry point.

Every training-type subcommand writes a run directory::

    config.json   the resolved run configuration and package version
    losses.tsv    EPOCH<TAB>LOSS
    model/        model archive (see cogtran.archive)
    split.json    held-out cognate-set ids per family, when a test split is used
    report.json   evaluation on the held-out sets
"""

from __future__ import annotations

import argparse
import json
import logging
import subprocess
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import torch

from . import __version__
from .alignment import progressive_align
from .archive import load_model, save_model
from .dataio import Dataset, fetch, load_collection, split_collection
from .errors import CogtranError
from .metrics import sound_exchange_errors
from .model import PRESETS
from .phonology import segment
from .training import (TRAIN_PRESETS, TrainConfig, cross_validate, evaluate_model, finetune,
                       fit, predict, prepare_examples, pretrain, vocab_for, all_languages)
from .trimming import trim

log = logging.getLogger("cogtran")


@dataclass
class RunConfig:
    task: str = "proto"
    size: str = "tiny"
    model: dict = field(default_factory=dict)
    train: dict = field(default_factory=dict)
    data: list = field(default_factory=list)
    proto_data: list = field(default_factory=list)
    proto: str | None = None
    test_proportion: float | None = None
    folds: int = 10
    seed: int = 0
    out: str | None = None
    workers: int = 1

    def model_config(self) -> dict:
        if self.size not in PRESETS:
            raise CogtranError(f"unknown size preset {self.size!r}")
        return {**PRESETS[self.size], **self.model}

    def train_config(self, phase: str | None = None) -> TrainConfig:
        base = dict(TRAIN_PRESETS[phase or self.task])
        base.update(self.train)
        base["seed"] = self.seed
        base.setdefault("task", self.task)
        return TrainConfig(**base)


def version_string() -> str:
    try:
        desc = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"],
                              cwd=Path(__file__).parent, capture_output=True, text=True,
                              timeout=10)
        if desc.returncode == 0 and desc.stdout.strip():
            return f"{__version__}+{desc.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def _run_config(args) -> RunConfig:
    cfg = {}
    if getattr(args, "config", None):
        cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
    known = {f.name for f in fields(RunConfig)}
    unknown = set(cfg) - known
    if unknown:
        raise CogtranError(f"unknown config keys: {sorted(unknown)}")
    for name in ("task", "size", "proto", "test_proportion", "folds", "seed", "out", "workers"):
        val = getattr(args, name, None)
        if val is not None:
            cfg[name] = val
    for name in ("data", "proto_data"):
        val = getattr(args, name, None)
        if val:
            cfg[name] = [str(v) for v in val]
    train = dict(cfg.get("train", {}))
    for flag, key in (("epochs", "epochs"), ("lr", "learning_rate"), ("batch_size", "batch_size"),
                      ("weight_decay", "weight_decay")):
        val = getattr(args, flag, None)
        if val is not None:
            train[key] = val
    cfg["train"] = train
    return RunConfig(**cfg)


def _load(paths, proto=None) -> list[Dataset]:
    if not paths:
        raise CogtranError("no data given (--data)")
    out = []
    for p in paths:
        out.extend(load_collection(p, proto))
    return out


def _start_run(rc: RunConfig) -> Path:
    if not rc.out:
        raise CogtranError("an output directory is required (--out)")
    out = Path(rc.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = {**asdict(rc), "version": version_string()}
    (out / "config.json").write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n",
                                     encoding="utf-8")
    return out


def _write_losses(out: Path, losses, name: str = "losses.tsv") -> None:
    lines = ["EPOCH\tLOSS"] + [f"{i}\t{l:.6f}" for i, l in enumerate(losses, 1)]
    (out / name).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_split(out: Path, test_sets) -> None:
    ids = {d.family: [cs.id for cs in d.cognate_sets] for d in test_sets}
    (out / "split.json").write_text(json.dumps(ids, indent=1) + "\n", encoding="utf-8")


def _split(rc: RunConfig, datasets):
    if rc.test_proportion is None:
        return datasets, []
    return split_collection(datasets, rc.test_proportion, rc.seed)


def _epoch_logger(phase):
    return lambda epoch, value: log.info("%s epoch %d loss %.4f", phase, epoch, value)


# subcommands

def cmd_fetch(args) -> int:
    record = fetch(args.out)
    for src in record["sources"]:
        print(f"{src['name']}\t{src['sha256']}\t{len(src['files'])} files")
    return 0


def _print_alignments(args, trimmed: bool) -> int:
    for d in _load(args.data, args.proto):
        for cs in d.cognate_sets:
            if len(cs.words) < (2 if trimmed else 1):
                continue
            msa = progressive_align(list(cs.words.items()))
            if trimmed:
                msa = trim(msa)
            sys.stdout.write(f"# {d.family} {cs.id}\n{msa.to_tsv()}\n")
    return 0


def cmd_align(args) -> int:
    return _print_alignments(args, trimmed=False)


def cmd_trim(args) -> int:
    return _print_alignments(args, trimmed=True)


def cmd_vocab(args) -> int:
    rc = _run_config(args)
    datasets = _load(rc.data, rc.proto)
    vocab = vocab_for(prepare_examples(datasets, rc.task, "train", workers=rc.workers),
                      all_languages(datasets))
    if args.out:
        vocab.save(args.out)
    print(len(vocab))
    return 0


def cmd_train(args) -> int:
    rc = _run_config(args)
    datasets = _load(rc.data, rc.proto)
    train_sets, test_sets = _split(rc, datasets)
    out = _start_run(rc)
    model, vocab, losses = fit(train_sets, rc.task, rc.model_config(), rc.train_config(),
                               workers=rc.workers, on_epoch=_epoch_logger("train"))
    save_model(model, vocab, out / "model")
    _write_losses(out, losses)
    if test_sets:
        _write_split(out, test_sets)
        report, _ = evaluate_model(model, vocab, test_sets, rc.task, workers=rc.workers)
        (out / "report.json").write_text(report.to_json(), encoding="utf-8")
        print(report.to_json(per_family=False), end="")
    return 0


def cmd_pretrain(args) -> int:
    rc = _run_config(args)
    reflex = _load(rc.data)
    protos = _load(rc.proto_data) if rc.proto_data else []
    proto_train, proto_test = _split(rc, protos)
    out = _start_run(rc)
    if proto_test:
        _write_split(out, proto_test)
    model, vocab, losses = pretrain(reflex, proto_train, rc.model_config(),
                                    rc.train_config("pretrain"), workers=rc.workers,
                                    on_epoch=_epoch_logger("pretrain"))
    save_model(model, vocab, out / "model")
    _write_losses(out, losses)
    return 0


def cmd_finetune(args) -> int:
    rc = _run_config(args)
    model, vocab = load_model(args.model)
    train_sets, test_sets = _split(rc, _load(rc.data, rc.proto))
    out = _start_run(rc)
    model, losses = finetune(model, vocab, train_sets, rc.train_config("finetune"),
                             workers=rc.workers, on_epoch=_epoch_logger("finetune"))
    save_model(model, vocab, out / "model")
    _write_losses(out, losses)
    if test_sets:
        _write_split(out, test_sets)
        report, _ = evaluate_model(model, vocab, test_sets, "proto", workers=rc.workers)
        (out / "report.json").write_text(report.to_json(), encoding="utf-8")
        print(report.to_json(per_family=False), end="")
    return 0


def _parse_word(spec: str) -> tuple[str, list[str]]:
    lang, sep, form = spec.partition(":")
    if not sep or not lang:
        raise CogtranError(f"expected LANG:FORM, got {spec!r}")
    return lang, segment(form)


def cmd_predict(args) -> int:
    model, vocab = load_model(args.model)
    words = dict(_parse_word(s) for s in args.set)
    word = predict(model, vocab, words, args.target)
    print(f"{args.target}\t{word}")
    return 0


def cmd_eval(args) -> int:
    model, vocab = load_model(args.model)
    datasets = _load(args.data, args.proto)
    report, _ = evaluate_model(model, vocab, datasets, args.task)
    text = report.to_json(per_family=args.per_family)
    out = Path(args.out) if args.out else Path(args.model) / "report.json"
    out.write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


def cmd_cv(args) -> int:
    rc = _run_config(args)
    datasets = _load(rc.data, rc.proto)
    out = _start_run(rc)
    result = cross_validate(datasets, rc.folds, rc.train_config(), rc.model_config(),
                            workers=rc.workers)
    payload = {"summary": result.summary, "folds": [r.to_dict() for r in result.reports]}
    (out / "report.json").write_text(json.dumps(payload, indent=2, ensure_ascii=False) + "\n",
                                     encoding="utf-8")
    print(json.dumps(result.summary, indent=2, ensure_ascii=False))
    return 0


def cmd_errors(args) -> int:
    model, vocab = load_model(args.model)
    datasets = _load(args.data, args.proto)
    _, triples = evaluate_model(model, vocab, datasets, args.task)
    table = sound_exchange_errors(triples)
    if args.top:
        table.rows = table.rows[: args.top]
    text = table.to_tsv()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cogtran", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def data_args(p):
        p.add_argument("--data", action="append", required=True,
                       help="wordlist TSV or directory of family wordlists")
        p.add_argument("--proto", help="proto-language column (overrides protos.tsv)")

    def run_args(p):
        p.add_argument("--config", help="JSON run configuration; flags override it")
        p.add_argument("--task", choices=["reflex", "proto"])
        p.add_argument("--size", choices=sorted(PRESETS))
        p.add_argument("--test-prop", dest="test_proportion", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.add_argument("--epochs", type=int)
        p.add_argument("--lr", type=float)
        p.add_argument("--batch-size", type=int)
        p.add_argument("--weight-decay", type=float)
        p.add_argument("--workers", type=int, help="processes for alignment (default 1)")
        p.add_argument("--single-thread", action="store_true",
                       help="force one torch thread and one alignment worker")

    p = sub.add_parser("fetch", help="download and convert the public datasets")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fetch)

    for name, func in (("align", cmd_align), ("trim", cmd_trim)):
        p = sub.add_parser(name, help=f"print {name}ed alignments as TSV")
        data_args(p)
        p.set_defaults(func=func)

    p = sub.add_parser("vocab", help="build the token vocabulary of a training corpus")
    p.add_argument("--data", action="append", required=True)
    p.add_argument("--proto")
    p.add_argument("--task", choices=["reflex", "proto"])
    p.add_argument("--config")
    p.add_argument("--workers", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_vocab)

    p = sub.add_parser("train", help="train from scratch, optionally evaluate on a split")
    data_args(p)
    run_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("pretrain", help="masked-word pre-training without proto-languages")
    p.add_argument("--data", action="append", required=True, help="reflex-task data")
    p.add_argument("--proto-data", action="append", help="proto-task data (proto rows removed)")
    run_args(p)
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("finetune", help="fine-tune a pre-trained model on the proto task")
    p.add_argument("--model", required=True)
    data_args(p)
    run_args(p)
    p.set_defaults(func=cmd_finetune, task="proto")

    p = sub.add_parser("predict", help="predict one word")
    p.add_argument("--model", required=True)
    p.add_argument("--set", nargs="+", required=True, metavar="LANG:FORM")
    p.add_argument("--target", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="evaluate a model on held-out data")
    p.add_argument("--model", required=True)
    data_args(p)
    p.add_argument("--task", choices=["reflex", "proto"], default="proto")
    p.add_argument("--per-family", action="store_true")
    p.add_argument("--out", help="report path (default: <model>/report.json)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("cv", help="k-fold cross-validation")
    data_args(p)
    run_args(p)
    p.add_argument("--folds", type=int)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("errors", help="rank sound exchange errors")
    p.add_argument("--model", required=True)
    data_args(p)
    p.add_argument("--task", choices=["reflex", "proto"], default="proto")
    p.add_argument("--top", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_errors)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "single_thread", False):
        torch.set_num_threads(1)
        args.workers = 1
    try:
        return args.func(args)
    except CogtranError as exc:
        print(f"cogtran: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except (OSError, KeyError, ValueError) as exc:
        print(f"cogtran: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
